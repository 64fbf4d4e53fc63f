#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "branchlab/error.hpp"
#include "branchlab/scenario.hpp"

namespace branchlab {

using json = nlohmann::json;

std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::Prepare: return "Prepare";
    case EventKind::Measure: return "Measure";
    case EventKind::ConditionalMeasure: return "ConditionalMeasure";
    case EventKind::Wire: return "Wire";
    case EventKind::Observe: return "Observe";
    case EventKind::EraseMemory: return "EraseMemory";
    case EventKind::Duplicate: return "Duplicate";
    case EventKind::WakeOn: return "WakeOn";
    case EventKind::Relocate: return "Relocate";
  }
  return "?";
}

std::string_view to_string(Rule r) noexcept {
  switch (r) {
    case Rule::Born: return "born";
    case Rule::Indifference: return "indifference";
    case Rule::StrongESP: return "strong-esp";
  }
  return "?";
}

Rule parse_rule(std::string_view s) {
  if (s == "born") return Rule::Born;
  if (s == "indifference") return Rule::Indifference;
  if (s == "strong-esp") return Rule::StrongESP;
  throw Error(ErrorCode::InvalidArgument, "unknown rule '" + std::string(s) + "' (born, indifference, strong-esp)");
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ParseError, path + ": " + what);
}
[[noreturn]] void dangling(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::LinkError, path + ": " + what);
}

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(at(path, it.key()), "unknown key");
  }
}

const json& need(const json& j, const std::string& path, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) fail(at(path, key), "missing");
  return *it;
}

std::string str(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

double num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

const json& arr(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected a list");
  return j;
}

std::vector<std::string> strings(const json& j, const std::string& path) {
  std::vector<std::string> out;
  const auto& a = arr(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(str(a[i], at(path, i)));
  return out;
}

std::vector<double> numbers(const json& j, const std::string& path) {
  std::vector<double> out;
  const auto& a = arr(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(num(a[i], at(path, i)));
  return out;
}

cplx amplitude(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  only_keys(j, path, {"re", "im"});
  const double re = j.contains("re") ? num(j["re"], at(path, "re")) : 0.0;
  const double im = j.contains("im") ? num(j["im"], at(path, "im")) : 0.0;
  return {re, im};
}

std::vector<cplx> amplitudes(const json& j, const std::string& path) {
  std::vector<cplx> out;
  const auto& a = arr(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(amplitude(a[i], at(path, i)));
  return out;
}

json emit(cplx c) { return json{{"re", c.real()}, {"im", c.imag()}}; }
json emit(const std::vector<cplx>& v) {
  json a = json::array();
  for (auto c : v) a.push_back(emit(c));
  return a;
}

Predicate predicate(const json& j, const std::string& path) {
  if (j.is_boolean()) {
    if (!j.get<bool>()) fail(path, "'false' is not a hypothesis; use {\"not\": true}");
    return Predicate::always();
  }
  if (!j.is_object() || j.size() != 1) fail(path, "expected true or an object with one of label/record/copy/time/any/all/not");
  const std::string key = j.begin().key();
  const json& val = j.begin().value();
  const std::string p = at(path, key);
  if (key == "label") return Predicate::label(str(val, p));
  if (key == "copy") return Predicate::copy(str(val, p));
  if (key == "time") return Predicate::at(integer(val, p));
  if (key == "record") {
    if (!val.is_object() || val.empty()) fail(p, "expected a non-empty object of detector: symbol");
    Predicate out{Predicate::Kind::Record, {}, {}, 0, {}};
    for (auto it = val.begin(); it != val.end(); ++it) out.records[it.key()] = str(it.value(), at(p, it.key()));
    return out;
  }
  if (key == "any" || key == "all") {
    std::vector<Predicate> c;
    const auto& a = arr(val, p);
    for (std::size_t i = 0; i < a.size(); ++i) c.push_back(predicate(a[i], at(p, i)));
    return key == "any" ? Predicate::any(std::move(c)) : Predicate::all(std::move(c));
  }
  if (key == "not") return Predicate::negate(predicate(val, p));
  fail(p, "unknown hypothesis form");
}

json emit(const Predicate& p) {
  switch (p.kind) {
    case Predicate::Kind::Always: return true;
    case Predicate::Kind::Label: return json{{"label", p.text}};
    case Predicate::Kind::Copy: return json{{"copy", p.text}};
    case Predicate::Kind::Time: return json{{"time", p.time}};
    case Predicate::Kind::Record: {
      json r = json::object();
      for (const auto& [d, s] : p.records) r[d] = s;
      return json{{"record", r}};
    }
    case Predicate::Kind::Any:
    case Predicate::Kind::All: {
      json a = json::array();
      for (const auto& c : p.children) a.push_back(emit(c));
      return json{{p.kind == Predicate::Kind::Any ? "any" : "all", a}};
    }
    case Predicate::Kind::Not: return json{{"not", emit(p.children.at(0))}};
  }
  return nullptr;
}

std::vector<InitialFactor> initial_list(const json& j, const std::string& path) {
  std::vector<InitialFactor> out;
  const auto& a = arr(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto p = at(path, i);
    only_keys(a[i], p, {"subsystem", "amplitudes"});
    out.push_back({str(need(a[i], p, "subsystem"), at(p, "subsystem")),
                   amplitudes(need(a[i], p, "amplitudes"), at(p, "amplitudes"))});
  }
  return out;
}

json emit(const std::vector<InitialFactor>& v) {
  json a = json::array();
  for (const auto& f : v) a.push_back(json{{"subsystem", f.subsystem}, {"amplitudes", emit(f.amplitudes)}});
  return a;
}

EventKind event_kind(const json& j, const std::string& path) {
  const auto s = str(j, path);
  for (auto k : {EventKind::Prepare, EventKind::Measure, EventKind::ConditionalMeasure, EventKind::Wire,
                 EventKind::Observe, EventKind::EraseMemory, EventKind::Duplicate, EventKind::WakeOn,
                 EventKind::Relocate})
    if (s == to_string(k)) return k;
  fail(path, "unknown event kind '" + s + "'");
}

Event event(const json& j, const std::string& p) {
  if (!j.is_object()) fail(p, "expected an object");
  Event e;
  e.kind = event_kind(need(j, p, "kind"), at(p, "kind"));
  e.time = integer(need(j, p, "time"), at(p, "time"));
  auto s = [&](const char* k) { return str(need(j, p, k), at(p, k)); };
  auto when = [&]() {
    if (j.contains("when")) e.when = predicate(j["when"], at(p, "when"));
  };
  switch (e.kind) {
    case EventKind::Prepare:
      only_keys(j, p, {"time", "kind", "system", "amplitudes"});
      e.system = s("system");
      e.amplitudes = amplitudes(need(j, p, "amplitudes"), at(p, "amplitudes"));
      break;
    case EventKind::Measure:
    case EventKind::ConditionalMeasure:
      if (e.kind == EventKind::Measure) only_keys(j, p, {"time", "kind", "system", "detector", "env", "basis", "leakage"});
      else only_keys(j, p, {"time", "kind", "system", "detector", "env", "basis", "leakage", "condition"});
      e.system = s("system");
      e.detector = s("detector");
      e.env = s("env");
      if (j.contains("basis")) {
        const auto& b = arr(j["basis"], at(p, "basis"));
        for (std::size_t i = 0; i < b.size(); ++i) e.basis.push_back(amplitudes(b[i], at(at(p, "basis"), i)));
      }
      if (j.contains("leakage")) e.leakage = num(j["leakage"], at(p, "leakage"));
      if (e.kind == EventKind::ConditionalMeasure) {
        const auto cp = at(p, "condition");
        const auto& c = need(j, p, "condition");
        only_keys(c, cp, {"detector", "outcome"});
        e.condition = Condition{str(need(c, cp, "detector"), at(cp, "detector")),
                                str(need(c, cp, "outcome"), at(cp, "outcome"))};
      }
      break;
    case EventKind::Wire: {
      only_keys(j, p, {"time", "kind", "sources", "table", "display"});
      e.wiring.sources = strings(need(j, p, "sources"), at(p, "sources"));
      const auto& t = need(j, p, "table");
      if (!t.is_object()) fail(at(p, "table"), "expected an object of record: symbol");
      for (auto it = t.begin(); it != t.end(); ++it) e.wiring.table[it.key()] = str(it.value(), at(at(p, "table"), it.key()));
      e.display = s("display");
      break;
    }
    case EventKind::Observe:
      only_keys(j, p, {"time", "kind", "observer", "detector"});
      e.observer = s("observer");
      e.detector = s("detector");
      break;
    case EventKind::EraseMemory:
      only_keys(j, p, {"time", "kind", "observer", "when", "keep"});
      e.observer = s("observer");
      when();
      if (j.contains("keep")) {
        const int k = integer(j["keep"], at(p, "keep"));
        if (k < 0) fail(at(p, "keep"), "must be >= 0");
        e.keep = static_cast<std::size_t>(k);
      }
      break;
    case EventKind::Duplicate:
      only_keys(j, p, {"time", "kind", "observer", "copy", "when"});
      e.observer = s("observer");
      e.copy = s("copy");
      when();
      break;
    case EventKind::WakeOn:
      only_keys(j, p, {"time", "kind", "observer", "label", "when"});
      e.observer = s("observer");
      e.label = s("label");
      when();
      break;
    case EventKind::Relocate:
      only_keys(j, p, {"time", "kind", "copy", "shift"});
      e.copy = s("copy");
      e.shift = numbers(need(j, p, "shift"), at(p, "shift"));
      break;
  }
  return e;
}

json emit(const Event& e) {
  json j{{"time", e.time}, {"kind", std::string(to_string(e.kind))}};
  switch (e.kind) {
    case EventKind::Prepare:
      j["system"] = e.system;
      j["amplitudes"] = emit(e.amplitudes);
      break;
    case EventKind::Measure:
    case EventKind::ConditionalMeasure:
      j["system"] = e.system;
      j["detector"] = e.detector;
      j["env"] = e.env;
      if (!e.basis.empty()) {
        json b = json::array();
        for (const auto& col : e.basis) b.push_back(emit(col));
        j["basis"] = b;
      }
      if (e.leakage != 0.0) j["leakage"] = e.leakage;
      if (e.condition) j["condition"] = json{{"detector", e.condition->detector}, {"outcome", e.condition->outcome}};
      break;
    case EventKind::Wire:
      j["sources"] = e.wiring.sources;
      j["table"] = e.wiring.table;
      j["display"] = e.display;
      break;
    case EventKind::Observe:
      j["observer"] = e.observer;
      j["detector"] = e.detector;
      break;
    case EventKind::EraseMemory:
      j["observer"] = e.observer;
      if (e.when) j["when"] = emit(*e.when);
      if (e.keep) j["keep"] = e.keep;
      break;
    case EventKind::Duplicate:
      j["observer"] = e.observer;
      j["copy"] = e.copy;
      if (e.when) j["when"] = emit(*e.when);
      break;
    case EventKind::WakeOn:
      j["observer"] = e.observer;
      j["label"] = e.label;
      if (e.when) j["when"] = emit(*e.when);
      break;
    case EventKind::Relocate:
      j["copy"] = e.copy;
      j["shift"] = e.shift;
      break;
  }
  return j;
}

BranchHistory family(const json& j, const std::string& p) {
  BranchHistory h;
  const auto form = str(need(j, p, "form"), at(p, "form"));
  h.name = str(need(j, p, "name"), at(p, "name"));
  if (form == "exponential") {
    only_keys(j, p, {"name", "form", "A", "gamma", "omega", "n0", "t0", "t1"});
    h.form = BranchHistory::Form::Exponential;
    h.A = num(need(j, p, "A"), at(p, "A"));
    h.gamma = num(need(j, p, "gamma"), at(p, "gamma"));
    h.omega = num(need(j, p, "omega"), at(p, "omega"));
    if (j.contains("n0")) h.n0 = num(j["n0"], at(p, "n0"));
    if (j.contains("t0")) h.t0 = num(j["t0"], at(p, "t0"));
    if (j.contains("t1")) {
      const auto& t1 = j["t1"];
      if (t1.is_string()) {
        if (t1.get<std::string>() != "inf") fail(at(p, "t1"), "expected a number or \"inf\"");
        h.t1 = std::numeric_limits<double>::infinity();
      } else {
        h.t1 = num(t1, at(p, "t1"));
      }
    }
    if (!(h.A > 0.0)) fail(at(p, "A"), "must be positive");
  } else if (form == "tabulated") {
    only_keys(j, p, {"name", "form", "ts", "alphas", "ns"});
    h.form = BranchHistory::Form::Tabulated;
    h.ts = numbers(need(j, p, "ts"), at(p, "ts"));
    h.alphas = numbers(need(j, p, "alphas"), at(p, "alphas"));
    h.ns = numbers(need(j, p, "ns"), at(p, "ns"));
    if (h.alphas.size() != h.ts.size() || h.ns.size() != h.ts.size())
      fail(p, "ts, alphas and ns must have equal length");
  } else {
    fail(at(p, "form"), "expected \"exponential\" or \"tabulated\"");
  }
  return h;
}

json emit(const BranchHistory& h) {
  if (h.form == BranchHistory::Form::Tabulated)
    return json{{"name", h.name}, {"form", "tabulated"}, {"ts", h.ts}, {"alphas", h.alphas}, {"ns", h.ns}};
  json j{{"name", h.name}, {"form", "exponential"}, {"A", h.A}, {"gamma", h.gamma}, {"omega", h.omega},
         {"n0", h.n0}, {"t0", h.t0}};
  if (std::isinf(h.t1)) j["t1"] = "inf";
  else j["t1"] = h.t1;
  return j;
}

// Semantic checks over a structurally parsed scenario.
class Validator {
 public:
  explicit Validator(const Scenario& sc) : sc_(sc) {}

  void run() {
    std::set<std::string> labels;
    std::size_t total = 1;
    for (std::size_t i = 0; i < sc_.subsystems.size(); ++i) {
      const auto& s = sc_.subsystems[i];
      const auto p = at(at("subsystems", i), "label");
      if (s.name.empty()) fail(p, "empty label");
      if (!labels.insert(s.name).second) fail(p, "duplicate label '" + s.name + "'");
      if (s.dim < 1) fail(at(at("subsystems", i), "dim"), "must be >= 1");
      if (!s.symbols.empty()) {
        if (s.symbols.size() != s.dim) fail(at(at("subsystems", i), "symbols"), "need one symbol per basis state");
        if (std::set<std::string>(s.symbols.begin(), s.symbols.end()).size() != s.dim)
          fail(at(at("subsystems", i), "symbols"), "symbols must be distinct");
      }
      total *= s.dim;
      if (total > kMaxJointDim) fail(at(at("subsystems", i), "dim"), "joint dimension exceeds " + std::to_string(kMaxJointDim));
    }
    check_initial(sc_.initial, "initial");

    std::set<std::string> observers;
    for (std::size_t i = 0; i < sc_.observers.size(); ++i) {
      const auto& o = sc_.observers[i];
      const auto p = at("observers", i);
      if (!observers.insert(o.id).second) fail(at(p, "id"), "duplicate observer '" + o.id + "'");
      subsystem(o.subsystem, at(p, "subsystem"));
      lineages_.insert(o.id);
    }
    for (const auto& e : sc_.events)
      if (e.kind == EventKind::Duplicate) lineages_.insert(e.copy);

    int prev = 0;
    std::set<std::string> measured;
    std::set<std::string> seen_lineages(observers);
    for (std::size_t i = 0; i < sc_.events.size(); ++i) {
      const auto& e = sc_.events[i];
      const auto p = at("events", i);
      if (e.time < 1) fail(at(p, "time"), "event times start at 1 (tick 0 is the initial state)");
      if (e.time <= prev) fail(at(p, "time"), "event times must be strictly increasing");
      prev = e.time;
      switch (e.kind) {
        case EventKind::Prepare: {
          const auto& s = subsystem(e.system, at(p, "system"));
          check_amplitudes(e.amplitudes, s, at(p, "amplitudes"));
          break;
        }
        case EventKind::Measure:
        case EventKind::ConditionalMeasure: {
          const auto& s = subsystem(e.system, at(p, "system"));
          subsystem(e.detector, at(p, "detector"));
          subsystem(e.env, at(p, "env"));
          if (!e.basis.empty()) {
            if (e.basis.size() != s.dim) fail(at(p, "basis"), "need " + std::to_string(s.dim) + " basis vectors");
            for (std::size_t c = 0; c < e.basis.size(); ++c)
              if (e.basis[c].size() != s.dim) fail(at(at(p, "basis"), c), "wrong length");
          }
          if (e.leakage < 0.0 || e.leakage >= 1.0) fail(at(p, "leakage"), "must lie in [0, 1)");
          if (e.condition) {
            const auto cp = at(p, "condition");
            if (!measured.count(e.condition->detector))
              dangling(at(cp, "detector"), "'" + e.condition->detector + "' is not the detector of an earlier measurement");
            symbol(e.condition->detector, e.condition->outcome, at(cp, "outcome"));
          }
          measured.insert(e.detector);
          break;
        }
        case EventKind::Wire:
          for (std::size_t k = 0; k < e.wiring.sources.size(); ++k)
            subsystem(e.wiring.sources[k], at(at(p, "sources"), k));
          subsystem(e.display, at(p, "display"));
          for (const auto& [key, sym] : e.wiring.table) symbol(e.display, sym, at(at(p, "table"), key));
          break;
        case EventKind::Observe:
          observer(e.observer, at(p, "observer"));
          subsystem(e.detector, at(p, "detector"));
          if (!measured.count(e.detector))
            dangling(at(p, "detector"), "'" + e.detector + "' has not been measured before this event");
          break;
        case EventKind::EraseMemory:
        case EventKind::WakeOn:
          observer(e.observer, at(p, "observer"));
          if (e.kind == EventKind::WakeOn && e.label.empty()) fail(at(p, "label"), "empty label");
          if (e.when) check(*e.when, at(p, "when"));
          break;
        case EventKind::Duplicate:
          observer(e.observer, at(p, "observer"));
          if (e.copy.empty()) fail(at(p, "copy"), "empty copy id");
          if (!seen_lineages.insert(e.copy).second) fail(at(p, "copy"), "copy id '" + e.copy + "' already in use");
          if (e.when) check(*e.when, at(p, "when"));
          break;
        case EventKind::Relocate:
          if (!seen_lineages.count(e.copy)) dangling(at(p, "copy"), "no copy '" + e.copy + "' exists by this event");
          break;
      }
    }

    const int horizon = sc_.last_tick() + 1;
    for (std::size_t i = 0; i < sc_.queries.size(); ++i) {
      const auto& q = sc_.queries[i];
      const auto p = at("queries", i);
      if (q.time < 0 || q.time > horizon) fail(at(p, "time"), "outside [0, " + std::to_string(horizon) + "]");
      if (!q.observer.empty()) observer(q.observer, at(p, "observer"));
      else if (q.rule != Rule::Born) fail(at(p, "observer"), "copy-based rules need an observer");
      check(q.hypothesis, at(p, "hypothesis"));
    }
    for (std::size_t i = 0; i < sc_.bets.size(); ++i) {
      const auto& b = sc_.bets[i];
      const auto p = at("bets", i);
      if (b.offered_at < 0 || b.offered_at > horizon)
        fail(at(p, "offered_at"), "outside [0, " + std::to_string(horizon) + "]");
      if (!b.observer.empty()) observer(b.observer, at(p, "observer"));
      for (std::size_t k = 0; k < b.payoffs.size(); ++k) check(b.payoffs[k].when, at(at(at(p, "payoffs"), k), "when"));
    }
    if (sc_.cosmo) {
      std::set<std::string> names;
      for (std::size_t i = 0; i < sc_.cosmo->size(); ++i)
        if (!names.insert((*sc_.cosmo)[i].name).second)
          fail(at(at("cosmo", i), "name"), "duplicate family '" + (*sc_.cosmo)[i].name + "'");
    }
    if (sc_.confirmation) {
      const auto& c = *sc_.confirmation;
      subsystem(c.detector, "confirmation.detector");
      if (c.at < 0 || c.at > horizon) fail("confirmation.at", "outside [0, " + std::to_string(horizon) + "]");
      for (std::size_t i = 0; i < c.observed.size(); ++i)
        symbol(c.detector, c.observed[i], at("confirmation.observed", i));
      if (c.theories.empty()) fail("confirmation.theories", "need at least one theory");
      double sum = 0.0;
      for (std::size_t i = 0; i < c.theories.size(); ++i) {
        const auto p = at("confirmation.theories", i);
        if (c.theories[i].prior < 0.0) fail(at(p, "prior"), "must be >= 0");
        sum += c.theories[i].prior;
        check_initial(c.theories[i].initial, at(p, "initial"));
      }
      if (std::abs(sum - 1.0) > 1e-8) fail("confirmation.theories", "priors must sum to 1");
    }
  }

 private:
  const Subsystem& subsystem(const std::string& name, const std::string& path) const {
    for (const auto& s : sc_.subsystems)
      if (s.name == name) return s;
    dangling(path, "unknown subsystem '" + name + "'");
  }

  void symbol(const std::string& sub, const std::string& sym, const std::string& path) const {
    const auto& s = subsystem(sub, path);
    if (!s.find_symbol(sym)) dangling(path, "'" + sub + "' has no symbol '" + sym + "'");
  }

  void observer(const std::string& id, const std::string& path) const {
    for (const auto& o : sc_.observers)
      if (o.id == id) return;
    dangling(path, "unknown observer '" + id + "'");
  }

  void check_amplitudes(const std::vector<cplx>& a, const Subsystem& s, const std::string& path) const {
    if (a.size() != s.dim) fail(path, "need " + std::to_string(s.dim) + " amplitudes for '" + s.name + "'");
    double n = 0.0;
    for (auto c : a) n += std::norm(c);
    if (std::abs(n - 1.0) > 1e-8) fail(path, "amplitudes are not normalized (sum of squares " + std::to_string(n) + ")");
  }

  void check_initial(const std::vector<InitialFactor>& init, const std::string& path) const {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < init.size(); ++i) {
      const auto p = at(path, i);
      const auto& s = subsystem(init[i].subsystem, at(p, "subsystem"));
      if (!seen.insert(s.name).second) fail(at(p, "subsystem"), "listed twice");
      check_amplitudes(init[i].amplitudes, s, at(p, "amplitudes"));
    }
  }

  void check(const Predicate& pr, const std::string& path) const {
    switch (pr.kind) {
      case Predicate::Kind::Record:
        for (const auto& [d, s] : pr.records) symbol(d, s, at(at(path, "record"), d));
        break;
      case Predicate::Kind::Copy:
        if (!lineages_.count(pr.text)) dangling(at(path, "copy"), "unknown copy '" + pr.text + "'");
        break;
      case Predicate::Kind::Any:
      case Predicate::Kind::All:
        for (std::size_t i = 0; i < pr.children.size(); ++i)
          check(pr.children[i], at(at(path, pr.kind == Predicate::Kind::Any ? "any" : "all"), i));
        break;
      case Predicate::Kind::Not:
        check(pr.children.at(0), at(path, "not"));
        break;
      default:
        break;
    }
  }

  const Scenario& sc_;
  std::set<std::string> lineages_;
};

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail("$", e.what());
  }
  only_keys(j, "$", {"name", "subsystems", "initial", "events", "observers", "bets", "queries", "cosmo", "confirmation"});

  Scenario sc;
  sc.name = str(need(j, "", "name"), "name");
  {
    const auto& a = arr(need(j, "", "subsystems"), "subsystems");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto p = at("subsystems", i);
      only_keys(a[i], p, {"label", "dim", "symbols"});
      const int dim = integer(need(a[i], p, "dim"), at(p, "dim"));
      if (dim < 1) fail(at(p, "dim"), "must be >= 1");
      Subsystem s{str(need(a[i], p, "label"), at(p, "label")), static_cast<std::size_t>(dim), {}};
      if (a[i].contains("symbols")) s.symbols = strings(a[i]["symbols"], at(p, "symbols"));
      sc.subsystems.push_back(std::move(s));
    }
  }
  if (j.contains("initial")) sc.initial = initial_list(j["initial"], "initial");
  if (j.contains("events")) {
    const auto& a = arr(j["events"], "events");
    for (std::size_t i = 0; i < a.size(); ++i) sc.events.push_back(event(a[i], at("events", i)));
  }
  if (j.contains("observers")) {
    const auto& a = arr(j["observers"], "observers");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto p = at("observers", i);
      only_keys(a[i], p, {"id", "subsystem", "mode", "knows_time"});
      ObserverSpec o;
      o.id = str(need(a[i], p, "id"), at(p, "id"));
      o.subsystem = str(need(a[i], p, "subsystem"), at(p, "subsystem"));
      if (a[i].contains("mode")) {
        const auto m = str(a[i]["mode"], at(p, "mode"));
        if (m == "continuous") o.mode = ObserverSpec::Mode::Continuous;
        else if (m == "sleeper") o.mode = ObserverSpec::Mode::Sleeper;
        else fail(at(p, "mode"), "expected \"continuous\" or \"sleeper\"");
      }
      o.knows_time = o.mode == ObserverSpec::Mode::Continuous;
      if (a[i].contains("knows_time")) {
        if (!a[i]["knows_time"].is_boolean()) fail(at(p, "knows_time"), "expected true or false");
        o.knows_time = a[i]["knows_time"].get<bool>();
      }
      sc.observers.push_back(std::move(o));
    }
  }
  if (j.contains("bets")) {
    const auto& a = arr(j["bets"], "bets");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto p = at("bets", i);
      only_keys(a[i], p, {"offered_at", "cost", "payoffs", "observer"});
      Bet b;
      b.offered_at = integer(need(a[i], p, "offered_at"), at(p, "offered_at"));
      if (a[i].contains("cost")) b.cost = num(a[i]["cost"], at(p, "cost"));
      if (a[i].contains("observer")) b.observer = str(a[i]["observer"], at(p, "observer"));
      const auto& pay = arr(need(a[i], p, "payoffs"), at(p, "payoffs"));
      for (std::size_t k = 0; k < pay.size(); ++k) {
        const auto pp = at(at(p, "payoffs"), k);
        only_keys(pay[k], pp, {"when", "amount"});
        b.payoffs.push_back({predicate(need(pay[k], pp, "when"), at(pp, "when")),
                             num(need(pay[k], pp, "amount"), at(pp, "amount"))});
      }
      sc.bets.push_back(std::move(b));
    }
  }
  if (j.contains("queries")) {
    const auto& a = arr(j["queries"], "queries");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto p = at("queries", i);
      only_keys(a[i], p, {"time", "observer", "hypothesis", "rule", "evidence"});
      Query q;
      q.time = integer(need(a[i], p, "time"), at(p, "time"));
      if (a[i].contains("observer")) q.observer = str(a[i]["observer"], at(p, "observer"));
      q.hypothesis = predicate(need(a[i], p, "hypothesis"), at(p, "hypothesis"));
      try {
        q.rule = parse_rule(str(need(a[i], p, "rule"), at(p, "rule")));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InvalidArgument) throw;
        fail(at(p, "rule"), e.what());
      }
      if (a[i].contains("evidence")) q.evidence = strings(a[i]["evidence"], at(p, "evidence"));
      sc.queries.push_back(std::move(q));
    }
  }
  if (j.contains("cosmo")) {
    const auto& a = arr(j["cosmo"], "cosmo");
    std::vector<BranchHistory> fams;
    for (std::size_t i = 0; i < a.size(); ++i) fams.push_back(family(a[i], at("cosmo", i)));
    sc.cosmo = std::move(fams);
  }
  if (j.contains("confirmation")) {
    const auto& c = j["confirmation"];
    only_keys(c, "confirmation", {"detector", "at", "observed", "theories"});
    Confirmation conf;
    conf.detector = str(need(c, "confirmation", "detector"), "confirmation.detector");
    conf.at = integer(need(c, "confirmation", "at"), "confirmation.at");
    conf.observed = strings(need(c, "confirmation", "observed"), "confirmation.observed");
    const auto& th = arr(need(c, "confirmation", "theories"), "confirmation.theories");
    for (std::size_t i = 0; i < th.size(); ++i) {
      const auto p = at("confirmation.theories", i);
      only_keys(th[i], p, {"name", "prior", "initial"});
      Theory t;
      t.name = str(need(th[i], p, "name"), at(p, "name"));
      t.prior = num(need(th[i], p, "prior"), at(p, "prior"));
      if (th[i].contains("initial")) t.initial = initial_list(th[i]["initial"], at(p, "initial"));
      conf.theories.push_back(std::move(t));
    }
    sc.confirmation = std::move(conf);
  }

  Validator(sc).run();
  return sc;
}

std::string serialize_scenario(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  json subs = json::array();
  for (const auto& s : sc.subsystems) {
    json o{{"label", s.name}, {"dim", s.dim}};
    if (!s.symbols.empty()) o["symbols"] = s.symbols;
    subs.push_back(o);
  }
  j["subsystems"] = subs;
  j["initial"] = emit(sc.initial);
  json ev = json::array();
  for (const auto& e : sc.events) ev.push_back(emit(e));
  j["events"] = ev;
  json obs = json::array();
  for (const auto& o : sc.observers)
    obs.push_back(json{{"id", o.id},
                       {"subsystem", o.subsystem},
                       {"mode", o.mode == ObserverSpec::Mode::Continuous ? "continuous" : "sleeper"},
                       {"knows_time", o.knows_time}});
  j["observers"] = obs;
  json bets = json::array();
  for (const auto& b : sc.bets) {
    json pay = json::array();
    for (const auto& p : b.payoffs) pay.push_back(json{{"when", emit(p.when)}, {"amount", p.amount}});
    json o{{"offered_at", b.offered_at}, {"cost", b.cost}, {"payoffs", pay}};
    if (!b.observer.empty()) o["observer"] = b.observer;
    bets.push_back(o);
  }
  j["bets"] = bets;
  json qs = json::array();
  for (const auto& q : sc.queries) {
    json o{{"time", q.time}, {"hypothesis", emit(q.hypothesis)}, {"rule", std::string(to_string(q.rule))}};
    if (!q.observer.empty()) o["observer"] = q.observer;
    if (q.evidence) o["evidence"] = *q.evidence;
    qs.push_back(o);
  }
  j["queries"] = qs;
  if (sc.cosmo) {
    json fams = json::array();
    for (const auto& h : *sc.cosmo) fams.push_back(emit(h));
    j["cosmo"] = fams;
  }
  if (sc.confirmation) {
    const auto& c = *sc.confirmation;
    json th = json::array();
    for (const auto& t : c.theories) th.push_back(json{{"name", t.name}, {"prior", t.prior}, {"initial", emit(t.initial)}});
    j["confirmation"] = json{{"detector", c.detector}, {"at", c.at}, {"observed", c.observed}, {"theories", th}};
  }
  return j.dump(2);
}

std::string predicate_json(const Predicate& p) { return emit(p).dump(); }

Predicate parse_predicate(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail("$", e.what());
  }
  return predicate(j, "$");
}

std::vector<Bet> parse_book(std::string_view text, const Scenario& sc) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail("$", e.what());
  }
  if (j.is_object() && j.contains("subsystems")) return parse_scenario(text).bets;
  only_keys(j, "$", {"bets"});
  // Validate the bets against the scenario they will be settled in.
  json merged = json::parse(serialize_scenario(sc));
  merged["bets"] = need(j, "", "bets");
  return parse_scenario(merged.dump()).bets;
}

std::vector<BranchHistory> parse_cosmo(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail("$", e.what());
  }
  if (j.is_object() && j.contains("subsystems")) {
    auto sc = parse_scenario(text);
    if (!sc.cosmo) fail("cosmo", "missing");
    return *sc.cosmo;
  }
  only_keys(j, "$", {"name", "cosmo"});
  const auto& a = arr(need(j, "", "cosmo"), "cosmo");
  std::vector<BranchHistory> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.push_back(family(a[i], at("cosmo", i)));
    if (!names.insert(out.back().name).second) fail(at(at("cosmo", i), "name"), "duplicate family '" + out.back().name + "'");
  }
  return out;
}

std::string serialize_cosmo(std::span<const BranchHistory> hs) {
  json a = json::array();
  for (const auto& h : hs) a.push_back(emit(h));
  return json{{"cosmo", a}}.dump(2);
}

Scenario load_scenario(const std::string& ref) {
  constexpr std::string_view prefix = "builtin:";
  if (ref.rfind(prefix, 0) == 0) return builtin(std::string_view(ref).substr(prefix.size()));
  std::ifstream in(ref);
  if (!in) throw Error(ErrorCode::ParseError, ref + ": cannot read file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace branchlab
