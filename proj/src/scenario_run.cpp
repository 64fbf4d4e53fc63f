#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/QR>

#include "branchlab/error.hpp"
#include "branchlab/scenario.hpp"

namespace branchlab {

bool evaluate(const Predicate& p, const EvalContext& ctx) {
  switch (p.kind) {
    case Predicate::Kind::Always:
      return true;
    case Predicate::Kind::Label:
      if (!ctx.label) throw Error(ErrorCode::UndecidableHypothesis, "hypothesis needs a branch label");
      return *ctx.label == p.text;
    case Predicate::Kind::Record:
      if (!ctx.records) throw Error(ErrorCode::UndecidableHypothesis, "hypothesis needs detector records");
      for (const auto& [d, s] : p.records) {
        const auto it = ctx.records->find(d);
        if (it == ctx.records->end() || it->second != s) return false;
      }
      return true;
    case Predicate::Kind::Copy:
      if (!ctx.copy_id && !ctx.lineage)
        throw Error(ErrorCode::UndecidableHypothesis, "hypothesis about copy '" + p.text + "' needs a copy");
      return ctx.lineage == p.text || ctx.copy_id == p.text;
    case Predicate::Kind::Time:
      if (!ctx.tick) throw Error(ErrorCode::UndecidableHypothesis, "hypothesis needs a time");
      return *ctx.tick == p.time;
    case Predicate::Kind::Any:
      for (const auto& c : p.children)
        if (evaluate(c, ctx)) return true;
      return false;
    case Predicate::Kind::All:
      for (const auto& c : p.children)
        if (!evaluate(c, ctx)) return false;
      return true;
    case Predicate::Kind::Not:
      return !evaluate(p.children.at(0), ctx);
  }
  return false;
}

const std::vector<BranchInfo>& WorldState::branches_at(int t) const {
  if (t < 0 || t >= static_cast<int>(branches.size()))
    throw Error(ErrorCode::InvalidArgument, "tick " + std::to_string(t) + " was not simulated");
  return branches[static_cast<std::size_t>(t)];
}

namespace {

[[noreturn]] void event_error(const Event& e, const std::string& what) {
  throw Error(ErrorCode::EventError, std::string(to_string(e.kind)) + " at t=" + std::to_string(e.time) + ": " + what);
}

// Unitary on one factor whose first column is `v`.
CMatrix preparation(const std::vector<cplx>& v) {
  const auto n = static_cast<Eigen::Index>(v.size());
  CMatrix m = CMatrix::Identity(n, n);
  Eigen::VectorXcd col(n);
  double norm = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) norm += std::norm(v[static_cast<std::size_t>(i)]);
  for (Eigen::Index i = 0; i < n; ++i) col(i) = v[static_cast<std::size_t>(i)] / std::sqrt(norm);
  m.col(0) = col;
  // Householder QR keeps every column orthonormal; the first is col up to a phase.
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr{Eigen::MatrixXcd(m)};
  Eigen::MatrixXcd q = qr.householderQ();
  q.col(0) = col;
  return CMatrix(q);
}

class Runner {
 public:
  Runner(const Scenario& sc, std::vector<InitialFactor> initial) : sc_(sc) {
    std::vector<StateVector> parts;
    for (const auto& s : sc.subsystems) {
      std::vector<cplx> amps(s.dim, cplx{0.0, 0.0});
      amps[0] = 1.0;
      for (const auto& f : initial)
        if (f.subsystem == s.name) amps = f.amplitudes;
      parts.push_back(StateVector::of(s, std::move(amps)));
    }
    ws_.state = parts.empty() ? StateVector(Space(), {cplx{1.0, 0.0}}) : tensor(parts).normalized();
    for (const auto& o : sc.observers) {
      observers_[o.id] = &o;
      lineages_[""].push_back({o.id, o.id});
      memory_[{o.id, ""}] = {};
    }
    branches_ = {BranchInfo{"", {}, 1.0}};
    for (const auto& e : sc.events)
      if (e.kind == EventKind::Measure || e.kind == EventKind::ConditionalMeasure) environments_.insert(e.env);
  }

  WorldState run(int until) {
    std::size_t next = 0;
    for (int tick = 0; tick <= until; ++tick) {
      const Event* e = nullptr;
      if (next < sc_.events.size() && sc_.events[next].time == tick) e = &sc_.events[next++];
      if (e) quantum(*e);
      rebranch();
      if (e) registry(*e, tick);
      for (const auto& b : branches_)
        for (const auto& [obs, lin] : lineages_[b.label])
          if (observers_.at(obs)->mode == ObserverSpec::Mode::Continuous) add_copy(obs, lin, lin, b, tick);
      ws_.branches.push_back(branches_);
      ws_.tick = tick;
    }
    ws_.alive = lineages_;
    return std::move(ws_);
  }

 private:
  void quantum(const Event& e) {
    try {
      switch (e.kind) {
        case EventKind::Prepare: {
          const auto m = ws_.state.marginal(e.system);
          if (m[0] < 1.0 - 1e-12) event_error(e, "'" + e.system + "' is not in its |0> state");
          ws_.state = apply_unitary(ws_.state, UnitaryOp({e.system}, preparation(e.amplitudes)));
          log(e, e.system);
          break;
        }
        case EventKind::Measure:
        case EventKind::ConditionalMeasure: {
          if (std::find(ws_.pointers.begin(), ws_.pointers.end(), e.detector) != ws_.pointers.end())
            event_error(e, "detector '" + e.detector + "' already holds a record");
          MeasureSpec spec{e.system, e.detector, e.env, {}, e.leakage};
          if (!e.basis.empty()) {
            const auto k = static_cast<Eigen::Index>(e.basis.size());
            spec.basis = CMatrix(k, k);
            for (Eigen::Index c = 0; c < k; ++c)
              for (Eigen::Index r = 0; r < k; ++r)
                spec.basis(r, c) = e.basis[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
          }
          ws_.state = e.condition ? conditional_measure(ws_.state, *e.condition, spec) : measure(ws_.state, spec);
          ws_.pointers.push_back(e.detector);
          log(e, e.system + " -> " + e.detector + (e.condition ? " if " + e.condition->detector + "=" + e.condition->outcome : ""));
          break;
        }
        case EventKind::Wire:
          ws_.state = apply_wiring(ws_.state, e.wiring, e.display);
          log(e, e.display);
          break;
        case EventKind::Observe: {
          const auto& agent = ws_.state.space().at(observers_.at(e.observer)->subsystem);
          if (agent.dim > 1) {
            const auto& det = ws_.state.space().at(e.detector);
            Wiring w{{e.detector}, {}};
            for (std::size_t i = 0; i < det.dim; ++i) {
              const auto sym = det.symbol(i);
              w.table[sym] = agent.find_symbol(sym) ? sym : agent.symbol(0);
            }
            ws_.state = apply_wiring(ws_.state, w, agent.name);
          }
          break;
        }
        default:
          break;
      }
    } catch (const Error& err) {
      if (err.code() == ErrorCode::EventError || err.code() == ErrorCode::NotDecohered) throw;
      event_error(e, err.what());
    }
  }

  void rebranch() {
    std::vector<BranchInfo> next;
    if (ws_.pointers.empty()) {
      next.push_back({"", {}, 1.0});
    } else {
      // Coherence is judged with only the environment traced out. The
      // measured systems and the detectors carry the outcome too, so tracing
      // them would hide overlapping environment records.
      const double eps = decoherence_eps();
      if (!environments_.empty()) {
        std::vector<std::string> keep;
        for (const auto& s : sc_.subsystems)
          if (!environments_.count(s.name)) keep.push_back(s.name);
        const double worst = pointer_coherence(reduced_density(ws_.state, keep), ws_.pointers);
        if (worst > eps) {
          std::ostringstream msg;
          msg << "off-diagonal pointer block magnitude " << worst << " exceeds eps " << eps;
          throw Error(ErrorCode::NotDecohered, msg.str());
        }
      }
      const auto rho = reduced_density(ws_.state, ws_.pointers);
      for (auto& b : branch_decompose(rho, ws_.pointers).branches) {
        BranchInfo info;
        info.label = join_label(b.label);
        for (std::size_t k = 0; k < b.label.size(); ++k) info.records[ws_.pointers[k]] = b.label[k];
        info.weight = b.weight;
        next.push_back(std::move(info));
      }
    }
    // Lineages and memories follow each branch into its children.
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> lin;
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> mem;
    for (const auto& b : next) {
      const std::string parent = parent_of(b);
      const auto it = lineages_.find(parent);
      if (it == lineages_.end()) continue;
      lin[b.label] = it->second;
      for (const auto& [obs, l] : it->second) mem[{l, b.label}] = memory_[{l, parent}];
    }
    lineages_ = std::move(lin);
    memory_ = std::move(mem);
    branches_ = std::move(next);
  }

  std::string parent_of(const BranchInfo& b) const {
    for (const auto& old : branches_) {
      bool prefix = true;
      for (const auto& [d, s] : old.records) {
        const auto it = b.records.find(d);
        prefix = prefix && it != b.records.end() && it->second == s;
      }
      if (prefix) return old.label;
    }
    return b.label;
  }

  void registry(const Event& e, int tick) {
    switch (e.kind) {
      case EventKind::Observe:
        for (const auto& b : branches_)
          for (const auto& [obs, lin] : lineages_[b.label])
            if (obs == e.observer) memory_[{lin, b.label}].push_back(e.detector + "=" + b.records.at(e.detector));
        log(e, e.observer + " reads " + e.detector);
        break;
      case EventKind::EraseMemory:
        for (const auto& b : branches_)
          for (const auto& [obs, lin] : lineages_[b.label])
            if (obs == e.observer && fires(e, b, lin, tick)) {
              auto& m = memory_[{lin, b.label}];
              if (m.size() > e.keep) m.resize(e.keep);
            }
        log(e, e.observer + " keeps " + std::to_string(e.keep));
        break;
      case EventKind::Duplicate:
        for (const auto& b : branches_) {
          auto& here = lineages_[b.label];
          std::optional<std::string> source;
          for (const auto& [obs, lin] : here)
            if (obs == e.observer && !source) source = lin;
          if (!source || !fires(e, b, *source, tick)) continue;
          here.push_back({e.observer, e.copy});
          memory_[{e.copy, b.label}] = memory_[{*source, b.label}];
        }
        log(e, e.observer + " -> " + e.copy);
        break;
      case EventKind::WakeOn:
        for (const auto& b : branches_)
          for (const auto& [obs, lin] : lineages_[b.label])
            if (obs == e.observer && fires(e, b, lin, tick)) {
              memory_[{lin, b.label}].push_back("woke");
              add_copy(obs, lin, lin + "/" + e.label, b, tick);
            }
        log(e, e.observer + " wakes (" + e.label + ")");
        break;
      case EventKind::Relocate: {
        bool exists = false;
        for (const auto& [label, here] : lineages_)
          for (const auto& [obs, lin] : here) exists = exists || lin == e.copy;
        if (!exists) event_error(e, "no copy '" + e.copy + "' is alive");
        std::ostringstream os;
        os << e.copy << " shifted by [";
        for (std::size_t i = 0; i < e.shift.size(); ++i) os << (i ? ", " : "") << e.shift[i];
        os << "]";
        log(e, os.str());
        break;
      }
      default:
        break;
    }
  }

  bool fires(const Event& e, const BranchInfo& b, const std::string& lineage, int tick) const {
    if (!e.when) return true;
    return evaluate(*e.when, EvalContext{b.label, &b.records, std::nullopt, lineage, tick});
  }

  void add_copy(const std::string& obs, const std::string& lineage, const std::string& id, const BranchInfo& b,
                int tick) {
    CopyInfo c;
    c.copy = ObserverCopy{id, b.label, tick, b.weight};
    c.observer = obs;
    c.lineage = lineage;
    c.memory = memory_[{lineage, b.label}];
    c.records = b.records;
    ws_.copies.push_back(std::move(c));
  }

  void log(const Event& e, std::string detail) {
    ws_.log.push_back({e.time, std::string(to_string(e.kind)), std::move(detail)});
  }

  const Scenario& sc_;
  WorldState ws_;
  std::map<std::string, const ObserverSpec*> observers_;
  std::vector<BranchInfo> branches_;
  std::set<std::string> environments_;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> lineages_;
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> memory_;
};

std::string join_memory(const std::vector<std::string>& m) {
  std::string out = "[";
  for (std::size_t i = 0; i < m.size(); ++i) out += (i ? "," : "") + m[i];
  return out + "]";
}

}  // namespace

WorldState run(const Scenario& sc, int until) {
  if (until < 0 || until > sc.last_tick() + 1)
    throw Error(ErrorCode::InvalidArgument,
                "tick " + std::to_string(until) + " outside [0, " + std::to_string(sc.last_tick() + 1) + "]");
  return Runner(sc, sc.initial).run(until);
}

WorldState run_with_initial(const Scenario& sc, const std::vector<InitialFactor>& initial, int until) {
  if (until < 0 || until > sc.last_tick() + 1)
    throw Error(ErrorCode::InvalidArgument,
                "tick " + std::to_string(until) + " outside [0, " + std::to_string(sc.last_tick() + 1) + "]");
  std::vector<InitialFactor> merged = sc.initial;
  for (const auto& f : initial) {
    auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& m) { return m.subsystem == f.subsystem; });
    if (it == merged.end()) merged.push_back(f);
    else *it = f;
  }
  return Runner(sc, std::move(merged)).run(until);
}

CopyClass enumerate_copies(const WorldState& ws, const Scenario& sc, const std::string& observer, int time,
                           const std::optional<std::vector<std::string>>& evidence) {
  const ObserverSpec* spec = nullptr;
  for (const auto& o : sc.observers)
    if (o.id == observer) spec = &o;
  if (!spec) throw Error(ErrorCode::LinkError, "unknown observer '" + observer + "'");

  std::set<std::vector<std::string>> memories;
  for (const auto& c : ws.copies)
    if (c.observer == observer && c.copy.time == time) memories.insert(c.memory);
  if (memories.empty())
    throw Error(ErrorCode::NoCopies, "observer '" + observer + "' has no copy at t=" + std::to_string(time));

  std::vector<std::string> chosen;
  if (evidence) {
    if (!memories.count(*evidence))
      throw Error(ErrorCode::NoCopies, "no copy of '" + observer + "' at t=" + std::to_string(time) +
                                           " has evidence " + join_memory(*evidence));
    chosen = *evidence;
  } else if (memories.size() > 1) {
    std::string all;
    for (const auto& m : memories) all += (all.empty() ? "" : " ") + join_memory(m);
    throw Error(ErrorCode::AmbiguousEvidence,
                "copies of '" + observer + "' at t=" + std::to_string(time) + " differ in evidence: " + all);
  } else {
    chosen = *memories.begin();
  }

  CopyClass out{observer, chosen, {}};
  for (const auto& c : ws.copies)
    if (c.observer == observer && c.memory == chosen && (!spec->knows_time || c.copy.time == time))
      out.members.push_back(c);
  return out;
}

QueryResult solve(const Scenario& sc, const WorldState& full, const Query& q) {
  QueryResult r{q, {}, 0.0};
  if (q.rule == Rule::Born) {
    std::map<std::string, double> t;
    for (const auto& b : full.branches_at(q.time)) {
      t[b.label] += b.weight;
      if (evaluate(q.hypothesis, EvalContext{b.label, &b.records, std::nullopt, std::nullopt, q.time}))
        r.probability += b.weight;
    }
    r.table = CredenceTable(std::move(t));
    return r;
  }
  const auto cls = enumerate_copies(full, sc, q.observer, q.time, q.evidence);
  std::vector<ObserverCopy> copies;
  for (const auto& m : cls.members) copies.push_back(m.copy);
  r.table = q.rule == Rule::StrongESP ? strong_esp(copies) : indifference_over_copies(copies);
  for (const auto& m : cls.members)
    if (evaluate(q.hypothesis, EvalContext{m.copy.branch, &m.records, m.copy.id, m.lineage, m.copy.time}))
      r.probability += r.table[m.copy.key()];
  return r;
}

QueryResult solve(const Scenario& sc, const Query& q) {
  return solve(sc, run(sc, std::max(sc.last_tick(), q.time)), q);
}

}  // namespace branchlab
