#include "branchlab/report.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

#include "branchlab/error.hpp"

#ifndef BRANCHLAB_VERSION
#define BRANCHLAB_VERSION "0.0.0"
#endif

namespace branchlab {

using json = nlohmann::json;

std::string_view tool_version() noexcept { return BRANCHLAB_VERSION; }

namespace {

json table_json(const CredenceTable& t) { return json(t.entries()); }

CredenceTable table_of(const json& j) { return CredenceTable(j.get<std::map<std::string, double>>()); }

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_of(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::ParseError, "expected a number, got \"" + s + "\"");
  }
  return j.get<double>();
}

json header(const char* kind) {
  return json{{"kind", kind}, {"schema_version", kSchemaVersion}, {"tool_version", std::string(tool_version())}};
}

// Parses, checks kind and version, and maps library exceptions to ParseError.
template <class F>
auto read(std::string_view text, const char* kind, F&& body) {
  try {
    const json j = json::parse(text.begin(), text.end());
    if (j.at("kind").get<std::string>() != kind)
      throw Error(ErrorCode::ParseError, "expected a '" + std::string(kind) + "' report");
    const int v = j.at("schema_version").get<int>();
    if (v != kSchemaVersion)
      throw Error(ErrorCode::ParseError, "unsupported schema_version " + std::to_string(v));
    return body(j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(kind) + " report: " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    throw Error(ErrorCode::ParseError, std::string(kind) + " report: " + e.what());
  }
}

json confirmation_json(const ConfirmationReport& c) {
  return json{{"priors", c.priors}, {"likelihoods", c.likelihoods}, {"observed", c.observed}, {"trajectory", c.trajectory}};
}

ConfirmationReport confirmation_of(const json& j) {
  ConfirmationReport c;
  c.priors = j.at("priors").get<Distribution>();
  c.likelihoods = j.at("likelihoods").get<std::map<std::string, Distribution>>();
  c.observed = j.at("observed").get<std::vector<std::string>>();
  c.trajectory = j.at("trajectory").get<std::vector<Distribution>>();
  return c;
}

}  // namespace

std::string emit(const RunReport& r) {
  json j = header("run");
  j["tool_version"] = r.tool_version;
  j["scenario"] = r.scenario;
  j["rule"] = std::string(to_string(r.rule));
  j["at"] = r.at;
  j["seed"] = r.seed;
  json qs = json::array();
  for (const auto& q : r.queries)
    qs.push_back(json{{"time", q.time},
                      {"observer", q.observer},
                      {"hypothesis", json::parse(predicate_json(q.hypothesis))},
                      {"rule", std::string(to_string(q.rule))},
                      {"probability", q.probability},
                      {"table", table_json(q.table)}});
  j["queries"] = qs;
  json bs = json::array();
  for (const auto& b : r.branches) bs.push_back(json{{"label", b.label}, {"weight", b.weight}});
  j["branches"] = bs;
  if (r.confirmation) j["confirmation"] = confirmation_json(*r.confirmation);
  return j.dump(2);
}

RunReport parse_run_report(std::string_view text) {
  return read(text, "run", [](const json& j) {
    RunReport r;
    r.tool_version = j.at("tool_version").get<std::string>();
    r.scenario = j.at("scenario").get<std::string>();
    r.rule = parse_rule(j.at("rule").get<std::string>());
    r.at = j.at("at").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& q : j.at("queries"))
      r.queries.push_back({q.at("time").get<int>(), q.at("observer").get<std::string>(),
                           parse_predicate(q.at("hypothesis").dump()), parse_rule(q.at("rule").get<std::string>()),
                           q.at("probability").get<double>(), table_of(q.at("table"))});
    for (const auto& b : j.at("branches"))
      r.branches.push_back({b.at("label").get<std::string>(), b.at("weight").get<double>()});
    if (j.contains("confirmation")) r.confirmation = confirmation_of(j.at("confirmation"));
    return r;
  });
}

std::string emit(const MeasureReport& r) {
  json j = header("measure");
  j["tool_version"] = r.tool_version;
  json fams = json::array();
  for (std::size_t i = 0; i < r.result.names.size(); ++i) {
    const auto& m = r.result.measures[i];
    fams.push_back(json{{"name", r.result.names[i]},
                        {"divergent", m.divergent},
                        {"value", number(m.value)},
                        {"method", m.method},
                        {"error_estimate", m.error_estimate}});
  }
  j["families"] = fams;
  if (r.result.table) j["probabilities"] = table_json(*r.result.table);
  if (r.result.divergent_family) j["divergent_family"] = *r.result.divergent_family;
  return j.dump(2);
}

MeasureReport parse_measure_report(std::string_view text) {
  return read(text, "measure", [](const json& j) {
    MeasureReport r;
    r.tool_version = j.at("tool_version").get<std::string>();
    for (const auto& f : j.at("families")) {
      r.result.names.push_back(f.at("name").get<std::string>());
      r.result.measures.push_back({f.at("divergent").get<bool>(), number_of(f.at("value")),
                                   f.at("method").get<std::string>(), f.at("error_estimate").get<double>()});
    }
    if (j.contains("probabilities")) r.result.table = table_of(j.at("probabilities"));
    if (j.contains("divergent_family")) r.result.divergent_family = j.at("divergent_family").get<std::string>();
    return r;
  });
}

std::string emit(const VerifyReport& r) {
  json j = header("verify");
  j["tool_version"] = r.tool_version;
  j["suite"] = std::string(to_string(r.suite));
  j["seed"] = r.seed;
  j["start"] = r.start;
  json ts = json::array();
  for (const auto& t : r.trials)
    ts.push_back(json{{"index", t.index}, {"pass", t.pass}, {"max_deviation", t.max_deviation}, {"detail", t.detail}});
  j["trials"] = ts;
  j["pass"] = r.pass;
  return j.dump(2);
}

VerifyReport parse_verify_report(std::string_view text) {
  return read(text, "verify", [](const json& j) {
    VerifyReport r;
    r.tool_version = j.at("tool_version").get<std::string>();
    r.suite = parse_suite(j.at("suite").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.start = j.at("start").get<std::uint64_t>();
    for (const auto& t : j.at("trials"))
      r.trials.push_back({t.at("index").get<std::uint64_t>(), t.at("pass").get<bool>(),
                          t.at("max_deviation").get<double>(), t.at("detail").get<std::string>()});
    r.pass = j.at("pass").get<bool>();
    return r;
  });
}

std::string emit(const BookDocument& d) {
  const auto& r = d.report;
  json j = header("dutchbook");
  j["tool_version"] = d.tool_version;
  j["scenario"] = r.scenario;
  j["rule"] = std::string(to_string(r.rule));
  json ds = json::array();
  for (const auto& b : r.decisions) {
    json o{{"index", b.index}, {"offered_at", b.offered_at}, {"accepted", b.accepted}, {"note", b.note}};
    o["expected_value"] = b.expected_value ? json(*b.expected_value) : json(nullptr);
    ds.push_back(o);
  }
  j["decisions"] = ds;
  json ss = json::array();
  for (const auto& s : r.settlements)
    ss.push_back(json{{"branch", s.branch}, {"lineage", s.lineage}, {"weight", s.weight}, {"net", s.net}});
  j["settlements"] = ss;
  j["sure_loss"] = r.sure_loss;
  return j.dump(2);
}

BookDocument parse_book_report(std::string_view text) {
  return read(text, "dutchbook", [](const json& j) {
    BookDocument d;
    d.tool_version = j.at("tool_version").get<std::string>();
    auto& r = d.report;
    r.scenario = j.at("scenario").get<std::string>();
    r.rule = parse_rule(j.at("rule").get<std::string>());
    for (const auto& b : j.at("decisions")) {
      BetDecision x;
      x.index = b.at("index").get<std::size_t>();
      x.offered_at = b.at("offered_at").get<int>();
      if (!b.at("expected_value").is_null()) x.expected_value = b.at("expected_value").get<double>();
      x.accepted = b.at("accepted").get<bool>();
      x.note = b.at("note").get<std::string>();
      r.decisions.push_back(std::move(x));
    }
    for (const auto& s : j.at("settlements"))
      r.settlements.push_back({s.at("branch").get<std::string>(), s.at("lineage").get<std::string>(),
                               s.at("weight").get<double>(), s.at("net").get<double>()});
    r.sure_loss = j.at("sure_loss").get<bool>();
    return d;
  });
}

}  // namespace branchlab
