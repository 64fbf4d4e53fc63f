#include "branchlab/cli.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "branchlab/cosmo.hpp"
#include "branchlab/epistemics.hpp"
#include "branchlab/report.hpp"
#include "branchlab/scenario.hpp"
#include "branchlab/verify.hpp"

namespace branchlab::cli {

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string general(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string shown(const std::string& label) { return label.empty() ? "(root)" : label; }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, path + ": cannot read file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream o(path);
  if (!o) throw Error(ErrorCode::InvalidArgument, path + ": cannot write file");
  o << text;
  if (!text.empty() && text.back() != '\n') o << '\n';
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

std::string default_observer(const Scenario& sc) { return sc.observers.empty() ? "" : sc.observers.front().id; }

}  // namespace

int exit_code(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::ParseError:
    case ErrorCode::LinkError:
    case ErrorCode::UnknownScenario:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidDensity:
    case ErrorCode::EventError:
      return kInputError;
    default:
      return kFailure;
  }
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto sc = load_scenario(a.scenario);
    const Rule rule = parse_rule(a.rule);
    const int at = a.at.value_or(sc.last_tick());
    if (at < 0 || at > sc.last_tick() + 1)
      throw Error(ErrorCode::InvalidArgument,
                  "--at " + std::to_string(at) + " outside [0, " + std::to_string(sc.last_tick() + 1) + "]");
    const auto full = run(sc, std::max(sc.last_tick(), at));

    RunReport r;
    r.tool_version = std::string(tool_version());
    r.scenario = sc.name;
    r.rule = rule;
    r.at = at;

    std::vector<Query> qs;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& q : sc.queries) {
      if (q.time != at) continue;
      Query x = q;
      x.rule = rule;
      if (x.observer.empty()) x.observer = default_observer(sc);
      if (seen.insert({x.observer, predicate_json(x.hypothesis)}).second) qs.push_back(std::move(x));
    }
    if (qs.empty()) qs.push_back(Query{at, default_observer(sc), Predicate::always(), rule, std::nullopt});
    for (const auto& q : qs) {
      const auto res = solve(sc, full, q);
      r.queries.push_back({q.time, q.observer, q.hypothesis, q.rule, res.probability, res.table});
    }
    for (const auto& b : full.branches_at(at)) r.branches.push_back({b.label, b.weight});
    if (sc.confirmation) r.confirmation = confirm(sc);

    out << "scenario: " << r.scenario << "   rule: " << to_string(rule) << "   t = " << at << "\n\n";
    out << pad("branch", 24) << "weight\n";
    for (const auto& b : r.branches) out << pad(shown(b.label), 24) << fixed(b.weight) << "\n";
    for (const auto& q : r.queries) {
      out << "\nP(" << predicate_json(q.hypothesis) << ")";
      if (rule != Rule::Born) out << " for " << q.observer;
      out << " = " << fixed(q.probability) << "\n";
      for (const auto& [k, v] : q.table.entries()) out << "  " << pad(shown(k), 30) << fixed(v) << "\n";
    }
    if (r.confirmation) {
      const auto& c = *r.confirmation;
      out << "\nconfirmation: observed";
      for (const auto& o : c.observed) out << " " << o;
      out << "\n" << pad("theory", 16) << pad("prior", 12) << "posterior\n";
      for (const auto& [t, p] : c.priors)
        out << pad(t, 16) << pad(fixed(p), 12) << (c.trajectory.empty() ? fixed(p) : fixed(c.trajectory.back().at(t)))
            << "\n";
    }

    if (!a.out.empty()) write_file(a.out, emit(r));
    if (!a.csv.empty()) {
      if (!r.confirmation) throw Error(ErrorCode::InvalidArgument, "--csv needs a scenario with a confirmation section");
      std::string csv = "step,theory,posterior\n";
      for (const auto& [t, p] : r.confirmation->priors) csv += "0," + t + "," + fixed(p, 12) + "\n";
      for (std::size_t k = 0; k < r.confirmation->trajectory.size(); ++k)
        for (const auto& [t, p] : r.confirmation->trajectory[k])
          csv += std::to_string(k + 1) + "," + t + "," + fixed(p, 12) + "\n";
      write_file(a.csv, csv);
    }
    return kOk;
  });
}

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Suite suite = parse_suite(a.suite);
    if (a.trials == 0) throw Error(ErrorCode::InvalidArgument, "--trials must be at least 1");
    const auto res = run_suite(suite, a.trials, a.seed, a.start);

    std::size_t passed = 0;
    for (const auto& t : res.trials) {
      passed += t.pass;
      out << "trial " << pad(std::to_string(t.index), 6) << (t.pass ? "pass" : "FAIL") << "  max_dev " << sci(t.max_deviation);
      if (!t.detail.empty()) out << "  " << t.detail;
      out << "\n";
    }
    out << to_string(suite) << ": " << passed << "/" << res.trials.size() << " passed (seed " << a.seed << ")\n";

    if (!a.out.empty()) {
      VerifyReport r{kSchemaVersion, std::string(tool_version()), suite, a.seed, a.start, res.trials, res.pass()};
      write_file(a.out, emit(r));
    }
    if (const auto* f = res.first_failure()) {
      out << "first failure: trial " << f->index << ": " << f->detail << "\n";
      out << "reproduce: branchlab verify --suite " << to_string(suite) << " --trials 1 --seed " << a.seed
          << " --start " << f->index << "\n";
      return kFailure;
    }
    return kOk;
  });
}

int cmd_dutchbook(const BookArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto sc = load_scenario(a.scenario);
    const Rule rule = parse_rule(a.rule);
    std::vector<Bet> book;
    if (a.book.empty()) book = sc.bets;
    else if (a.book.rfind("builtin:", 0) == 0) book = load_scenario(a.book).bets;
    else book = parse_book(read_file(a.book), sc);

    const auto r = dutch_book_check(sc, rule, book);
    out << "scenario: " << r.scenario << "   rule: " << to_string(rule) << "\n\n";
    if (r.decisions.empty()) out << "no bets\n";
    else out << pad("bet", 6) << pad("offered", 10) << pad("EV", 14) << "decision\n";
    for (const auto& d : r.decisions) {
      out << pad(std::to_string(d.index), 6) << pad("t=" + std::to_string(d.offered_at), 10)
          << pad(d.expected_value ? fixed(*d.expected_value) : "n/a", 14) << (d.accepted ? "accept" : "reject");
      if (!d.note.empty()) out << "  (" << d.note << ")";
      out << "\n";
    }
    if (!r.settlements.empty()) {
      out << "\n" << pad("branch", 16) << pad("lineage", 12) << pad("weight", 12) << "net\n";
      for (const auto& s : r.settlements)
        out << pad(shown(s.branch), 16) << pad(s.lineage, 12) << pad(fixed(s.weight), 12) << fixed(s.net) << "\n";
    }
    out << "\nsure loss: " << (r.sure_loss ? "yes" : "no") << "\n";
    if (!a.out.empty()) write_file(a.out, emit(BookDocument{kSchemaVersion, std::string(tool_version()), r}));
    return kOk;
  });
}

int cmd_measure(const MeasureArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto hs = parse_cosmo(read_file(a.config));
    const auto fm = normalize_families(hs);

    out << pad("family", 16) << pad("method", 14) << pad("measure", 16) << pad("error", 12) << "probability\n";
    for (std::size_t i = 0; i < fm.names.size(); ++i) {
      const auto& m = fm.measures[i];
      out << pad(fm.names[i], 16) << pad(m.method, 14) << pad(m.divergent ? "divergent" : fixed(m.value, 10), 16)
          << pad(sci(m.error_estimate), 12) << (fm.table ? fixed((*fm.table)[fm.names[i]]) : "-") << "\n";
    }
    if (fm.divergent_family) out << "\nno normalized probabilities: '" << *fm.divergent_family << "' diverges\n";

    if (!a.csv.empty()) {
      std::string csv = "family,t,integrand\n";
      for (const auto& h : hs)
        for (const auto& [t, f] : integrand_samples(h)) csv += h.name + "," + general(t) + "," + general(f) + "\n";
      write_file(a.csv, csv);
    }
    if (!a.out.empty()) write_file(a.out, emit(MeasureReport{kSchemaVersion, std::string(tool_version()), fm}));
    return kOk;
  });
}

}  // namespace branchlab::cli
