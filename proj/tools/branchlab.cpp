#include <iostream>

#include "CLI11.hpp"

#include "branchlab/cli.hpp"
#include "branchlab/report.hpp"

int main(int argc, char** argv) {
  using namespace branchlab::cli;

  CLI::App app{"Branch credences, Dutch books and observer measures for branching quantum states"};
  app.set_version_flag("--version", std::string(branchlab::tool_version()));
  app.require_subcommand(1);

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run a scenario and answer its queries under one rule");
  r->add_option("scenario", run.scenario, "Scenario file or builtin:<name>")->required();
  r->add_option("--rule", run.rule, "born | indifference | strong-esp")->capture_default_str();
  r->add_option("--at", run.at, "Tick to query (default: last event)");
  r->add_option("--out", run.out, "Write the report document here");
  r->add_option("--csv", run.csv, "Write the posterior trajectory here");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Run a seeded property suite");
  v->add_option("--suite", verify.suite, "appendix-b | appendix-c | proofs | strong-esp")->required();
  v->add_option("--trials", verify.trials, "Number of trials")->capture_default_str();
  v->add_option("--seed", verify.seed, "Seed")->capture_default_str();
  v->add_option("--start", verify.start, "Index of the first trial")->capture_default_str();
  v->add_option("--out", verify.out, "Write the report document here");

  BookArgs book;
  auto* d = app.add_subcommand("dutchbook", "Offer a book of bets and settle it on every branch");
  d->add_option("scenario", book.scenario, "Scenario file or builtin:<name>")->required();
  d->add_option("book", book.book, "Book file or builtin:<name> (default: the scenario's bets)");
  d->add_option("--rule", book.rule, "born | indifference | strong-esp")->capture_default_str();
  d->add_option("--out", book.out, "Write the report document here");

  MeasureArgs measure;
  auto* m = app.add_subcommand("measure", "Observer measure of branch families");
  m->add_option("config", measure.config, "Config with a cosmo section")->required();
  m->add_option("--csv", measure.csv, "Write integrand samples here");
  m->add_option("--out", measure.out, "Write the report document here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  if (*r) return cmd_run(run, std::cout, std::cerr);
  if (*v) return cmd_verify(verify, std::cout, std::cerr);
  if (*d) return cmd_dutchbook(book, std::cout, std::cerr);
  return cmd_measure(measure, std::cout, std::cerr);
}
