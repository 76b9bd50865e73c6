#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "roughflow/cli.hpp"
#include "roughflow/config.hpp"
#include "roughflow/errors.hpp"
#include "roughflow/report.hpp"

namespace {

struct CommonOpts {
  std::string config;
  long long seed = -1;
  std::string out;
  std::string format;
};

void attach(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config, "run configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "master seed (overrides [run] seed)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", opts.out, "output directory (overrides [run] out)");
  cmd->add_option("--format", opts.format, "artifact format (overrides [run] format)")
      ->check(CLI::IsMember({"csv", "json"}));
}

roughflow::RunConfig load(const CommonOpts& opts) {
  roughflow::RunConfig rc = roughflow::load_run_config(opts.config);
  if (opts.seed >= 0) rc.seed = static_cast<std::uint64_t>(opts.seed);
  if (!opts.out.empty()) rc.out_dir = opts.out;
  if (!opts.format.empty()) rc.format = opts.format;
  return rc;
}

int run(const roughflow::Report& rep) {
  for (const roughflow::CriterionResult& c : rep.criteria)
    std::printf("%-28s %s  measured=%.6g  bound=%s%.6g\n", c.name.c_str(),
                c.pass ? "pass" : "FAIL", c.measured,
                c.kind == roughflow::CriterionResult::Bound::upper ? "<=" : ">=",
                c.bound);
  if (!rep.criteria.empty())
    std::printf("%s: %s\n", rep.command.c_str(),
                rep.all_pass() ? "all criteria pass" : "criteria FAILED");
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rough evolution equation toolkit"};
  app.require_subcommand(1);

  CommonOpts o_driver, o_solve, o_manifold, o_verify, o_probe;
  CLI::App* c_driver =
      app.add_subcommand("driver", "build a rough driver and audit its lift");
  CLI::App* c_solve = app.add_subcommand("solve", "run the global solver");
  CLI::App* c_manifold =
      app.add_subcommand("manifold", "construct the invariant graph");
  CLI::App* c_verify =
      app.add_subcommand("verify", "run the built-in property suite");
  CLI::App* c_probe =
      app.add_subcommand("probe-order", "measure local error exponents");
  attach(c_driver, o_driver);
  attach(c_solve, o_solve);
  attach(c_manifold, o_manifold);
  attach(c_verify, o_verify);
  attach(c_probe, o_probe);

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_driver->parsed()) return run(roughflow::cmd_driver(load(o_driver)));
    if (c_solve->parsed()) return run(roughflow::cmd_solve(load(o_solve)));
    if (c_manifold->parsed())
      return run(roughflow::cmd_manifold(load(o_manifold)));
    if (c_verify->parsed()) return run(roughflow::cmd_verify(load(o_verify)));
    if (c_probe->parsed())
      return run(roughflow::cmd_probe_order(load(o_probe)));
  } catch (const roughflow::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  }
  return 2;
}
