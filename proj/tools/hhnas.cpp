#include <iostream>

#include <CLI11.hpp>

#include "hhnas/cli.hpp"

int main(int argc, char **argv) {
  CLI::App app{"Hierarchical architecture/hyperparameter search with Q-table adaptive mutation"};
  app.set_version_flag("--version", hhnas::cli::kToolVersion);
  app.require_subcommand(1);

  hhnas::cli::Options opts;
  std::string config;
  std::string checkpoint;
  std::string run_dir;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App *cmd) {
    cmd->add_option("--out", opts.out, "Output root directory (default $HHNAS_OUT_DIR or ./runs)");
    cmd->add_flag("--quiet", opts.quiet, "Print only essential output");
  };

  auto *run = app.add_subcommand("run", "Run a search from a config file");
  run->add_option("--config", config, "Run configuration (JSON)")->required();
  run->add_option("--override", opts.overrides, "Override a config key: dotted.key=value")
      ->take_all();
  run->add_option("--seed", seed, "Override engine.seed");
  add_common(run);

  auto *resume = app.add_subcommand("resume", "Continue a run from its checkpoint");
  resume->add_option("checkpoint", checkpoint, "Path to checkpoint.json")->required();
  add_common(resume);

  auto *bench = app.add_subcommand("bench", "Compare mutation policies over several seeds");
  bench->add_option("--config", config, "Run configuration with a bench section")->required();
  bench->add_option("--override", opts.overrides, "Override a config key: dotted.key=value")
      ->take_all();
  bench->add_option("--seed", seed, "Override engine.seed");
  add_common(bench);

  auto *report = app.add_subcommand("report", "Extract per-architecture trends from a run");
  report->add_option("run_dir", run_dir, "Run directory")->required();
  add_common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hhnas::cli::kConfigError;
  }
  if (run->count("--seed") || bench->count("--seed"))
    opts.seed = seed;

  if (*run)
    return hhnas::cli::cmd_run(config, opts, std::cout, std::cerr);
  if (*resume)
    return hhnas::cli::cmd_resume(checkpoint, opts, std::cout, std::cerr);
  if (*bench)
    return hhnas::cli::cmd_bench(config, opts, std::cout, std::cerr);
  return hhnas::cli::cmd_report(run_dir, opts, std::cout, std::cerr);
}
