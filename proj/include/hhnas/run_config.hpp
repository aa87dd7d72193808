#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hhnas/compare.hpp"
#include "hhnas/engine.hpp"
#include "hhnas/external_evaluator.hpp"
#include "hhnas/search_space.hpp"
#include "hhnas/synthetic.hpp"

namespace hhnas {

// Run configuration file:
// {
//   "space": {...} | "space_file": "space.json",
//   "engine": { EngineConfig keys },
//   "evaluator": { "synthetic": { "noise_std": 0, "archs": {...} }
//                               | { "landscape_file": "landscape.json" } }
//              | { "external": { "command": ["python3", "bridge.py"],
//                                "timeout_s": 600, "inherit_env": true,
//                                "env": {"KEY": "VALUE"} } },
//   "output_dir": "runs",                      (optional)
//   "bench": { "policies": ["adaptive", "fixed_prob(0.5)", "random_search"],
//              "seeds": [1, 2, 3, 4], "iterations": 200,
//              "threshold": 0.9 | "threshold_fraction": 0.95,
//              "threads": 0 }                  (optional, used by bench)
// }
// Relative paths resolve against the config file's directory.

struct BenchConfig {
  std::vector<PolicySpec> policies;
  std::vector<std::uint64_t> seeds;
  std::uint64_t iterations = 0;
  std::optional<double> threshold;
  std::optional<double> threshold_fraction;
  unsigned threads = 0;
};

struct RunConfig {
  SearchSpace space;
  EngineConfig engine;
  std::optional<SyntheticLandscape> synthetic;
  std::optional<ExternalConfig> external;
  std::optional<std::string> output_dir;
  std::optional<BenchConfig> bench;
  /// Self-contained copy: files inlined, paths made absolute, overrides applied.
  nlohmann::json resolved;
};

/// Applies one "dotted.key=value" override. The value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(nlohmann::json &doc, const std::string &assignment);

RunConfig run_config_from_json(nlohmann::json doc,
                               const std::filesystem::path &base_dir = {});

/// Reads the file, applies overrides in order, then validates everything.
RunConfig load_run_config(const std::filesystem::path &path,
                          const std::vector<std::string> &overrides = {});

/// Fresh evaluator for this configuration. `noise_seed` seeds synthetic noise.
std::unique_ptr<Evaluator> make_evaluator(const RunConfig &cfg, std::uint64_t noise_seed);

} // namespace hhnas
