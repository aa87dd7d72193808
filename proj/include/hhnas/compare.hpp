#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hhnas/engine.hpp"

namespace hhnas {

struct PolicySpec {
  PolicyMode mode = PolicyMode::Adaptive;
  double fixed_prob = 0.5;

  std::string label() const;
};

/// Accepts "adaptive", "random_search", "fixed_prob(0.5)" or "fixed_prob:0.5".
PolicySpec policy_spec_from_string(const std::string &text);

/// Builds a fresh evaluator per (policy, seed) cell.
using EvaluatorFactory = std::function<std::unique_ptr<Evaluator>(std::uint64_t seed)>;

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

/// Linear-interpolation quartiles; infinities sort last.
Quartiles quartiles(std::vector<double> values);

struct CellResult {
  std::uint64_t seed = 0;
  std::vector<double> best_by_iteration;
  /// First iteration whose best-so-far reached the threshold.
  std::optional<std::uint64_t> iterations_to_threshold;
  std::optional<std::string> error;
  RunResult run;
};

struct PolicyReport {
  PolicySpec policy;
  std::vector<CellResult> cells;
  /// Per-iteration quartiles of best-so-far across successful seeds.
  std::vector<Quartiles> best_curve;
  /// Unreached seeds count as +inf.
  Quartiles iterations_to_threshold;
  std::size_t reached = 0;
  std::size_t failed = 0;
};

struct ComparisonReport {
  double threshold = 0.0;
  std::uint64_t iterations = 0;
  std::vector<PolicyReport> policies;
};

/// Runs every (policy, seed) cell with `base` as the engine configuration
/// (its policy mode, fixed_prob, seed and iterations overridden per cell).
/// Cells run concurrently on up to `threads` workers (0 = hardware). A
/// failing cell is marked in the report instead of aborting the comparison.
ComparisonReport compare_policies(const SearchSpace &space,
                                  const EvaluatorFactory &factory,
                                  const std::vector<PolicySpec> &policies,
                                  const std::vector<std::uint64_t> &seeds,
                                  std::uint64_t iterations, double threshold,
                                  const EngineConfig &base = {}, unsigned threads = 0);

nlohmann::json comparison_to_json(const ComparisonReport &report);
/// policy,reached,failed,itt_q1,itt_median,itt_q3,final_best_q1,final_best_median,final_best_q3
std::string comparison_csv(const ComparisonReport &report);
/// iteration,<label>_q1,<label>_median,<label>_q3,...
std::string comparison_curve_csv(const ComparisonReport &report);
std::string comparison_table(const ComparisonReport &report);

} // namespace hhnas
