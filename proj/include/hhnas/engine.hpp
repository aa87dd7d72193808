#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hhnas/adaptive_stats.hpp"
#include "hhnas/evaluator.hpp"
#include "hhnas/mutation_policy.hpp"
#include "hhnas/rng.hpp"
#include "hhnas/search_space.hpp"

namespace hhnas {

enum class Acceptance { AlwaysAccept, GreedyElitist };

const char *to_string(Acceptance a) noexcept;
Acceptance acceptance_from_string(const std::string &s);

struct EngineConfig {
  std::uint64_t iterations = 50;
  Acceptance acceptance = Acceptance::AlwaysAccept;
  MutationPolicyConfig policy;
  StatsConfig stats;
  bool eval_cache = false;
  std::uint64_t checkpoint_every = 10;
  std::uint64_t seed = 0;
  /// When false, wall_time_ms is recorded as 0 so logs are byte-reproducible.
  bool record_timing = false;

  void validate() const;
};

nlohmann::json engine_config_to_json(const EngineConfig &cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
EngineConfig engine_config_from_json(const nlohmann::json &doc,
                                     const std::string &path = "/engine");

struct IterationRecord {
  std::uint64_t iteration = 0;
  Candidate candidate;
  double reward = 0.0;
  double running_avg = 0.0;
  MutationRecord mutation_record;
  std::string q_snapshot_digest;
  bool accepted = false;
  std::int64_t wall_time_ms = 0;
  EvalSource source = EvalSource::Synthetic;
  /// Reward of the base candidate after the acceptance decision.
  double base_reward = 0.0;
  /// P(s) used this iteration for the macro bits and the evaluated
  /// architecture's micro features.
  std::map<std::string, double> probabilities;
  /// Post-update Gaussian states of the evaluated architecture.
  GaussianStore gaussian;

  bool operator==(const IterationRecord &) const = default;
};

struct ArchBest {
  Candidate candidate;
  double reward = 0.0;

  bool operator==(const ArchBest &) const = default;
};

struct RunResult {
  Candidate best_candidate;
  double best_reward = 0.0;
  std::vector<IterationRecord> history;
  std::map<ArchIndex, ArchBest> per_arch_best;

  bool operator==(const RunResult &) const = default;
};

/// Everything needed to continue a run exactly where it stopped.
struct EngineState {
  std::uint64_t completed = 0;
  QTable q_table;
  GaussianStore gaussian;
  RewardTracker tracker;
  ArchStore arch_store;
  Candidate base;
  std::optional<double> base_reward;
  RunResult result;
  Rng rng;

  bool operator==(const EngineState &) const = default;
};

EngineState initial_state(const SearchSpace &space, const EngineConfig &cfg);

class SearchEngine;

struct RunObserver {
  std::function<void(const IterationRecord &)> on_iteration;
  /// Called every checkpoint_every iterations, at the end of the run, and
  /// before an evaluator failure propagates.
  std::function<void(const SearchEngine &)> on_checkpoint;
};

/// Sequential mutate → evaluate → update → accept loop.
class SearchEngine {
public:
  SearchEngine(SearchSpace space, EngineConfig cfg);
  SearchEngine(SearchSpace space, EngineConfig cfg, EngineState state);

  const SearchSpace &space() const noexcept { return space_; }
  const EngineConfig &config() const noexcept { return cfg_; }
  const EngineState &state() const noexcept { return state_; }
  bool finished() const noexcept { return state_.completed >= cfg_.iterations; }

  /// Overrides the per-feature firing decision (tests only).
  void set_fire(FireFn fire) { fire_ = std::move(fire); }

  /// Runs one iteration. On evaluator failure the state is left untouched.
  const IterationRecord &step(Evaluator &evaluator);

  /// Runs the remaining iterations.
  const RunResult &run(Evaluator &evaluator, const RunObserver &observer = {});

  std::uint64_t evaluator_calls() const noexcept { return evaluator_calls_; }
  std::uint64_t cache_hits() const noexcept { return cache_hits_; }

private:
  SearchSpace space_;
  EngineConfig cfg_;
  EngineState state_;
  FireFn fire_ = default_fire;
  std::unique_ptr<CachedEvaluator> cache_;
  const Evaluator *cache_owner_ = nullptr;
  std::uint64_t evaluator_calls_ = 0;
  std::uint64_t cache_hits_ = 0;
};

RunResult run_search(const SearchSpace &space, Evaluator &evaluator,
                     const EngineConfig &cfg, const RunObserver &observer = {});

} // namespace hhnas
