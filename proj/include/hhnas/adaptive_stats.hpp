#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hhnas/search_space.hpp"

namespace hhnas {

/// Running sampling distribution of one continuous feature.
struct GaussianState {
  double mean = 0.0;
  double variance = 1.0;

  bool operator==(const GaussianState &) const = default;
};

using GaussianStore = std::map<std::string, GaussianState>;

enum class TrackerMode { Arithmetic, Exponential };

/// Running average reward r̄ that the update rules compare against.
struct RewardTracker {
  double running_avg = 0.0;
  std::uint64_t count = 0;
  TrackerMode mode = TrackerMode::Arithmetic;
  double beta = 0.9;

  bool operator==(const RewardTracker &) const = default;
};

enum class VarianceStrategy { DistanceBased, MomentBased };
enum class MeanSignMode { PaperLiteral, SignCorrected };

struct StatsConfig {
  double k = 0.1;
  VarianceStrategy variance_strategy = VarianceStrategy::DistanceBased;
  double var_floor = 1e-6;
  MeanSignMode mean_sign_mode = MeanSignMode::PaperLiteral;
  TrackerMode tracker_mode = TrackerMode::Arithmetic;
  double tracker_beta = 0.9;
  /// Initial standard deviation as a fraction of (upper - lower).
  double initial_sigma_fraction = 0.25;

  void validate() const;
};

const char *to_string(VarianceStrategy s) noexcept;
const char *to_string(MeanSignMode m) noexcept;
const char *to_string(TrackerMode m) noexcept;
VarianceStrategy variance_strategy_from_string(const std::string &s);
MeanSignMode mean_sign_mode_from_string(const std::string &s);
TrackerMode tracker_mode_from_string(const std::string &s);

/// r_t - r̄, defined as 0 while the tracker has seen nothing.
double reward_delta(const RewardTracker &tracker, double reward);

/// μ += k·Δr (paper_literal) or μ += k·sign(s − μ)·Δr (sign_corrected),
/// then clamped to [spec.lower, spec.upper].
GaussianState update_mean(const GaussianState &state, double sampled,
                          double reward, const RewardTracker &tracker,
                          const StatsConfig &cfg, const ParamSpec &spec);

/// Distance-based variance update: the step scales with how far |s − μ| sits
/// outside (grow on improvement) or inside (shrink on improvement) one σ.
GaussianState update_variance_distance(const GaussianState &state,
                                       double sampled, double reward,
                                       const RewardTracker &tracker,
                                       const StatsConfig &cfg);

/// Moment-based variance update: σ² += k·((s − μ)² − σ²)/σ²·Δr.
GaussianState update_variance_moment(const GaussianState &state, double sampled,
                                     double reward, const RewardTracker &tracker,
                                     const StatsConfig &cfg);

/// Dispatches on cfg.variance_strategy.
GaussianState update_variance(const GaussianState &state, double sampled,
                              double reward, const RewardTracker &tracker,
                              const StatsConfig &cfg);

RewardTracker update_reward_tracker(const RewardTracker &tracker, double reward);

RewardTracker make_tracker(const StatsConfig &cfg);

/// One entry per continuous micro feature: μ = initial, σ = fraction·range.
GaussianStore make_gaussian_store(const SearchSpace &space, const StatsConfig &cfg);

} // namespace hhnas
