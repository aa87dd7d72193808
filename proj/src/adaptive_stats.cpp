#include "hhnas/adaptive_stats.hpp"

#include <algorithm>
#include <cmath>

#include "hhnas/error.hpp"

namespace hhnas {

void StatsConfig::validate() const {
  if (!(k > 0.0))
    throw ConfigError("stats.k", "must be > 0");
  if (!(var_floor > 0.0))
    throw ConfigError("stats.var_floor", "must be > 0");
  if (!(tracker_beta >= 0.0 && tracker_beta < 1.0))
    throw ConfigError("stats.tracker_beta", "must be in [0, 1)");
  if (!(initial_sigma_fraction > 0.0))
    throw ConfigError("stats.initial_sigma_fraction", "must be > 0");
}

const char *to_string(VarianceStrategy s) noexcept {
  return s == VarianceStrategy::DistanceBased ? "distance_based" : "moment_based";
}

const char *to_string(MeanSignMode m) noexcept {
  return m == MeanSignMode::PaperLiteral ? "paper_literal" : "sign_corrected";
}

const char *to_string(TrackerMode m) noexcept {
  return m == TrackerMode::Arithmetic ? "arithmetic" : "exponential";
}

VarianceStrategy variance_strategy_from_string(const std::string &s) {
  if (s == "distance_based")
    return VarianceStrategy::DistanceBased;
  if (s == "moment_based")
    return VarianceStrategy::MomentBased;
  throw ConfigError("stats.variance_strategy", "unknown value '" + s + "'");
}

MeanSignMode mean_sign_mode_from_string(const std::string &s) {
  if (s == "paper_literal")
    return MeanSignMode::PaperLiteral;
  if (s == "sign_corrected")
    return MeanSignMode::SignCorrected;
  throw ConfigError("stats.mean_sign_mode", "unknown value '" + s + "'");
}

TrackerMode tracker_mode_from_string(const std::string &s) {
  if (s == "arithmetic")
    return TrackerMode::Arithmetic;
  if (s == "exponential")
    return TrackerMode::Exponential;
  throw ConfigError("stats.tracker", "unknown value '" + s + "'");
}

double reward_delta(const RewardTracker &tracker, double reward) {
  return tracker.count == 0 ? 0.0 : reward - tracker.running_avg;
}

GaussianState update_mean(const GaussianState &state, double sampled,
                          double reward, const RewardTracker &tracker,
                          const StatsConfig &cfg, const ParamSpec &spec) {
  const double delta = reward_delta(tracker, reward);
  double direction = 1.0;
  if (cfg.mean_sign_mode == MeanSignMode::SignCorrected) {
    const double diff = sampled - state.mean;
    direction = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  }
  GaussianState next = state;
  next.mean = std::clamp(state.mean + cfg.k * direction * delta, spec.lower,
                         spec.upper);
  return next;
}

GaussianState update_variance_distance(const GaussianState &state,
                                       double sampled, double reward,
                                       const RewardTracker &tracker,
                                       const StatsConfig &cfg) {
  const double delta = reward_delta(tracker, reward);
  const double sigma = std::sqrt(state.variance);
  const double z = std::abs(sampled - state.mean) / sigma;
  // Outside (μ−σ, μ+σ): factor z − 1; inside: 1 − z. Both are 0 at z == 1.
  const double factor = z >= 1.0 ? z - 1.0 : 1.0 - z;
  GaussianState next = state;
  next.variance = std::max(cfg.var_floor, state.variance + cfg.k * factor * delta);
  return next;
}

GaussianState update_variance_moment(const GaussianState &state, double sampled,
                                     double reward, const RewardTracker &tracker,
                                     const StatsConfig &cfg) {
  const double delta = reward_delta(tracker, reward);
  const double dev = sampled - state.mean;
  const double rel = (dev * dev - state.variance) / state.variance;
  GaussianState next = state;
  next.variance = std::max(cfg.var_floor, state.variance + cfg.k * rel * delta);
  return next;
}

GaussianState update_variance(const GaussianState &state, double sampled,
                              double reward, const RewardTracker &tracker,
                              const StatsConfig &cfg) {
  return cfg.variance_strategy == VarianceStrategy::DistanceBased
             ? update_variance_distance(state, sampled, reward, tracker, cfg)
             : update_variance_moment(state, sampled, reward, tracker, cfg);
}

RewardTracker update_reward_tracker(const RewardTracker &tracker, double reward) {
  RewardTracker next = tracker;
  if (tracker.count == 0) {
    next.running_avg = reward;
  } else if (tracker.mode == TrackerMode::Arithmetic) {
    const double n = static_cast<double>(tracker.count);
    next.running_avg = (tracker.running_avg * n + reward) / (n + 1.0);
  } else {
    next.running_avg = tracker.beta * tracker.running_avg + (1.0 - tracker.beta) * reward;
  }
  next.count = tracker.count + 1;
  return next;
}

RewardTracker make_tracker(const StatsConfig &cfg) {
  RewardTracker tracker;
  tracker.mode = cfg.tracker_mode;
  tracker.beta = cfg.tracker_beta;
  return tracker;
}

GaussianStore make_gaussian_store(const SearchSpace &space, const StatsConfig &cfg) {
  GaussianStore store;
  for (const auto &[arch, specs] : space.all_micro_params()) {
    for (const auto &spec : specs) {
      if (spec.kind != ParamKind::Continuous)
        continue;
      const double sigma = cfg.initial_sigma_fraction * (spec.upper - spec.lower);
      store.emplace(micro_feature_id(arch, spec.name),
                    GaussianState{spec.initial, std::max(cfg.var_floor, sigma * sigma)});
    }
  }
  return store;
}

} // namespace hhnas
