#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "hhnas/evaluator.hpp"
#include "hhnas/rng.hpp"
#include "hhnas/search_space.hpp"

namespace hhnas {

struct LandscapeTerm {
  double optimum = 0.0;
  double weight = 0.0;
};

struct ArchLandscape {
  double bonus = 0.0;
  std::map<std::string, LandscapeTerm> terms;
};

/// Quadratic bowl per architecture:
///   raw(θ) = bonus − Σ_i w_i·(θ_i − θ*_i)² (+ Normal(0, noise_std²))
///   reward = 1 / (1 + exp(−raw))
/// Parameters without a term contribute nothing. Architectures absent from
/// `archs` have bonus 0 and no terms.
struct SyntheticLandscape {
  std::map<ArchIndex, ArchLandscape> archs;
  double noise_std = 0.0;
};

double squash(double raw) noexcept;
/// Inverse of squash, for reward in (0, 1).
double unsquash(double reward) noexcept;

/// Noise-free raw score.
double raw_score(const SyntheticLandscape &landscape, const Candidate &cand);

/// Reward of the best architecture at its optimum point.
double optimum_reward(const SyntheticLandscape &landscape);

EvalResult synthetic_evaluate(const SyntheticLandscape &landscape,
                              const Candidate &cand, Rng &rng);

SyntheticLandscape landscape_from_json(const nlohmann::json &doc,
                                       const std::string &path = "");
nlohmann::json landscape_to_json(const SyntheticLandscape &landscape);

/// Throws ConfigError if an optimum lies outside its parameter bounds or a
/// term names an undeclared parameter.
void check_landscape(const SyntheticLandscape &landscape, const SearchSpace &space);

class SyntheticEvaluator : public Evaluator {
public:
  SyntheticEvaluator(SyntheticLandscape landscape, std::uint64_t noise_seed = 0)
      : landscape_(std::move(landscape)), rng_(noise_seed) {}

  EvalResult evaluate(const Candidate &cand) override;
  nlohmann::json describe() const override;

  const SyntheticLandscape &landscape() const noexcept { return landscape_; }
  std::uint64_t calls() const noexcept { return calls_; }

private:
  SyntheticLandscape landscape_;
  Rng rng_;
  std::uint64_t calls_ = 0;
};

} // namespace hhnas
