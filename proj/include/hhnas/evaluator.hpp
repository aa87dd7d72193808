#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "hhnas/search_space.hpp"

namespace hhnas {

enum class EvalSource { Synthetic, External, Cache };

const char *to_string(EvalSource s) noexcept;

struct EvalResult {
  double reward = 0.0;
  std::map<std::string, double> metrics;
  EvalSource source = EvalSource::Synthetic;

  bool operator==(const EvalResult &) const = default;
};

/// Reward source for candidates. Higher reward is better; rewards are finite.
class Evaluator {
public:
  virtual ~Evaluator() = default;
  virtual EvalResult evaluate(const Candidate &cand) = 0;
  virtual nlohmann::json describe() const = 0;
};

/// Key identifying "the same candidate": arch index, macro vector and micro
/// values rounded to 12 significant digits.
std::string cache_key(const Candidate &cand);

/// Memoizes an inner evaluator per cache_key. Failures are not stored.
class CachedEvaluator : public Evaluator {
public:
  explicit CachedEvaluator(std::unique_ptr<Evaluator> inner)
      : owned_(std::move(inner)), inner_(owned_.get()) {}
  /// Non-owning; `inner` must outlive the cache.
  explicit CachedEvaluator(Evaluator &inner) : inner_(&inner) {}

  EvalResult evaluate(const Candidate &cand) override;
  nlohmann::json describe() const override;

  std::uint64_t hits() const noexcept { return hits_; }
  std::uint64_t misses() const noexcept { return misses_; }
  Evaluator &inner() noexcept { return *inner_; }

private:
  std::unique_ptr<Evaluator> owned_;
  Evaluator *inner_;
  std::unordered_map<std::string, EvalResult> cache_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

std::unique_ptr<Evaluator> cached(std::unique_ptr<Evaluator> inner);

} // namespace hhnas
