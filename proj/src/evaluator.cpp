#include "hhnas/evaluator.hpp"

#include <cstdio>

namespace hhnas {

const char *to_string(EvalSource s) noexcept {
  switch (s) {
  case EvalSource::Synthetic:
    return "synthetic";
  case EvalSource::External:
    return "external";
  case EvalSource::Cache:
    return "cache";
  }
  return "?";
}

std::string cache_key(const Candidate &cand) {
  std::string key = "a" + std::to_string(cand.arch_index) + "|m";
  for (auto bit : cand.macro_vector)
    key += bit ? '1' : '0';
  char buf[40];
  for (const auto &[name, value] : cand.micro_values) {
    std::snprintf(buf, sizeof(buf), "%.11e", value);
    key += '|';
    key += name;
    key += '=';
    key += buf;
  }
  return key;
}

EvalResult CachedEvaluator::evaluate(const Candidate &cand) {
  const auto key = cache_key(cand);
  if (auto it = cache_.find(key); it != cache_.end()) {
    ++hits_;
    EvalResult hit = it->second;
    hit.source = EvalSource::Cache;
    return hit;
  }
  EvalResult result = inner_->evaluate(cand);
  ++misses_;
  cache_.emplace(key, result);
  return result;
}

nlohmann::json CachedEvaluator::describe() const {
  return nlohmann::json{{"type", "cached"}, {"inner", inner_->describe()}};
}

std::unique_ptr<Evaluator> cached(std::unique_ptr<Evaluator> inner) {
  return std::make_unique<CachedEvaluator>(std::move(inner));
}

} // namespace hhnas
