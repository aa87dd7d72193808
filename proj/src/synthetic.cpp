#include "hhnas/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "hhnas/error.hpp"
#include "hhnas/json_util.hpp"

namespace hhnas {

using nlohmann::json;
using namespace json_util;

double squash(double raw) noexcept { return 1.0 / (1.0 + std::exp(-raw)); }

double unsquash(double reward) noexcept { return std::log(reward / (1.0 - reward)); }

double raw_score(const SyntheticLandscape &landscape, const Candidate &cand) {
  auto it = landscape.archs.find(cand.arch_index);
  if (it == landscape.archs.end())
    return 0.0;
  const auto &arch = it->second;
  double score = arch.bonus;
  for (const auto &[name, term] : arch.terms) {
    auto v = cand.micro_values.find(name);
    if (v == cand.micro_values.end())
      continue;
    const double d = v->second - term.optimum;
    score -= term.weight * d * d;
  }
  return score;
}

double optimum_reward(const SyntheticLandscape &landscape) {
  double best = landscape.archs.empty() ? 0.0 : -std::numeric_limits<double>::infinity();
  for (const auto &[_, arch] : landscape.archs)
    best = std::max(best, arch.bonus);
  return squash(best);
}

EvalResult synthetic_evaluate(const SyntheticLandscape &landscape,
                              const Candidate &cand, Rng &rng) {
  double raw = raw_score(landscape, cand);
  if (landscape.noise_std > 0.0)
    raw += rng.normal(landscape.noise_std);
  EvalResult result;
  result.reward = squash(raw);
  result.metrics["raw_score"] = raw;
  result.source = EvalSource::Synthetic;
  return result;
}

SyntheticLandscape landscape_from_json(const json &doc, const std::string &path) {
  SyntheticLandscape landscape;
  landscape.noise_std = value_or<double>(doc, "noise_std", 0.0, path);
  if (!(landscape.noise_std >= 0.0))
    throw ConfigError(path + "/noise_std", "must be >= 0");
  const auto &archs = require(doc, "archs", path);
  if (!archs.is_object())
    throw ConfigError(path + "/archs", "expected an object");
  for (const auto &[key, arch_doc] : archs.items()) {
    const auto arch_path = path + "/archs/" + key;
    ArchIndex arch = 0;
    auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), arch);
    if (ec != std::errc{} || end != key.data() + key.size())
      throw ConfigError(arch_path, "architecture key must be a non-negative integer");
    ArchLandscape al;
    al.bonus = require_as<double>(arch_doc, "bonus", arch_path);
    if (arch_doc.contains("terms")) {
      for (const auto &[name, term_doc] : arch_doc.at("terms").items()) {
        const auto term_path = arch_path + "/terms/" + name;
        LandscapeTerm term;
        term.optimum = require_as<double>(term_doc, "optimum", term_path);
        term.weight = require_as<double>(term_doc, "weight", term_path);
        if (!(term.weight >= 0.0))
          throw ConfigError(term_path + "/weight", "must be >= 0");
        al.terms.emplace(name, term);
      }
    }
    landscape.archs.emplace(arch, std::move(al));
  }
  return landscape;
}

json landscape_to_json(const SyntheticLandscape &landscape) {
  json archs = json::object();
  for (const auto &[arch, al] : landscape.archs) {
    json terms = json::object();
    for (const auto &[name, term] : al.terms)
      terms[name] = json{{"optimum", term.optimum}, {"weight", term.weight}};
    archs[std::to_string(arch)] = json{{"bonus", al.bonus}, {"terms", std::move(terms)}};
  }
  return json{{"noise_std", landscape.noise_std}, {"archs", std::move(archs)}};
}

void check_landscape(const SyntheticLandscape &landscape, const SearchSpace &space) {
  for (const auto &[arch, al] : landscape.archs) {
    const auto arch_path = "/archs/" + std::to_string(arch);
    if (arch >= space.arch_count())
      throw ConfigError(arch_path, "architecture outside the search space");
    for (const auto &[name, term] : al.terms) {
      const auto *spec = space.find_micro(arch, name);
      if (spec == nullptr)
        throw ConfigError(arch_path + "/terms/" + name, "parameter not declared");
      if (term.optimum < spec->lower || term.optimum > spec->upper)
        throw ConfigError(arch_path + "/terms/" + name + "/optimum",
                          "optimum outside parameter bounds");
    }
  }
}

EvalResult SyntheticEvaluator::evaluate(const Candidate &cand) {
  ++calls_;
  return synthetic_evaluate(landscape_, cand, rng_);
}

json SyntheticEvaluator::describe() const {
  return json{{"type", "synthetic"}, {"landscape", landscape_to_json(landscape_)}};
}

} // namespace hhnas
