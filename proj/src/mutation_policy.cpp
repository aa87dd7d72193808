#include "hhnas/mutation_policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hhnas/error.hpp"
#include "hhnas/json_util.hpp"

namespace hhnas {

const char *to_string(Action a) noexcept {
  switch (a) {
  case Action::Flip:
    return "flip";
  case Action::Plus:
    return "plus";
  case Action::Minus:
    return "minus";
  }
  return "?";
}

Action action_from_string(const std::string &s) {
  if (s == "flip")
    return Action::Flip;
  if (s == "plus")
    return Action::Plus;
  if (s == "minus")
    return Action::Minus;
  throw ConfigError("action", "unknown action '" + s + "'");
}

const char *to_string(ContinuousMutation m) noexcept {
  return m == ContinuousMutation::MeanRelative ? "mean_relative" : "value_relative";
}

const char *to_string(PolicyMode m) noexcept {
  switch (m) {
  case PolicyMode::Adaptive:
    return "adaptive";
  case PolicyMode::FixedProb:
    return "fixed_prob";
  case PolicyMode::RandomSearch:
    return "random_search";
  }
  return "?";
}

ContinuousMutation continuous_mutation_from_string(const std::string &s) {
  if (s == "mean_relative")
    return ContinuousMutation::MeanRelative;
  if (s == "value_relative")
    return ContinuousMutation::ValueRelative;
  throw ConfigError("policy.continuous_mutation", "unknown value '" + s + "'");
}

PolicyMode policy_mode_from_string(const std::string &s) {
  if (s == "adaptive")
    return PolicyMode::Adaptive;
  if (s == "fixed_prob")
    return PolicyMode::FixedProb;
  if (s == "random_search")
    return PolicyMode::RandomSearch;
  throw ConfigError("policy.mode", "unknown value '" + s + "'");
}

void MutationPolicyConfig::validate() const {
  auto check_prob = [](double p, const char *key) {
    if (!(p > 0.0 && p <= 1.0))
      throw ConfigError(key, "must be in (0, 1]");
  };
  check_prob(max_prob, "policy.max_prob");
  if (macro_max_prob)
    check_prob(*macro_max_prob, "policy.macro_max_prob");
  if (micro_max_prob)
    check_prob(*micro_max_prob, "policy.micro_max_prob");
  if (!(fixed_prob >= 0.0 && fixed_prob <= 1.0))
    throw ConfigError("policy.fixed_prob", "must be in [0, 1]");
  if (!(q_floor > 0.0))
    throw ConfigError("policy.q_floor", "must be > 0");
  if (!(q_init >= q_floor))
    throw ConfigError("policy.q_init", "must be >= q_floor");
  if (!(q_learning_rate > 0.0))
    throw ConfigError("policy.q_learning_rate", "must be > 0");
}

void QTable::add_feature(const std::string &id, const std::string &group,
                         ParamKind kind, double q_init) {
  Entry e;
  e.group = group;
  e.binary = kind == ParamKind::Binary;
  if (e.binary) {
    e.flip = q_init;
  } else {
    e.plus = q_init;
    e.minus = q_init;
  }
  entries_[id] = std::move(e);
}

const QTable::Entry &QTable::entry(const std::string &id) const {
  auto it = entries_.find(id);
  if (it == entries_.end())
    throw UnknownFeature(id);
  return it->second;
}

QTable::Entry &QTable::mutable_entry(const std::string &id) {
  auto it = entries_.find(id);
  if (it == entries_.end())
    throw UnknownFeature(id);
  return it->second;
}

double QTable::q(const std::string &id, Action a) const {
  const auto &e = entry(id);
  if (e.binary != (a == Action::Flip)) {
    throw KindMismatch("action '" + std::string(to_string(a)) +
                       "' is not valid for feature '" + id + "'");
  }
  switch (a) {
  case Action::Flip:
    return e.flip;
  case Action::Plus:
    return e.plus;
  case Action::Minus:
    return e.minus;
  }
  return 0.0;
}

void QTable::set_q(const std::string &id, Action a, double value) {
  auto &e = mutable_entry(id);
  if (e.binary != (a == Action::Flip)) {
    throw KindMismatch("action '" + std::string(to_string(a)) +
                       "' is not valid for feature '" + id + "'");
  }
  switch (a) {
  case Action::Flip:
    e.flip = value;
    break;
  case Action::Plus:
    e.plus = value;
    break;
  case Action::Minus:
    e.minus = value;
    break;
  }
}

QTable make_q_table(const SearchSpace &space, double q_init) {
  QTable table;
  for (const auto &spec : space.macro_params()) {
    if (!spec.fixed)
      table.add_feature(macro_feature_id(spec.name), macro_group(), spec.kind, q_init);
  }
  for (const auto &[arch, specs] : space.all_micro_params()) {
    for (const auto &spec : specs) {
      if (!spec.fixed)
        table.add_feature(micro_feature_id(arch, spec.name), micro_group(arch),
                          spec.kind, q_init);
    }
  }
  return table;
}

namespace {

double entry_sum(const QTable::Entry &e) {
  return e.binary ? e.flip : e.plus + e.minus;
}

} // namespace

double cumulative_q(const QTable &table, const std::string &feature) {
  return entry_sum(table.entry(feature));
}

double mutation_probability(const QTable &table, const std::string &feature,
                            double max_prob) {
  if (table.empty())
    throw EmptyTable();
  const auto &target = table.entry(feature);
  double best = 0.0;
  for (const auto &[id, e] : table.entries()) {
    if (e.group == target.group)
      best = std::max(best, entry_sum(e));
  }
  return entry_sum(target) / best * max_prob;
}

Action select_action(const QTable &table, const std::string &feature, Rng &rng) {
  const auto &e = table.entry(feature);
  if (e.binary)
    return Action::Flip;
  const double p_plus = e.plus / (e.plus + e.minus);
  return rng.uniform() < p_plus ? Action::Plus : Action::Minus;
}

void update_q_values(QTable &table, const MutationRecord &record, double delta,
                     const MutationPolicyConfig &cfg) {
  for (const auto &m : record.entries) {
    const double q = table.q(m.feature_id, m.action);
    table.set_q(m.feature_id, m.action,
                std::max(cfg.q_floor, q + cfg.q_learning_rate * delta));
  }
}

std::string q_digest(const QTable &table) {
  std::ostringstream out;
  out.precision(17);
  for (const auto &[id, e] : table.entries()) {
    out << id << ':' << e.flip << ',' << e.plus << ',' << e.minus << ';';
  }
  return json_util::fnv1a_hex(out.str());
}

std::pair<double, std::optional<double>>
mutate_value(const ParamSpec &spec, double current, Action action,
             const GaussianState *gauss, Rng &rng, ContinuousMutation mode) {
  const bool continuous = spec.kind == ParamKind::Continuous;
  if (continuous != (gauss != nullptr)) {
    throw KindMismatch("parameter '" + spec.name + "' (" + to_string(spec.kind) +
                       ") " + (continuous ? "needs" : "must not have") +
                       " a Gaussian state");
  }
  if ((spec.kind == ParamKind::Binary) != (action == Action::Flip)) {
    throw KindMismatch("action '" + std::string(to_string(action)) +
                       "' is not valid for parameter '" + spec.name + "'");
  }
  switch (spec.kind) {
  case ParamKind::Binary:
    return {1.0 - current, std::nullopt};
  case ParamKind::Discrete: {
    const double step = action == Action::Plus ? 1.0 : -1.0;
    return {std::clamp(current + step, spec.lower, spec.upper), std::nullopt};
  }
  case ParamKind::Continuous: {
    const double x = rng.normal(std::sqrt(gauss->variance));
    const double centre = mode == ContinuousMutation::MeanRelative ? gauss->mean : current;
    const double raw = action == Action::Plus ? centre + std::abs(x) : centre - std::abs(x);
    return {std::clamp(raw, spec.lower, spec.upper), x};
  }
  }
  return {current, std::nullopt};
}

bool default_fire(const std::string &, double p, Rng &rng) { return rng.uniform() < p; }

double feature_probability(const QTable &table, const std::string &feature,
                           bool macro, const MutationPolicyConfig &cfg) {
  if (cfg.mode == PolicyMode::FixedProb)
    return cfg.fixed_prob;
  return mutation_probability(table, feature, macro ? cfg.macro_cap() : cfg.micro_cap());
}

std::pair<Candidate, MutationRecord>
mutate_candidate(const SearchSpace &space, const Candidate &cand,
                 const QTable &table, const GaussianStore &gauss_store,
                 const ArchStore &arch_store, const MutationPolicyConfig &cfg,
                 Rng &rng, const FireFn &fire) {
  Candidate next = cand;
  MutationRecord record;

  const auto macro = space.macro_params();
  for (std::size_t i = 0; i < macro.size(); ++i) {
    const auto &spec = macro[i];
    if (spec.fixed)
      continue;
    const auto id = macro_feature_id(spec.name);
    if (!fire(id, feature_probability(table, id, true, cfg), rng))
      continue;
    const auto old_bit = next.macro_vector[i];
    next.macro_vector[i] = static_cast<std::uint8_t>(1 - old_bit);
    record.entries.push_back(MutationEntry{id, spec.name, true, Action::Flip,
                                           static_cast<double>(old_bit),
                                           static_cast<double>(next.macro_vector[i]),
                                           std::nullopt});
  }

  next.arch_index = effective_arch_index(next.macro_vector, macro);
  if (next.arch_index != cand.arch_index) {
    auto it = arch_store.find(next.arch_index);
    next.micro_values = it != arch_store.end()
                            ? it->second
                            : initial_micro_values(space, next.arch_index);
  }

  for (const auto &spec : space.micro_params(next.arch_index)) {
    if (spec.fixed)
      continue;
    const auto id = micro_feature_id(next.arch_index, spec.name);
    if (!fire(id, feature_probability(table, id, false, cfg), rng))
      continue;
    Action action;
    if (spec.kind == ParamKind::Binary) {
      action = Action::Flip;
    } else if (cfg.mode == PolicyMode::FixedProb) {
      action = rng.uniform() < 0.5 ? Action::Plus : Action::Minus;
    } else {
      action = select_action(table, id, rng);
    }
    const GaussianState *gauss = nullptr;
    if (spec.kind == ParamKind::Continuous) {
      auto it = gauss_store.find(id);
      if (it == gauss_store.end())
        throw UnknownFeature(id);
      gauss = &it->second;
    }
    auto &value = next.micro_values.at(spec.name);
    const double old_value = value;
    auto [new_value, offset] =
        mutate_value(spec, old_value, action, gauss, rng, cfg.continuous_mutation);
    value = new_value;
    record.entries.push_back(
        MutationEntry{id, spec.name, false, action, old_value, new_value, offset});
  }

  next.iteration = cand.iteration + 1;
  return {std::move(next), std::move(record)};
}

Candidate sample_uniform_candidate(const SearchSpace &space, std::uint64_t iteration,
                                   Rng &rng) {
  Candidate cand;
  for (const auto &spec : space.macro_params()) {
    const auto bit = spec.fixed ? static_cast<std::uint8_t>(spec.initial)
                                : static_cast<std::uint8_t>(rng.uniform() < 0.5);
    cand.macro_vector.push_back(bit);
  }
  cand.arch_index = effective_arch_index(cand.macro_vector, space.macro_params());
  for (const auto &spec : space.micro_params(cand.arch_index)) {
    double v = spec.initial;
    if (!spec.fixed) {
      if (spec.kind == ParamKind::Continuous) {
        v = std::min(spec.upper, spec.lower + rng.uniform() * (spec.upper - spec.lower));
      } else {
        v = static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(spec.lower),
                                                static_cast<std::int64_t>(spec.upper)));
      }
    }
    cand.micro_values.emplace(spec.name, v);
  }
  cand.iteration = iteration;
  return cand;
}

} // namespace hhnas
