#include "hhnas/engine.hpp"

#include <chrono>
#include <cmath>

#include "hhnas/error.hpp"
#include "hhnas/json_util.hpp"

namespace hhnas {

using nlohmann::json;
using namespace json_util;

const char *to_string(Acceptance a) noexcept {
  return a == Acceptance::AlwaysAccept ? "always_accept" : "greedy_elitist";
}

Acceptance acceptance_from_string(const std::string &s) {
  if (s == "always_accept")
    return Acceptance::AlwaysAccept;
  if (s == "greedy_elitist")
    return Acceptance::GreedyElitist;
  throw ConfigError("/engine/acceptance", "unknown value '" + s + "'");
}

void EngineConfig::validate() const {
  if (iterations < 1)
    throw ConfigError("/engine/iterations", "must be >= 1");
  if (checkpoint_every < 1)
    throw ConfigError("/engine/checkpoint_every", "must be >= 1");
  policy.validate();
  stats.validate();
}

json engine_config_to_json(const EngineConfig &cfg) {
  json policy{{"mode", to_string(cfg.policy.mode)},
              {"max_prob", cfg.policy.max_prob},
              {"macro_max_prob", nullptr},
              {"micro_max_prob", nullptr},
              {"q_init", cfg.policy.q_init},
              {"q_floor", cfg.policy.q_floor},
              {"q_learning_rate", cfg.policy.q_learning_rate},
              {"continuous_mutation", to_string(cfg.policy.continuous_mutation)},
              {"fixed_prob", cfg.policy.fixed_prob}};
  if (cfg.policy.macro_max_prob)
    policy["macro_max_prob"] = *cfg.policy.macro_max_prob;
  if (cfg.policy.micro_max_prob)
    policy["micro_max_prob"] = *cfg.policy.micro_max_prob;
  json stats{{"k", cfg.stats.k},
             {"variance_strategy", to_string(cfg.stats.variance_strategy)},
             {"var_floor", cfg.stats.var_floor},
             {"mean_sign_mode", to_string(cfg.stats.mean_sign_mode)},
             {"tracker", to_string(cfg.stats.tracker_mode)},
             {"tracker_beta", cfg.stats.tracker_beta},
             {"initial_sigma_fraction", cfg.stats.initial_sigma_fraction}};
  return json{{"iterations", cfg.iterations},
              {"acceptance", to_string(cfg.acceptance)},
              {"eval_cache", cfg.eval_cache},
              {"checkpoint_every", cfg.checkpoint_every},
              {"seed", cfg.seed},
              {"record_timing", cfg.record_timing},
              {"policy", std::move(policy)},
              {"stats", std::move(stats)}};
}

namespace {

void reject_unknown(const json &doc, std::initializer_list<const char *> known,
                    const std::string &path) {
  if (!doc.is_object())
    throw ConfigError(path, "expected an object");
  for (const auto &[key, _] : doc.items()) {
    bool ok = false;
    for (const char *k : known)
      ok = ok || key == k;
    if (!ok)
      throw ConfigError(path + "/" + key, "unknown key");
  }
}

template <typename Enum, typename Parse>
Enum enum_or(const json &doc, const char *key, Enum fallback, Parse parse,
             const std::string &path) {
  if (!doc.contains(key))
    return fallback;
  const auto text = get_as<std::string>(doc.at(key), path + "/" + key);
  try {
    return parse(text);
  } catch (const ConfigError &e) {
    throw ConfigError(path + "/" + key, "unknown value '" + text + "'");
  }
}

std::optional<double> optional_double(const json &doc, const char *key,
                                      const std::string &path) {
  if (!doc.contains(key) || doc.at(key).is_null())
    return std::nullopt;
  return get_as<double>(doc.at(key), path + "/" + key);
}

} // namespace

EngineConfig engine_config_from_json(const json &doc, const std::string &path) {
  reject_unknown(doc,
                 {"iterations", "acceptance", "eval_cache", "checkpoint_every", "seed",
                  "record_timing", "policy", "stats"},
                 path);
  EngineConfig cfg;
  cfg.iterations = value_or<std::uint64_t>(doc, "iterations", cfg.iterations, path);
  cfg.acceptance = enum_or(doc, "acceptance", cfg.acceptance, acceptance_from_string, path);
  cfg.eval_cache = value_or<bool>(doc, "eval_cache", cfg.eval_cache, path);
  cfg.checkpoint_every =
      value_or<std::uint64_t>(doc, "checkpoint_every", cfg.checkpoint_every, path);
  cfg.seed = value_or<std::uint64_t>(doc, "seed", cfg.seed, path);
  cfg.record_timing = value_or<bool>(doc, "record_timing", cfg.record_timing, path);

  if (doc.contains("policy")) {
    const auto &p = doc.at("policy");
    const auto pp = path + "/policy";
    reject_unknown(p,
                   {"mode", "max_prob", "macro_max_prob", "micro_max_prob", "q_init",
                    "q_floor", "q_learning_rate", "continuous_mutation", "fixed_prob"},
                   pp);
    auto &pol = cfg.policy;
    pol.mode = enum_or(p, "mode", pol.mode, policy_mode_from_string, pp);
    pol.max_prob = value_or<double>(p, "max_prob", pol.max_prob, pp);
    pol.macro_max_prob = optional_double(p, "macro_max_prob", pp);
    pol.micro_max_prob = optional_double(p, "micro_max_prob", pp);
    pol.q_init = value_or<double>(p, "q_init", pol.q_init, pp);
    pol.q_floor = value_or<double>(p, "q_floor", pol.q_floor, pp);
    pol.q_learning_rate = value_or<double>(p, "q_learning_rate", pol.q_learning_rate, pp);
    pol.continuous_mutation = enum_or(p, "continuous_mutation", pol.continuous_mutation,
                                      continuous_mutation_from_string, pp);
    pol.fixed_prob = value_or<double>(p, "fixed_prob", pol.fixed_prob, pp);
  }
  if (doc.contains("stats")) {
    const auto &s = doc.at("stats");
    const auto sp = path + "/stats";
    reject_unknown(s,
                   {"k", "variance_strategy", "var_floor", "mean_sign_mode", "tracker",
                    "tracker_beta", "initial_sigma_fraction"},
                   sp);
    auto &st = cfg.stats;
    st.k = value_or<double>(s, "k", st.k, sp);
    st.variance_strategy = enum_or(s, "variance_strategy", st.variance_strategy,
                                   variance_strategy_from_string, sp);
    st.var_floor = value_or<double>(s, "var_floor", st.var_floor, sp);
    st.mean_sign_mode =
        enum_or(s, "mean_sign_mode", st.mean_sign_mode, mean_sign_mode_from_string, sp);
    st.tracker_mode = enum_or(s, "tracker", st.tracker_mode, tracker_mode_from_string, sp);
    st.tracker_beta = value_or<double>(s, "tracker_beta", st.tracker_beta, sp);
    st.initial_sigma_fraction =
        value_or<double>(s, "initial_sigma_fraction", st.initial_sigma_fraction, sp);
  }
  try {
    cfg.validate();
  } catch (const ConfigError &e) {
    throw ConfigError(e.path().rfind("/engine", 0) == 0 ? e.path() : path + "/" + e.path(),
                      e.what());
  }
  return cfg;
}

EngineState initial_state(const SearchSpace &space, const EngineConfig &cfg) {
  EngineState state;
  state.q_table = make_q_table(space, cfg.policy.q_init);
  state.gaussian = make_gaussian_store(space, cfg.stats);
  state.tracker = make_tracker(cfg.stats);
  state.base = initial_candidate(space);
  state.rng = Rng(cfg.seed);
  return state;
}

SearchEngine::SearchEngine(SearchSpace space, EngineConfig cfg)
    : space_(std::move(space)), cfg_(std::move(cfg)) {
  cfg_.validate();
  state_ = initial_state(space_, cfg_);
}

SearchEngine::SearchEngine(SearchSpace space, EngineConfig cfg, EngineState state)
    : space_(std::move(space)), cfg_(std::move(cfg)), state_(std::move(state)) {
  cfg_.validate();
}

const IterationRecord &SearchEngine::step(Evaluator &evaluator) {
  const std::uint64_t iteration = state_.completed + 1;
  Rng rng = state_.rng;

  Candidate cand;
  MutationRecord mutation;
  if (cfg_.policy.mode == PolicyMode::RandomSearch) {
    cand = sample_uniform_candidate(space_, iteration, rng);
  } else {
    std::tie(cand, mutation) =
        mutate_candidate(space_, state_.base, state_.q_table, state_.gaussian,
                         state_.arch_store, cfg_.policy, rng, fire_);
  }
  cand.iteration = iteration;
  validate_candidate(space_, cand);

  std::map<std::string, double> probabilities;
  if (cfg_.policy.mode != PolicyMode::RandomSearch) {
    for (const auto &spec : space_.macro_params()) {
      if (spec.fixed)
        continue;
      const auto id = macro_feature_id(spec.name);
      probabilities[id] = feature_probability(state_.q_table, id, true, cfg_.policy);
    }
    for (const auto &spec : space_.micro_params(cand.arch_index)) {
      if (spec.fixed)
        continue;
      const auto id = micro_feature_id(cand.arch_index, spec.name);
      probabilities[id] = feature_probability(state_.q_table, id, false, cfg_.policy);
    }
  }

  Evaluator *target = &evaluator;
  if (cfg_.eval_cache) {
    if (!cache_ || cache_owner_ != &evaluator) {
      cache_ = std::make_unique<CachedEvaluator>(evaluator);
      cache_owner_ = &evaluator;
    }
    target = cache_.get();
  }

  const auto started = std::chrono::steady_clock::now();
  EvalResult result;
  try {
    result = target->evaluate(cand);
  } catch (const EvaluatorFailure &) {
    throw;
  } catch (const std::exception &e) {
    throw EvaluatorFailure(std::string("evaluator failed: ") + e.what());
  }
  const auto elapsed = std::chrono::steady_clock::now() - started;
  if (result.source == EvalSource::Cache)
    ++cache_hits_;
  else
    ++evaluator_calls_;
  if (!std::isfinite(result.reward)) {
    throw EvaluatorFailure("evaluator returned a non-finite reward at iteration " +
                           std::to_string(iteration));
  }
  const double reward = result.reward;

  // Q, μ and σ² see r̄ from before this observation; the tracker goes last.
  const double delta = reward_delta(state_.tracker, reward);
  if (cfg_.policy.mode == PolicyMode::Adaptive)
    update_q_values(state_.q_table, mutation, delta, cfg_.policy);
  for (const auto &m : mutation.entries) {
    if (!m.offset)
      continue;
    const auto *spec = space_.find_micro(cand.arch_index, m.name);
    auto &gauss = state_.gaussian.at(m.feature_id);
    const auto with_mean =
        update_mean(gauss, m.new_value, reward, state_.tracker, cfg_.stats, *spec);
    const auto with_var =
        update_variance(gauss, m.new_value, reward, state_.tracker, cfg_.stats);
    gauss = GaussianState{with_mean.mean, with_var.variance};
  }
  state_.tracker = update_reward_tracker(state_.tracker, reward);

  bool accepted = true;
  if (cfg_.acceptance == Acceptance::GreedyElitist && state_.base_reward)
    accepted = reward >= *state_.base_reward;
  if (accepted) {
    state_.base = cand;
    state_.base_reward = reward;
  }
  state_.arch_store[cand.arch_index] = cand.micro_values;

  auto &res = state_.result;
  if (res.history.empty() || reward > res.best_reward) {
    res.best_reward = reward;
    res.best_candidate = cand;
  }
  auto arch_best = res.per_arch_best.find(cand.arch_index);
  if (arch_best == res.per_arch_best.end() || reward > arch_best->second.reward)
    res.per_arch_best[cand.arch_index] = ArchBest{cand, reward};

  IterationRecord record;
  record.iteration = iteration;
  record.candidate = cand;
  record.reward = reward;
  record.running_avg = state_.tracker.running_avg;
  record.mutation_record = std::move(mutation);
  record.q_snapshot_digest = q_digest(state_.q_table);
  record.accepted = accepted;
  record.wall_time_ms =
      cfg_.record_timing
          ? std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count()
          : 0;
  record.source = result.source;
  record.base_reward = *state_.base_reward;
  record.probabilities = std::move(probabilities);
  for (const auto &spec : space_.micro_params(cand.arch_index)) {
    if (spec.kind != ParamKind::Continuous)
      continue;
    const auto id = micro_feature_id(cand.arch_index, spec.name);
    record.gaussian[id] = state_.gaussian.at(id);
  }
  res.history.push_back(std::move(record));

  state_.rng = rng;
  state_.completed = iteration;
  return res.history.back();
}

const RunResult &SearchEngine::run(Evaluator &evaluator, const RunObserver &observer) {
  while (!finished()) {
    try {
      step(evaluator);
    } catch (const EvaluatorFailure &) {
      if (observer.on_checkpoint)
        observer.on_checkpoint(*this);
      throw;
    }
    if (observer.on_iteration)
      observer.on_iteration(state_.result.history.back());
    if (observer.on_checkpoint &&
        (state_.completed % cfg_.checkpoint_every == 0 || finished()))
      observer.on_checkpoint(*this);
  }
  return state_.result;
}

RunResult run_search(const SearchSpace &space, Evaluator &evaluator,
                     const EngineConfig &cfg, const RunObserver &observer) {
  SearchEngine engine(space, cfg);
  return engine.run(evaluator, observer);
}

} // namespace hhnas
