#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "hhnas/checkpoint.hpp"
#include "hhnas/error.hpp"
#include "hhnas/json_util.hpp"
#include "hhnas/synthetic.hpp"
#include "hhnas/trajectory.hpp"
#include "test_support.hpp"

using namespace hhnas;
using namespace hhnas::testing;

namespace {

class ConstantEvaluator : public Evaluator {
public:
  explicit ConstantEvaluator(double r) : reward_(r) {}
  int calls = 0;
  EvalResult evaluate(const Candidate &) override {
    ++calls;
    EvalResult r;
    r.reward = reward_;
    return r;
  }
  nlohmann::json describe() const override { return {{"type", "constant"}}; }

private:
  double reward_;
};

/// Fails on the given call number, delegating otherwise.
class FlakyEvaluator : public Evaluator {
public:
  FlakyEvaluator(Evaluator &inner, int fail_on) : inner_(inner), fail_on_(fail_on) {}
  int calls = 0;
  EvalResult evaluate(const Candidate &cand) override {
    if (++calls == fail_on_)
      throw EvaluatorFailure("simulated crash");
    return inner_.evaluate(cand);
  }
  nlohmann::json describe() const override { return {{"type", "flaky"}}; }

private:
  Evaluator &inner_;
  int fail_on_;
};

EngineConfig small_config(std::uint64_t iterations, std::uint64_t seed) {
  EngineConfig cfg;
  cfg.iterations = iterations;
  cfg.seed = seed;
  return cfg;
}

std::filesystem::path temp_path(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() / "hhnas_engine_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

} // namespace

TEST_SUITE("engine") {

TEST_CASE("single iteration with a constant evaluator") {
  ConstantEvaluator eval(0.5);
  const auto result = run_search(backbone_space(), eval, small_config(1, 3));
  REQUIRE(result.history.size() == 1);
  CHECK(eval.calls == 1);
  CHECK(result.best_reward == 0.5);
  CHECK(result.history[0].iteration == 1);
  CHECK(result.history[0].accepted);
  CHECK(result.history[0].running_avg == 0.5);
  CHECK(result.best_candidate == result.history[0].candidate);
}

TEST_CASE("constant reward leaves Q and the Gaussians unchanged") {
  ConstantEvaluator eval(0.5);
  const auto space = backbone_space();
  SearchEngine engine(space, small_config(30, 4));
  const auto before = engine.state();
  engine.run(eval);
  CHECK(engine.state().q_table == before.q_table);
  CHECK(engine.state().gaussian == before.gaussian);
}

TEST_CASE("same seed gives identical histories and trajectory bytes") {
  const auto space = convergence_space();
  const auto land = convergence_landscape();
  for (auto acceptance : {Acceptance::AlwaysAccept, Acceptance::GreedyElitist}) {
    auto cfg = small_config(60, 77);
    cfg.acceptance = acceptance;
    SyntheticEvaluator a(land), b(land);
    const auto ra = run_search(space, a, cfg);
    const auto rb = run_search(space, b, cfg);
    CHECK(ra == rb);
    std::string la, lb;
    for (std::size_t i = 0; i < ra.history.size(); ++i) {
      la += trajectory_line(ra.history[i]);
      lb += trajectory_line(rb.history[i]);
    }
    CHECK(la == lb);
  }
  SyntheticEvaluator c(land), d(land);
  CHECK(run_search(space, c, small_config(30, 1)).history !=
        run_search(space, d, small_config(30, 2)).history);
}

TEST_CASE("every evaluated candidate is valid and best-so-far is monotone") {
  const auto space = convergence_space();
  const auto land = convergence_landscape();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticEvaluator eval(land);
    const auto result = run_search(space, eval, small_config(100, seed));
    REQUIRE(result.history.size() == 100);
    double best = -1;
    for (std::size_t i = 0; i < result.history.size(); ++i) {
      const auto &rec = result.history[i];
      CHECK(rec.iteration == i + 1);
      CHECK(rec.candidate.iteration == rec.iteration);
      CHECK_NOTHROW(validate_candidate(space, rec.candidate));
      CHECK(rec.reward >= 0.0);
      CHECK(rec.reward <= 1.0);
      for (const auto &[id, p] : rec.probabilities) {
        CHECK(p > 0.0);
        CHECK(p <= 0.5 + 1e-15);
      }
      for (const auto &[id, g] : rec.gaussian)
        CHECK(g.variance >= 1e-6);
      best = std::max(best, rec.reward);
    }
    CHECK(result.best_reward == best);
    for (const auto &[arch, ab] : result.per_arch_best) {
      CHECK(ab.candidate.arch_index == arch);
      CHECK(ab.reward <= result.best_reward);
    }
  }
}

TEST_CASE("greedy acceptance never lowers the base reward") {
  const auto land = convergence_landscape();
  SyntheticEvaluator eval(land);
  auto cfg = small_config(120, 9);
  cfg.acceptance = Acceptance::GreedyElitist;
  const auto result = run_search(convergence_space(), eval, cfg);
  double base = -1;
  for (const auto &rec : result.history) {
    CHECK(rec.base_reward >= base);
    CHECK(rec.accepted == (rec.reward >= base));
    base = rec.base_reward;
  }
}

TEST_CASE("returning to an architecture resumes from its last micro values") {
  const auto space = backbone_space();
  ConstantEvaluator eval(0.5);
  SearchEngine engine(space, small_config(3, 0));
  // Start on arch 0. Iteration 1 flips p3 to arch 1 and moves filters,
  // iteration 2 flips back to arch 0, iteration 3 returns to arch 1 with
  // nothing else fired.
  const std::vector<std::set<std::string>> plans{
      {"macro/p3", "arch1/filters"}, {"macro/p3"}, {"macro/p3"}};
  std::size_t step = 0;
  engine.set_fire([&](const std::string &id, double, Rng &) { return plans[step].count(id) > 0; });
  for (step = 0; step < 3; ++step)
    engine.step(eval);
  const auto &h = engine.state().result.history;
  REQUIRE(h.size() == 3);
  CHECK(h[0].candidate.arch_index == 1);
  CHECK(h[1].candidate.arch_index == 0);
  CHECK(h[2].candidate.arch_index == 1);
  CHECK(h[2].candidate.micro_values == h[0].candidate.micro_values);
  CHECK(h[0].candidate.micro_values.at("filters") != 4.0);
}

TEST_CASE("iteration budget counts cache hits") {
  const auto space = backbone_space();
  ConstantEvaluator eval(0.5);
  auto cfg = small_config(40, 12);
  cfg.eval_cache = true;
  SearchEngine engine(space, cfg);
  engine.run(eval);
  CHECK(engine.state().result.history.size() == 40);
  CHECK(engine.evaluator_calls() + engine.cache_hits() == 40);
  CHECK(static_cast<std::uint64_t>(eval.calls) == engine.evaluator_calls());
  CHECK(engine.cache_hits() > 0);
  std::uint64_t hits = 0;
  for (const auto &rec : engine.state().result.history)
    hits += rec.source == EvalSource::Cache;
  CHECK(hits == engine.cache_hits());

  ConstantEvaluator plain(0.5);
  SearchEngine uncached(space, small_config(40, 12));
  uncached.run(plain);
  CHECK(plain.calls == 40);
}

TEST_CASE("evaluator failure leaves state untouched and triggers a checkpoint") {
  const auto space = convergence_space();
  SyntheticEvaluator inner(convergence_landscape());
  FlakyEvaluator flaky(inner, 8);
  SearchEngine engine(space, small_config(20, 5));
  EngineState at_failure;
  int checkpoints = 0;
  RunObserver obs;
  obs.on_checkpoint = [&](const SearchEngine &e) {
    ++checkpoints;
    at_failure = e.state();
  };
  CHECK_THROWS_AS(engine.run(flaky, obs), EvaluatorFailure);
  CHECK(engine.state().completed == 7);
  CHECK(engine.state().result.history.size() == 7);
  CHECK(checkpoints == 1);
  CHECK(at_failure == engine.state());

  // Continuing after the failure matches an uninterrupted run.
  engine.run(inner);
  SyntheticEvaluator fresh(convergence_landscape());
  CHECK(engine.state().result == run_search(space, fresh, small_config(20, 5)));
}

TEST_CASE("checkpoint at 25 of 50 resumes to the identical run") {
  const auto space = convergence_space();
  const auto land = convergence_landscape();
  auto cfg = small_config(50, 31);
  cfg.checkpoint_every = 25;
  const auto path = temp_path("half.json");
  std::filesystem::remove(path);

  SyntheticEvaluator full_eval(land);
  const auto full = run_search(space, full_eval, cfg);

  // Interrupted run: stop after the first checkpoint.
  SyntheticEvaluator first_eval(land);
  SearchEngine first(space, cfg);
  for (int i = 0; i < 25; ++i)
    first.step(first_eval);
  save_checkpoint(path, first);

  const auto ck = load_checkpoint(path);
  CHECK(ck.state == first.state());
  CHECK(ck.config.iterations == 50);
  SyntheticEvaluator second_eval(land);
  const auto resumed = resume(path, second_eval);
  CHECK(resumed == full);
  std::string a, b;
  for (std::size_t i = 0; i < full.history.size(); ++i) {
    a += trajectory_line(full.history[i]);
    b += trajectory_line(resumed.history[i]);
  }
  CHECK(a == b);
}

TEST_CASE("checkpoint round trip through JSON is lossless") {
  SyntheticEvaluator eval(convergence_landscape());
  SearchEngine engine(convergence_space(), small_config(30, 8));
  for (int i = 0; i < 17; ++i)
    engine.step(eval);
  const auto doc = checkpoint_to_json(engine, {{"note", "x"}});
  const auto back = checkpoint_from_json(nlohmann::json::parse(doc.dump()));
  CHECK(back.state == engine.state());
  CHECK(back.extra == nlohmann::json{{"note", "x"}});
  CHECK(engine_config_to_json(back.config) == engine_config_to_json(engine.config()));
}

TEST_CASE("bad checkpoints are rejected") {
  SyntheticEvaluator eval(convergence_landscape());
  SearchEngine engine(convergence_space(), small_config(10, 8));
  engine.step(eval);
  const auto path = temp_path("bad.json");
  save_checkpoint(path, engine);
  std::string text;
  {
    std::ifstream in(path);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }

  CHECK_THROWS_AS(load_checkpoint(temp_path("does-not-exist.json")), CorruptCheckpoint);

  json_util::write_file_atomic(path, text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(path), CorruptCheckpoint);

  auto doc = nlohmann::json::parse(text);
  doc["version"] = 2;
  json_util::write_file_atomic(path, doc.dump());
  CHECK_THROWS_AS(load_checkpoint(path), VersionMismatch);

  doc = nlohmann::json::parse(text);
  doc["engine"]["iterations"] = 11;
  json_util::write_file_atomic(path, doc.dump());
  CHECK_THROWS_AS(load_checkpoint(path), CorruptCheckpoint);

  CHECK_THROWS_AS(save_checkpoint("/proc/hhnas/nope.json", engine), CheckpointIOError);
}

TEST_CASE("engine config JSON") {
  EngineConfig cfg;
  cfg.iterations = 7;
  cfg.acceptance = Acceptance::GreedyElitist;
  cfg.policy.max_prob = 0.3;
  cfg.stats.mean_sign_mode = MeanSignMode::SignCorrected;
  const auto doc = engine_config_to_json(cfg);
  CHECK(engine_config_to_json(engine_config_from_json(doc)) == doc);
  try {
    engine_config_from_json({{"iterations", 5}, {"bogus", 1}});
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(e.path() == "/engine/bogus");
  }
  CHECK_THROWS_AS(engine_config_from_json({{"iterations", 0}}), ConfigError);
  CHECK_THROWS_AS(engine_config_from_json({{"policy", {{"max_prob", 1.5}}}}), ConfigError);
}

} // TEST_SUITE
