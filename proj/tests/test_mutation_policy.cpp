#include <doctest.h>

#include <cmath>
#include <set>

#include "hhnas/error.hpp"
#include "hhnas/mutation_policy.hpp"
#include "test_support.hpp"

using namespace hhnas;
using namespace hhnas::testing;

namespace {

QTable two_feature_table(double qa_plus, double qa_minus, double qb_plus, double qb_minus) {
  QTable t;
  t.add_feature("a", "g", ParamKind::Discrete, 1.0);
  t.add_feature("b", "g", ParamKind::Discrete, 1.0);
  t.set_q("a", Action::Plus, qa_plus);
  t.set_q("a", Action::Minus, qa_minus);
  t.set_q("b", Action::Plus, qb_plus);
  t.set_q("b", Action::Minus, qb_minus);
  return t;
}

FireFn fire_only(std::set<std::string> ids) {
  return [ids = std::move(ids)](const std::string &id, double, Rng &) {
    return ids.count(id) != 0;
  };
}

const FireFn never = [](const std::string &, double, Rng &) { return false; };

} // namespace

TEST_SUITE("mutation_policy") {

TEST_CASE("cumulative_q sums the feature's actions") {
  auto t = two_feature_table(1.0, 1.0, 2.5, 0.5);
  CHECK(cumulative_q(t, "a") == 2.0);
  CHECK(cumulative_q(t, "b") == 3.0);
  t.add_feature("bit", "g", ParamKind::Binary, 0.5);
  CHECK(cumulative_q(t, "bit") == 0.5);
  CHECK_THROWS_AS(cumulative_q(t, "zzz"), UnknownFeature);
}

TEST_CASE("mutation_probability normalizes by the strongest feature") {
  auto t = two_feature_table(1.0, 1.0, 2.0, 2.0);
  CHECK(std::abs(mutation_probability(t, "a", 0.8) - 0.4) < 1e-12);
  CHECK(std::abs(mutation_probability(t, "b", 0.8) - 0.8) < 1e-12);

  auto equal = two_feature_table(1.5, 0.5, 1.0, 1.0);
  CHECK(mutation_probability(equal, "a", 0.6) == 0.6);
  CHECK(mutation_probability(equal, "b", 0.6) == 0.6);

  QTable single;
  single.add_feature("only", "g", ParamKind::Continuous, 0.3);
  CHECK(mutation_probability(single, "only", 0.7) == 0.7);

  CHECK_THROWS_AS(mutation_probability(QTable{}, "a", 0.5), EmptyTable);
  CHECK_THROWS_AS(mutation_probability(t, "nope", 0.5), UnknownFeature);
}

TEST_CASE("mutation_probability normalizes within a feature's group") {
  QTable t;
  t.add_feature("macro/x", "macro", ParamKind::Binary, 4.0);
  t.add_feature("arch0/y", "arch0", ParamKind::Continuous, 0.5);
  t.add_feature("arch0/z", "arch0", ParamKind::Continuous, 0.25);
  CHECK(mutation_probability(t, "macro/x", 0.5) == 0.5);
  CHECK(mutation_probability(t, "arch0/y", 0.5) == 0.5);
  CHECK(mutation_probability(t, "arch0/z", 0.5) == 0.25);
}

TEST_CASE("max P equals max_prob and all P are positive on random tables") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto space = random_space(rng);
    const double q_floor = 0.05;
    auto table = random_q_table(space, rng, q_floor);
    if (table.empty())
      continue;
    // Push some entries to the floor, as repeated bad rewards would.
    MutationRecord rec;
    for (const auto &[id, e] : table.entries()) {
      if (rng.uniform() < 0.3)
        rec.entries.push_back({id, id, false, e.binary ? Action::Flip : Action::Minus, 0, 0, {}});
    }
    MutationPolicyConfig cfg;
    cfg.q_floor = q_floor;
    update_q_values(table, rec, -100.0, cfg);

    const double max_prob = 0.05 + 0.95 * rng.uniform();
    std::map<std::string, double> group_max;
    for (const auto &[id, e] : table.entries()) {
      CHECK(e.flip >= (e.binary ? q_floor : 0.0));
      if (!e.binary) {
        CHECK(e.plus >= q_floor);
        CHECK(e.minus >= q_floor);
      }
      const double p = mutation_probability(table, id, max_prob);
      CHECK(p > 0.0);
      CHECK(p <= max_prob);
      group_max[e.group] = std::max(group_max[e.group], p);
    }
    for (const auto &[group, p] : group_max)
      CHECK(p == max_prob);
  }
}

TEST_CASE("select_action: binary always flips without a draw") {
  QTable t;
  t.add_feature("bit", "g", ParamKind::Binary, 1.0);
  Rng rng(1);
  const Rng before = rng;
  for (int i = 0; i < 10; ++i)
    CHECK(select_action(t, "bit", rng) == Action::Flip);
  CHECK(rng == before);
}

TEST_CASE("select_action consumes exactly one draw for non-binary features") {
  auto t = two_feature_table(3.0, 1.0, 1.0, 1.0);
  Rng rng(5);
  Rng mirror(5);
  select_action(t, "a", rng);
  mirror.uniform();
  CHECK(rng == mirror);
}

TEST_CASE("select_action frequency matches the Q ratio") {
  // Frequency-estimate oracle over 1e5 seeded draws.
  for (auto [plus, minus] : {std::pair{3.0, 1.0}, std::pair{1.0, 1.0}, std::pair{0.05, 2.0}}) {
    auto t = two_feature_table(plus, minus, 1.0, 1.0);
    Rng rng(12345);
    int hits = 0;
    constexpr int n = 100000;
    for (int i = 0; i < n; ++i)
      hits += select_action(t, "a", rng) == Action::Plus ? 1 : 0;
    const double expected = plus / (plus + minus);
    CHECK(std::abs(static_cast<double>(hits) / n - expected) <= 0.01);
  }
}

TEST_CASE("mutate_value operators") {
  Rng rng(9);
  const auto bit = binary("b");
  CHECK(mutate_value(bit, 0, Action::Flip, nullptr, rng).first == 1.0);
  CHECK(mutate_value(bit, 1, Action::Flip, nullptr, rng).first == 0.0);

  const auto disc = discrete("d", 1, 5, 3);
  CHECK(mutate_value(disc, 3, Action::Plus, nullptr, rng).first == 4.0);
  CHECK(mutate_value(disc, 3, Action::Minus, nullptr, rng).first == 2.0);
  CHECK(mutate_value(disc, 5, Action::Plus, nullptr, rng).first == 5.0);
  CHECK(mutate_value(disc, 1, Action::Minus, nullptr, rng).first == 1.0);

  const auto cont = continuous("c", 0, 1, 0.2);
  const GaussianState tight{0.5, 1e-30};
  for (auto action : {Action::Plus, Action::Minus}) {
    const auto [v, x] = mutate_value(cont, 0.9, action, &tight, rng);
    CHECK(std::abs(v - 0.5) < 1e-12);
    CHECK(x.has_value());
  }

  const GaussianState wide{0.5, 0.04};
  for (int i = 0; i < 200; ++i) {
    const auto [up, xu] = mutate_value(cont, 0.9, Action::Plus, &wide, rng);
    CHECK(up >= 0.5);
    CHECK(up == std::min(1.0, 0.5 + std::abs(*xu)));
    const auto [down, xd] = mutate_value(cont, 0.9, Action::Minus, &wide, rng);
    CHECK(down <= 0.5);
    CHECK(down == std::max(0.0, 0.5 - std::abs(*xd)));
  }

  // Value-relative mode perturbs the current value instead of the mean.
  const auto [vr, xr] =
      mutate_value(cont, 0.1, Action::Plus, &tight, rng, ContinuousMutation::ValueRelative);
  CHECK(std::abs(vr - 0.1) < 1e-12);
}

TEST_CASE("mutate_value rejects kind mismatches") {
  Rng rng(1);
  const GaussianState g{0, 1};
  CHECK_THROWS_AS(mutate_value(continuous("c", 0, 1, 0), 0, Action::Plus, nullptr, rng),
                  KindMismatch);
  CHECK_THROWS_AS(mutate_value(discrete("d", 0, 3, 1), 1, Action::Plus, &g, rng), KindMismatch);
  CHECK_THROWS_AS(mutate_value(binary("b"), 0, Action::Plus, nullptr, rng), KindMismatch);
}

TEST_CASE("mutate_candidate: nothing fires, nothing changes") {
  const auto space = backbone_space();
  const auto table = make_q_table(space, 1.0);
  const auto gauss = make_gaussian_store(space, StatsConfig{});
  const auto cand = initial_candidate(space);
  Rng rng(3);
  const auto [next, rec] = mutate_candidate(space, cand, table, gauss, {}, MutationPolicyConfig{},
                                            rng, never);
  CHECK(rec.empty());
  CHECK(next.macro_vector == cand.macro_vector);
  CHECK(next.micro_values == cand.micro_values);
  CHECK(next.iteration == cand.iteration + 1);
}

TEST_CASE("mutate_candidate: worked example flips bits 1 and 3") {
  std::vector<ParamSpec> macro{binary("p1"), binary("p2"), binary("p3")};
  SearchSpace space(macro, {});
  const auto table = make_q_table(space, 1.0);
  Rng rng(0);
  const auto [next, rec] =
      mutate_candidate(space, initial_candidate(space), table, {}, {}, MutationPolicyConfig{},
                       rng, fire_only({"macro/p1", "macro/p3"}));
  CHECK(next.macro_vector == MacroVector{1, 0, 1});
  CHECK(decode_arch_index(next.macro_vector) == 5);
  CHECK(next.arch_index == 5);
  REQUIRE(rec.entries.size() == 2);
  CHECK(rec.entries[0].feature_id == "macro/p1");
  CHECK(rec.entries[1].feature_id == "macro/p3");
  CHECK(rec.entries[0].action == Action::Flip);
}

TEST_CASE("mutate_candidate: architecture switch resumes the stored micro values") {
  const auto space = backbone_space();
  const auto table = make_q_table(space, 1.0);
  const auto gauss = make_gaussian_store(space, StatsConfig{});
  const auto cand = initial_candidate(space); // [1,0,0] -> arch 0
  Rng rng(4);

  // No stored values for arch 2 yet: initials.
  auto [fresh, rec1] = mutate_candidate(space, cand, table, gauss, {}, MutationPolicyConfig{},
                                        rng, fire_only({"macro/p2"}));
  CHECK(fresh.macro_vector == MacroVector{1, 1, 0});
  CHECK(fresh.arch_index == 2);
  CHECK(fresh.micro_values == initial_micro_values(space, 2));

  ArchStore store;
  store[2] = {{"dropout", 0.42}, {"kernel", 6}, {"bias", 0}};
  auto [warm, rec2] = mutate_candidate(space, cand, table, gauss, store, MutationPolicyConfig{},
                                       rng, fire_only({"macro/p2"}));
  CHECK(warm.arch_index == 2);
  CHECK(warm.micro_values == store[2]);
  CHECK(rec2.entries.size() == 1);
}

TEST_CASE("mutate_candidate: seeded golden trace") {
  // Recorded from this seed; any change to draw order shows up here.
  const auto space = backbone_space();
  const auto table = make_q_table(space, 1.0);
  const auto gauss = make_gaussian_store(space, StatsConfig{});
  MutationPolicyConfig cfg;
  cfg.max_prob = 1.0;
  Rng rng(42);
  const auto [next, rec] =
      mutate_candidate(space, initial_candidate(space), table, gauss, {}, cfg, rng);
  // max_prob = 1 makes every feature fire: both free bits flip, arch 0 -> 3.
  CHECK(next.macro_vector == MacroVector{1, 1, 1});
  CHECK(next.arch_index == 3);
  CHECK(next.micro_values.empty());
  CHECK(rec.entries.size() == 2);

  // One more step from arch 3 flips back to arch 0, whose lr is drawn from
  // N(0.5, 0.25²) around the mean.
  const auto [again, rec2] = mutate_candidate(space, next, table, gauss, {}, cfg, rng);
  CHECK(again.arch_index == 0);
  REQUIRE(rec2.entries.size() == 3);
  const auto &lr = rec2.entries[2];
  CHECK(lr.feature_id == "arch0/lr");
  REQUIRE(lr.offset.has_value());
  const double expected =
      std::clamp(0.5 + (lr.action == Action::Plus ? 1 : -1) * std::abs(*lr.offset), 0.0, 1.0);
  CHECK(again.micro_values.at("lr") == expected);
}

TEST_CASE("mutate_candidate is deterministic for a fixed seed") {
  Rng gen(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto space = random_space(gen);
    const auto table = random_q_table(space, gen, 0.05);
    const auto gauss = make_gaussian_store(space, StatsConfig{});
    const auto cand = sample_uniform_candidate(space, 0, gen);
    Rng a(trial), b(trial);
    CHECK(mutate_candidate(space, cand, table, gauss, {}, MutationPolicyConfig{}, a) ==
          mutate_candidate(space, cand, table, gauss, {}, MutationPolicyConfig{}, b));
    CHECK(a == b);
  }
}

TEST_CASE("mutate_candidate output always validates") {
  Rng gen(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto space = random_space(gen);
    const auto table = random_q_table(space, gen, 0.05);
    auto gauss = make_gaussian_store(space, StatsConfig{});
    for (auto &[id, g] : gauss)
      g.variance = std::pow(10.0, gen.uniform() * 6.0 - 4.0);
    ArchStore store;
    for (ArchIndex arch = 0; arch < space.arch_count(); ++arch) {
      if (gen.uniform() < 0.5) {
        auto c = sample_uniform_candidate(space, 0, gen);
        if (c.arch_index == arch)
          store[arch] = c.micro_values;
      }
    }
    MutationPolicyConfig cfg;
    cfg.max_prob = 0.1 + 0.9 * gen.uniform();
    cfg.continuous_mutation =
        gen.uniform() < 0.5 ? ContinuousMutation::MeanRelative : ContinuousMutation::ValueRelative;
    auto cand = sample_uniform_candidate(space, 0, gen);
    for (int step = 0; step < 3; ++step) {
      auto [next, rec] = mutate_candidate(space, cand, table, gauss, store, cfg, gen);
      REQUIRE_NOTHROW(validate_candidate(space, next));
      cand = std::move(next);
    }
  }
}

TEST_CASE("mutate_candidate only touches the feature that fires") {
  Rng gen(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto space = random_space(gen);
    const auto cand = sample_uniform_candidate(space, 0, gen);
    const auto specs = space.micro_params(cand.arch_index);
    std::vector<const ParamSpec *> mutable_specs;
    for (const auto &s : specs)
      if (!s.fixed)
        mutable_specs.push_back(&s);
    if (mutable_specs.empty())
      continue;
    const auto &target = *mutable_specs[gen.uniform_int(0, mutable_specs.size() - 1)];
    const auto id = micro_feature_id(cand.arch_index, target.name);
    const auto table = random_q_table(space, gen, 0.05);
    const auto gauss = make_gaussian_store(space, StatsConfig{});
    const auto [next, rec] = mutate_candidate(space, cand, table, gauss, {},
                                              MutationPolicyConfig{}, gen, fire_only({id}));
    CHECK(next.macro_vector == cand.macro_vector);
    REQUIRE(rec.entries.size() == 1);
    CHECK(rec.entries[0].feature_id == id);
    for (const auto &[name, value] : cand.micro_values) {
      if (name != target.name)
        CHECK(next.micro_values.at(name) == value);
    }
  }
}

TEST_CASE("fixed bits and fixed micro features never mutate") {
  const auto space = backbone_space();
  const auto table = make_q_table(space, 1.0);
  CHECK_FALSE(table.contains("macro/p1"));
  const auto gauss = make_gaussian_store(space, StatsConfig{});
  MutationPolicyConfig cfg;
  cfg.max_prob = 1.0;
  Rng rng(8);
  auto cand = initial_candidate(space);
  for (int i = 0; i < 100; ++i) {
    cand = mutate_candidate(space, cand, table, gauss, {}, cfg, rng).first;
    CHECK(cand.macro_vector[0] == 1);
  }
}

TEST_CASE("update_q_values applies the learning rate and the floor") {
  auto t = two_feature_table(1.0, 1.0, 1.0, 1.0);
  MutationPolicyConfig cfg;
  cfg.q_learning_rate = 2.0;
  cfg.q_floor = 0.05;
  MutationRecord rec;
  rec.entries.push_back({"a", "a", false, Action::Plus, 0, 1, {}});
  update_q_values(t, rec, 0.1, cfg);
  CHECK(std::abs(t.q("a", Action::Plus) - 1.2) < 1e-12);
  CHECK(t.q("a", Action::Minus) == 1.0);
  CHECK(t.q("b", Action::Plus) == 1.0);
  update_q_values(t, rec, -5.0, cfg);
  CHECK(t.q("a", Action::Plus) == 0.05);
}

TEST_CASE("fixed_prob mode ignores the Q-table") {
  const auto space = backbone_space();
  auto table = make_q_table(space, 1.0);
  table.set_q("macro/p2", Action::Flip, 0.05);
  MutationPolicyConfig cfg;
  cfg.mode = PolicyMode::FixedProb;
  cfg.fixed_prob = 0.3;
  CHECK(feature_probability(table, "macro/p2", true, cfg) == 0.3);
  CHECK(feature_probability(table, "macro/p3", true, cfg) == 0.3);
}

TEST_CASE("q_digest changes with any Q-value") {
  const auto space = backbone_space();
  auto table = make_q_table(space, 1.0);
  const auto before = q_digest(table);
  CHECK(before == q_digest(make_q_table(space, 1.0)));
  table.set_q("arch1/filters", Action::Minus, 1.0000001);
  CHECK(before != q_digest(table));
}

} // TEST_SUITE
