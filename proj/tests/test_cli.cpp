#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hhnas/cli.hpp"
#include "hhnas/json_util.hpp"
#include "hhnas/run_config.hpp"
#include "hhnas/space_io.hpp"
#include "hhnas/synthetic.hpp"
#include "hhnas/trajectory.hpp"
#include "test_support.hpp"

using namespace hhnas;
using namespace hhnas::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Sandbox {
  fs::path root;
  explicit Sandbox(const std::string &name)
      : root(fs::temp_directory_path() / ("hhnas_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  fs::path write(const std::string &name, const json &doc) const {
    const auto p = root / name;
    std::ofstream(p) << doc.dump(2);
    return p;
  }
};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

template <typename Fn> Outcome call(Fn fn) {
  std::ostringstream out, err;
  const int code = fn(out, err);
  return {code, out.str(), err.str()};
}

cli::Options quiet_into(const fs::path &dir) {
  cli::Options o;
  o.out = dir.string();
  o.quiet = true;
  return o;
}

json synthetic_config(std::uint64_t iterations) {
  return {{"space", space_to_json(convergence_space())},
          {"engine", {{"iterations", iterations}, {"seed", 7}, {"checkpoint_every", 5}}},
          {"evaluator", {{"synthetic", landscape_to_json(convergence_landscape())}}}};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path run_dir_from(const Outcome &o) {
  auto text = o.out;
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r'))
    text.pop_back();
  return text;
}

std::size_t line_count(const fs::path &p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);)
    n += !line.empty();
  return n;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("run with the bundled example config") {
  Sandbox box("example");
  const auto r = call([&](auto &o, auto &e) {
    return cli::cmd_run(fs::path(HHNAS_SOURCE_DIR) / "configs" / "example_run.json",
                        quiet_into(box.root), o, e);
  });
  REQUIRE(r.code == 0);
  const auto dir = run_dir_from(r);
  CHECK(dir.filename().string().rfind("run-", 0) == 0);
  CHECK(dir.filename().string().find("-s42") != std::string::npos);
  for (const char *f : {"manifest.json", "config.json", "trajectory.jsonl", "summary.json",
                        "trajectory.csv", "checkpoint.json"})
    CHECK(fs::exists(dir / f));
  const auto summary = json_util::read_file(dir / "summary.json");
  CHECK(summary.at("iterations") == 200);
  const auto history = read_trajectory(dir / "trajectory.jsonl");
  CHECK(history.size() == 200);
  CHECK(summary.at("best_reward").get<double>() == read_trajectory(dir / "trajectory.jsonl")
                                                       .at(summary.at("best_candidate")
                                                               .at("iteration")
                                                               .get<std::size_t>() -
                                                           1)
                                                       .reward);

  // The resolved config re-parses to the same run.
  const auto resolved = json_util::read_file(dir / "config.json");
  CHECK(run_config_from_json(resolved).resolved == resolved);
}

TEST_CASE("config errors exit with code 2") {
  Sandbox box("config_errors");
  auto both = synthetic_config(5);
  both["evaluator"]["external"] = {{"command", {"true"}}};
  const auto p = box.write("both.json", both);
  auto r = call([&](auto &o, auto &e) { return cli::cmd_run(p, quiet_into(box.root), o, e); });
  CHECK(r.code == 2);
  CHECK(r.err.find("/evaluator") != std::string::npos);

  r = call([&](auto &o, auto &e) {
    return cli::cmd_run(box.root / "missing.json", quiet_into(box.root), o, e);
  });
  CHECK(r.code == 2);

  auto bad_bound = synthetic_config(5);
  bad_bound["space"]["micro"]["2"][1]["lower"] = 5.0;
  const auto q = box.write("bad_bound.json", bad_bound);
  r = call([&](auto &o, auto &e) { return cli::cmd_run(q, quiet_into(box.root), o, e); });
  CHECK(r.code == 2);
  CHECK(r.err.find("/space/micro/2/1") != std::string::npos);
}

TEST_CASE("overrides replace config values") {
  Sandbox box("override");
  const auto p = box.write("cfg.json", synthetic_config(50));
  auto opts = quiet_into(box.root);
  opts.overrides = {"engine.iterations=5", "engine.acceptance=greedy_elitist"};
  const auto r = call([&](auto &o, auto &e) { return cli::cmd_run(p, opts, o, e); });
  REQUIRE(r.code == 0);
  const auto dir = run_dir_from(r);
  CHECK(line_count(dir / "trajectory.jsonl") == 5);
  const auto resolved = json_util::read_file(dir / "config.json");
  CHECK(resolved.at("engine").at("acceptance") == "greedy_elitist");

  json doc = {{"a", {{"b", 1}}}};
  apply_override(doc, "a.c=[1,2]");
  apply_override(doc, "a.name=plain text");
  CHECK(doc.at("a").at("c") == json::array({1, 2}));
  CHECK(doc.at("a").at("name") == "plain text");
  CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
}

TEST_CASE("output root precedence") {
  cli::Options opts;
  ::setenv("HHNAS_OUT_DIR", "/tmp/from-env", 1);
  CHECK(cli::output_root(opts, std::nullopt) == "/tmp/from-env");
  CHECK(cli::output_root(opts, std::string("cfgdir")) == "cfgdir");
  opts.out = "flag";
  CHECK(cli::output_root(opts, std::string("cfgdir")) == "flag");
  ::unsetenv("HHNAS_OUT_DIR");
  CHECK(cli::output_root(cli::Options{}, std::nullopt) == "runs");
}

TEST_CASE("resume of a finished run reports completion") {
  Sandbox box("resume_done");
  const auto p = box.write("cfg.json", synthetic_config(6));
  const auto r = call([&](auto &o, auto &e) { return cli::cmd_run(p, quiet_into(box.root), o, e); });
  REQUIRE(r.code == 0);
  const auto dir = run_dir_from(r);
  const auto before = slurp(dir / "trajectory.jsonl");
  const auto again = call([&](auto &o, auto &e) {
    return cli::cmd_resume(dir / "checkpoint.json", cli::Options{}, o, e);
  });
  CHECK(again.code == 0);
  CHECK(again.out.find("already complete") != std::string::npos);
  CHECK(slurp(dir / "trajectory.jsonl") == before);

  const auto missing = call([&](auto &o, auto &e) {
    return cli::cmd_resume(box.root / "nope.json", cli::Options{}, o, e);
  });
  CHECK(missing.code == 2);
}

TEST_CASE("evaluator crash exits 3 and resume reproduces the full log") {
  Sandbox box("resume_mid");
  const auto land_path = box.write("landscape.json", landscape_to_json(convergence_landscape()));
  json cfg = synthetic_config(40);
  cfg["evaluator"] = {
      {"external", {{"command", {FAKE_EVALUATOR_PATH, "echo", land_path.string()}}}}};
  const auto p = box.write("cfg.json", cfg);

  const auto full_root = box.root / "full";
  const auto full = call([&](auto &o, auto &e) { return cli::cmd_run(p, quiet_into(full_root), o, e); });
  REQUIRE(full.code == 0);

  const auto crash_root = box.root / "crash";
  ::setenv("FAKE_FAIL_AT", "23", 1);
  const auto crashed =
      call([&](auto &o, auto &e) { return cli::cmd_run(p, quiet_into(crash_root), o, e); });
  ::unsetenv("FAKE_FAIL_AT");
  CHECK(crashed.code == 3);
  REQUIRE(fs::is_directory(crash_root));
  const auto crash_dir = fs::directory_iterator(crash_root)->path();
  CHECK(line_count(crash_dir / "trajectory.jsonl") == 22);

  const auto resumed = call([&](auto &o, auto &e) {
    return cli::cmd_resume(crash_dir / "checkpoint.json", cli::Options{}, o, e);
  });
  REQUIRE(resumed.code == 0);
  CHECK(resumed.out.find("resuming at iteration 23") != std::string::npos);
  CHECK(slurp(crash_dir / "trajectory.jsonl") == slurp(run_dir_from(full) / "trajectory.jsonl"));
  CHECK(slurp(crash_dir / "summary.json") == slurp(run_dir_from(full) / "summary.json"));
}

TEST_CASE("bench writes one row per policy") {
  Sandbox box("bench");
  auto cfg = synthetic_config(30);
  cfg["bench"] = {{"policies", {"adaptive", "random_search"}},
                  {"seeds", {1, 2, 3}},
                  {"iterations", 30},
                  {"threshold", 2.0}};
  const auto p = box.write("bench.json", cfg);
  const auto r = call([&](auto &o, auto &e) { return cli::cmd_bench(p, quiet_into(box.root), o, e); });
  REQUIRE(r.code == 0);
  CHECK(r.out.find("not reached") != std::string::npos);
  fs::path bench_dir;
  for (const auto &entry : fs::directory_iterator(box.root))
    if (entry.path().filename().string().rfind("bench-", 0) == 0)
      bench_dir = entry.path();
  REQUIRE(!bench_dir.empty());
  CHECK(line_count(bench_dir / "comparison.csv") == 3);
  CHECK(line_count(bench_dir / "curves.csv") == 31);

  cfg["bench"]["seeds"] = {1};
  const auto q = box.write("one_seed.json", cfg);
  CHECK(call([&](auto &o, auto &e) { return cli::cmd_bench(q, quiet_into(box.root), o, e); })
            .code == 2);
}

TEST_CASE("report writes per-architecture files") {
  Sandbox box("report");
  auto cfg = synthetic_config(12);
  // Macro flips are practically impossible, so only the initial
  // architecture is visited.
  cfg["engine"]["policy"] = {{"macro_max_prob", 1e-9}};
  const auto p = box.write("cfg.json", cfg);
  const auto r = call([&](auto &o, auto &e) { return cli::cmd_run(p, quiet_into(box.root), o, e); });
  REQUIRE(r.code == 0);
  const auto dir = run_dir_from(r);
  const auto rep = call([&](auto &o, auto &e) { return cli::cmd_report(dir, cli::Options{}, o, e); });
  REQUIRE(rep.code == 0);
  CHECK(fs::exists(dir / "report" / "probabilities.csv"));
  const auto arch = cfg["space"]["macro"][1]["initial"].get<int>() * 2 +
                    cfg["space"]["macro"][2]["initial"].get<int>();
  CHECK(fs::exists(dir / "report" / ("arch_" + std::to_string(arch) + ".csv")));
  CHECK(line_count(dir / "report" / ("arch_" + std::to_string(arch) + ".csv")) == 13);
  CHECK(rep.out.find("never visited, no file written") != std::string::npos);

  const auto empty = box.root / "empty";
  fs::create_directories(empty);
  CHECK(call([&](auto &o, auto &e) { return cli::cmd_report(empty, cli::Options{}, o, e); }).code ==
        2);
  CHECK(call([&](auto &o, auto &e) {
          return cli::cmd_report(box.root / "absent", cli::Options{}, o, e);
        }).code == 2);
}

} // TEST_SUITE
