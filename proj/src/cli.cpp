#include "hhnas/cli.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "hhnas/checkpoint.hpp"
#include "hhnas/compare.hpp"
#include "hhnas/error.hpp"
#include "hhnas/json_util.hpp"
#include "hhnas/run_config.hpp"
#include "hhnas/space_io.hpp"
#include "hhnas/trajectory.hpp"

namespace hhnas::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char *kTrajectory = "trajectory.jsonl";
constexpr const char *kSummary = "summary.json";
constexpr const char *kCsv = "trajectory.csv";
constexpr const char *kCheckpoint = "checkpoint.json";
constexpr const char *kManifest = "manifest.json";
constexpr const char *kConfig = "config.json";

int guarded(std::ostream &err, const std::function<int()> &body) {
  try {
    return body();
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ValidationError &e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const CorruptCheckpoint &e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kConfigError;
  } catch (const VersionMismatch &e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kConfigError;
  } catch (const EvaluatorFailure &e) {
    err << "evaluator failure: " << e.what() << '\n';
    return kEvaluatorError;
  } catch (const std::exception &e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

std::string timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  localtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%S", &tm);
  return buf;
}

fs::path fresh_dir(const fs::path &root, const std::string &stem) {
  fs::create_directories(root);
  fs::path dir = root / stem;
  for (int n = 2; fs::exists(dir); ++n)
    dir = root / (stem + "-" + std::to_string(n));
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path &path, const std::string &text) {
  json_util::write_file_atomic(path, text);
}

void write_manifest(const fs::path &dir, const std::string &command,
                    const std::string &digest) {
  json manifest{{"tool", "hhnas"},
                {"version", kToolVersion},
                {"command", command},
                {"config_digest", digest},
                {"created", timestamp()}};
  write_text(dir / kManifest, manifest.dump(2) + "\n");
}

/// Streams one run's artifacts into its directory.
class RunWriter {
public:
  RunWriter(fs::path dir, json run_config) : dir_(std::move(dir)), config_(std::move(run_config)) {}

  void start(const std::vector<IterationRecord> &existing) {
    log_.open(dir_ / kTrajectory, std::ios::trunc);
    if (!log_)
      throw Error("cannot write " + (dir_ / kTrajectory).string());
    write_trajectory(log_, existing);
    log_.flush();
  }

  RunObserver observer() {
    RunObserver obs;
    obs.on_iteration = [this](const IterationRecord &r) {
      log_ << trajectory_line(r) << '\n';
      log_.flush();
    };
    obs.on_checkpoint = [this](const SearchEngine &engine) {
      save_checkpoint(dir_ / kCheckpoint, engine, json{{"run_config", config_}});
    };
    return obs;
  }

  void finish(const RunResult &result) {
    log_.close();
    write_text(dir_ / kSummary, run_summary_to_json(result).dump(2) + "\n");
    std::ostringstream csv;
    write_trajectory_csv(csv, result.history);
    write_text(dir_ / kCsv, csv.str());
  }

private:
  fs::path dir_;
  json config_;
  std::ofstream log_;
};

void print_result(std::ostream &out, const fs::path &dir, const RunResult &result) {
  out << "run directory: " << dir.string() << '\n';
  out << "best reward: " << json(result.best_reward).dump() << '\n';
  out << "best candidate: " << candidate_to_json(result.best_candidate).dump() << '\n';
}

std::optional<std::string> env_out_dir() {
  if (const char *v = std::getenv("HHNAS_OUT_DIR"); v != nullptr && *v != '\0')
    return std::string(v);
  return std::nullopt;
}

std::vector<std::string> with_seed(const Options &opts) {
  auto overrides = opts.overrides;
  if (opts.seed)
    overrides.push_back("engine.seed=" + std::to_string(*opts.seed));
  return overrides;
}

} // namespace

fs::path output_root(const Options &opts, const std::optional<std::string> &config_dir) {
  if (opts.out)
    return *opts.out;
  if (config_dir)
    return *config_dir;
  if (auto env = env_out_dir())
    return *env;
  return "runs";
}

int cmd_run(const fs::path &config, const Options &opts, std::ostream &out,
            std::ostream &err) {
  return guarded(err, [&] {
    const auto cfg = load_run_config(config, with_seed(opts));
    auto evaluator = make_evaluator(cfg, cfg.engine.seed);

    SearchEngine engine(cfg.space, cfg.engine);
    const auto dir = fresh_dir(output_root(opts, cfg.output_dir),
                               "run-" + timestamp() + "-s" + std::to_string(cfg.engine.seed));
    write_manifest(dir, "run", config_digest(cfg.space, cfg.engine));
    write_text(dir / kConfig, cfg.resolved.dump(2) + "\n");

    RunWriter writer(dir, cfg.resolved);
    writer.start({});
    try {
      engine.run(*evaluator, writer.observer());
    } catch (const EvaluatorFailure &) {
      err << "run aborted; checkpoint written to " << (dir / kCheckpoint).string() << '\n';
      throw;
    }
    const auto &result = engine.state().result;
    writer.finish(result);
    if (!opts.quiet)
      print_result(out, dir, result);
    else
      out << dir.string() << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_resume(const fs::path &checkpoint, const Options &opts, std::ostream &out,
               std::ostream &err) {
  return guarded(err, [&] {
    auto ck = load_checkpoint(checkpoint);
    if (!ck.extra.contains("run_config"))
      throw CorruptCheckpoint(checkpoint.string() + ": no run configuration stored");
    const auto dir = fs::absolute(checkpoint).parent_path();
    if (ck.state.completed >= ck.config.iterations) {
      out << "already complete (" << ck.state.completed << " iterations)\n";
      return static_cast<int>(kOk);
    }
    const auto cfg = run_config_from_json(ck.extra.at("run_config"));
    auto evaluator = make_evaluator(cfg, cfg.engine.seed);

    SearchEngine engine(std::move(ck.space), std::move(ck.config), std::move(ck.state));
    RunWriter writer(dir, cfg.resolved);
    writer.start(engine.state().result.history);
    if (!opts.quiet)
      out << "resuming at iteration " << engine.state().completed + 1 << '\n';
    engine.run(*evaluator, writer.observer());
    const auto &result = engine.state().result;
    writer.finish(result);
    if (!opts.quiet)
      print_result(out, dir, result);
    return static_cast<int>(kOk);
  });
}

int cmd_bench(const fs::path &config, const Options &opts, std::ostream &out,
              std::ostream &err) {
  return guarded(err, [&] {
    const auto cfg = load_run_config(config, with_seed(opts));
    if (!cfg.bench)
      throw ConfigError("/bench", "missing bench section");
    const auto &bench = *cfg.bench;
    const double threshold = bench.threshold
                                 ? *bench.threshold
                                 : *bench.threshold_fraction * optimum_reward(*cfg.synthetic);
    EvaluatorFactory factory = [&cfg](std::uint64_t seed) { return make_evaluator(cfg, seed); };
    const auto report = compare_policies(cfg.space, factory, bench.policies, bench.seeds,
                                         bench.iterations, threshold, cfg.engine, bench.threads);

    const auto dir = fresh_dir(output_root(opts, cfg.output_dir), "bench-" + timestamp());
    write_manifest(dir, "bench", config_digest(cfg.space, cfg.engine));
    write_text(dir / kConfig, cfg.resolved.dump(2) + "\n");
    write_text(dir / "comparison.json", comparison_to_json(report).dump(2) + "\n");
    write_text(dir / "comparison.csv", comparison_csv(report));
    write_text(dir / "curves.csv", comparison_curve_csv(report));
    const auto table = comparison_table(report);
    write_text(dir / "comparison.txt", table);
    out << table;
    if (!opts.quiet)
      out << "bench directory: " << dir.string() << '\n';
    for (const auto &pr : report.policies) {
      for (const auto &cell : pr.cells) {
        if (cell.error)
          err << pr.policy.label() << " seed " << cell.seed << " failed: " << *cell.error
              << '\n';
      }
    }
    return static_cast<int>(kOk);
  });
}

int cmd_report(const fs::path &run_dir, const Options &opts, std::ostream &out,
               std::ostream &err) {
  return guarded(err, [&] {
    const auto log_path = run_dir / kTrajectory;
    if (!fs::is_directory(run_dir) || !fs::exists(log_path))
      throw ConfigError(run_dir.string(), "no trajectory log in run directory");
    const auto history = read_trajectory(log_path);
    if (history.empty())
      throw ConfigError(log_path.string(), "trajectory log is empty");

    double best = history.front().reward;
    for (const auto &r : history)
      best = std::max(best, r.reward);
    if (fs::exists(run_dir / kSummary)) {
      const auto summary = json_util::read_file(run_dir / kSummary);
      const auto stated = json_util::require_as<double>(summary, "best_reward", kSummary);
      if (stated != best)
        throw ConfigError(kSummary, "best_reward disagrees with the trajectory log");
    }
    if (fs::exists(run_dir / kCsv)) {
      std::ifstream csv(run_dir / kCsv);
      std::string line;
      std::size_t rows = 0;
      std::getline(csv, line);
      if (line != "iteration,reward,best_so_far,arch_index")
        throw ConfigError(kCsv, "unexpected header");
      while (std::getline(csv, line))
        rows += line.empty() ? 0 : 1;
      if (rows != history.size())
        throw ConfigError(kCsv, "row count disagrees with the trajectory log");
    }

    std::optional<SearchSpace> space;
    if (fs::exists(run_dir / kConfig)) {
      const auto doc = json_util::read_file(run_dir / kConfig);
      if (doc.contains("space"))
        space = space_from_json(doc.at("space"), "/space");
    }

    const auto report_dir = run_dir / "report";
    fs::create_directories(report_dir);

    std::map<ArchIndex, std::vector<const IterationRecord *>> visits;
    std::set<std::string> features;
    for (const auto &r : history) {
      visits[r.candidate.arch_index].push_back(&r);
      for (const auto &[id, _] : r.probabilities)
        features.insert(id);
    }

    for (const auto &[arch, records] : visits) {
      std::set<std::string> names;
      for (const auto *r : records)
        for (const auto &[name, _] : r->candidate.micro_values)
          names.insert(name);
      std::ostringstream csv;
      csv << "iteration,reward,best_in_arch,accepted";
      for (const auto &n : names)
        csv << ',' << n;
      csv << '\n';
      double arch_best = records.front()->reward;
      for (const auto *r : records) {
        arch_best = std::max(arch_best, r->reward);
        csv << r->iteration << ',' << json(r->reward).dump() << ',' << json(arch_best).dump()
            << ',' << (r->accepted ? 1 : 0);
        for (const auto &n : names) {
          csv << ',';
          if (auto it = r->candidate.micro_values.find(n); it != r->candidate.micro_values.end())
            csv << json(it->second).dump();
        }
        csv << '\n';
      }
      write_text(report_dir / ("arch_" + std::to_string(arch) + ".csv"), csv.str());
      if (!opts.quiet)
        out << "arch " << arch << ": " << records.size() << " visits, best "
            << json(arch_best).dump() << '\n';
    }

    std::ostringstream probs;
    probs << "iteration";
    for (const auto &f : features)
      probs << ',' << f;
    probs << '\n';
    for (const auto &r : history) {
      probs << r.iteration;
      for (const auto &f : features) {
        probs << ',';
        if (auto it = r.probabilities.find(f); it != r.probabilities.end())
          probs << json(it->second).dump();
      }
      probs << '\n';
    }
    write_text(report_dir / "probabilities.csv", probs.str());

    if (space) {
      for (ArchIndex arch = 0; arch < space->arch_count(); ++arch) {
        if (!visits.count(arch))
          out << "arch " << arch << ": never visited, no file written\n";
      }
    }
    if (!opts.quiet)
      out << "report written to " << report_dir.string() << '\n';
    return static_cast<int>(kOk);
  });
}

} // namespace hhnas::cli
