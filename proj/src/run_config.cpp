#include "hhnas/run_config.hpp"

#include "hhnas/error.hpp"
#include "hhnas/json_util.hpp"
#include "hhnas/space_io.hpp"

namespace hhnas {

using nlohmann::json;
using namespace json_util;

void apply_override(json &doc, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--override", "expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error &) {
    value = text;
  }

  json *node = &doc;
  std::string path;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty())
      throw ConfigError("--override", "empty key segment in '" + key + "'");
    path += "/" + part;
    if (!node->is_object()) {
      if (!node->is_null())
        throw ConfigError(path, "override descends into a non-object");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

namespace {

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty())
    return path;
  return std::filesystem::absolute(base / path).lexically_normal();
}

ExternalConfig external_from_json(json &doc, const std::filesystem::path &base_dir) {
  const std::string path = "/evaluator/external";
  if (!doc.is_object())
    throw ConfigError(path, "expected an object");
  for (const auto &[key, _] : doc.items()) {
    if (key != "command" && key != "timeout_s" && key != "inherit_env" && key != "env")
      throw ConfigError(path + "/" + key, "unknown key");
  }
  ExternalConfig cfg;
  cfg.command = require_as<std::vector<std::string>>(doc, "command", path);
  if (cfg.command.empty())
    throw ConfigError(path + "/command", "must not be empty");
  for (auto &arg : cfg.command) {
    // Relative script paths next to the config resolve against it.
    if (!arg.empty() && arg.front() != '-' && arg.find('/') != std::string::npos &&
        !std::filesystem::path(arg).is_absolute())
      arg = resolve(base_dir, arg).string();
  }
  doc["command"] = cfg.command;
  const double timeout_s = value_or<double>(doc, "timeout_s", 600.0, path);
  if (!(timeout_s > 0.0))
    throw ConfigError(path + "/timeout_s", "must be > 0");
  cfg.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000.0));
  cfg.inherit_env = value_or<bool>(doc, "inherit_env", true, path);
  cfg.env = value_or<std::map<std::string, std::string>>(doc, "env", {}, path);
  return cfg;
}

BenchConfig bench_from_json(const json &doc, std::uint64_t default_iterations) {
  const std::string path = "/bench";
  if (!doc.is_object())
    throw ConfigError(path, "expected an object");
  for (const auto &[key, _] : doc.items()) {
    if (key != "policies" && key != "seeds" && key != "iterations" && key != "threshold" &&
        key != "threshold_fraction" && key != "threads")
      throw ConfigError(path + "/" + key, "unknown key");
  }
  BenchConfig bench;
  const auto names = require_as<std::vector<std::string>>(doc, "policies", path);
  for (std::size_t i = 0; i < names.size(); ++i) {
    try {
      bench.policies.push_back(policy_spec_from_string(names[i]));
    } catch (const ConfigError &e) {
      throw ConfigError(path + "/policies/" + std::to_string(i), e.what());
    }
  }
  if (bench.policies.empty())
    throw ConfigError(path + "/policies", "at least one policy is required");
  bench.seeds = require_as<std::vector<std::uint64_t>>(doc, "seeds", path);
  if (bench.seeds.size() < 2)
    throw ConfigError(path + "/seeds", "at least two seeds are required");
  bench.iterations = value_or<std::uint64_t>(doc, "iterations", default_iterations, path);
  if (bench.iterations < 1)
    throw ConfigError(path + "/iterations", "must be >= 1");
  if (doc.contains("threshold"))
    bench.threshold = require_as<double>(doc, "threshold", path);
  if (doc.contains("threshold_fraction"))
    bench.threshold_fraction = require_as<double>(doc, "threshold_fraction", path);
  if (bench.threshold.has_value() == bench.threshold_fraction.has_value())
    throw ConfigError(path, "set exactly one of threshold, threshold_fraction");
  bench.threads = value_or<unsigned>(doc, "threads", 0u, path);
  return bench;
}

} // namespace

RunConfig run_config_from_json(json doc, const std::filesystem::path &base_dir) {
  if (!doc.is_object())
    throw ConfigError("/", "run configuration must be an object");
  for (const auto &[key, _] : doc.items()) {
    if (key != "space" && key != "space_file" && key != "engine" && key != "evaluator" &&
        key != "output_dir" && key != "bench")
      throw ConfigError("/" + key, "unknown key");
  }

  if (doc.contains("space") == doc.contains("space_file"))
    throw ConfigError("/space", "set exactly one of space, space_file");
  if (doc.contains("space_file")) {
    const auto file = resolve(base_dir, require_as<std::string>(doc, "space_file", ""));
    if (!std::filesystem::exists(file))
      throw ConfigError("/space_file", "file not found: " + file.string());
    doc["space"] = read_file(file);
    doc.erase("space_file");
  }
  SearchSpace space = space_from_json(doc.at("space"), "/space");

  EngineConfig engine =
      engine_config_from_json(doc.contains("engine") ? doc.at("engine") : json::object());

  const auto &evaluator = require(doc, "evaluator", "");
  if (!evaluator.is_object() || evaluator.size() != 1 ||
      !(evaluator.contains("synthetic") || evaluator.contains("external")))
    throw ConfigError("/evaluator", "select exactly one of synthetic, external");

  RunConfig cfg{std::move(space), engine, std::nullopt, std::nullopt, std::nullopt,
                std::nullopt, json()};
  if (evaluator.contains("synthetic")) {
    auto &syn = doc["evaluator"]["synthetic"];
    if (syn.is_object() && syn.contains("landscape_file")) {
      if (syn.size() != 1)
        throw ConfigError("/evaluator/synthetic",
                          "landscape_file cannot be combined with inline keys");
      const auto file =
          resolve(base_dir, require_as<std::string>(syn, "landscape_file", "/evaluator/synthetic"));
      if (!std::filesystem::exists(file))
        throw ConfigError("/evaluator/synthetic/landscape_file",
                          "file not found: " + file.string());
      syn = read_file(file);
    }
    cfg.synthetic = landscape_from_json(syn, "/evaluator/synthetic");
    try {
      check_landscape(*cfg.synthetic, cfg.space);
    } catch (const ConfigError &e) {
      throw ConfigError("/evaluator/synthetic" + e.path(), e.what());
    }
  } else {
    cfg.external = external_from_json(doc["evaluator"]["external"], base_dir);
  }

  if (doc.contains("output_dir"))
    cfg.output_dir = resolve(base_dir, require_as<std::string>(doc, "output_dir", "")).string();
  if (doc.contains("bench")) {
    cfg.bench = bench_from_json(doc.at("bench"), cfg.engine.iterations);
    if (cfg.bench->threshold_fraction && !cfg.synthetic)
      throw ConfigError("/bench/threshold_fraction",
                        "needs a synthetic evaluator with a known optimum");
  }
  if (cfg.output_dir)
    doc["output_dir"] = *cfg.output_dir;
  cfg.resolved = std::move(doc);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path &path,
                          const std::vector<std::string> &overrides) {
  if (!std::filesystem::exists(path))
    throw ConfigError(path.string(), "config file not found");
  json doc = read_file(path);
  for (const auto &o : overrides)
    apply_override(doc, o);
  return run_config_from_json(std::move(doc),
                              std::filesystem::absolute(path).parent_path());
}

std::unique_ptr<Evaluator> make_evaluator(const RunConfig &cfg, std::uint64_t noise_seed) {
  if (cfg.synthetic)
    return std::make_unique<SyntheticEvaluator>(*cfg.synthetic, noise_seed);
  return std::make_unique<ExternalEvaluator>(*cfg.external);
}

} // namespace hhnas
