#include "hhnas/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "hhnas/error.hpp"
#include "hhnas/json_util.hpp"
#include "hhnas/space_io.hpp"
#include "hhnas/trajectory.hpp"

namespace hhnas {

using nlohmann::json;
using namespace json_util;

namespace {

constexpr const char *kFormat = "hhnas-checkpoint";

json q_table_to_json(const QTable &table) {
  json doc = json::object();
  for (const auto &[id, e] : table.entries()) {
    doc[id] = json{{"group", e.group}, {"binary", e.binary}, {"flip", e.flip},
                   {"plus", e.plus},   {"minus", e.minus}};
  }
  return doc;
}

QTable q_table_from_json(const json &doc, const std::string &path) {
  if (!doc.is_object())
    throw ConfigError(path, "expected an object");
  QTable table;
  for (const auto &[id, e] : doc.items()) {
    const auto p = path + "/" + id;
    const bool binary = require_as<bool>(e, "binary", p);
    table.add_feature(id, require_as<std::string>(e, "group", p),
                      binary ? ParamKind::Binary : ParamKind::Continuous, 0.0);
    if (binary) {
      table.set_q(id, Action::Flip, require_as<double>(e, "flip", p));
    } else {
      table.set_q(id, Action::Plus, require_as<double>(e, "plus", p));
      table.set_q(id, Action::Minus, require_as<double>(e, "minus", p));
    }
  }
  return table;
}

ArchIndex arch_key(const std::string &key, const std::string &path) {
  try {
    std::size_t used = 0;
    const auto v = std::stoul(key, &used);
    if (used != key.size())
      throw std::invalid_argument(key);
    return static_cast<ArchIndex>(v);
  } catch (const std::exception &) {
    throw ConfigError(path, "architecture key must be an integer");
  }
}

} // namespace

std::string config_digest(const SearchSpace &space, const EngineConfig &cfg) {
  return fnv1a_hex(space_to_json(space).dump() + engine_config_to_json(cfg).dump());
}

json engine_state_to_json(const EngineState &state) {
  json stores = json::object();
  for (const auto &[arch, values] : state.arch_store)
    stores[std::to_string(arch)] = values;
  json per_arch = json::object();
  for (const auto &[arch, best] : state.result.per_arch_best) {
    per_arch[std::to_string(arch)] =
        json{{"candidate", candidate_to_json(best.candidate)}, {"reward", best.reward}};
  }
  json history = json::array();
  for (const auto &r : state.result.history)
    history.push_back(iteration_record_to_json(r));
  return json{{"completed", state.completed},
              {"q_table", q_table_to_json(state.q_table)},
              {"gaussian", gaussian_store_to_json(state.gaussian)},
              {"tracker",
               {{"running_avg", state.tracker.running_avg},
                {"count", state.tracker.count},
                {"mode", to_string(state.tracker.mode)},
                {"beta", state.tracker.beta}}},
              {"arch_store", std::move(stores)},
              {"base", candidate_to_json(state.base)},
              {"base_reward", state.base_reward ? json(*state.base_reward) : json(nullptr)},
              {"best_candidate", candidate_to_json(state.result.best_candidate)},
              {"best_reward", state.result.best_reward},
              {"per_arch_best", std::move(per_arch)},
              {"history", std::move(history)},
              {"rng", state.rng.state()}};
}

EngineState engine_state_from_json(const json &doc) {
  const std::string path = "/state";
  EngineState state;
  state.completed = require_as<std::uint64_t>(doc, "completed", path);
  state.q_table = q_table_from_json(require(doc, "q_table", path), path + "/q_table");
  state.gaussian = gaussian_store_from_json(require(doc, "gaussian", path), path + "/gaussian");
  const auto &tracker = require(doc, "tracker", path);
  state.tracker.running_avg = require_as<double>(tracker, "running_avg", path + "/tracker");
  state.tracker.count = require_as<std::uint64_t>(tracker, "count", path + "/tracker");
  state.tracker.mode =
      tracker_mode_from_string(require_as<std::string>(tracker, "mode", path + "/tracker"));
  state.tracker.beta = require_as<double>(tracker, "beta", path + "/tracker");
  for (const auto &[key, values] : require(doc, "arch_store", path).items()) {
    const auto p = path + "/arch_store/" + key;
    state.arch_store[arch_key(key, p)] = get_as<MicroValues>(values, p);
  }
  state.base = candidate_from_json(require(doc, "base", path), path + "/base");
  const auto &base_reward = require(doc, "base_reward", path);
  if (!base_reward.is_null())
    state.base_reward = get_as<double>(base_reward, path + "/base_reward");
  state.result.best_candidate =
      candidate_from_json(require(doc, "best_candidate", path), path + "/best_candidate");
  state.result.best_reward = require_as<double>(doc, "best_reward", path);
  for (const auto &[key, best] : require(doc, "per_arch_best", path).items()) {
    const auto p = path + "/per_arch_best/" + key;
    state.result.per_arch_best[arch_key(key, p)] =
        ArchBest{candidate_from_json(require(best, "candidate", p), p + "/candidate"),
                 require_as<double>(best, "reward", p)};
  }
  const auto &history = require(doc, "history", path);
  if (!history.is_array())
    throw ConfigError(path + "/history", "expected an array");
  for (std::size_t i = 0; i < history.size(); ++i)
    state.result.history.push_back(
        iteration_record_from_json(history[i], path + "/history/" + std::to_string(i)));
  if (state.result.history.size() != state.completed)
    throw ConfigError(path + "/history", "length does not match completed iterations");
  state.rng.set_state(require_as<std::string>(doc, "rng", path));
  return state;
}

json checkpoint_to_json(const SearchEngine &engine, const json &extra) {
  return json{{"format", kFormat},
              {"version", kCheckpointVersion},
              {"config_digest", config_digest(engine.space(), engine.config())},
              {"iteration", engine.state().completed},
              {"space", space_to_json(engine.space())},
              {"engine", engine_config_to_json(engine.config())},
              {"state", engine_state_to_json(engine.state())},
              {"extra", extra}};
}

Checkpoint checkpoint_from_json(const json &doc) {
  if (!doc.is_object() || doc.value("format", "") != kFormat)
    throw CorruptCheckpoint("not a checkpoint document");
  if (!doc.contains("version") || !doc.at("version").is_number_integer())
    throw CorruptCheckpoint("checkpoint has no version");
  const int version = doc.at("version").get<int>();
  if (version != kCheckpointVersion) {
    throw VersionMismatch("checkpoint version " + std::to_string(version) +
                          ", expected " + std::to_string(kCheckpointVersion));
  }
  try {
    auto space = space_from_json(require(doc, "space", ""), "/space");
    auto cfg = engine_config_from_json(require(doc, "engine", ""), "/engine");
    if (require_as<std::string>(doc, "config_digest", "") != config_digest(space, cfg))
      throw CorruptCheckpoint("config digest does not match the stored configuration");
    auto state = engine_state_from_json(require(doc, "state", ""));
    json extra = doc.contains("extra") ? doc.at("extra") : json::object();
    return Checkpoint{std::move(space), std::move(cfg), std::move(state), std::move(extra)};
  } catch (const ConfigError &e) {
    throw CorruptCheckpoint(std::string("malformed checkpoint: ") + e.what());
  } catch (const ValidationError &e) {
    throw CorruptCheckpoint(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path &path, const SearchEngine &engine,
                     const json &extra) {
  try {
    write_file_atomic(path, checkpoint_to_json(engine, extra).dump(1) + "\n");
  } catch (const Error &e) {
    throw CheckpointIOError(e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw CorruptCheckpoint("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error &e) {
    throw CorruptCheckpoint("checkpoint " + path.string() + " is truncated or malformed: " +
                            e.what());
  }
  try {
    return checkpoint_from_json(doc);
  } catch (const CorruptCheckpoint &e) {
    throw CorruptCheckpoint(path.string() + ": " + e.what());
  }
}

RunResult resume(const std::filesystem::path &path, Evaluator &evaluator,
                 const RunObserver &observer) {
  auto ck = load_checkpoint(path);
  SearchEngine engine(std::move(ck.space), std::move(ck.config), std::move(ck.state));
  return engine.run(evaluator, observer);
}

} // namespace hhnas
