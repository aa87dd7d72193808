#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hhnas/engine.hpp"
#include "hhnas/search_space.hpp"

namespace hhnas {

inline constexpr int kCheckpointVersion = 1;

/// Self-describing resume point: space, engine config, full engine state and
/// an opaque `extra` document (the CLI stores its run configuration there).
struct Checkpoint {
  SearchSpace space;
  EngineConfig config;
  EngineState state;
  nlohmann::json extra;
};

/// Digest over the space and engine config (not the state).
std::string config_digest(const SearchSpace &space, const EngineConfig &cfg);

nlohmann::json engine_state_to_json(const EngineState &state);
EngineState engine_state_from_json(const nlohmann::json &doc);

nlohmann::json checkpoint_to_json(const SearchEngine &engine,
                                  const nlohmann::json &extra = nlohmann::json::object());
Checkpoint checkpoint_from_json(const nlohmann::json &doc);

/// Throws CheckpointIOError when the file cannot be written.
void save_checkpoint(const std::filesystem::path &path, const SearchEngine &engine,
                     const nlohmann::json &extra = nlohmann::json::object());

/// Throws CorruptCheckpoint (missing, truncated or malformed file) or
/// VersionMismatch.
Checkpoint load_checkpoint(const std::filesystem::path &path);

/// Restores a checkpoint and runs the remaining iterations.
RunResult resume(const std::filesystem::path &path, Evaluator &evaluator,
                 const RunObserver &observer = {});

} // namespace hhnas
