#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hhnas/engine.hpp"

namespace hhnas {

// Trajectory log: one JSON object per line with keys
//   iteration, candidate{macro, arch_index, params, iteration}, reward,
//   running_avg, mutation_record[{feature, name, macro, action, old, new,
//   offset?}], q_snapshot_digest, accepted, wall_time_ms, source,
//   base_reward, probabilities{feature: P}, gaussian{feature: {mean, variance}}

nlohmann::json mutation_record_to_json(const MutationRecord &record);
MutationRecord mutation_record_from_json(const nlohmann::json &doc,
                                         const std::string &path);

nlohmann::json iteration_record_to_json(const IterationRecord &record);
IterationRecord iteration_record_from_json(const nlohmann::json &doc,
                                           const std::string &path = "");

nlohmann::json gaussian_store_to_json(const GaussianStore &store);
GaussianStore gaussian_store_from_json(const nlohmann::json &doc,
                                       const std::string &path);

/// Single compact line, no trailing newline.
std::string trajectory_line(const IterationRecord &record);

void write_trajectory(std::ostream &out, const std::vector<IterationRecord> &history);
std::vector<IterationRecord> read_trajectory(const std::filesystem::path &path);

/// Columns: iteration,reward,best_so_far,arch_index
void write_trajectory_csv(std::ostream &out, const std::vector<IterationRecord> &history);

/// Best candidate, best reward, per-architecture bests and iteration count.
/// The full history lives in the trajectory log.
nlohmann::json run_summary_to_json(const RunResult &result);

} // namespace hhnas
