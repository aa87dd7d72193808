#include "hhnas/trajectory.hpp"

#include <fstream>
#include <ostream>

#include "hhnas/error.hpp"
#include "hhnas/json_util.hpp"
#include "hhnas/space_io.hpp"

namespace hhnas {

using nlohmann::json;
using namespace json_util;

namespace {

EvalSource source_from_string(const std::string &s, const std::string &path) {
  if (s == "synthetic")
    return EvalSource::Synthetic;
  if (s == "external")
    return EvalSource::External;
  if (s == "cache")
    return EvalSource::Cache;
  throw ConfigError(path, "unknown source '" + s + "'");
}

} // namespace

json mutation_record_to_json(const MutationRecord &record) {
  json list = json::array();
  for (const auto &m : record.entries) {
    json entry{{"feature", m.feature_id}, {"name", m.name},     {"macro", m.macro},
               {"action", to_string(m.action)}, {"old", m.old_value}, {"new", m.new_value}};
    if (m.offset)
      entry["offset"] = *m.offset;
    list.push_back(std::move(entry));
  }
  return list;
}

MutationRecord mutation_record_from_json(const json &doc, const std::string &path) {
  if (!doc.is_array())
    throw ConfigError(path, "expected an array");
  MutationRecord record;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto p = path + "/" + std::to_string(i);
    const auto &e = doc[i];
    MutationEntry m;
    m.feature_id = require_as<std::string>(e, "feature", p);
    m.name = require_as<std::string>(e, "name", p);
    m.macro = require_as<bool>(e, "macro", p);
    try {
      m.action = action_from_string(require_as<std::string>(e, "action", p));
    } catch (const ConfigError &) {
      throw ConfigError(p + "/action", "unknown action");
    }
    m.old_value = require_as<double>(e, "old", p);
    m.new_value = require_as<double>(e, "new", p);
    if (e.contains("offset"))
      m.offset = get_as<double>(e.at("offset"), p + "/offset");
    record.entries.push_back(std::move(m));
  }
  return record;
}

json gaussian_store_to_json(const GaussianStore &store) {
  json doc = json::object();
  for (const auto &[id, g] : store)
    doc[id] = json{{"mean", g.mean}, {"variance", g.variance}};
  return doc;
}

GaussianStore gaussian_store_from_json(const json &doc, const std::string &path) {
  if (!doc.is_object())
    throw ConfigError(path, "expected an object");
  GaussianStore store;
  for (const auto &[id, g] : doc.items()) {
    const auto p = path + "/" + id;
    store.emplace(id, GaussianState{require_as<double>(g, "mean", p),
                                    require_as<double>(g, "variance", p)});
  }
  return store;
}

json iteration_record_to_json(const IterationRecord &r) {
  return json{{"iteration", r.iteration},
              {"candidate", candidate_to_json(r.candidate)},
              {"reward", r.reward},
              {"running_avg", r.running_avg},
              {"mutation_record", mutation_record_to_json(r.mutation_record)},
              {"q_snapshot_digest", r.q_snapshot_digest},
              {"accepted", r.accepted},
              {"wall_time_ms", r.wall_time_ms},
              {"source", to_string(r.source)},
              {"base_reward", r.base_reward},
              {"probabilities", r.probabilities},
              {"gaussian", gaussian_store_to_json(r.gaussian)}};
}

IterationRecord iteration_record_from_json(const json &doc, const std::string &path) {
  IterationRecord r;
  r.iteration = require_as<std::uint64_t>(doc, "iteration", path);
  r.candidate = candidate_from_json(require(doc, "candidate", path), path + "/candidate");
  r.reward = require_as<double>(doc, "reward", path);
  r.running_avg = require_as<double>(doc, "running_avg", path);
  r.mutation_record = mutation_record_from_json(require(doc, "mutation_record", path),
                                                path + "/mutation_record");
  r.q_snapshot_digest = require_as<std::string>(doc, "q_snapshot_digest", path);
  r.accepted = require_as<bool>(doc, "accepted", path);
  r.wall_time_ms = require_as<std::int64_t>(doc, "wall_time_ms", path);
  r.source = source_from_string(require_as<std::string>(doc, "source", path),
                                path + "/source");
  r.base_reward = require_as<double>(doc, "base_reward", path);
  r.probabilities =
      require_as<std::map<std::string, double>>(doc, "probabilities", path);
  r.gaussian = gaussian_store_from_json(require(doc, "gaussian", path), path + "/gaussian");
  return r;
}

std::string trajectory_line(const IterationRecord &record) {
  return iteration_record_to_json(record).dump();
}

void write_trajectory(std::ostream &out, const std::vector<IterationRecord> &history) {
  for (const auto &r : history)
    out << trajectory_line(r) << '\n';
}

std::vector<IterationRecord> read_trajectory(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError(path.string(), "cannot open trajectory log");
  std::vector<IterationRecord> history;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error &e) {
      throw ConfigError(where, std::string("parse error: ") + e.what());
    }
    history.push_back(iteration_record_from_json(doc, where));
  }
  return history;
}

void write_trajectory_csv(std::ostream &out, const std::vector<IterationRecord> &history) {
  out << "iteration,reward,best_so_far,arch_index\n";
  double best = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto &r = history[i];
    best = i == 0 ? r.reward : std::max(best, r.reward);
    out << r.iteration << ',' << json(r.reward).dump() << ',' << json(best).dump() << ','
        << r.candidate.arch_index << '\n';
  }
}

json run_summary_to_json(const RunResult &result) {
  json per_arch = json::object();
  for (const auto &[arch, best] : result.per_arch_best) {
    per_arch[std::to_string(arch)] =
        json{{"candidate", candidate_to_json(best.candidate)}, {"reward", best.reward}};
  }
  return json{{"best_candidate", candidate_to_json(result.best_candidate)},
              {"best_reward", result.best_reward},
              {"iterations", result.history.size()},
              {"per_arch_best", std::move(per_arch)}};
}

} // namespace hhnas
