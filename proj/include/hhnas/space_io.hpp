#pragma once

#include <filesystem>

#include <json.hpp>

#include "hhnas/search_space.hpp"

namespace hhnas {

// Schema:
//   { "macro": [ParamSpec...],
//     "micro": { "<arch index>": [ParamSpec...], ... } }
//   ParamSpec: { "name": str, "kind": "binary"|"discrete"|"continuous",
//                "lower": num, "upper": num, "initial": num,
//                "fixed": bool (optional, default false) }
// Binary specs may omit lower/upper (default 0/1). Errors are ConfigError
// carrying the JSON pointer of the offending key.

SearchSpace space_from_json(const nlohmann::json &doc,
                            const std::string &base_path = "");
nlohmann::json space_to_json(const SearchSpace &space);
SearchSpace load_space(const std::filesystem::path &path);

nlohmann::json param_spec_to_json(const ParamSpec &spec);
ParamSpec param_spec_from_json(const nlohmann::json &doc, const std::string &path);

nlohmann::json candidate_to_json(const Candidate &cand);
Candidate candidate_from_json(const nlohmann::json &doc,
                              const std::string &path = "");

} // namespace hhnas
