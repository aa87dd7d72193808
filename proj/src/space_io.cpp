#include "hhnas/space_io.hpp"

#include <algorithm>
#include <charconv>

#include "hhnas/error.hpp"
#include "hhnas/json_util.hpp"

namespace hhnas {

using nlohmann::json;
using namespace json_util;

ParamSpec param_spec_from_json(const json &doc, const std::string &path) {
  if (!doc.is_object()) {
    throw ConfigError(path, "parameter spec must be an object");
  }
  static const char *known[] = {"name",    "kind",  "lower",
                                "upper",   "initial", "fixed"};
  for (const auto &[key, _] : doc.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw ConfigError(path + "/" + key, "unknown key");
    }
  }
  ParamSpec spec;
  spec.name = require_as<std::string>(doc, "name", path);
  try {
    spec.kind = param_kind_from_string(require_as<std::string>(doc, "kind", path));
  } catch (const ValidationError &e) {
    throw ConfigError(path + "/kind", e.what());
  }
  if (spec.kind == ParamKind::Binary) {
    spec.lower = value_or<double>(doc, "lower", 0.0, path);
    spec.upper = value_or<double>(doc, "upper", 1.0, path);
  } else {
    spec.lower = require_as<double>(doc, "lower", path);
    spec.upper = require_as<double>(doc, "upper", path);
  }
  spec.initial = require_as<double>(doc, "initial", path);
  spec.fixed = value_or<bool>(doc, "fixed", false, path);
  try {
    validate_spec(spec, "");
  } catch (const ValidationError &e) {
    throw ConfigError(path, e.what());
  }
  return spec;
}

json param_spec_to_json(const ParamSpec &spec) {
  return json{{"name", spec.name},       {"kind", to_string(spec.kind)},
              {"lower", spec.lower},     {"upper", spec.upper},
              {"initial", spec.initial}, {"fixed", spec.fixed}};
}

SearchSpace space_from_json(const json &doc, const std::string &base_path) {
  if (!doc.is_object()) {
    throw ConfigError(base_path.empty() ? "/" : base_path,
                      "search space must be an object");
  }
  for (const auto &[key, _] : doc.items()) {
    if (key != "macro" && key != "micro") {
      throw ConfigError(base_path + "/" + key, "unknown key");
    }
  }
  const auto &macro_doc = require(doc, "macro", base_path);
  if (!macro_doc.is_array()) {
    throw ConfigError(base_path + "/macro", "expected an array");
  }
  std::vector<ParamSpec> macro;
  for (std::size_t i = 0; i < macro_doc.size(); ++i) {
    macro.push_back(param_spec_from_json(
        macro_doc[i], base_path + "/macro/" + std::to_string(i)));
  }

  std::map<ArchIndex, std::vector<ParamSpec>> micro;
  if (doc.contains("micro")) {
    const auto &micro_doc = doc.at("micro");
    if (!micro_doc.is_object()) {
      throw ConfigError(base_path + "/micro", "expected an object");
    }
    for (const auto &[key, list] : micro_doc.items()) {
      const auto key_path = base_path + "/micro/" + key;
      ArchIndex arch = 0;
      auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), arch);
      if (ec != std::errc{} || end != key.data() + key.size()) {
        throw ConfigError(key_path, "architecture key must be a non-negative integer");
      }
      if (!list.is_array()) {
        throw ConfigError(key_path, "expected an array");
      }
      auto &specs = micro[arch];
      for (std::size_t i = 0; i < list.size(); ++i) {
        specs.push_back(param_spec_from_json(list[i], key_path + "/" + std::to_string(i)));
      }
    }
  }
  try {
    return SearchSpace(std::move(macro), std::move(micro));
  } catch (const ValidationError &e) {
    throw ConfigError(base_path + "/" + e.field(), e.what());
  }
}

json space_to_json(const SearchSpace &space) {
  json macro = json::array();
  for (const auto &spec : space.macro_params()) {
    macro.push_back(param_spec_to_json(spec));
  }
  json micro = json::object();
  for (const auto &[arch, specs] : space.all_micro_params()) {
    json list = json::array();
    for (const auto &spec : specs) {
      list.push_back(param_spec_to_json(spec));
    }
    micro[std::to_string(arch)] = std::move(list);
  }
  return json{{"macro", std::move(macro)}, {"micro", std::move(micro)}};
}

SearchSpace load_space(const std::filesystem::path &path) {
  return space_from_json(read_file(path));
}

json candidate_to_json(const Candidate &cand) {
  return json{{"macro", cand.macro_vector},
              {"arch_index", cand.arch_index},
              {"params", cand.micro_values},
              {"iteration", cand.iteration}};
}

Candidate candidate_from_json(const json &doc, const std::string &path) {
  Candidate cand;
  cand.macro_vector = require_as<MacroVector>(doc, "macro", path);
  cand.arch_index = require_as<ArchIndex>(doc, "arch_index", path);
  cand.micro_values = require_as<MicroValues>(doc, "params", path);
  cand.iteration = require_as<std::uint64_t>(doc, "iteration", path);
  return cand;
}

} // namespace hhnas
