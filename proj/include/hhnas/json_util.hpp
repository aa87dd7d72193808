#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hhnas/error.hpp"

namespace hhnas::json_util {

/// Fetches `doc[key]`, throwing ConfigError naming `path/key` when absent.
const nlohmann::json &require(const nlohmann::json &doc, const std::string &key,
                              const std::string &path);

template <typename T>
T get_as(const nlohmann::json &value, const std::string &path) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(path, std::string("wrong type: ") + e.what());
  }
}

template <typename T>
T require_as(const nlohmann::json &doc, const std::string &key,
             const std::string &path) {
  return get_as<T>(require(doc, key, path), path + "/" + key);
}

template <typename T>
T value_or(const nlohmann::json &doc, const std::string &key, T fallback,
           const std::string &path) {
  if (!doc.is_object() || !doc.contains(key) || doc.at(key).is_null())
    return fallback;
  return get_as<T>(doc.at(key), path + "/" + key);
}

nlohmann::json read_file(const std::filesystem::path &path);

/// Writes to a sibling temp file then renames, so readers never see a
/// half-written document.
void write_file_atomic(const std::filesystem::path &path,
                       const std::string &contents);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string &bytes);

} // namespace hhnas::json_util
