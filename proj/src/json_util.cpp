#include "hhnas/json_util.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hhnas::json_util {

const nlohmann::json &require(const nlohmann::json &doc, const std::string &key,
                              const std::string &path) {
  if (!doc.is_object()) {
    throw ConfigError(path.empty() ? "/" : path, "expected an object");
  }
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw ConfigError(path + "/" + key, "missing required key");
  }
  return *it;
}

nlohmann::json read_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path.string(), "cannot open file");
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError(path.string(), std::string("parse error: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path &path,
                       const std::string &contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write " + tmp.string());
    }
    out << contents;
    if (!out.flush()) {
      throw Error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

std::string fnv1a_hex(const std::string &bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

} // namespace hhnas::json_util
