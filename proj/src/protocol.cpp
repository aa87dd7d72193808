#include "hhnas/protocol.hpp"

#include <cmath>

#include "hhnas/error.hpp"

namespace hhnas::protocol {

using nlohmann::json;

namespace {

json parse_line(const std::string &line) {
  try {
    return json::parse(line);
  } catch (const json::parse_error &) {
    throw ProtocolError("malformed line", line);
  }
}

void check_version_message(const std::string &line, const char *key) {
  const auto doc = parse_line(line);
  if (!doc.is_object() || !doc.contains(key) || !doc.at(key).is_object() ||
      !doc.at(key).contains("protocol")) {
    throw ProtocolError(std::string("expected '") + key + "' message", line);
  }
  const auto &version = doc.at(key).at("protocol");
  if (!version.is_number_integer() || version.get<int>() != kVersion) {
    throw ProtocolError("unsupported protocol version", line);
  }
}

} // namespace

std::string hello_line() { return json{{"hello", {{"protocol", kVersion}}}}.dump(); }

std::string ready_line() { return json{{"ready", {{"protocol", kVersion}}}}.dump(); }

void check_ready(const std::string &line) { check_version_message(line, "ready"); }

void check_hello(const std::string &line) { check_version_message(line, "hello"); }

std::string encode_request(std::uint64_t id, const Candidate &cand) {
  return json{{"id", id},
              {"arch_index", cand.arch_index},
              {"macro", cand.macro_vector},
              {"params", cand.micro_values}}
      .dump();
}

Request decode_request(const std::string &line) {
  const auto doc = parse_line(line);
  if (!doc.is_object())
    throw ProtocolError("request must be an object", line);
  try {
    Request req;
    req.id = doc.at("id").get<std::uint64_t>();
    req.candidate.arch_index = doc.at("arch_index").get<ArchIndex>();
    req.candidate.macro_vector = doc.at("macro").get<MacroVector>();
    req.candidate.micro_values = doc.at("params").get<MicroValues>();
    return req;
  } catch (const json::exception &) {
    throw ProtocolError("malformed request", line);
  }
}

std::string encode_response(std::uint64_t id, const EvalResult &result) {
  json doc{{"id", id}, {"reward", result.reward}};
  if (!result.metrics.empty())
    doc["metrics"] = result.metrics;
  return doc.dump();
}

EvalResult decode_response(const std::string &line, std::uint64_t expected_id) {
  const auto doc = parse_line(line);
  if (!doc.is_object() || !doc.contains("id"))
    throw ProtocolError("response must be an object with an id", line);
  const auto &id = doc.at("id");
  if (doc.contains("error")) {
    throw ProtocolError("evaluator reported an error", line);
  }
  if (!id.is_number_unsigned() && !id.is_number_integer())
    throw ProtocolError("response id must be an integer", line);
  if (id.get<std::int64_t>() < 0 || id.get<std::uint64_t>() != expected_id) {
    throw ProtocolError("response id does not match request " +
                            std::to_string(expected_id),
                        line);
  }
  if (!doc.contains("reward") || !doc.at("reward").is_number())
    throw ProtocolError("response lacks a numeric reward", line);
  EvalResult result;
  result.reward = doc.at("reward").get<double>();
  if (!std::isfinite(result.reward))
    throw ProtocolError("reward is not finite", line);
  if (doc.contains("metrics") && !doc.at("metrics").is_null()) {
    const auto &metrics = doc.at("metrics");
    if (!metrics.is_object())
      throw ProtocolError("metrics must be an object", line);
    for (const auto &[name, value] : metrics.items()) {
      if (!value.is_number())
        throw ProtocolError("metric '" + name + "' is not numeric", line);
      result.metrics.emplace(name, value.get<double>());
    }
  }
  result.source = EvalSource::External;
  return result;
}

} // namespace hhnas::protocol
