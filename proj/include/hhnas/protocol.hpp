#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "hhnas/evaluator.hpp"
#include "hhnas/search_space.hpp"

// Line-delimited JSON evaluator protocol, version 1. One object per line,
// one request in flight.
//
//   engine -> child  {"hello":{"protocol":1}}
//   child  -> engine {"ready":{"protocol":1}}
//   engine -> child  {"id":7,"arch_index":1,"macro":[1,0,1],"params":{"lr":0.01}}
//   child  -> engine {"id":7,"reward":0.83,"metrics":{"loss":0.41}}
//
// `metrics` is optional. A child may answer {"id":7,"error":"..."} (or
// "id":null for unparseable requests); the engine treats that as a failure.

namespace hhnas::protocol {

inline constexpr int kVersion = 1;

std::string hello_line();
std::string ready_line();

/// Throws ProtocolError unless `line` is a ready message for kVersion.
void check_ready(const std::string &line);
/// Throws ProtocolError unless `line` is a hello message for kVersion.
void check_hello(const std::string &line);

std::string encode_request(std::uint64_t id, const Candidate &cand);

struct Request {
  std::uint64_t id = 0;
  Candidate candidate;
};

/// Used by evaluator children. Throws ProtocolError on malformed input.
Request decode_request(const std::string &line);

std::string encode_response(std::uint64_t id, const EvalResult &result);

/// Parses a response and checks it answers `expected_id`. Throws
/// ProtocolError on malformed lines, id mismatch, non-finite reward, or an
/// error reply.
EvalResult decode_response(const std::string &line, std::uint64_t expected_id);

} // namespace hhnas::protocol
