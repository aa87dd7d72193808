#pragma once

#include <chrono>
#include <map>
#include <string>
#include <vector>

#include "hhnas/evaluator.hpp"

namespace hhnas {

struct ExternalConfig {
  std::vector<std::string> command;
  std::chrono::milliseconds timeout{600'000};
  /// Inherit the parent's environment before applying `env`.
  bool inherit_env = true;
  std::map<std::string, std::string> env;
};

/// Child process speaking the line protocol over its stdin/stdout. The child
/// is spawned and handshaken on construction and terminated on destruction.
class ExternalEvaluator : public Evaluator {
public:
  explicit ExternalEvaluator(ExternalConfig cfg);
  ~ExternalEvaluator() override;

  ExternalEvaluator(const ExternalEvaluator &) = delete;
  ExternalEvaluator &operator=(const ExternalEvaluator &) = delete;

  EvalResult evaluate(const Candidate &cand) override;
  nlohmann::json describe() const override;

  /// Sends one raw line and waits for one reply line (used by the handshake
  /// and by tests exercising protocol failures).
  std::string round_trip(const std::string &line);

private:
  void spawn();
  void write_line(const std::string &line);
  std::string read_line(const std::string &pending_request);
  void terminate();

  ExternalConfig cfg_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::uint64_t next_id_ = 1;
};

} // namespace hhnas
