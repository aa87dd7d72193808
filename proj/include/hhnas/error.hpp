#pragma once

#include <stdexcept>
#include <string>

namespace hhnas {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Candidate or space failed a structural check. `field` names the offender.
class ValidationError : public Error {
public:
  enum class Kind {
    ArchMismatch,
    UnknownParam,
    OutOfBounds,
    MissingParam,
    FixedBitViolation,
    InvalidSpec,
  };

  ValidationError(Kind kind, std::string field, const std::string &what)
      : Error(what), kind_(kind), field_(std::move(field)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string &field() const noexcept { return field_; }

private:
  Kind kind_;
  std::string field_;
};

/// Configuration file problem; `path` is a JSON-pointer-like key path.
class ConfigError : public Error {
public:
  ConfigError(std::string path, const std::string &what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string &path() const noexcept { return path_; }

private:
  std::string path_;
};

class UnknownFeature : public Error {
public:
  explicit UnknownFeature(const std::string &id)
      : Error("unknown feature '" + id + "'") {}
};

class EmptyTable : public Error {
public:
  EmptyTable() : Error("Q-table has no features") {}
};

class KindMismatch : public Error {
public:
  using Error::Error;
};

class EvaluatorFailure : public Error {
public:
  using Error::Error;
};

/// Wire-protocol violations. `payload` holds the raw offending line.
class ProtocolError : public EvaluatorFailure {
public:
  ProtocolError(const std::string &what, std::string payload)
      : EvaluatorFailure(what + " (payload: " + payload + ")"),
        payload_(std::move(payload)) {}

  const std::string &payload() const noexcept { return payload_; }

private:
  std::string payload_;
};

class EvalTimeout : public EvaluatorFailure {
public:
  EvalTimeout(const std::string &what, std::string payload)
      : EvaluatorFailure(what), payload_(std::move(payload)) {}

  const std::string &payload() const noexcept { return payload_; }

private:
  std::string payload_;
};

class ChildExited : public EvaluatorFailure {
public:
  ChildExited(const std::string &what, std::string payload)
      : EvaluatorFailure(what), payload_(std::move(payload)) {}

  const std::string &payload() const noexcept { return payload_; }

private:
  std::string payload_;
};

class CheckpointError : public Error {
public:
  using Error::Error;
};

class CorruptCheckpoint : public CheckpointError {
public:
  using CheckpointError::CheckpointError;
};

class VersionMismatch : public CheckpointError {
public:
  using CheckpointError::CheckpointError;
};

class CheckpointIOError : public CheckpointError {
public:
  using CheckpointError::CheckpointError;
};

} // namespace hhnas
