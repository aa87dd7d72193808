#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace hhnas {

/// Seedable generator with serializable state. Every draw constructs a fresh
/// distribution object, so the engine state alone determines the stream.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  /// Normal(0, stddev^2). stddev == 0 returns 0 without consuming a draw.
  double normal(double stddev);
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Child generator seeded from this stream (consumes one draw).
  Rng split();

  std::string state() const;
  void set_state(const std::string &state);

  bool operator==(const Rng &other) const { return engine_ == other.engine_; }

private:
  std::mt19937_64 engine_;
};

} // namespace hhnas
