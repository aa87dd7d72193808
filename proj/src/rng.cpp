#include "hhnas/rng.hpp"

#include <sstream>

#include "hhnas/error.hpp"

namespace hhnas {

double Rng::uniform() {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

double Rng::normal(double stddev) {
  if (stddev == 0.0)
    return 0.0;
  std::normal_distribution<double> dist(0.0, stddev);
  return dist(engine_);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  return dist(engine_);
}

Rng Rng::split() { return Rng(engine_()); }

std::string Rng::state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::set_state(const std::string &state) {
  std::istringstream in(state);
  std::mt19937_64 restored;
  in >> restored;
  if (in.fail()) {
    throw CorruptCheckpoint("unreadable RNG state");
  }
  engine_ = restored;
}

} // namespace hhnas
