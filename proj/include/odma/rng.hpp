#pragma once

#include <cstdint>
#include <random>

#include "odma/types.hpp"

namespace odma {

// What a random stream is used for. Substreams for different purposes
// never overlap, so adding draws to one stage leaves the others untouched.
enum class StreamPurpose : std::uint64_t {
  Messages = 1,
  Channel = 2,
  Noise = 3,
  Codebook = 4,
  FactorInit = 5,
  DetectorStates = 6,
  Corruption = 7,
  Payload = 8,
};

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream keyed by (master seed, trial, purpose, sub-index).
  static Rng substream(std::uint64_t master, std::uint64_t trial, StreamPurpose purpose, std::uint64_t sub = 0);

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  std::uint64_t uniform_int(std::uint64_t upper_exclusive) {
    return std::uniform_int_distribution<std::uint64_t>(0, upper_exclusive - 1)(engine_);
  }
  std::uint8_t bit() { return static_cast<std::uint8_t>(engine_() >> 63); }
  double normal() { return normal_(engine_); }
  // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  cplx complex_normal(double variance = 1.0);

  Bits bits(std::size_t n);
  CMatrix complex_normal_matrix(Eigen::Index rows, Eigen::Index cols, double variance = 1.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace odma
