#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace odma {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

// One bit per element, values 0/1. Index 0 is the first (most significant) bit.
using Bits = std::vector<std::uint8_t>;

// Invalid configuration or malformed input supplied by the caller.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Receiver stage could not produce a usable result for a chunk. Callers
// treat it as "no messages from here on", never as a run abort.
class ChunkFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Big-endian integer value of bits[first, first + count).
inline std::uint64_t bits_to_index(const Bits& bits, std::size_t first, std::size_t count) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < count; ++i) v = (v << 1) | (bits[first + i] & 1u);
  return v;
}

// Writes `value` as `count` big-endian bits starting at out[first].
inline void index_to_bits(std::uint64_t value, std::size_t count, Bits& out, std::size_t first) {
  for (std::size_t i = 0; i < count; ++i) out[first + count - 1 - i] = static_cast<std::uint8_t>((value >> i) & 1u);
}

}  // namespace odma
