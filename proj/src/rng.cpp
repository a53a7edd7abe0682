#include "odma/rng.hpp"

#include <cmath>

namespace odma {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Rng Rng::substream(std::uint64_t master, std::uint64_t trial, StreamPurpose purpose, std::uint64_t sub) {
  std::uint64_t k = splitmix64(master);
  k = splitmix64(k ^ trial);
  k = splitmix64(k ^ static_cast<std::uint64_t>(purpose));
  k = splitmix64(k ^ sub);
  return Rng(k);
}

cplx Rng::complex_normal(double variance) {
  const double s = std::sqrt(variance / 2.0);
  const double re = normal();
  const double im = normal();
  return {s * re, s * im};
}

Bits Rng::bits(std::size_t n) {
  Bits b(n);
  for (auto& v : b) v = bit();
  return b;
}

CMatrix Rng::complex_normal_matrix(Eigen::Index rows, Eigen::Index cols, double variance) {
  CMatrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = complex_normal(variance);
  return m;
}

}  // namespace odma
