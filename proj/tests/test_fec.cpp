#include <cmath>

#include "doctest.h"
#include "odma/fec.hpp"
#include "odma/rng.hpp"

using namespace odma;

namespace {

// Schoolbook GF(2) long division of payload * x^14 by the full generator.
std::uint32_t long_division(const Bits& payload, std::uint32_t poly, int width) {
  Bits reg(payload);
  reg.resize(payload.size() + static_cast<std::size_t>(width), 0);
  Bits g(static_cast<std::size_t>(width) + 1);
  g[0] = 1;
  for (int i = 0; i < width; ++i) g[static_cast<std::size_t>(i) + 1] = (poly >> (width - 1 - i)) & 1u;
  for (std::size_t i = 0; i < payload.size(); ++i)
    if (reg[i])
      for (std::size_t j = 0; j < g.size(); ++j) reg[i + j] ^= g[j];
  std::uint32_t rem = 0;
  for (std::size_t i = payload.size(); i < reg.size(); ++i) rem = (rem << 1) | reg[i];
  return rem;
}

// Rows of the n-fold Kronecker power of [[1,0],[1,1]], built directly.
std::vector<Bits> kronecker_generator(int n) {
  std::vector<Bits> g{{1}};
  while (static_cast<int>(g.size()) < n) {
    const std::size_t m = g.size();
    std::vector<Bits> next(2 * m, Bits(2 * m, 0));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        next[i][j] = g[i][j];          // [F 0]
        next[m + i][j] = g[i][j];      // [F F]
        next[m + i][m + j] = g[i][j];
      }
    g = std::move(next);
  }
  return g;
}

std::vector<double> clean_llrs(const Bits& codeword, double amplitude) {
  std::vector<double> l(codeword.size());
  for (std::size_t i = 0; i < codeword.size(); ++i) l[i] = codeword[i] ? -amplitude : amplitude;
  return l;
}

const FecConfig kFec{};

}  // namespace

TEST_CASE("crc of the zero payload is zero") {
  const Crc crc(kFec.crc_polynomial, 14);
  const Bits p(68, 0);
  CHECK(crc.remainder(p) == 0u);
  const Bits w = crc.append(p);
  CHECK(w.size() == 82);
  CHECK(std::all_of(w.begin(), w.end(), [](auto b) { return b == 0; }));
}

TEST_CASE("crc of the lowest payload bit") {
  const Crc crc(kFec.crc_polynomial, 14);
  Bits p(68, 0);
  p[67] = 1;
  // x^14 mod g(x) is g(x) without its leading term.
  CHECK(long_division(p, kFec.crc_polynomial, 14) == 0x06E3u);
  CHECK(crc.remainder(p) == 0x06E3u);
}

TEST_CASE("crc agrees with long division and checks its own output") {
  const Crc crc(kFec.crc_polynomial, 14);
  Rng rng(17);
  for (int t = 0; t < 1000; ++t) {
    const Bits p = rng.bits(68);
    REQUIRE(crc.remainder(p) == long_division(p, kFec.crc_polynomial, 14));
    const Bits w = crc.append(p);
    REQUIRE(crc.check(w));
    Bits bad = w;
    bad[rng.uniform_int(82)] ^= 1;
    REQUIRE_FALSE(crc.check(bad));
  }
}

TEST_CASE("polar information set") {
  const PolarCode code(128, 82, 2.0);
  CHECK(code.info_set().size() == 82);
  CHECK(std::is_sorted(code.info_set().begin(), code.info_set().end()));
  int frozen = 0;
  for (auto f : code.frozen_mask()) frozen += f;
  CHECK(frozen == 128 - 82);
  for (int i : code.info_set()) CHECK(code.frozen_mask()[i] == 0);
  // The last synthetic channel is the best one, the first the worst.
  CHECK(code.frozen_mask()[127] == 0);
  CHECK(code.frozen_mask()[0] == 1);
  const auto means = polar_ga_means(128, 2.0);
  const auto& order = code.reliability_order();
  for (std::size_t i = 1; i < order.size(); ++i) CHECK(means[order[i - 1]] <= means[order[i]]);
  CHECK_THROWS_AS(PolarCode(100, 50, 2.0), ConfigError);
}

TEST_CASE("polar encoding is linear and matches the Kronecker generator") {
  const PolarCode code(128, 82, 2.0);
  CHECK(code.encode(Bits(82, 0)) == Bits(128, 0));

  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Bits a = rng.bits(82), b = rng.bits(82);
    Bits s(82);
    for (int i = 0; i < 82; ++i) s[i] = a[i] ^ b[i];
    const Bits ca = code.encode(a), cb = code.encode(b), cs = code.encode(s);
    for (int i = 0; i < 128; ++i) REQUIRE(cs[i] == (ca[i] ^ cb[i]));
  }

  const auto g = kronecker_generator(128);
  const int weakest = code.reliability_order().front();
  const auto pos = std::find(code.info_set().begin(), code.info_set().end(), weakest) - code.info_set().begin();
  Bits unit(82, 0);
  unit[static_cast<std::size_t>(pos)] = 1;
  CHECK(code.encode(unit) == g[static_cast<std::size_t>(weakest)]);

  // Full generator check on random inputs.
  for (int t = 0; t < 20; ++t) {
    const Bits info = rng.bits(82);
    Bits expect(128, 0);
    for (int k = 0; k < 82; ++k)
      if (info[k])
        for (int j = 0; j < 128; ++j) expect[j] ^= g[code.info_set()[k]][j];
    REQUIRE(code.encode(info) == expect);
  }
}

TEST_CASE("polar transform is an involution") {
  const PolarCode code(64, 30, 1.0);
  Rng rng(8);
  const Bits u = rng.bits(64);
  CHECK(code.transform(code.transform(u)) == u);
}

TEST_CASE("list decoding on clean inputs") {
  const PolarCrcCodec codec(68, kFec);
  const auto zero = codec.decode(clean_llrs(Bits(128, 0), 30.0));
  REQUIRE(zero.has_value());
  CHECK(zero->payload == Bits(68, 0));

  Rng rng(21);
  for (int list : {1, 8}) {
    FecConfig f = kFec;
    f.list_size = list;
    const PolarCrcCodec c(68, f);
    for (int t = 0; t < 1000; ++t) {
      const Bits p = rng.bits(68);
      const auto d = c.decode(clean_llrs(c.encode(p), 20.0));
      REQUIRE(d.has_value());
      REQUIRE(d->payload == p);
      REQUIRE(c.verify(d->protected_bits));
    }
  }
}

TEST_CASE("decoder rejects non-finite and hopeless inputs") {
  const PolarCrcCodec codec(68, kFec);
  std::vector<double> l(128, 1.0);
  l[5] = std::nan("");
  CHECK_FALSE(codec.decode(l).has_value());
  CHECK_THROWS_AS(codec.decode(std::vector<double>(64, 1.0)), ConfigError);
}

namespace {

double awgn_bler(int list, double esn0_db, int n, std::uint64_t seed) {
  FecConfig f = kFec;
  f.list_size = list;
  const PolarCrcCodec codec(68, f);
  Rng rng = Rng::substream(seed, 0, StreamPurpose::Payload);
  const double a = std::sqrt(std::pow(10.0, esn0_db / 10.0) / 2.0);
  int errors = 0;
  for (int t = 0; t < n; ++t) {
    const Bits p = rng.bits(68);
    const Bits c = codec.encode(p);
    std::vector<double> l(128);
    for (int i = 0; i < 128; i += 2) {
      cplx y(a * (1 - 2.0 * c[i]), a * (1 - 2.0 * c[i + 1]));
      y += rng.complex_normal(1.0);
      l[i] = 4 * a * y.real();
      l[i + 1] = 4 * a * y.imag();
    }
    const auto d = codec.decode(l);
    if (!d || d->payload != p) ++errors;
  }
  return static_cast<double>(errors) / n;
}

}  // namespace

TEST_CASE("block error rate on AWGN against the calibrated value") {
  // Calibrated once over 10^4 codewords: 0.0468 at Es/N0 = 3 dB, list 8.
  const double target = 0.0468;
  const int n = 10000;
  const double sigma = std::sqrt(target * (1 - target) / n);
  const double bler = awgn_bler(8, 3.0, n, 42);
  CHECK(std::abs(bler - target) <= 3 * sigma);
}

TEST_CASE("larger lists do not hurt") {
  const double l1 = awgn_bler(1, 3.0, 3000, 7);
  const double l4 = awgn_bler(4, 3.0, 3000, 7);
  const double l16 = awgn_bler(16, 3.0, 3000, 7);
  CHECK(l4 <= l1);
  CHECK(l16 <= l4);
}
