#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "odma/channel.hpp"
#include "odma/factorization.hpp"

using namespace odma;
using odma::test::Bench;

namespace {

AltMinOptions tight() {
  AltMinOptions o;
  o.reg_u = o.reg_v = 1e-9;
  o.max_iters = 300;
  o.tol = 1e-12;
  return o;
}

// Noiseless chunk with distinct pilots.
ChunkScene clean_scene(const Bench& b, int users, Rng& rng) {
  for (;;) {
    const auto msgs = odma::test::chunk_messages(users, b.encoder.layout(), rng);
    std::set<int> pilots;
    for (const auto& m : msgs) pilots.insert(b.encoder.layout().pilot_index(m));
    if (static_cast<int>(pilots.size()) != users) continue;
    Rng noise(0);
    return build_chunk_scene(msgs, draw_channel(b.cfg.antennas, users, rng), b.encoder, 0.0, noise);
  }
}

}  // namespace

TEST_CASE("activity estimate edge cases") {
  CHECK(estimate_activity(CMatrix::Zero(10, 20), 5.0, 1.0) == 0);
  // ||Y||^2 / M == sigma2 T exactly.
  CMatrix y = CMatrix::Constant(4, 25, cplx(1.0, 0.0));
  CHECK(estimate_activity(y, 3.0, 1.0) == 0);
  // Clamped to min(M, T) - 1.
  CHECK(estimate_activity(CMatrix::Constant(4, 25, cplx(100.0, 0.0)), 1.0, 1.0) == 3);
}

TEST_CASE("activity estimate of a noiseless three-user chunk") {
  const Bench b{SystemConfig{}};
  Rng rng(31);
  std::map<int, int> histogram;
  for (int t = 0; t < 1000; ++t) {
    const auto msgs = odma::test::chunk_messages(3, b.encoder.layout(), rng);
    Rng noise(0);
    const ChunkScene s = build_chunk_scene(msgs, draw_channel(50, 3, rng), b.encoder, 0.0, noise);
    ++histogram[estimate_activity(s.y, b.books.energy.frame_energy, 0.0)];
  }
  const auto mode = std::max_element(histogram.begin(), histogram.end(),
                                     [](const auto& a, const auto& c) { return a.second < c.second; });
  CHECK(mode->first == 3);
}

TEST_CASE("alternating minimisation fits exact low rank") {
  Rng rng(1);
  const CMatrix y = rng.complex_normal_matrix(30, 6) * rng.complex_normal_matrix(6, 80);
  const AltMinResult r = alternating_minimize(y, 6, tight(), rng);
  CHECK(r.residual_history.back() / y.norm() < 1e-6);
  CHECK(r.u.rows() == 30);
  CHECK(r.v.cols() == 80);
}

TEST_CASE("alternating minimisation at full rank") {
  Rng rng(2);
  const CMatrix y = rng.complex_normal_matrix(12, 40);
  const AltMinResult r = alternating_minimize(y, 12, tight(), rng);
  CHECK(r.residual_history.back() / y.norm() < 1e-6);
}

TEST_CASE("alternating minimisation residual sits at the noise floor") {
  // At high SNR the rank-K fit absorbs the noise inside the signal row and
  // column spaces, leaving ||N|| sqrt((M-K)(T-K)/(MT)).
  Rng rng(3);
  const int m = 50, t = 200, k = 25;
  for (int trial = 0; trial < 5; ++trial) {
    const CMatrix n = rng.complex_normal_matrix(m, t, 0.01);
    const CMatrix y = rng.complex_normal_matrix(m, k) * rng.complex_normal_matrix(k, t, 9.0) + n;
    const AltMinResult r = alternating_minimize(y, k, tight(), rng);
    const double floor = n.norm() * std::sqrt(double(m - k) * (t - k) / (double(m) * t));
    CHECK(std::abs(r.residual_history.back() - floor) < 0.1 * floor);
  }
}

TEST_CASE("alternating minimisation objective never increases") {
  AltMinOptions o;
  for (int scene = 0; scene < 100; ++scene) {
    Rng rng(100 + scene);
    const int k = 1 + scene % 20;
    const CMatrix y = rng.complex_normal_matrix(50, k) * rng.complex_normal_matrix(k, 200, 0.05) +
                      rng.complex_normal_matrix(50, 200);
    const AltMinResult r = alternating_minimize(y, k, o, rng);
    const auto& f = r.objective_history;
    REQUIRE(f.size() == 2 * static_cast<std::size_t>(r.iterations) + 1);
    for (std::size_t i = 1; i < f.size(); ++i) REQUIRE(f[i] <= f[i - 1] + 1e-12 * std::max(1.0, f[i - 1]));
    for (std::size_t i = 1; i < r.residual_history.size(); ++i)
      REQUIRE(r.residual_history[i] <= r.residual_history[i - 1] * (1 + 1e-9));
  }
}

TEST_CASE("alternating minimisation reports singular normal equations") {
  Rng rng(4);
  const CMatrix y = rng.complex_normal_matrix(20, 1) * rng.complex_normal_matrix(1, 40);
  AltMinOptions o;
  o.reg_u = o.reg_v = 1e-30;
  CHECK_THROWS_AS(alternating_minimize(y, 3, o, rng), ChunkFailure);
  CHECK_THROWS_AS(alternating_minimize(y, 0, o, rng), ConfigError);
}

TEST_CASE("somp with the identity ambiguity") {
  const Bench b{SystemConfig{}};
  Rng rng(5);
  const ChunkScene s = clean_scene(b, 10, rng);
  const SompResult r = somp_ambiguity(s.x, b.books.pilots, 10);
  CHECK(std::set<int>(r.support.begin(), r.support.end()) ==
        std::set<int>(s.pilot_indices.begin(), s.pilot_indices.end()));
  // G is the permutation that orders users by selection.
  for (std::size_t row = 0; row < r.support.size(); ++row) {
    const auto user = std::find(s.pilot_indices.begin(), s.pilot_indices.end(), r.support[row]) - s.pilot_indices.begin();
    for (Eigen::Index col = 0; col < 10; ++col)
      CHECK(std::abs(r.g(static_cast<Eigen::Index>(row), col) - (col == user ? 1.0 : 0.0)) < 1e-6);
  }
}

TEST_CASE("somp undoes a planted ambiguity") {
  const Bench b{SystemConfig{}};
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const ChunkScene s = clean_scene(b, 12, rng);
    CMatrix g0 = rng.complex_normal_matrix(12, 12) + 4.0 * CMatrix::Identity(12, 12);
    const CMatrix u = s.h * g0;
    const CMatrix v = g0.inverse() * s.x;
    const SompResult r = somp_ambiguity(v, b.books.pilots, 12);
    const Compensated c = compensate(u, v, r.g);
    CHECK((c.h_hat * c.x_hat - u * v).norm() < 1e-9 * (u * v).norm());
    for (std::size_t row = 0; row < r.support.size(); ++row) {
      const auto it = std::find(s.pilot_indices.begin(), s.pilot_indices.end(), r.support[row]);
      REQUIRE(it != s.pilot_indices.end());
      const auto user = it - s.pilot_indices.begin();
      const auto rr = static_cast<Eigen::Index>(row);
      CHECK((c.h_hat.col(rr) - s.h.col(user)).norm() < 1e-6 * s.h.col(user).norm());
      CHECK((c.x_hat.row(rr) - s.x.row(user)).norm() < 1e-6 * s.x.row(user).norm());
    }
  }
}

TEST_CASE("somp with one user") {
  const Bench b{SystemConfig{}};
  Rng rng(7);
  const ChunkScene s = clean_scene(b, 1, rng);
  const CMatrix v = 0.3 * cplx(1.0, -2.0) * s.x;
  const SompResult r = somp_ambiguity(v, b.books.pilots, 1);
  REQUIRE(r.support.size() == 1);
  CHECK(r.support[0] == s.pilot_indices[0]);
  CHECK(r.g.rows() == 1);
  CHECK(((r.g(0, 0) * v) - s.x).norm() < 1e-9 * s.x.norm());
}

TEST_CASE("somp picks distinct columns and flags singular ambiguities") {
  const Bench b{SystemConfig{}};
  Rng rng(8);
  const CMatrix v = rng.complex_normal_matrix(20, 200);
  const SompResult r = somp_ambiguity(v, b.books.pilots, 20);
  CHECK(std::set<int>(r.support.begin(), r.support.end()).size() == 20);

  CMatrix dup = rng.complex_normal_matrix(3, 200);
  dup.row(2) = dup.row(1);
  CHECK_THROWS_AS(somp_ambiguity(dup, b.books.pilots, 3), ChunkFailure);
  CHECK_THROWS_AS(somp_ambiguity(v, b.books.pilots, 51), ConfigError);
}

TEST_CASE("compensation identities") {
  Rng rng(9);
  const CMatrix u = rng.complex_normal_matrix(6, 3);
  const CMatrix v = rng.complex_normal_matrix(3, 9);
  const Compensated id = compensate(u, v, CMatrix::Identity(3, 3));
  CHECK((id.h_hat - u).norm() < 1e-14);
  CHECK((id.x_hat - v).norm() < 1e-14);
  const cplx c(2.0, -1.0);
  const Compensated sc = compensate(u, v, c * CMatrix::Identity(3, 3));
  CHECK((sc.h_hat - u / c).norm() < 1e-12);
  CHECK((sc.x_hat - c * v).norm() < 1e-12);
  const CMatrix g = rng.complex_normal_matrix(3, 3);
  const Compensated any = compensate(u, v, g);
  CHECK((any.h_hat * any.x_hat - u * v).norm() < 1e-10 * (u * v).norm());
}

TEST_CASE("noiseless pipeline recovers the pilot support") {
  const Bench b{SystemConfig{}};
  Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const ChunkScene s = clean_scene(b, 25, rng);
    const FactorizationResult f =
        factorize_chunk(s.y, b.books.pilots, b.books.energy.frame_energy, 0.0, AltMinOptions{}, rng, 25);
    CHECK(std::set<int>(f.pilot_indices.begin(), f.pilot_indices.end()) ==
          std::set<int>(s.pilot_indices.begin(), s.pilot_indices.end()));
    CHECK((f.h_hat * f.x_hat - f.u * f.v).norm() < 1e-9 * (f.u * f.v).norm());
  }
}

TEST_CASE("empty chunk factorises to nothing") {
  const Bench b{SystemConfig{}};
  Rng rng(11);
  const FactorizationResult f = factorize_chunk(CMatrix::Zero(50, 200), b.books.pilots, b.books.energy.frame_energy,
                                                1.0, AltMinOptions{}, rng);
  CHECK(f.estimated_activity == 0);
  CHECK(f.pilot_indices.empty());
}
