#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "odma/channel.hpp"
#include "odma/factorization.hpp"
#include "odma/sic.hpp"

using namespace odma;
using odma::test::Bench;

namespace {

SystemConfig config_at(double ebn0_db, int rounds = 4) {
  SystemConfig c;
  c.ebn0_db = ebn0_db;
  c.algo.sic_max_rounds = rounds;
  return c;
}

ChunkScene noisy_scene(const Bench& b, int users, Rng& rng) {
  const auto msgs = odma::test::chunk_messages(users, b.encoder.layout(), rng);
  return build_chunk_scene(msgs, draw_channel(b.cfg.antennas, users, rng), b.encoder, b.books.energy.noise_variance,
                           rng);
}

bool contains(const std::vector<Bits>& list, const Bits& m) {
  return std::find(list.begin(), list.end(), m) != list.end();
}

}  // namespace

TEST_CASE("refined channel is exact without noise") {
  Rng rng(1);
  const CMatrix h = rng.complex_normal_matrix(20, 6);
  const CMatrix x = rng.complex_normal_matrix(6, 100);
  const auto r = refine_channel(h * x, x, 0.0);
  REQUIRE(r);
  CHECK((*r - h).norm() < 1e-10 * h.norm());
}

TEST_CASE("refined channel of a single user is the scalar formula") {
  Rng rng(2);
  const CMatrix y = rng.complex_normal_matrix(8, 40);
  const CMatrix x = rng.complex_normal_matrix(1, 40);
  const double sigma2 = 3.0;
  const auto r = refine_channel(y, x, sigma2);
  REQUIRE(r);
  const CMatrix expected = y * x.adjoint() / (x.squaredNorm() + sigma2);
  CHECK((*r - expected).norm() < 1e-12 * expected.norm());
}

TEST_CASE("refined channel edge cases") {
  Rng rng(3);
  const CMatrix y = rng.complex_normal_matrix(8, 40);
  CHECK(refine_channel(y, CMatrix(0, 40), 1.0)->cols() == 0);
  CMatrix dup = rng.complex_normal_matrix(2, 40);
  dup.row(1) = dup.row(0);
  CHECK_FALSE(refine_channel(y, dup, 0.0).has_value());
  CHECK_THROWS_AS(refine_channel(y, CMatrix(2, 30), 1.0), ConfigError);
}

TEST_CASE("refined channel beats the factorisation estimate") {
  const Bench b{config_at(-6.0)};
  int better = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(400 + trial);
    const ChunkScene s = noisy_scene(b, 5, rng);
    const FactorizationResult f = factorize_chunk(s.y, b.books.pilots, b.books.energy.frame_energy,
                                                  b.books.energy.noise_variance, AltMinOptions{}, rng, 5);
    const auto r = refine_channel(s.y, s.x, b.books.energy.noise_variance);
    REQUIRE(r);
    double err_pre = 0.0, err_ref = 0.0;
    for (int u = 0; u < 5; ++u) {
      const auto it = std::find(f.pilot_indices.begin(), f.pilot_indices.end(), s.pilot_indices[u]);
      const double scale = s.h.col(u).norm();
      err_ref += (r->col(u) - s.h.col(u)).norm() / scale;
      err_pre += it == f.pilot_indices.end() ? 1.0 : (f.h_hat.col(it - f.pilot_indices.begin()) - s.h.col(u)).norm() / scale;
    }
    better += err_ref < err_pre;
  }
  CHECK(better == 10);
}

TEST_CASE("subtract and update") {
  Rng rng(5);
  const CMatrix h = rng.complex_normal_matrix(10, 3);
  const CMatrix x = rng.complex_normal_matrix(3, 50);
  const Bits m1(4, 1), m2(4, 0);

  SicState none{h * x, {m1}, 2};
  subtract_and_update(none, CMatrix(10, 0), CMatrix(0, 50), {});
  CHECK(none.round == 3);
  CHECK(none.accepted.size() == 1);
  CHECK((none.residual - h * x).norm() == 0.0);

  SicState all{h * x, {}, 0};
  subtract_and_update(all, h, x, {m1, m2, m1});
  CHECK(all.residual.norm() < 1e-6 * (h * x).norm());
  CHECK(all.accepted.size() == 2);

  SicState part{h * x + rng.complex_normal_matrix(10, 50, 0.01), {}, 0};
  const double before = part.residual.norm();
  subtract_and_update(part, h.leftCols(1), x.topRows(1), {m1});
  CHECK(part.residual.norm() < before);
}

TEST_CASE("empty chunk decodes to nothing") {
  const Bench b{SystemConfig{}};
  const ChunkReceiver rx(b.cfg, b.books, *b.fec, b.encoder);
  Rng rng(6);
  const DecodeOutcome out = rx.run(CMatrix::Zero(50, 200), 0, rng);
  CHECK(out.messages.empty());
  CHECK(out.rounds.empty());
  CHECK(out.pipeline_passes == 0);
}

TEST_CASE("zero rounds is a single pass without subtraction") {
  const Bench b{config_at(-6.0, 0)};
  const ChunkReceiver rx(b.cfg, b.books, *b.fec, b.encoder);
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(700 + trial);
    const ChunkScene s = noisy_scene(b, 10, rng);
    const DecodeOutcome out = rx.run(s.y, 0, rng);
    CHECK(out.pipeline_passes <= 1);
    CHECK(out.rounds.size() <= 1);
  }
}

TEST_CASE("high snr receiver decodes every user") {
  const Bench b{config_at(20.0)};
  const ChunkReceiver rx(b.cfg, b.books, *b.fec, b.encoder);
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(800 + trial);
    const ChunkScene s = noisy_scene(b, 8, rng);
    const DecodeOutcome out = rx.run(s.y, 0, rng);
    CHECK(out.messages.size() == 8);
    for (const auto& m : s.messages) CHECK(contains(out.messages, m));
  }
}

TEST_CASE("sic loop invariants at the default operating point") {
  const Bench b{SystemConfig{}};
  const ChunkReceiver rx(b.cfg, b.books, *b.fec, b.encoder);
  const MessageLayout layout = b.encoder.layout();
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(900 + trial);
    const ChunkScene s = noisy_scene(b, 9 + trial % 6, rng);
    const DecodeOutcome out = rx.run(s.y, 0, rng);
    CHECK(out.pipeline_passes <= b.cfg.algo.sic_max_rounds + 1);
    for (std::size_t i = 1; i < out.rounds.size(); ++i)
      CHECK(out.rounds[i].residual_energy <= 1.01 * out.rounds[i - 1].residual_energy);
    for (std::size_t i = 0; i < out.messages.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) CHECK(out.messages[i] != out.messages[j]);
      // Accepted messages re-encode to a frame whose CRC checks.
      const auto frame = b.encoder.encode(out.messages[i]).frame;
      const auto back = decode_frame_exact(frame, 0, b.cfg, b.books, b.polar());
      REQUIRE(back);
      CHECK(*back == out.messages[i]);
      CHECK(layout.chunk_index(out.messages[i]) == 0);
    }
  }
}

TEST_CASE("a second round adds messages when the first is incomplete") {
  SystemConfig c = config_at(0.0);
  c.algo.sic_persist = true;
  c.algo.activity_margin = 1;
  const Bench b{c};
  SystemConfig one = b.cfg;
  one.algo.sic_max_rounds = 0;
  const ChunkReceiver rx(b.cfg, b.books, *b.fec, b.encoder);
  const ChunkReceiver rx1(one, b.books, *b.fec, b.encoder);
  int incomplete = 0, improved = 0;
  for (int trial = 0; trial < 30; ++trial) {
    Rng rng(1000 + trial);
    const ChunkScene s = noisy_scene(b, 30, rng);
    Rng r1(trial), r2(trial);
    const auto first = rx1.run(s.y, 0, r1);
    int hits1 = 0;
    for (const auto& m : s.messages) hits1 += contains(first.messages, m);
    if (hits1 == 30) continue;
    ++incomplete;
    const auto full = rx.run(s.y, 0, r2);
    int hits = 0;
    for (const auto& m : s.messages) hits += contains(full.messages, m);
    improved += hits > hits1;
  }
  MESSAGE("incomplete first rounds: " << incomplete << ", improved: " << improved);
  REQUIRE(incomplete > 0);
  CHECK(2 * improved >= incomplete);
}
