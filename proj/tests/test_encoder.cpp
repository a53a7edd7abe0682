#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "odma/channel.hpp"

using namespace odma;
using odma::test::Bench;

TEST_CASE("pilot and pattern selection") {
  const Bench b{SystemConfig{}};
  const MessageLayout& layout = b.encoder.layout();
  const EncodedFrame f = b.encoder.encode(Bits(100, 0));
  CHECK(f.chunk_index == 0);
  CHECK(f.pilot_index == 0);
  CHECK(f.pattern_index == 0);
  CHECK((f.frame.head(50) - b.books.pilots.column(0)).norm() < 1e-12);

  Rng rng(4);
  Bits u = layout.assemble(9, 777, 4242, rng.bits(68));
  const EncodedFrame g = b.encoder.encode(u);
  CHECK(g.chunk_index == 9);
  CHECK(g.pilot_index == 777);
  CHECK(g.pattern_index == 4242);
}

TEST_CASE("zero payload fills the pattern with the (0,0) symbol") {
  const Bench b{SystemConfig{}};
  const EncodedFrame f = b.encoder.encode(Bits(100, 0));
  const cplx s00 = b.books.modulation.map(0, 0);
  const std::uint16_t* on = b.books.patterns.on_slots(0);
  for (int w = 0; w < 64; ++w) CHECK(std::abs(f.frame(50 + on[w]) - s00) < 1e-12);
}

TEST_CASE("frame support, order and energy") {
  const Bench b{SystemConfig{}};
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const Bits u = rng.bits(100);
    const EncodedFrame f = b.encoder.encode(u);
    const auto column = b.books.patterns.column(f.pattern_index);
    int nonzero = 0;
    for (int s = 0; s < 150; ++s) {
      const bool on = std::abs(f.frame(50 + s)) > 0.0;
      REQUIRE(on == (column[s] == 1));
      nonzero += on;
    }
    REQUIRE(nonzero == 64);
    REQUIRE(f.frame.squaredNorm() == doctest::Approx(b.books.energy.frame_energy).epsilon(1e-12));

    // Symbols sit on the on-slots in ascending slot order.
    const auto symbols = b.encoder.modulate_payload(b.encoder.layout().payload(u));
    const std::uint16_t* on = b.books.patterns.on_slots(f.pattern_index);
    for (int w = 0; w < 64; ++w) REQUIRE(std::abs(f.frame(50 + on[w]) - symbols[w]) < 1e-12);
  }
}

TEST_CASE("exact frame decoding inverts the encoder") {
  const Bench b{SystemConfig{}};
  Rng rng(13);
  for (int t = 0; t < 200; ++t) {
    const Bits u = rng.bits(100);
    const EncodedFrame f = b.encoder.encode(u);
    const auto back = decode_frame_exact(f.frame, f.chunk_index, b.cfg, b.books, b.polar());
    REQUIRE(back.has_value());
    REQUIRE(*back == u);
  }
}

TEST_CASE("distinct messages give distinct frames") {
  const Bench b{SystemConfig{}};
  Rng rng(14);
  const Bits u = rng.bits(100);
  const CVector base = b.encoder.encode(u).frame;
  for (int bit = 4; bit < 100; ++bit) {
    Bits v = u;
    v[bit] ^= 1;
    REQUIRE((b.encoder.encode(v).frame - base).norm() > 1e-6);
  }
}

TEST_CASE("chunk scenes") {
  const Bench b{SystemConfig{}};
  Rng rng(15);
  Rng noise(16);
  const ChunkScene empty = build_chunk_scene({}, CMatrix(50, 0), b.encoder, 1.0, noise);
  CHECK(empty.x.rows() == 0);
  CHECK(empty.x.cols() == 200);
  CHECK(empty.y.rows() == 50);
  CHECK(empty.y.squaredNorm() / (50.0 * 200.0) == doctest::Approx(1.0).epsilon(0.05));

  const auto one = odma::test::chunk_messages(1, b.encoder.layout(), rng);
  const ChunkScene s1 = build_chunk_scene(one, draw_channel(50, 1, rng), b.encoder, 0.0, noise);
  Eigen::JacobiSVD<CMatrix> svd1(s1.y);
  CHECK(svd1.singularValues()(1) < 1e-9 * svd1.singularValues()(0));

  const auto many = odma::test::chunk_messages(12, b.encoder.layout(), rng);
  const ChunkScene s = build_chunk_scene(many, draw_channel(50, 12, rng), b.encoder, 0.0, noise);
  Eigen::JacobiSVD<CMatrix> svd(s.y);
  CHECK(svd.singularValues()(12) < 1e-9 * svd.singularValues()(0));
  CHECK(s.pilot_indices.size() == 12);
  CHECK((s.y - s.h * s.x).norm() < 1e-9);

  std::vector<Bits> mixed = many;
  mixed[3][0] ^= 1;
  CHECK_THROWS_AS(build_chunk_scene(mixed, draw_channel(50, 12, rng), b.encoder, 0.0, noise), ConfigError);
}
