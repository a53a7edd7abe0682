#pragma once

#include <algorithm>

#include "odma/codebooks.hpp"
#include "odma/config.hpp"
#include "odma/encoder.hpp"
#include "odma/fec.hpp"
#include "odma/messages.hpp"
#include "odma/rng.hpp"

namespace odma::test {

// Codebooks, FEC and encoder for one config, kept alive together.
struct Bench {
  SystemConfig cfg;
  Codebooks books;
  std::unique_ptr<FecCodec> fec;
  Encoder encoder;

  explicit Bench(SystemConfig c)
      : cfg(std::move(c)), books(build_codebooks(cfg)), fec(make_fec(cfg)), encoder(cfg, books, *fec) {}
  const PolarCrcCodec& polar() const { return dynamic_cast<const PolarCrcCodec&>(*fec); }
};

// `count` messages that all land in chunk 0.
inline std::vector<Bits> chunk_messages(int count, const MessageLayout& layout, Rng& rng) {
  MessageSet set = sample_messages(count, layout, rng);
  for (auto& m : set.messages) std::fill(m.begin(), m.begin() + layout.chunk_bits, 0);
  return set.messages;
}

}  // namespace odma::test
