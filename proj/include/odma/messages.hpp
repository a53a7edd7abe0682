#pragma once

#include <vector>

#include "odma/config.hpp"
#include "odma/rng.hpp"
#include "odma/types.hpp"

namespace odma {

// Contiguous segmentation of a B-bit message: chunk | pilot | pattern | payload.
struct MessageLayout {
  int chunk_bits;
  int pilot_bits;
  int pattern_bits;
  int payload_bits;

  static MessageLayout from(const SystemConfig& c) {
    return {c.chunk_bits, c.pilot_bits, c.pattern_bits, c.payload_bits};
  }
  int total() const { return chunk_bits + pilot_bits + pattern_bits + payload_bits; }

  int chunk_index(const Bits& u) const;
  int pilot_index(const Bits& u) const;    // zero-based column of A
  int pattern_index(const Bits& u) const;  // zero-based column of the pattern codebook
  Bits payload(const Bits& u) const;

  Bits assemble(int chunk, int pilot, int pattern, const Bits& payload) const;
};

struct MessageSet {
  std::vector<Bits> messages;

  std::size_t size() const { return messages.size(); }
};

// Ka distinct messages drawn uniformly from {0,1}^B.
MessageSet sample_messages(int count, const MessageLayout& layout, Rng& rng);

}  // namespace odma
