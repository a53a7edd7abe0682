#include "odma/messages.hpp"

#include <set>

namespace odma {

int MessageLayout::chunk_index(const Bits& u) const { return static_cast<int>(bits_to_index(u, 0, chunk_bits)); }

int MessageLayout::pilot_index(const Bits& u) const {
  return static_cast<int>(bits_to_index(u, chunk_bits, pilot_bits));
}

int MessageLayout::pattern_index(const Bits& u) const {
  return static_cast<int>(bits_to_index(u, chunk_bits + pilot_bits, pattern_bits));
}

Bits MessageLayout::payload(const Bits& u) const {
  const auto first = u.begin() + chunk_bits + pilot_bits + pattern_bits;
  return Bits(first, first + payload_bits);
}

Bits MessageLayout::assemble(int chunk, int pilot, int pattern, const Bits& payload) const {
  if (static_cast<int>(payload.size()) != payload_bits) throw ConfigError("payload length mismatch");
  Bits u(total());
  index_to_bits(static_cast<std::uint64_t>(chunk), chunk_bits, u, 0);
  index_to_bits(static_cast<std::uint64_t>(pilot), pilot_bits, u, chunk_bits);
  index_to_bits(static_cast<std::uint64_t>(pattern), pattern_bits, u, chunk_bits + pilot_bits);
  std::copy(payload.begin(), payload.end(), u.begin() + chunk_bits + pilot_bits + pattern_bits);
  return u;
}

MessageSet sample_messages(int count, const MessageLayout& layout, Rng& rng) {
  const int bits = layout.total();
  if (count < 0 || (bits < 62 && static_cast<std::uint64_t>(count) > (std::uint64_t{1} << bits)))
    throw ConfigError("cannot draw that many distinct messages");
  MessageSet set;
  std::set<Bits> seen;
  while (static_cast<int>(set.messages.size()) < count) {
    Bits u = rng.bits(static_cast<std::size_t>(layout.total()));
    if (seen.insert(u).second) set.messages.push_back(std::move(u));
  }
  return set;
}

}  // namespace odma
