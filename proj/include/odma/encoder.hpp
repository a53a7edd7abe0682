#pragma once

#include <optional>
#include <vector>

#include "odma/channel.hpp"
#include "odma/codebooks.hpp"
#include "odma/fec.hpp"
#include "odma/messages.hpp"

namespace odma {

struct EncodedFrame {
  int chunk_index;
  int pilot_index;    // zero-based column of A
  int pattern_index;  // zero-based column of the pattern codebook
  CVector frame;      // length T: pilot codeword then Tc data slots
};

class Encoder {
 public:
  Encoder(const SystemConfig& config, const Codebooks& books, const FecCodec& fec);

  EncodedFrame encode(const Bits& message) const;
  // Data sub-frame only (length Tc) for given pattern and payload.
  CVector data_subframe(int pattern_index, const Bits& payload) const;
  // Modulated payload symbols in slot order (length Ns).
  std::vector<cplx> modulate_payload(const Bits& payload) const;

  const MessageLayout& layout() const { return layout_; }
  int chunk_length() const { return pilot_length_ + data_length_; }
  int pilot_length() const { return pilot_length_; }
  int data_length() const { return data_length_; }

 private:
  MessageLayout layout_;
  int pilot_length_;
  int data_length_;
  const Codebooks& books_;
  const FecCodec& fec_;
};

// Encodes every message (all must share one chunk index), stacks the frames
// as rows of X and passes them through `h`. h must have one column per message.
ChunkScene build_chunk_scene(const std::vector<Bits>& messages, const CMatrix& h, const Encoder& encoder,
                             double noise_variance, Rng& noise_rng);

// Inverse of Encoder::encode given perfect frame knowledge: reads the pilot
// and pattern indices from the frame, hard-demaps the symbols and strips the
// check bits. Returns nothing if the frame does not match the codebooks.
std::optional<Bits> decode_frame_exact(const CVector& frame, int chunk_index, const SystemConfig& config,
                                       const Codebooks& books, const PolarCrcCodec& fec);

}  // namespace odma
