#pragma once

#include <vector>

#include "odma/rng.hpp"
#include "odma/types.hpp"

namespace odma {

// Ground truth for one chunk: Y = H X + N.
struct ChunkScene {
  CMatrix h;  // M x Ka_chunk
  CMatrix x;  // Ka_chunk x T, frames as rows
  CMatrix y;  // M x T
  double noise_variance = 1.0;
  std::vector<Bits> messages;  // row k of x carries messages[k]
  std::vector<int> pilot_indices;
  std::vector<int> pattern_indices;
};

// i.i.d. CN(0,1) Rayleigh block-fading channel, one column per user.
CMatrix draw_channel(Eigen::Index antennas, Eigen::Index users, Rng& rng);

// Y = H X + N with N i.i.d. CN(0, noise_variance).
CMatrix transmit(const CMatrix& h, const CMatrix& x, double noise_variance, Rng& rng);

}  // namespace odma
