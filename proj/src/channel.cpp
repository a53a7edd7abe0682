#include "odma/channel.hpp"

#include <cmath>

namespace odma {

CMatrix draw_channel(Eigen::Index antennas, Eigen::Index users, Rng& rng) {
  return rng.complex_normal_matrix(antennas, users, 1.0);
}

CMatrix transmit(const CMatrix& h, const CMatrix& x, double noise_variance, Rng& rng) {
  if (h.cols() != x.rows()) throw std::logic_error("transmit: H columns must match X rows");
  CMatrix y = (x.rows() == 0) ? CMatrix::Zero(h.rows(), x.cols()) : CMatrix(h * x);
  if (noise_variance > 0.0) y += rng.complex_normal_matrix(y.rows(), y.cols(), noise_variance);
  return y;
}

}  // namespace odma
