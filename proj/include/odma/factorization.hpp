#pragma once

#include <vector>

#include "odma/codebooks.hpp"
#include "odma/complexity.hpp"
#include "odma/rng.hpp"
#include "odma/types.hpp"

namespace odma {

// Number of active users in a chunk from received power:
// round((||Y||_F^2 / M - sigma2 * T) / P), clamped to [0, min(M, T) - 1].
int estimate_activity(const CMatrix& y, double frame_energy, double noise_variance,
                      ComplexityCounters* counters = nullptr);

struct AltMinOptions {
  double reg_u = 1e-3;
  double reg_v = 1e-3;
  int max_iters = 100;
  double tol = 1e-5;
  // Normal matrices worse conditioned than this abort the chunk.
  double max_condition = 1e12;
};

struct AltMinResult {
  CMatrix u;  // M x K
  CMatrix v;  // K x T
  // ||Y - UV||_F after each full U/V sweep.
  std::vector<double> residual_history;
  // ||Y - UV||_F^2 + reg_u ||U||_F^2 + reg_v ||V||_F^2 after every half step,
  // starting with the initial point.
  std::vector<double> objective_history;
  int iterations = 0;
};

// Regularised alternating least squares Y ~ U V from a seeded Gaussian start.
// Throws ChunkFailure if a normal matrix is numerically singular.
AltMinResult alternating_minimize(const CMatrix& y, int rank, const AltMinOptions& opt, Rng& rng,
                                  ComplexityCounters* counters = nullptr);

double altmin_objective(const CMatrix& y, const CMatrix& u, const CMatrix& v, double reg_u, double reg_v);

struct SompResult {
  std::vector<int> support;  // selected pilot columns, in selection order
  CMatrix g;                 // K x K ambiguity estimate
  CMatrix g_tilde;           // K x K rows of the row-sparse solution at `support`
};

// Simultaneous OMP on V(:, 0:Tp)^T ~ A G~ followed by G = (G~(S,:)^T)^{-1}.
// Throws ChunkFailure if G~(S,:) is ill-conditioned beyond `max_condition`.
SompResult somp_ambiguity(const CMatrix& v, const PilotCodebook& pilots, int rank, double max_condition = 1e8,
                          ComplexityCounters* counters = nullptr);

struct Compensated {
  CMatrix h_hat;  // U G^{-1}
  CMatrix x_hat;  // G V
};

Compensated compensate(const CMatrix& u, const CMatrix& v, const CMatrix& g);

struct FactorizationResult {
  int estimated_activity = 0;
  CMatrix u;
  CMatrix v;
  CMatrix g;
  std::vector<int> pilot_indices;  // row k of x_hat / column k of h_hat <-> pilot pilot_indices[k]
  CMatrix h_hat;
  CMatrix x_hat;
  std::vector<double> residual_history;
  std::vector<double> objective_history;
};

// Activity estimate, factorisation and ambiguity compensation for one chunk.
// `activity` < 0 means estimate it from the power of y.
FactorizationResult factorize_chunk(const CMatrix& y, const PilotCodebook& pilots, double frame_energy,
                                    double noise_variance, const AltMinOptions& opt, Rng& rng,
                                    int activity = -1, ComplexityCounters* counters = nullptr);

}  // namespace odma
