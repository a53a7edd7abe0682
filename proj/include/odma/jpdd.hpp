#pragma once

#include <vector>

#include "odma/codebooks.hpp"
#include "odma/complexity.hpp"
#include "odma/config.hpp"
#include "odma/types.hpp"

namespace odma {

// Slot states {0} U Q. Index 0 is idle, index 1 + label is the QPSK point
// with label 2*b0 + b1.
struct StateAlphabet {
  std::vector<cplx> points;
  std::vector<double> log_prior;

  // `active_ratio` is only used in SparsityWeighted mode (Ns / Tc).
  static StateAlphabet make(const ModulationAlphabet& q, AmpPriorMode mode, double active_ratio = 0.0);
  int size() const { return static_cast<int>(points.size()); }
  double mean_energy() const;
  // Prior variance E|x|^2 - |E x|^2.
  double variance() const;
};

// Posterior over states of x given s = x + CN(0, effective_variance):
// weights exp(-|s - s_i|^2 / effective_variance) times the prior.
// Writes size() probabilities and returns the posterior mean and variance.
struct PosteriorMoments {
  cplx mean;
  double variance;
};
PosteriorMoments state_posterior(cplx s, double effective_variance, const StateAlphabet& states, double* probs);

struct AmpOptions {
  int max_iters = 10;
  double damping = 0.0;  // weight on the previous estimate
  // Take the effective variance from the residual, ||r||^2 / M^2, instead of
  // the state-evolution prediction. Absorbs channel-estimation error.
  bool empirical_variance = false;
};

struct AmpTrace {
  std::vector<double> tau;  // tau^q for q = 1..iterations+1
};

// K x (Q+1) posteriors for one slot.
struct SlotDetection {
  Eigen::MatrixXd posteriors;
  bool failed = false;
};

SlotDetection amp_detect_slot(const CVector& y, const CMatrix& h, double noise_variance, const StateAlphabet& states,
                              const AmpOptions& opt, ComplexityCounters* counters = nullptr,
                              AmpTrace* trace = nullptr);

SlotDetection mmse_detect_slot(const CVector& y, const CMatrix& h, double noise_variance, const StateAlphabet& states,
                               ComplexityCounters* counters = nullptr);

// Per-user posteriors: element k is a Tc x (Q+1) matrix for user k.
using AppTensor = std::vector<Eigen::MatrixXd>;

struct ChunkDetection {
  AppTensor app;
  int failed_slots = 0;
};

// Detects every column of y_data (M x Tc) independently.
ChunkDetection detect_chunk(const CMatrix& y_data, const CMatrix& h, double noise_variance,
                            const StateAlphabet& states, DetectorKind kind, const AmpOptions& opt,
                            ComplexityCounters* counters = nullptr);

struct PatternDecision {
  int index;
  double margin;  // log-score gap to the runner-up, >= 0
};

// Maximum product of per-slot on/off probabilities over all pattern columns.
// Ties go to the lowest index.
PatternDecision retrieve_pattern(const Eigen::MatrixXd& user_posteriors, const PatternCodebook& patterns,
                                 double prob_floor = 1e-30, ComplexityCounters* counters = nullptr);

// Bit LLRs (log p(0)/p(1)) of the on-slots of `pattern_index`, ascending slot
// order, two per QPSK symbol. Active-state posteriors are renormalised first.
std::vector<double> extract_llrs(const Eigen::MatrixXd& user_posteriors, int pattern_index,
                                 const PatternCodebook& patterns, double clamp = 30.0);

}  // namespace odma
