#pragma once

#include <optional>
#include <vector>

#include "odma/codebooks.hpp"
#include "odma/complexity.hpp"
#include "odma/encoder.hpp"
#include "odma/factorization.hpp"
#include "odma/fec.hpp"
#include "odma/jpdd.hpp"

namespace odma {

// Regularised LS channel of re-encoded frames: Y Xp^H (Xp Xp^H + sigma2 I)^{-1},
// M x |passed|. Nothing when the Gram matrix condition exceeds `max_condition`.
std::optional<CMatrix> refine_channel(const CMatrix& y, const CMatrix& x_passed, double noise_variance,
                                      double max_condition = 1e10, ComplexityCounters* counters = nullptr);

struct SicState {
  CMatrix residual;
  std::vector<Bits> accepted;
  int round = 0;
};

// residual -= H_passed X_passed, accepted U= newly_passed, round += 1.
void subtract_and_update(SicState& state, const CMatrix& h_passed, const CMatrix& x_passed,
                         const std::vector<Bits>& newly_passed, ComplexityCounters* counters = nullptr);

struct SicRoundStats {
  int round;
  int activity_estimate;
  int passers;
  double residual_energy;  // ||residual||_F^2 entering the round
};

struct DecodeOutcome {
  std::vector<Bits> messages;
  std::vector<SicRoundStats> rounds;
  int pipeline_passes = 0;
  int chunk_failures = 0;
  int detector_failures = 0;
  ComplexityCounters counters;
};

// Output of one factorise / detect / decode pass on a residual.
struct PassResult {
  FactorizationResult factorization;
  std::vector<Bits> passed;       // full B-bit messages whose CRC checks
  std::vector<int> passed_rows;   // matching column of h_hat
  CMatrix h_final;                // channel estimate behind the last detection
  int detector_failures = 0;
};

class ChunkReceiver {
 public:
  ChunkReceiver(const SystemConfig& config, const Codebooks& books, const FecCodec& fec, const Encoder& encoder);

  // Throws ChunkFailure from the factorisation stage.
  // `activity` < 0 estimates the number of users from the energy of y.
  PassResult single_pass(const CMatrix& y, int chunk_index, Rng& rng, ComplexityCounters* counters,
                         int activity = -1) const;

  // Full SIC loop on the received signal of chunk `chunk_index`.
  DecodeOutcome run(const CMatrix& y, int chunk_index, Rng& rng) const;

 private:
  const SystemConfig& config_;
  const Codebooks& books_;
  const FecCodec& fec_;
  const Encoder& encoder_;
  StateAlphabet states_;
  AltMinOptions altmin_;
};

}  // namespace odma
