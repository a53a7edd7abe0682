#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "odma/complexity.hpp"
#include "odma/config.hpp"
#include "odma/types.hpp"

namespace odma {

class DftCorrelator;

// Pilot dictionary A (Tp x 2^B1). Every column has squared norm equal to the
// pilot energy.
class PilotCodebook {
 public:
  PilotCodebook(CMatrix matrix, PilotMode mode, std::vector<int> row_selection);

  const CMatrix& matrix() const { return a_; }
  PilotMode mode() const { return mode_; }
  const std::vector<int>& row_selection() const { return rows_; }
  Eigen::Index length() const { return a_.rows(); }
  Eigen::Index size() const { return a_.cols(); }
  auto column(Eigen::Index i) const { return a_.col(i); }

  // A^H * R for R with Tp rows. Uses an FFT of size 2^B1 per column of R in
  // DFT mode, a dense product otherwise.
  CMatrix correlate(const CMatrix& r, ComplexityCounters* counters = nullptr) const;

 private:
  CMatrix a_;
  PilotMode mode_;
  std::vector<int> rows_;
  std::shared_ptr<const DftCorrelator> fft_;
};

// Constant-weight on/off dictionary: 2^B2 distinct binary columns of length
// Tc, each with exactly Ns ones. Stored as ascending on-slot lists.
class PatternCodebook {
 public:
  PatternCodebook(int length, int weight, std::vector<std::uint16_t> on_slots);

  int length() const { return length_; }
  int weight() const { return weight_; }
  int size() const { return static_cast<int>(on_.size() / static_cast<std::size_t>(weight_)); }

  // Ascending on-slot indices of column c, `weight()` entries.
  const std::uint16_t* on_slots(int c) const { return on_.data() + static_cast<std::size_t>(c) * weight_; }
  std::vector<std::uint8_t> column(int c) const;

 private:
  int length_;
  int weight_;
  std::vector<std::uint16_t> on_;
};

// Gray-labelled QPSK. Label index is 2*b0 + b1.
struct ModulationAlphabet {
  std::vector<cplx> symbols;
  int bits_per_symbol;
  double symbol_energy;

  cplx map(std::uint8_t b0, std::uint8_t b1) const { return symbols[2 * b0 + b1]; }
};

PilotCodebook build_pilot_codebook(int pilot_length, int pilot_bits, double pilot_energy, PilotMode mode,
                                   std::uint64_t seed);
PatternCodebook build_pattern_codebook(int data_length, int pattern_bits, int weight, std::uint64_t seed);
ModulationAlphabet build_modulation(int order, double symbol_energy);

struct Codebooks {
  EnergyBudget energy;
  PilotCodebook pilots;
  PatternCodebook patterns;
  ModulationAlphabet modulation;
};

// Everything the transmitter and receiver must agree on, rebuilt from
// (config, seed) alone.
Codebooks build_codebooks(const SystemConfig& config);

}  // namespace odma
