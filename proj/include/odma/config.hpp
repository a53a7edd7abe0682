#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "odma/types.hpp"

namespace odma {

enum class PilotMode { SubsampledDft, Gaussian };
enum class AmpPriorMode { UniformStates, SparsityWeighted };
enum class DetectorKind { Amp, Mmse };

struct FecConfig {
  int crc_bits = 14;
  int codeword_bits = 128;
  int list_size = 8;
  // x^14 + x^10 + x^9 + x^7 + x^6 + x^5 + x + 1, leading term implicit.
  std::uint32_t crc_polynomial = 0x06E3;
  double design_snr_db = 2.0;
};

struct AlgoConfig {
  double reg_u = 1e-3;
  double reg_v = 1e-3;
  int alt_min_max_iters = 100;
  double alt_min_tol = 1e-5;
  int amp_max_iters = 10;
  AmpPriorMode amp_prior = AmpPriorMode::UniformStates;
  double amp_damping = 0.0;
  // Residual-based AMP effective variance instead of state evolution.
  bool amp_empirical_variance = false;
  int sic_max_rounds = 4;
  // Decision-directed channel re-estimation rounds inside one pass (0 = off).
  int channel_refine_iters = 0;
  // Added to every activity estimate; surplus rows are rejected by the CRC.
  int activity_margin = 0;
  // After a round that recovered messages, try at least one user even when
  // the residual energy rounds the activity estimate down to zero.
  bool sic_persist = false;
  // Reject CRC passers whose refined channel has ||h||^2 / M below this
  // (0 = off).
  double sic_min_channel_gain = 0.0;
  double pattern_prob_floor = 1e-30;
  DetectorKind detector = DetectorKind::Amp;
  PilotMode pilot_mode = PilotMode::SubsampledDft;
  std::uint64_t seed = 1;
};

struct SystemConfig {
  int total_channel_uses = 3200;  // L
  int chunk_count = 16;           // J
  int pilot_length = 50;          // Tp
  int chunk_bits = 4;
  int pilot_bits = 14;    // B1
  int pattern_bits = 14;  // B2
  int payload_bits = 68;  // B3
  int antennas = 50;      // M
  int active_users = 150; // Ka
  double ebn0_db = -6.0;
  double power_ratio = 0.2;  // share of frame energy spent on the pilot
  int modulation_order = 4;
  FecConfig fec;
  AlgoConfig algo;

  int chunk_length() const { return total_channel_uses / chunk_count; }            // T
  int data_length() const { return chunk_length() - pilot_length; }                 // Tc
  int message_bits() const { return chunk_bits + pilot_bits + pattern_bits + payload_bits; }
  int bits_per_symbol() const;
  int coded_symbols() const { return fec.codeword_bits / bits_per_symbol(); }      // Ns

  // Throws ConfigError describing the first violated constraint.
  void validate() const;
};

// Energy accounting with the noise variance normalised to one.
struct EnergyBudget {
  double frame_energy;       // P
  double noise_variance;     // sigma^2
  double pilot_energy;       // squared norm of each pilot codeword
  double data_symbol_energy; // energy of each modulated payload symbol
};

EnergyBudget derive_energy_budget(const SystemConfig& config);

// Tp/Tc split used in the reference setups: 50/150 up to 600 users, 75/125 beyond.
int reference_pilot_length(int active_users);

SystemConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SystemConfig& config);
SystemConfig load_config(const std::string& path);

}  // namespace odma
