#include "odma/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace odma {

using nlohmann::json;

int SystemConfig::bits_per_symbol() const {
  int b = 0;
  while ((1 << b) < modulation_order) ++b;
  return b;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

void SystemConfig::validate() const {
  require(total_channel_uses > 0 && chunk_count > 0, "L and J must be positive");
  require(total_channel_uses % chunk_count == 0, "L must be a multiple of J");
  require(pilot_length > 0, "Tp must be positive");
  require(data_length() > 0, "Tc = T - Tp must be positive");
  require(chunk_bits >= 0 && pilot_bits > 0 && pattern_bits >= 0 && payload_bits > 0, "bit split must be positive");
  require(chunk_bits < 31 && (1 << chunk_bits) == chunk_count, "J must equal 2^Bchunk");
  require(pilot_bits <= 24 && pattern_bits <= 24, "B1 and B2 are limited to 24 bits");
  require(antennas > 0, "M must be positive");
  require(active_users > 0, "Ka must be positive");
  require(power_ratio > 0.0 && power_ratio < 1.0, "power ratio must lie in (0,1)");
  require(modulation_order == 4, "only QPSK (Q=4) is supported");
  require(is_power_of_two(fec.codeword_bits), "polar length must be a power of two");
  require(fec.crc_bits > 0 && fec.crc_bits < 32, "CRC width must be in [1,31]");
  require(payload_bits + fec.crc_bits <= fec.codeword_bits, "B3 + CRC exceeds the codeword length");
  require(fec.codeword_bits % bits_per_symbol() == 0, "codeword length must fill whole symbols");
  require(fec.list_size >= 1, "list size must be >= 1");
  require(coded_symbols() <= data_length(), "Ns exceeds Tc");
  require(algo.reg_u > 0.0 && algo.reg_v > 0.0, "regularisers must be positive");
  require(algo.alt_min_max_iters > 0 && algo.alt_min_tol > 0.0, "alternating minimisation limits must be positive");
  require(algo.amp_max_iters > 0, "AMP iterations must be positive");
  require(algo.amp_damping >= 0.0 && algo.amp_damping <= 1.0, "AMP damping must lie in [0,1]");
  require(algo.sic_max_rounds >= 0, "SIC rounds must be nonnegative");
  require(algo.channel_refine_iters >= 0, "channel refinement rounds must be nonnegative");
  require(algo.activity_margin >= 0, "activity margin must be nonnegative");
  require(algo.sic_min_channel_gain >= 0.0, "minimum channel gain must be nonnegative");
  require(algo.pattern_prob_floor > 0.0, "probability floor must be positive");
}

EnergyBudget derive_energy_budget(const SystemConfig& c) {
  EnergyBudget e{};
  e.noise_variance = 1.0;
  e.frame_energy = c.message_bits() * e.noise_variance * std::pow(10.0, c.ebn0_db / 10.0);
  e.pilot_energy = c.power_ratio * e.frame_energy;
  e.data_symbol_energy = (1.0 - c.power_ratio) * e.frame_energy / c.coded_symbols();
  return e;
}

int reference_pilot_length(int active_users) { return active_users >= 800 ? 75 : 50; }

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

AmpPriorMode parse_prior(const std::string& s) {
  if (s == "uniform") return AmpPriorMode::UniformStates;
  if (s == "sparsity") return AmpPriorMode::SparsityWeighted;
  throw ConfigError("unknown amp_prior: " + s);
}

DetectorKind parse_detector(const std::string& s) {
  if (s == "amp") return DetectorKind::Amp;
  if (s == "mmse") return DetectorKind::Mmse;
  throw ConfigError("unknown detector: " + s);
}

PilotMode parse_pilot_mode(const std::string& s) {
  if (s == "dft") return PilotMode::SubsampledDft;
  if (s == "gaussian") return PilotMode::Gaussian;
  throw ConfigError("unknown pilot_mode: " + s);
}

}  // namespace

SystemConfig config_from_json(const json& j) {
  SystemConfig c;
  try {
    read(j, "total_channel_uses", c.total_channel_uses);
    read(j, "chunk_count", c.chunk_count);
    read(j, "pilot_length", c.pilot_length);
    read(j, "chunk_bits", c.chunk_bits);
    read(j, "pilot_bits", c.pilot_bits);
    read(j, "pattern_bits", c.pattern_bits);
    read(j, "payload_bits", c.payload_bits);
    read(j, "antennas", c.antennas);
    read(j, "active_users", c.active_users);
    read(j, "ebn0_db", c.ebn0_db);
    read(j, "power_ratio", c.power_ratio);
    read(j, "modulation_order", c.modulation_order);
    if (auto f = j.find("fec"); f != j.end()) {
      read(*f, "crc_bits", c.fec.crc_bits);
      read(*f, "codeword_bits", c.fec.codeword_bits);
      read(*f, "list_size", c.fec.list_size);
      read(*f, "crc_polynomial", c.fec.crc_polynomial);
      read(*f, "design_snr_db", c.fec.design_snr_db);
    }
    if (auto a = j.find("algo"); a != j.end()) {
      read(*a, "reg_u", c.algo.reg_u);
      read(*a, "reg_v", c.algo.reg_v);
      read(*a, "alt_min_max_iters", c.algo.alt_min_max_iters);
      read(*a, "alt_min_tol", c.algo.alt_min_tol);
      read(*a, "amp_max_iters", c.algo.amp_max_iters);
      read(*a, "amp_damping", c.algo.amp_damping);
      read(*a, "amp_empirical_variance", c.algo.amp_empirical_variance);
      read(*a, "sic_max_rounds", c.algo.sic_max_rounds);
      read(*a, "channel_refine_iters", c.algo.channel_refine_iters);
      read(*a, "activity_margin", c.algo.activity_margin);
      read(*a, "sic_persist", c.algo.sic_persist);
      read(*a, "sic_min_channel_gain", c.algo.sic_min_channel_gain);
      read(*a, "pattern_prob_floor", c.algo.pattern_prob_floor);
      read(*a, "seed", c.algo.seed);
      if (a->contains("amp_prior")) c.algo.amp_prior = parse_prior(a->at("amp_prior").get<std::string>());
      if (a->contains("detector")) c.algo.detector = parse_detector(a->at("detector").get<std::string>());
      if (a->contains("pilot_mode")) c.algo.pilot_mode = parse_pilot_mode(a->at("pilot_mode").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const SystemConfig& c) {
  json j;
  j["total_channel_uses"] = c.total_channel_uses;
  j["chunk_count"] = c.chunk_count;
  j["pilot_length"] = c.pilot_length;
  j["chunk_bits"] = c.chunk_bits;
  j["pilot_bits"] = c.pilot_bits;
  j["pattern_bits"] = c.pattern_bits;
  j["payload_bits"] = c.payload_bits;
  j["antennas"] = c.antennas;
  j["active_users"] = c.active_users;
  j["ebn0_db"] = c.ebn0_db;
  j["power_ratio"] = c.power_ratio;
  j["modulation_order"] = c.modulation_order;
  j["fec"] = {{"crc_bits", c.fec.crc_bits},
              {"codeword_bits", c.fec.codeword_bits},
              {"list_size", c.fec.list_size},
              {"crc_polynomial", c.fec.crc_polynomial},
              {"design_snr_db", c.fec.design_snr_db}};
  j["algo"] = {{"reg_u", c.algo.reg_u},
               {"reg_v", c.algo.reg_v},
               {"alt_min_max_iters", c.algo.alt_min_max_iters},
               {"alt_min_tol", c.algo.alt_min_tol},
               {"amp_max_iters", c.algo.amp_max_iters},
               {"amp_prior", c.algo.amp_prior == AmpPriorMode::UniformStates ? "uniform" : "sparsity"},
               {"amp_damping", c.algo.amp_damping},
               {"amp_empirical_variance", c.algo.amp_empirical_variance},
               {"sic_max_rounds", c.algo.sic_max_rounds},
               {"channel_refine_iters", c.algo.channel_refine_iters},
               {"activity_margin", c.algo.activity_margin},
               {"sic_persist", c.algo.sic_persist},
               {"sic_min_channel_gain", c.algo.sic_min_channel_gain},
               {"pattern_prob_floor", c.algo.pattern_prob_floor},
               {"detector", c.algo.detector == DetectorKind::Amp ? "amp" : "mmse"},
               {"pilot_mode", c.algo.pilot_mode == PilotMode::SubsampledDft ? "dft" : "gaussian"},
               {"seed", c.algo.seed}};
  return j;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

}  // namespace odma
