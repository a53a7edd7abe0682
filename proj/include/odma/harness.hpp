#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "odma/complexity.hpp"
#include "odma/config.hpp"
#include "odma/metrics.hpp"

namespace odma {

enum class SweepAxis { EbN0, AntennaCount, ActiveUsers, DetectorSnr };
enum class ExperimentMode { EndToEndPupe, DetectorSer, FactorBench };

SweepAxis parse_sweep_axis(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);

struct ExperimentSpec {
  ExperimentMode mode = ExperimentMode::EndToEndPupe;
  SweepAxis axis = SweepAxis::EbN0;
  std::vector<double> values;
  int trials = 1;
  SystemConfig base;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string output_path;
  // Apply the reference Tp/Tc split when sweeping the number of users.
  bool reference_pilot_split = true;

  // Detector and factorisation benches: users per slot/scene, SNR (dB),
  // slots per trial.
  int bench_users = 25;
  double bench_snr_db = 0.0;
  int bench_slots = 100;
  std::vector<DetectorKind> detectors{DetectorKind::Amp, DetectorKind::Mmse};
  bool noiseless = false;
  // Factorisation bench: redraw scenes until every user has its own pilot.
  bool distinct_pilots = false;

  void validate() const;
};

struct PupeTrial {
  int trial;
  PupeReport report;
  double sic_rounds;  // mean pipeline passes over non-empty chunks
  int chunk_failures;
  ComplexityCounters counters;
};

struct PupePoint {
  double value;
  int trials;
  double p_md;
  double p_fa;
  double pupe;
  Interval p_md_ci;
  Interval p_fa_ci;
  double avg_sic_rounds;
  int chunk_failures;
  ComplexityCounters counters;  // summed over trials
  std::vector<PupeTrial> per_trial;
};

struct SerPoint {
  int antennas;
  int users;
  double snr_db;
  DetectorKind detector;
  int trials;
  std::uint64_t decisions;
  std::uint64_t errors;
  double ser;
  int failures;
  ComplexityCounters counters;
};

struct FactorPoint {
  int antennas;
  int length;
  int users;
  double snr;  // Eb/N0 in dB, +inf when noiseless
  int trials;
  double support_recovery;  // recovered pilots / transmitted pilots
  double frame_error;       // mean relative Frobenius error after alignment
  int failures;
};

std::vector<PupePoint> run_end_to_end(const ExperimentSpec& spec);
std::vector<SerPoint> run_detector_bench(const ExperimentSpec& spec);
std::vector<FactorPoint> run_factor_bench(const ExperimentSpec& spec);

// Fixed headers and column order; '.'-decimal regardless of locale.
void write_pupe_csv(std::ostream& os, const std::vector<PupePoint>& rows);
void write_pupe_trials_csv(std::ostream& os, const std::vector<PupePoint>& rows);
void write_ser_csv(std::ostream& os, const std::vector<SerPoint>& rows);
void write_factor_csv(std::ostream& os, const std::vector<FactorPoint>& rows);

// Runs `fn(i)` for i in [0, n) on `workers` threads.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn);

}  // namespace odma

#include "odma/detail/parallel.hpp"
