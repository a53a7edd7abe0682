#include "odma/codebooks.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <set>

#include "odma/rng.hpp"

namespace odma {

namespace {
// FFTW planning is not thread-safe; execution with new-array calls is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

// Evaluates A^H r for a row-subsampled DFT dictionary with one inverse FFT of
// the zero-filled vector r.
class DftCorrelator {
 public:
  DftCorrelator(int size, std::vector<int> rows, double scale) : n_(size), rows_(std::move(rows)), scale_(scale) {
    std::vector<cplx> tmp_in(n_), tmp_out(n_);
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_1d(n_, reinterpret_cast<fftw_complex*>(tmp_in.data()),
                             reinterpret_cast<fftw_complex*>(tmp_out.data()), FFTW_BACKWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  ~DftCorrelator() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  DftCorrelator(const DftCorrelator&) = delete;
  DftCorrelator& operator=(const DftCorrelator&) = delete;

  CMatrix correlate(const CMatrix& r) const {
    CMatrix out(n_, r.cols());
    std::vector<cplx> in(n_);
    for (Eigen::Index c = 0; c < r.cols(); ++c) {
      std::fill(in.begin(), in.end(), cplx{});
      for (std::size_t t = 0; t < rows_.size(); ++t) in[rows_[t]] = r(static_cast<Eigen::Index>(t), c);
      fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.col(c).data()));
    }
    out *= scale_;
    return out;
  }

  int size() const { return n_; }

 private:
  int n_;
  std::vector<int> rows_;
  double scale_;
  fftw_plan plan_;
};

PilotCodebook::PilotCodebook(CMatrix matrix, PilotMode mode, std::vector<int> row_selection)
    : a_(std::move(matrix)), mode_(mode), rows_(std::move(row_selection)) {
  if (mode_ == PilotMode::SubsampledDft) {
    // All columns share the same magnitude per entry.
    const double scale = a_.rows() > 0 ? std::abs(a_(0, 0)) : 0.0;
    fft_ = std::make_shared<const DftCorrelator>(static_cast<int>(a_.cols()), rows_, scale);
  }
}

CMatrix PilotCodebook::correlate(const CMatrix& r, ComplexityCounters* counters) const {
  if (fft_) {
    if (counters) {
      const auto n = static_cast<std::uint64_t>(a_.cols());
      std::uint64_t stages = 0;
      while ((1ull << stages) < n) ++stages;
      const auto cols = static_cast<std::uint64_t>(r.cols());
      counters->charge(Stage::Somp, cols * (n / 2 * stages + n), cols * n * stages);
    }
    return fft_->correlate(r);
  }
  if (counters) counters->charge_gemm(Stage::Somp, a_.cols(), a_.rows(), r.cols());
  return a_.adjoint() * r;
}

PatternCodebook::PatternCodebook(int length, int weight, std::vector<std::uint16_t> on_slots)
    : length_(length), weight_(weight), on_(std::move(on_slots)) {}

std::vector<std::uint8_t> PatternCodebook::column(int c) const {
  std::vector<std::uint8_t> col(static_cast<std::size_t>(length_), 0);
  const auto* on = on_slots(c);
  for (int i = 0; i < weight_; ++i) col[on[i]] = 1;
  return col;
}

PilotCodebook build_pilot_codebook(int pilot_length, int pilot_bits, double pilot_energy, PilotMode mode,
                                   std::uint64_t seed) {
  if (pilot_length <= 0 || pilot_bits <= 0 || pilot_bits > 24) throw ConfigError("invalid pilot dimensions");
  if (pilot_energy <= 0.0) throw ConfigError("pilot energy must be positive");
  const int n = 1 << pilot_bits;
  Rng rng = Rng::substream(seed, 0, StreamPurpose::Codebook, 1);
  CMatrix a(pilot_length, n);

  if (mode == PilotMode::SubsampledDft) {
    if (pilot_length > n) throw ConfigError("Tp exceeds the DFT size 2^B1");
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (int t = 0; t < pilot_length; ++t) {
      const auto j = t + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - t)));
      std::swap(all[t], all[j]);
    }
    std::vector<int> rows(all.begin(), all.begin() + pilot_length);
    std::sort(rows.begin(), rows.end());
    const double amp = std::sqrt(pilot_energy / pilot_length);
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < pilot_length; ++t) {
        // Reduce the phase index modulo n before scaling to keep it exact.
        const auto k = (static_cast<std::int64_t>(rows[t]) * i) % n;
        const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) / n;
        a(t, i) = std::polar(amp, phase);
      }
    }
    return PilotCodebook(std::move(a), mode, std::move(rows));
  }

  a = rng.complex_normal_matrix(pilot_length, n);
  for (int i = 0; i < n; ++i) a.col(i) *= std::sqrt(pilot_energy) / a.col(i).norm();
  return PilotCodebook(std::move(a), mode, {});
}

namespace {

// min(C(n, k), cap) without overflow.
std::uint64_t binomial_capped(int n, int k, std::uint64_t cap) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (int i = 1; i <= k; ++i) {
    c = c * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (c >= cap) return cap;
  }
  return static_cast<std::uint64_t>(c);
}

}  // namespace

PatternCodebook build_pattern_codebook(int data_length, int pattern_bits, int weight, std::uint64_t seed) {
  if (weight <= 0 || weight > data_length) throw ConfigError("pattern weight Ns must lie in [1, Tc]");
  if (data_length > 65535) throw ConfigError("Tc too large");
  if (pattern_bits < 0 || pattern_bits > 24) throw ConfigError("B2 must lie in [0, 24]");
  const std::uint64_t count = 1ull << pattern_bits;
  const std::uint64_t available = binomial_capped(data_length, weight, 4 * count);
  if (available < count) throw ConfigError("not enough distinct weight-Ns patterns for 2^B2 columns");

  Rng rng = Rng::substream(seed, 0, StreamPurpose::Codebook, 2);
  std::vector<std::uint16_t> on;
  on.reserve(count * static_cast<std::uint64_t>(weight));

  if (available < 4 * count) {
    // Dense regime: enumerate every combination and draw without replacement.
    std::vector<std::vector<std::uint16_t>> all;
    std::vector<std::uint16_t> comb(weight);
    std::iota(comb.begin(), comb.end(), 0);
    while (true) {
      all.push_back(comb);
      int i = weight - 1;
      while (i >= 0 && comb[i] == data_length - weight + i) --i;
      if (i < 0) break;
      ++comb[i];
      for (int j = i + 1; j < weight; ++j) comb[j] = comb[j - 1] + 1;
    }
    for (std::uint64_t c = 0; c < count; ++c) {
      const auto j = c + rng.uniform_int(all.size() - c);
      std::swap(all[c], all[j]);
      on.insert(on.end(), all[c].begin(), all[c].end());
    }
    return PatternCodebook(data_length, weight, std::move(on));
  }

  std::set<std::vector<std::uint16_t>> seen;
  std::vector<std::uint16_t> slots(data_length);
  while (seen.size() < count) {
    std::iota(slots.begin(), slots.end(), 0);
    for (int t = 0; t < weight; ++t) {
      const auto j = t + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(data_length - t)));
      std::swap(slots[t], slots[j]);
    }
    std::vector<std::uint16_t> pick(slots.begin(), slots.begin() + weight);
    std::sort(pick.begin(), pick.end());
    if (seen.insert(pick).second) on.insert(on.end(), pick.begin(), pick.end());
  }
  return PatternCodebook(data_length, weight, std::move(on));
}

ModulationAlphabet build_modulation(int order, double symbol_energy) {
  if (order != 4) throw ConfigError("only QPSK (Q=4) is supported");
  if (symbol_energy <= 0.0) throw ConfigError("symbol energy must be positive");
  const double a = std::sqrt(symbol_energy / 2.0);
  ModulationAlphabet q;
  q.bits_per_symbol = 2;
  q.symbol_energy = symbol_energy;
  for (int b0 = 0; b0 < 2; ++b0)
    for (int b1 = 0; b1 < 2; ++b1) q.symbols.emplace_back(a * (1 - 2 * b0), a * (1 - 2 * b1));
  return q;
}

Codebooks build_codebooks(const SystemConfig& config) {
  config.validate();
  const EnergyBudget e = derive_energy_budget(config);
  return Codebooks{
      e,
      build_pilot_codebook(config.pilot_length, config.pilot_bits, e.pilot_energy, config.algo.pilot_mode,
                           config.algo.seed),
      build_pattern_codebook(config.data_length(), config.pattern_bits, config.coded_symbols(), config.algo.seed),
      build_modulation(config.modulation_order, e.data_symbol_energy),
  };
}

}  // namespace odma
