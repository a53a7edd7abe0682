#include "odma/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <locale>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "odma/channel.hpp"
#include "odma/codebooks.hpp"
#include "odma/encoder.hpp"
#include "odma/factorization.hpp"
#include "odma/fec.hpp"
#include "odma/jpdd.hpp"
#include "odma/messages.hpp"
#include "odma/sic.hpp"

namespace odma {

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "ebn0") return SweepAxis::EbN0;
  if (name == "antennas" || name == "M") return SweepAxis::AntennaCount;
  if (name == "users" || name == "Ka") return SweepAxis::ActiveUsers;
  if (name == "snr") return SweepAxis::DetectorSnr;
  throw ConfigError("unknown sweep axis: " + name);
}

std::string sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::EbN0: return "ebn0";
    case SweepAxis::AntennaCount: return "antennas";
    case SweepAxis::ActiveUsers: return "users";
    case SweepAxis::DetectorSnr: return "snr";
  }
  return "?";
}

void ExperimentSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (mode == ExperimentMode::EndToEndPupe && axis == SweepAxis::DetectorSnr)
    throw ConfigError("end-to-end runs sweep ebn0, antennas or users");
  if (mode != ExperimentMode::EndToEndPupe && (bench_users < 0 || bench_slots < 1))
    throw ConfigError("bench users must be >= 0 and slots >= 1");
  for (double v : values)
    if ((axis == SweepAxis::AntennaCount || axis == SweepAxis::ActiveUsers) && (v < 0 || v != std::floor(v)))
      throw ConfigError("antenna and user sweeps take nonnegative integers");
  base.validate();
}

namespace {

SystemConfig config_at(const ExperimentSpec& spec, double value) {
  SystemConfig c = spec.base;
  switch (spec.axis) {
    case SweepAxis::EbN0: c.ebn0_db = value; break;
    case SweepAxis::AntennaCount: c.antennas = static_cast<int>(value); break;
    case SweepAxis::ActiveUsers:
      c.active_users = static_cast<int>(value);
      if (spec.reference_pilot_split && spec.mode == ExperimentMode::EndToEndPupe)
        c.pilot_length = reference_pilot_length(c.active_users);
      break;
    case SweepAxis::DetectorSnr: break;
  }
  c.validate();
  return c;
}

PupeTrial run_pupe_trial(const SystemConfig& cfg, const Encoder& encoder, const ChunkReceiver& rx,
                         std::uint64_t seed, int trial) {
  const double sigma2 = derive_energy_budget(cfg).noise_variance;
  const auto t = static_cast<std::uint64_t>(trial);
  Rng msg_rng = Rng::substream(seed, t, StreamPurpose::Messages);
  const MessageLayout layout = encoder.layout();
  const MessageSet truth = sample_messages(cfg.active_users, layout, msg_rng);

  std::vector<std::vector<Bits>> per_chunk(static_cast<std::size_t>(cfg.chunk_count));
  for (const auto& m : truth.messages) per_chunk[layout.chunk_index(m)].push_back(m);

  PupeTrial out{};
  out.trial = trial;
  std::vector<Bits> decoded;
  int busy_chunks = 0;
  double passes = 0.0;
  for (int j = 0; j < cfg.chunk_count; ++j) {
    const auto& users = per_chunk[j];
    const auto sub = static_cast<std::uint64_t>(j);
    Rng ch_rng = Rng::substream(seed, t, StreamPurpose::Channel, sub);
    Rng noise_rng = Rng::substream(seed, t, StreamPurpose::Noise, sub);
    Rng rx_rng = Rng::substream(seed, t, StreamPurpose::FactorInit, sub);
    const CMatrix h = draw_channel(cfg.antennas, static_cast<Eigen::Index>(users.size()), ch_rng);
    const ChunkScene scene = build_chunk_scene(users, h, encoder, sigma2, noise_rng);
    DecodeOutcome res = rx.run(scene.y, j, rx_rng);
    decoded.insert(decoded.end(), res.messages.begin(), res.messages.end());
    out.chunk_failures += res.chunk_failures;
    out.counters += res.counters;
    if (res.pipeline_passes > 0) {
      ++busy_chunks;
      passes += res.pipeline_passes;
    }
  }
  out.report = compute_pupe(truth, decoded);
  out.sic_rounds = busy_chunks > 0 ? passes / busy_chunks : 0.0;
  return out;
}

}  // namespace

std::vector<PupePoint> run_end_to_end(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<PupePoint> rows;
  for (double value : spec.values) {
    const SystemConfig cfg = config_at(spec, value);
    const Codebooks books = build_codebooks(cfg);
    const auto fec = make_fec(cfg);
    const Encoder encoder(cfg, books, *fec);
    const ChunkReceiver rx(cfg, books, *fec, encoder);

    std::vector<PupeTrial> trials(static_cast<std::size_t>(spec.trials));
    parallel_for(spec.trials, spec.workers,
                 [&](int i) { trials[i] = run_pupe_trial(cfg, encoder, rx, spec.seed, i); });

    PupePoint p{};
    p.value = value;
    p.trials = spec.trials;
    double missed = 0, fa = 0, out_size = 0, fa_ratio = 0, rounds = 0;
    for (const auto& t : trials) {
      missed += t.report.missed;
      fa += t.report.false_alarms;
      out_size += t.report.output_size;
      fa_ratio += t.report.p_fa;
      rounds += t.sic_rounds;
      p.chunk_failures += t.chunk_failures;
      p.counters += t.counters;
    }
    const double users = static_cast<double>(cfg.active_users) * spec.trials;
    p.p_md = missed / users;
    p.p_fa = fa_ratio / spec.trials;
    p.pupe = p.p_md + p.p_fa;
    p.p_md_ci = wilson_interval(missed, users);
    p.p_fa_ci = wilson_interval(fa, out_size);
    p.avg_sic_rounds = rounds / spec.trials;
    p.per_trial = std::move(trials);
    rows.push_back(std::move(p));
  }
  return rows;
}

std::vector<SerPoint> run_detector_bench(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<SerPoint> rows;
  for (double value : spec.values) {
    int m = spec.base.antennas;
    int k = spec.bench_users;
    double snr_db = spec.bench_snr_db;
    if (spec.axis == SweepAxis::AntennaCount) m = static_cast<int>(value);
    if (spec.axis == SweepAxis::ActiveUsers) k = static_cast<int>(value);
    if (spec.axis == SweepAxis::DetectorSnr || spec.axis == SweepAxis::EbN0) snr_db = value;
    if (m < 1) throw ConfigError("detector bench needs at least one antenna");

    const ModulationAlphabet q = build_modulation(4, 1.0);
    const StateAlphabet states = StateAlphabet::make(q, AmpPriorMode::UniformStates);
    // SNR = E||H x||^2 / E||n||^2 = K Var[x] / sigma2.
    const double sigma2 = k > 0 ? k * states.variance() / std::pow(10.0, snr_db / 10.0) : 1.0;
    const AmpOptions amp{spec.base.algo.amp_max_iters, spec.base.algo.amp_damping,
                         spec.base.algo.amp_empirical_variance};
    const auto nd = spec.detectors.size();

    struct TrialTally {
      std::vector<std::uint64_t> errors;
      std::vector<int> failures;
      std::vector<ComplexityCounters> counters;
    };
    std::vector<TrialTally> tallies(static_cast<std::size_t>(spec.trials));
    parallel_for(spec.trials, spec.workers, [&](int trial) {
      TrialTally tally{std::vector<std::uint64_t>(nd, 0), std::vector<int>(nd, 0),
                       std::vector<ComplexityCounters>(nd)};
      Rng rng = Rng::substream(spec.seed, static_cast<std::uint64_t>(trial), StreamPurpose::DetectorStates);
      const CMatrix h = draw_channel(m, k, rng);
      std::vector<int> truth(static_cast<std::size_t>(k));
      CVector x(k);
      for (int slot = 0; slot < spec.bench_slots; ++slot) {
        for (int j = 0; j < k; ++j) {
          truth[j] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(states.size())));
          x(j) = states.points[truth[j]];
        }
        CVector y = h * x;
        for (int a = 0; a < m; ++a) y(a) += rng.complex_normal(sigma2);
        for (std::size_t d = 0; d < nd; ++d) {
          const SlotDetection sd = spec.detectors[d] == DetectorKind::Amp
                                       ? amp_detect_slot(y, h, sigma2, states, amp, &tally.counters[d])
                                       : mmse_detect_slot(y, h, sigma2, states, &tally.counters[d]);
          if (sd.failed) ++tally.failures[d];
          for (int j = 0; j < k; ++j) {
            Eigen::Index best = 0;
            sd.posteriors.row(j).maxCoeff(&best);
            if (best != truth[j]) ++tally.errors[d];
          }
        }
      }
      tallies[trial] = std::move(tally);
    });

    for (std::size_t d = 0; d < nd; ++d) {
      SerPoint p{};
      p.antennas = m;
      p.users = k;
      p.snr_db = snr_db;
      p.detector = spec.detectors[d];
      p.trials = spec.trials;
      p.decisions = static_cast<std::uint64_t>(spec.trials) * spec.bench_slots * k;
      for (const auto& t : tallies) {
        p.errors += t.errors[d];
        p.failures += t.failures[d];
        p.counters += t.counters[d];
      }
      p.ser = p.decisions ? static_cast<double>(p.errors) / p.decisions : 0.0;
      rows.push_back(p);
    }
  }
  return rows;
}

std::vector<FactorPoint> run_factor_bench(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<FactorPoint> rows;
  for (double value : spec.values) {
    SystemConfig cfg = config_at(spec, value);
    int k = spec.axis == SweepAxis::ActiveUsers ? static_cast<int>(value) : spec.bench_users;
    const Codebooks books = build_codebooks(cfg);
    const auto fec = make_fec(cfg);
    const Encoder encoder(cfg, books, *fec);
    const double sigma2 = spec.noiseless ? 0.0 : books.energy.noise_variance;
    AltMinOptions opt;
    opt.reg_u = cfg.algo.reg_u;
    opt.reg_v = cfg.algo.reg_v;
    opt.max_iters = cfg.algo.alt_min_max_iters;
    opt.tol = cfg.algo.alt_min_tol;

    struct SceneResult {
      int recovered = 0;
      double err_num = 0.0;
      double err_den = 0.0;
      bool failed = false;
    };
    std::vector<SceneResult> scenes(static_cast<std::size_t>(spec.trials));
    const MessageLayout layout = encoder.layout();
    parallel_for(spec.trials, spec.workers, [&](int trial) {
      const auto t = static_cast<std::uint64_t>(trial);
      Rng msg_rng = Rng::substream(spec.seed, t, StreamPurpose::Messages);
      Rng ch_rng = Rng::substream(spec.seed, t, StreamPurpose::Channel);
      Rng noise_rng = Rng::substream(spec.seed, t, StreamPurpose::Noise);
      Rng rx_rng = Rng::substream(spec.seed, t, StreamPurpose::FactorInit);
      MessageSet ms;
      for (;;) {
        ms = sample_messages(k, layout, msg_rng);
        std::set<int> pilots;
        for (auto& u : ms.messages) {
          std::fill(u.begin(), u.begin() + layout.chunk_bits, 0);
          pilots.insert(layout.pilot_index(u));
        }
        if (!spec.distinct_pilots || static_cast<int>(pilots.size()) == k) break;
      }
      const CMatrix h = draw_channel(cfg.antennas, k, ch_rng);
      const ChunkScene scene = build_chunk_scene(ms.messages, h, encoder, sigma2, noise_rng);

      SceneResult sr;
      sr.err_den = scene.x.squaredNorm();
      if (k == 0) {
        scenes[trial] = sr;
        return;
      }
      std::map<int, int> pilot_use;
      for (int p : scene.pilot_indices) ++pilot_use[p];
      try {
        const FactorizationResult f =
            factorize_chunk(scene.y, books.pilots, books.energy.frame_energy, sigma2, opt, rx_rng, k);
        for (int u = 0; u < k; ++u) {
          const int pilot = scene.pilot_indices[u];
          const auto it = std::find(f.pilot_indices.begin(), f.pilot_indices.end(), pilot);
          if (pilot_use[pilot] == 1 && it != f.pilot_indices.end()) {
            ++sr.recovered;
            const auto row = static_cast<Eigen::Index>(it - f.pilot_indices.begin());
            sr.err_num += (f.x_hat.row(row) - scene.x.row(u)).squaredNorm();
          } else {
            sr.err_num += scene.x.row(u).squaredNorm();
          }
        }
      } catch (const ChunkFailure&) {
        sr.failed = true;
        sr.err_num = sr.err_den;
      }
      scenes[trial] = sr;
    });

    FactorPoint p{};
    p.antennas = cfg.antennas;
    p.length = cfg.chunk_length();
    p.users = k;
    p.snr = spec.noiseless ? std::numeric_limits<double>::infinity() : cfg.ebn0_db;
    p.trials = spec.trials;
    double recovered = 0.0, err = 0.0;
    for (const auto& s : scenes) {
      recovered += s.recovered;
      err += s.err_den > 0.0 ? std::sqrt(s.err_num / s.err_den) : 0.0;
      p.failures += s.failed ? 1 : 0;
    }
    p.support_recovery = k > 0 ? recovered / (static_cast<double>(k) * spec.trials) : 1.0;
    p.frame_error = err / spec.trials;
    rows.push_back(p);
  }
  return rows;
}

namespace {

struct CsvStream {
  explicit CsvStream(std::ostream& os) : os_(os) {
    buf_.imbue(std::locale::classic());
    buf_.precision(10);
  }
  ~CsvStream() { os_ << buf_.str(); }
  template <typename T>
  CsvStream& operator<<(const T& v) {
    buf_ << v;
    return *this;
  }
  std::ostream& os_;
  std::ostringstream buf_;
};

const char* detector_name(DetectorKind d) { return d == DetectorKind::Amp ? "amp" : "mmse"; }

void write_counters(CsvStream& out, const ComplexityCounters& c, int trials) {
  for (int s = 0; s < ComplexityCounters::kStages; ++s)
    out << ',' << static_cast<double>(c.multiplies[s]) / std::max(1, trials);
  for (int s = 0; s < ComplexityCounters::kStages; ++s)
    out << ',' << static_cast<double>(c.adds[s]) / std::max(1, trials);
}

void write_counter_header(CsvStream& out) {
  for (int s = 0; s < ComplexityCounters::kStages; ++s) out << ",mul_" << stage_name(static_cast<Stage>(s));
  for (int s = 0; s < ComplexityCounters::kStages; ++s) out << ",add_" << stage_name(static_cast<Stage>(s));
}

}  // namespace

void write_pupe_csv(std::ostream& os, const std::vector<PupePoint>& rows) {
  CsvStream out(os);
  out << "value,trials,p_md,p_fa,pupe,p_md_lo,p_md_hi,p_fa_lo,p_fa_hi,avg_sic_rounds,chunk_failures";
  write_counter_header(out);
  out << '\n';
  for (const auto& r : rows) {
    out << r.value << ',' << r.trials << ',' << r.p_md << ',' << r.p_fa << ',' << r.pupe << ',' << r.p_md_ci.lo << ','
        << r.p_md_ci.hi << ',' << r.p_fa_ci.lo << ',' << r.p_fa_ci.hi << ',' << r.avg_sic_rounds << ','
        << r.chunk_failures;
    write_counters(out, r.counters, r.trials);
    out << '\n';
  }
}

void write_pupe_trials_csv(std::ostream& os, const std::vector<PupePoint>& rows) {
  CsvStream out(os);
  out << "value,trial,missed,false_alarms,output_size,pupe,sic_rounds,chunk_failures\n";
  for (const auto& r : rows)
    for (const auto& t : r.per_trial)
      out << r.value << ',' << t.trial << ',' << t.report.missed << ',' << t.report.false_alarms << ','
          << t.report.output_size << ',' << t.report.pupe << ',' << t.sic_rounds << ',' << t.chunk_failures << '\n';
}

void write_ser_csv(std::ostream& os, const std::vector<SerPoint>& rows) {
  CsvStream out(os);
  out << "M,users,snr_db,detector,trials,decisions,errors,ser,failures,mul_per_slot\n";
  for (const auto& r : rows) {
    const double slots = r.users > 0 ? static_cast<double>(r.decisions) / r.users : 0.0;
    out << r.antennas << ',' << r.users << ',' << r.snr_db << ',' << detector_name(r.detector) << ',' << r.trials
        << ',' << r.decisions << ',' << r.errors << ',' << r.ser << ',' << r.failures << ','
        << (slots > 0 ? static_cast<double>(r.counters.multiplies_at(Stage::Detector)) / slots : 0.0) << '\n';
  }
}

void write_factor_csv(std::ostream& os, const std::vector<FactorPoint>& rows) {
  CsvStream out(os);
  out << "M,T,users,snr,trials,support_recovery,frame_error,failures\n";
  for (const auto& r : rows)
    out << r.antennas << ',' << r.length << ',' << r.users << ',' << r.snr << ',' << r.trials << ','
        << r.support_recovery << ',' << r.frame_error << ',' << r.failures << '\n';
}

}  // namespace odma
