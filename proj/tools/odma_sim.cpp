// Command-line driver for end-to-end, detector and factorisation sweeps.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "odma/config.hpp"
#include "odma/harness.hpp"

namespace {

struct Common {
  std::string config_path;
  std::uint64_t seed = 1;
  std::string sweep;
  int trials = 10;
  std::string out;
  std::string trials_out;
  int workers = 1;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON system configuration");
  cmd->add_option("--seed", c.seed, "master seed")->each([&c](const std::string&) { c.seed_set = true; });
  cmd->add_option("--sweep", c.sweep, "axis=v1,v2,...")->required();
  cmd->add_option("--trials", c.trials, "trials per sweep point");
  cmd->add_option("--out", c.out, "CSV output path (stdout if omitted)");
  cmd->add_option("--workers", c.workers, "worker threads");
}

odma::ExperimentSpec make_spec(const Common& c, odma::ExperimentMode mode) {
  odma::ExperimentSpec spec;
  spec.mode = mode;
  spec.base = c.config_path.empty() ? odma::SystemConfig{} : odma::load_config(c.config_path);
  if (c.seed_set) spec.base.algo.seed = c.seed;
  spec.seed = spec.base.algo.seed;
  spec.trials = c.trials;
  spec.workers = c.workers;
  spec.output_path = c.out;

  const auto eq = c.sweep.find('=');
  if (eq == std::string::npos) throw odma::ConfigError("--sweep expects axis=v1,v2,...");
  spec.axis = odma::parse_sweep_axis(c.sweep.substr(0, eq));
  std::stringstream ss(c.sweep.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      spec.values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw odma::ConfigError("bad sweep value: " + item);
    }
  }
  return spec;
}

template <typename Writer>
void emit(const std::string& path, Writer&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::ios_base::failure("cannot open " + path);
  write(f);
  if (!f) throw std::ios_base::failure("write failed: " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ODMA unsourced random access simulator"};
  app.require_subcommand(1);

  Common pupe_opts, ser_opts, factor_opts;
  auto* pupe = app.add_subcommand("run-pupe", "end-to-end PUPE sweep");
  add_common(pupe, pupe_opts);
  pupe->add_option("--trials-out", pupe_opts.trials_out, "per-trial CSV");
  bool keep_split = false;
  pupe->add_flag("--keep-pilot-split", keep_split, "do not switch Tp/Tc with the number of users");

  auto* ser = app.add_subcommand("run-ser", "per-slot detector symbol error rate");
  add_common(ser, ser_opts);
  int ser_users = 25, ser_slots = 100;
  double ser_snr = 0.0;
  std::vector<std::string> detectors{"amp", "mmse"};
  ser->add_option("--users", ser_users, "users per slot");
  ser->add_option("--snr", ser_snr, "receive SNR in dB");
  ser->add_option("--slots", ser_slots, "slots per trial");
  ser->add_option("--detectors", detectors, "amp and/or mmse");

  auto* factor = app.add_subcommand("run-factor", "factorisation and ambiguity removal bench");
  add_common(factor, factor_opts);
  int factor_users = 25;
  bool noiseless = false;
  factor->add_option("--users", factor_users, "users per scene");
  factor->add_flag("--noiseless", noiseless, "drop the noise term");
  bool distinct = false;
  factor->add_flag("--distinct-pilots", distinct, "redraw scenes with pilot collisions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pupe->parsed()) {
      auto spec = make_spec(pupe_opts, odma::ExperimentMode::EndToEndPupe);
      spec.reference_pilot_split = !keep_split;
      const auto rows = odma::run_end_to_end(spec);
      emit(spec.output_path, [&](std::ostream& os) { odma::write_pupe_csv(os, rows); });
      if (!pupe_opts.trials_out.empty())
        emit(pupe_opts.trials_out, [&](std::ostream& os) { odma::write_pupe_trials_csv(os, rows); });
    } else if (ser->parsed()) {
      auto spec = make_spec(ser_opts, odma::ExperimentMode::DetectorSer);
      spec.bench_users = ser_users;
      spec.bench_snr_db = ser_snr;
      spec.bench_slots = ser_slots;
      spec.detectors.clear();
      for (const auto& d : detectors) {
        if (d == "amp") spec.detectors.push_back(odma::DetectorKind::Amp);
        else if (d == "mmse") spec.detectors.push_back(odma::DetectorKind::Mmse);
        else throw odma::ConfigError("unknown detector: " + d);
      }
      const auto rows = odma::run_detector_bench(spec);
      emit(spec.output_path, [&](std::ostream& os) { odma::write_ser_csv(os, rows); });
    } else {
      auto spec = make_spec(factor_opts, odma::ExperimentMode::FactorBench);
      spec.bench_users = factor_users;
      spec.noiseless = noiseless;
      spec.distinct_pilots = distinct;
      const auto rows = odma::run_factor_bench(spec);
      emit(spec.output_path, [&](std::ostream& os) { odma::write_factor_csv(os, rows); });
    }
  } catch (const odma::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
