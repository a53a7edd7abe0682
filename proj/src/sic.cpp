#include "odma/sic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace odma {

std::optional<CMatrix> refine_channel(const CMatrix& y, const CMatrix& x_passed, double noise_variance,
                                      double max_condition, ComplexityCounters* counters) {
  const Eigen::Index p = x_passed.rows();
  if (x_passed.cols() != y.cols()) throw ConfigError("re-encoded frames do not match the received length");
  if (p == 0) return CMatrix(y.rows(), 0);
  CMatrix gram = x_passed * x_passed.adjoint();
  gram.diagonal().array() += noise_variance;
  if (counters) {
    counters->charge_gemm(Stage::Sic, p, y.cols(), p);
    counters->charge_gemm(Stage::Sic, y.rows(), y.cols(), p);
    counters->charge(Stage::Sic, static_cast<std::uint64_t>(p * p * p), static_cast<std::uint64_t>(p * p * p));
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > max_condition) return std::nullopt;
  // H = Y Xp^H G^{-1}  <=>  H^H = G^{-1} Xp Y^H (G Hermitian).
  return CMatrix(gram.llt().solve(x_passed * y.adjoint()).adjoint());
}

void subtract_and_update(SicState& state, const CMatrix& h_passed, const CMatrix& x_passed,
                         const std::vector<Bits>& newly_passed, ComplexityCounters* counters) {
  if (x_passed.rows() > 0) {
    state.residual -= h_passed * x_passed;
    if (counters) counters->charge_gemm(Stage::Sic, h_passed.rows(), x_passed.rows(), x_passed.cols());
  }
  for (const auto& m : newly_passed)
    if (std::find(state.accepted.begin(), state.accepted.end(), m) == state.accepted.end())
      state.accepted.push_back(m);
  ++state.round;
}

ChunkReceiver::ChunkReceiver(const SystemConfig& config, const Codebooks& books, const FecCodec& fec,
                             const Encoder& encoder)
    : config_(config),
      books_(books),
      fec_(fec),
      encoder_(encoder),
      states_(StateAlphabet::make(books.modulation, config.algo.amp_prior,
                                  static_cast<double>(books.patterns.weight()) / books.patterns.length())) {
  altmin_.reg_u = config.algo.reg_u;
  altmin_.reg_v = config.algo.reg_v;
  altmin_.max_iters = config.algo.alt_min_max_iters;
  altmin_.tol = config.algo.alt_min_tol;
}

namespace {

// Frame estimate of one user for channel re-estimation: known pilot, and on
// the retrieved pattern the posterior mean of each slot. Returns the summed
// posterior variance.
double soft_frame(const Eigen::MatrixXd& post, int pattern, const PatternCodebook& patterns,
                  const StateAlphabet& states, Eigen::Ref<CVector> data) {
  data.setZero();
  double var = 0.0;
  const std::uint16_t* on = patterns.on_slots(pattern);
  for (int w = 0; w < patterns.weight(); ++w) {
    cplx mean{0.0, 0.0};
    double second = 0.0;
    for (int q = 0; q < states.size(); ++q) {
      mean += post(on[w], q) * states.points[q];
      second += post(on[w], q) * std::norm(states.points[q]);
    }
    data(on[w]) = mean;
    var += std::max(0.0, second - std::norm(mean));
  }
  return var;
}

}  // namespace

PassResult ChunkReceiver::single_pass(const CMatrix& y, int chunk_index, Rng& rng, ComplexityCounters* counters,
                                      int activity) const {
  PassResult out;
  const double sigma2 = books_.energy.noise_variance;
  out.factorization = factorize_chunk(y, books_.pilots, books_.energy.frame_energy, sigma2, altmin_, rng, activity, counters);
  const auto& f = out.factorization;
  const int k = f.estimated_activity;
  if (k == 0) return out;

  const AmpOptions amp{config_.algo.amp_max_iters, config_.algo.amp_damping, config_.algo.amp_empirical_variance};
  const MessageLayout layout = encoder_.layout();
  const int tp = config_.pilot_length;
  const CMatrix y_data = y.rightCols(config_.data_length());
  std::vector<Bits> frame_of(static_cast<std::size_t>(k));  // CRC-verified message per row
  out.h_final = f.h_hat;

  for (int iter = 0;; ++iter) {
    const ChunkDetection det = detect_chunk(y_data, out.h_final, sigma2, states_, config_.algo.detector, amp, counters);
    out.detector_failures += det.failed_slots;
    std::vector<int> patterns(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) {
      const PatternDecision pd = retrieve_pattern(det.app[r], books_.patterns, config_.algo.pattern_prob_floor, counters);
      patterns[r] = pd.index;
      if (!frame_of[r].empty()) continue;
      const auto llrs = extract_llrs(det.app[r], pd.index, books_.patterns);
      auto decoded = fec_.decode(llrs, counters);
      if (!decoded || !fec_.verify(decoded->protected_bits)) continue;
      Bits message = layout.assemble(chunk_index, f.pilot_indices[r], pd.index, decoded->payload);
      if (std::find(out.passed.begin(), out.passed.end(), message) != out.passed.end()) continue;
      frame_of[r] = message;
      out.passed.push_back(std::move(message));
      out.passed_rows.push_back(r);
    }
    if (iter >= config_.algo.channel_refine_iters || static_cast<int>(out.passed.size()) == k) break;

    // H = Y Xs^H (Xs Xs^H + D)^{-1} with D the soft-symbol error variances.
    CMatrix xs(k, y.cols());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(k);
    for (int r = 0; r < k; ++r) {
      if (!frame_of[r].empty()) {
        xs.row(r) = encoder_.encode(frame_of[r]).frame.transpose();
        continue;
      }
      xs.row(r).head(tp) = books_.pilots.column(f.pilot_indices[r]).transpose();
      CVector data(config_.data_length());
      var(r) = soft_frame(det.app[r], patterns[r], books_.patterns, states_, data);
      xs.row(r).tail(config_.data_length()) = data.transpose();
    }
    CMatrix gram = xs * xs.adjoint();
    gram.diagonal().array() += var.array();
    if (counters) {
      counters->charge_gemm(Stage::Sic, k, y.cols(), k);
      counters->charge_gemm(Stage::Sic, y.rows(), y.cols(), k);
      counters->charge(Stage::Sic, static_cast<std::uint64_t>(k) * k * k, static_cast<std::uint64_t>(k) * k * k);
    }
    Eigen::LDLT<CMatrix> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-10)) break;
    out.h_final = ldlt.solve(xs * y.adjoint()).adjoint();
  }
  return out;
}

DecodeOutcome ChunkReceiver::run(const CMatrix& y, int chunk_index, Rng& rng) const {
  DecodeOutcome outcome;
  SicState state{y, {}, 0};
  const double sigma2 = books_.energy.noise_variance;

  for (int pass = 0; pass <= config_.algo.sic_max_rounds; ++pass) {
    const double energy = state.residual.squaredNorm();
    int activity = estimate_activity(state.residual, books_.energy.frame_energy, sigma2, &outcome.counters);
    if (activity == 0 && (pass == 0 || !config_.algo.sic_persist)) break;
    activity = std::max(activity + config_.algo.activity_margin, 1);

    PassResult pr;
    try {
      pr = single_pass(state.residual, chunk_index, rng, &outcome.counters, activity);
    } catch (const ChunkFailure&) {
      ++outcome.chunk_failures;
      break;
    }
    ++outcome.pipeline_passes;
    outcome.detector_failures += pr.detector_failures;

    std::vector<Bits> fresh;
    std::vector<int> rows;
    for (std::size_t i = 0; i < pr.passed.size(); ++i) {
      if (std::find(state.accepted.begin(), state.accepted.end(), pr.passed[i]) != state.accepted.end()) continue;
      fresh.push_back(pr.passed[i]);
      rows.push_back(pr.passed_rows[i]);
    }
    const bool last = pass == config_.algo.sic_max_rounds;
    const double min_gain = config_.algo.sic_min_channel_gain;
    if (last && min_gain <= 0.0) {
      outcome.rounds.push_back({pass, pr.factorization.estimated_activity, static_cast<int>(fresh.size()), energy});
      state.accepted.insert(state.accepted.end(), fresh.begin(), fresh.end());
      break;
    }
    if (fresh.empty()) {
      outcome.rounds.push_back({pass, pr.factorization.estimated_activity, 0, energy});
      break;
    }

    CMatrix x_passed(static_cast<Eigen::Index>(fresh.size()), y.cols());
    for (std::size_t i = 0; i < fresh.size(); ++i)
      x_passed.row(static_cast<Eigen::Index>(i)) = encoder_.encode(fresh[i]).frame.transpose();
    auto h_passed = refine_channel(state.residual, x_passed, sigma2, 1e10, &outcome.counters);
    if (!h_passed) {
      CMatrix fallback(y.rows(), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i)
        fallback.col(static_cast<Eigen::Index>(i)) = pr.h_final.col(rows[i]);
      h_passed = std::move(fallback);
    }
    if (min_gain > 0.0) {
      // A CRC pass whose refined channel is far weaker than a unit-variance
      // fading gain is taken to be a false alarm.
      std::vector<Eigen::Index> keep;
      for (Eigen::Index i = 0; i < h_passed->cols(); ++i)
        if (h_passed->col(i).squaredNorm() >= min_gain * static_cast<double>(y.rows())) keep.push_back(i);
      if (static_cast<std::size_t>(keep.size()) != fresh.size()) {
        std::vector<Bits> kept;
        CMatrix xk(static_cast<Eigen::Index>(keep.size()), y.cols());
        CMatrix hk(y.rows(), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i) {
          kept.push_back(fresh[keep[i]]);
          xk.row(static_cast<Eigen::Index>(i)) = x_passed.row(keep[i]);
          hk.col(static_cast<Eigen::Index>(i)) = h_passed->col(keep[i]);
        }
        fresh = std::move(kept);
        x_passed = std::move(xk);
        h_passed = std::move(hk);
      }
    }
    outcome.rounds.push_back({pass, pr.factorization.estimated_activity, static_cast<int>(fresh.size()), energy});
    if (fresh.empty()) break;
    if (last) {
      state.accepted.insert(state.accepted.end(), fresh.begin(), fresh.end());
      break;
    }
    subtract_and_update(state, *h_passed, x_passed, fresh, &outcome.counters);
  }
  outcome.messages = std::move(state.accepted);
  return outcome;
}

}  // namespace odma
