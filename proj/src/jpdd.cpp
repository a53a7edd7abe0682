#include "odma/jpdd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace odma {

using U64 = std::uint64_t;

namespace {
constexpr double kVarianceFloor = 1e-12;
}

StateAlphabet StateAlphabet::make(const ModulationAlphabet& q, AmpPriorMode mode, double active_ratio) {
  StateAlphabet s;
  s.points.push_back({0.0, 0.0});
  s.points.insert(s.points.end(), q.symbols.begin(), q.symbols.end());
  const auto n = static_cast<double>(s.points.size());
  if (mode == AmpPriorMode::UniformStates) {
    s.log_prior.assign(s.points.size(), -std::log(n));
  } else {
    if (!(active_ratio > 0.0 && active_ratio < 1.0)) throw ConfigError("activity ratio must lie in (0,1)");
    s.log_prior.push_back(std::log1p(-active_ratio));
    for (std::size_t i = 1; i < s.points.size(); ++i) s.log_prior.push_back(std::log(active_ratio / (n - 1)));
  }
  return s;
}

double StateAlphabet::mean_energy() const {
  double e = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) e += std::exp(log_prior[i]) * std::norm(points[i]);
  return e;
}

double StateAlphabet::variance() const {
  cplx mean{};
  for (std::size_t i = 0; i < points.size(); ++i) mean += std::exp(log_prior[i]) * points[i];
  return mean_energy() - std::norm(mean);
}

PosteriorMoments state_posterior(cplx s, double effective_variance, const StateAlphabet& states, double* probs) {
  const double v = std::max(effective_variance, kVarianceFloor);
  const int n = states.size();
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    probs[i] = states.log_prior[i] - std::norm(s - states.points[i]) / v;
    peak = std::max(peak, probs[i]);
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += (probs[i] = std::exp(probs[i] - peak));
  cplx mean{};
  double second = 0.0;
  for (int i = 0; i < n; ++i) {
    probs[i] /= total;
    mean += probs[i] * states.points[i];
    second += probs[i] * std::norm(states.points[i]);
  }
  return {mean, std::max(0.0, second - std::norm(mean))};
}

namespace {

Eigen::MatrixXd prior_rows(Eigen::Index users, const StateAlphabet& states) {
  Eigen::MatrixXd p(users, states.size());
  for (int i = 0; i < states.size(); ++i) p.col(i).setConstant(std::exp(states.log_prior[i]));
  return p;
}

}  // namespace

SlotDetection amp_detect_slot(const CVector& y, const CMatrix& h, double noise_variance, const StateAlphabet& states,
                              const AmpOptions& opt, ComplexityCounters* counters, AmpTrace* trace) {
  const Eigen::Index m = h.rows(), k = h.cols();
  SlotDetection out;
  out.posteriors = prior_rows(k, states);
  if (k == 0) return out;
  if (y.size() != m) throw ConfigError("slot observation does not match the channel");

  const double sigma2 = noise_variance;
  const double inv_m = 1.0 / static_cast<double>(m);
  const double load = static_cast<double>(k) / static_cast<double>(m);
  // mse_term = sigma2 * tau, so the effective variance sigma2 (1/M + tau)
  // stays finite as sigma2 -> 0.
  double mse_term = states.variance();
  CVector x = CVector::Zero(k);
  CVector r = y;
  CVector s(k);
  Eigen::MatrixXd post(k, states.size());
  if (trace) trace->tau.push_back(sigma2 > 0 ? mse_term / sigma2 : std::numeric_limits<double>::infinity());

  for (int q = 0; q < opt.max_iters; ++q) {
    s = x + inv_m * (h.adjoint() * r);
    const double eff = opt.empirical_variance ? r.squaredNorm() * inv_m * inv_m : sigma2 * inv_m + mse_term;
    CVector x_next(k);
    double var_sum = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      double probs[16];
      const auto mom = state_posterior(s(j), eff, states, probs);
      for (int i = 0; i < states.size(); ++i) post(j, i) = probs[i];
      x_next(j) = mom.mean;
      var_sum += mom.variance;
    }
    const double mse_next = load * var_sum / static_cast<double>(k);
    if (opt.damping > 0.0) x_next = (1.0 - opt.damping) * x_next + opt.damping * x;
    const double onsager = mse_next / std::max(eff, kVarianceFloor);
    r = y - h * x_next + onsager * r;

    if (counters) {
      const auto mk = static_cast<U64>(m * k);
      const auto states_n = static_cast<U64>(states.size());
      counters->charge(Stage::Detector, 2 * mk + k * states_n * 2 + m, 2 * mk + k * states_n * 3 + 2 * m);
    }
    if (!x_next.allFinite() || !r.allFinite() || !std::isfinite(mse_next)) {
      out.failed = true;
      return out;
    }
    x = x_next;
    mse_term = mse_next;
    if (trace) trace->tau.push_back(sigma2 > 0 ? mse_term / sigma2 : std::numeric_limits<double>::infinity());
  }
  out.posteriors = post;
  return out;
}

SlotDetection mmse_detect_slot(const CVector& y, const CMatrix& h, double noise_variance, const StateAlphabet& states,
                               ComplexityCounters* counters) {
  const Eigen::Index m = h.rows(), k = h.cols();
  SlotDetection out;
  out.posteriors = prior_rows(k, states);
  if (k == 0) return out;
  if (y.size() != m) throw ConfigError("slot observation does not match the channel");

  const double prior_var = states.variance();
  CMatrix gram = h.adjoint() * h;
  gram.diagonal().array() += noise_variance / prior_var;
  if (counters) {
    counters->charge_gemm(Stage::Detector, k, m, k);
    counters->charge(Stage::Detector, static_cast<U64>(k * k * k), static_cast<U64>(k * k * k));
    counters->charge_gemm(Stage::Detector, k, m, 1);
    counters->charge_gemm(Stage::Detector, k, k, 1);
  }
  Eigen::LDLT<CMatrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    out.failed = true;
    return out;
  }
  const Eigen::VectorXd d = ldlt.vectorD().real();
  if (d.minCoeff() <= 1e-12 * std::max(1.0, d.maxCoeff())) {
    out.failed = true;
    return out;
  }
  const CMatrix inv = ldlt.solve(CMatrix::Identity(k, k));
  const CVector est = inv * (h.adjoint() * y);
  // W H = I - (sigma2 / prior_var) inv, so the per-user gain is its diagonal.
  for (Eigen::Index j = 0; j < k; ++j) {
    const double gain = 1.0 - noise_variance / prior_var * inv(j, j).real();
    double probs[16];
    if (gain <= 1e-12) {
      for (int i = 0; i < states.size(); ++i) out.posteriors(j, i) = std::exp(states.log_prior[i]);
      continue;
    }
    const double err_var = prior_var * (1.0 - gain) / gain;
    state_posterior(est(j) / gain, err_var, states, probs);
    for (int i = 0; i < states.size(); ++i) out.posteriors(j, i) = probs[i];
  }
  if (!out.posteriors.allFinite()) {
    out.posteriors = prior_rows(k, states);
    out.failed = true;
  }
  return out;
}

ChunkDetection detect_chunk(const CMatrix& y_data, const CMatrix& h, double noise_variance,
                            const StateAlphabet& states, DetectorKind kind, const AmpOptions& opt,
                            ComplexityCounters* counters) {
  const Eigen::Index k = h.cols(), tc = y_data.cols();
  ChunkDetection out;
  out.app.assign(static_cast<std::size_t>(k), Eigen::MatrixXd(tc, states.size()));
  for (Eigen::Index t = 0; t < tc; ++t) {
    const CVector yt = y_data.col(t);
    SlotDetection sd = kind == DetectorKind::Amp ? amp_detect_slot(yt, h, noise_variance, states, opt, counters)
                                                 : mmse_detect_slot(yt, h, noise_variance, states, counters);
    if (sd.failed) ++out.failed_slots;
    for (Eigen::Index j = 0; j < k; ++j) out.app[j].row(t) = sd.posteriors.row(j);
  }
  return out;
}

PatternDecision retrieve_pattern(const Eigen::MatrixXd& user_posteriors, const PatternCodebook& patterns,
                                 double prob_floor, ComplexityCounters* counters) {
  const int tc = patterns.length();
  if (user_posteriors.rows() != tc) throw ConfigError("posteriors do not cover the data sub-frame");
  const double log_floor = std::log(prob_floor);
  // Score = sum_t log P_idle(t) + sum_{t on} (log P_active(t) - log P_idle(t));
  // the first sum is common to every column and dropped.
  std::vector<double> gain(static_cast<std::size_t>(tc));
  for (int t = 0; t < tc; ++t) {
    const double idle = user_posteriors(t, 0);
    const double active = user_posteriors.row(t).tail(user_posteriors.cols() - 1).sum();
    const double li = idle > prob_floor ? std::log(idle) : log_floor;
    const double la = active > prob_floor ? std::log(active) : log_floor;
    gain[t] = la - li;
  }
  const int w = patterns.weight();
  double best = -std::numeric_limits<double>::infinity();
  double second = -std::numeric_limits<double>::infinity();
  int best_index = 0;
  for (int c = 0; c < patterns.size(); ++c) {
    const auto* on = patterns.on_slots(c);
    double score = 0.0;
    for (int i = 0; i < w; ++i) score += gain[on[i]];
    if (score > best) {
      second = best;
      best = score;
      best_index = c;
    } else if (score > second) {
      second = score;
    }
  }
  if (counters) counters->charge(Stage::Pattern, 0, static_cast<U64>(patterns.size()) * w + tc);
  const double margin = patterns.size() > 1 ? best - second : std::numeric_limits<double>::infinity();
  return {best_index, margin};
}

std::vector<double> extract_llrs(const Eigen::MatrixXd& user_posteriors, int pattern_index,
                                 const PatternCodebook& patterns, double clamp) {
  if (user_posteriors.cols() != 5) throw ConfigError("LLR extraction expects {0} U QPSK posteriors");
  constexpr double tiny = 1e-300;
  auto safe_log_ratio = [&](double num, double den) {
    const double v = std::log(std::max(num, tiny)) - std::log(std::max(den, tiny));
    return std::clamp(v, -clamp, clamp);
  };
  std::vector<double> llrs;
  llrs.reserve(2 * static_cast<std::size_t>(patterns.weight()));
  const auto* on = patterns.on_slots(pattern_index);
  for (int i = 0; i < patterns.weight(); ++i) {
    const auto row = user_posteriors.row(on[i]);
    double p00 = row(1), p01 = row(2), p10 = row(3), p11 = row(4);
    const double total = p00 + p01 + p10 + p11;
    if (total > 0.0) {
      p00 /= total;
      p01 /= total;
      p10 /= total;
      p11 /= total;
    } else {
      p00 = p01 = p10 = p11 = 0.25;
    }
    llrs.push_back(safe_log_ratio(p00 + p01, p10 + p11));
    llrs.push_back(safe_log_ratio(p00 + p10, p01 + p11));
  }
  return llrs;
}

}  // namespace odma
