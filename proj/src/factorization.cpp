#include "odma/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace odma {

using U64 = std::uint64_t;

int estimate_activity(const CMatrix& y, double frame_energy, double noise_variance, ComplexityCounters* counters) {
  if (counters) counters->charge(Stage::Activity, static_cast<U64>(y.size()), static_cast<U64>(y.size()));
  const auto m = static_cast<double>(y.rows());
  const auto t = static_cast<double>(y.cols());
  if (y.size() == 0 || frame_energy <= 0.0) return 0;
  const double raw = (y.squaredNorm() / m - noise_variance * t) / frame_energy;
  const long upper = std::max<long>(0, std::min(y.rows(), y.cols()) - 1);
  return static_cast<int>(std::clamp(std::lround(raw), 0L, upper));
}

double altmin_objective(const CMatrix& y, const CMatrix& u, const CMatrix& v, double reg_u, double reg_v) {
  return (y - u * v).squaredNorm() + reg_u * u.squaredNorm() + reg_v * v.squaredNorm();
}

namespace {

double hermitian_condition(const CMatrix& gram) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || !std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

AltMinResult alternating_minimize(const CMatrix& y, int rank, const AltMinOptions& opt, Rng& rng,
                                  ComplexityCounters* counters) {
  if (rank < 1) throw ConfigError("alternating minimisation needs rank >= 1");
  const Eigen::Index m = y.rows(), t = y.cols(), k = rank;
  const double scale = std::sqrt(y.norm() / static_cast<double>(m * t));

  AltMinResult r;
  r.u = rng.complex_normal_matrix(m, k) * scale;
  r.v = rng.complex_normal_matrix(k, t) * scale;
  r.objective_history.push_back(altmin_objective(y, r.u, r.v, opt.reg_u, opt.reg_v));
  double prev_residual = (y - r.u * r.v).norm();
  const CMatrix eye = CMatrix::Identity(k, k);

  for (int it = 0; it < opt.max_iters; ++it) {
    // U = Y V^H (V V^H + a I)^{-1}
    const CMatrix gram_v = r.v * r.v.adjoint() + opt.reg_u * eye;
    if (hermitian_condition(gram_v) > opt.max_condition) throw ChunkFailure("V V^H + aI is numerically singular");
    r.u = gram_v.llt().solve((y * r.v.adjoint()).adjoint()).adjoint();
    r.objective_history.push_back(altmin_objective(y, r.u, r.v, opt.reg_u, opt.reg_v));

    // V = (U^H U + b I)^{-1} U^H Y
    const CMatrix gram_u = r.u.adjoint() * r.u + opt.reg_v * eye;
    if (hermitian_condition(gram_u) > opt.max_condition) throw ChunkFailure("U^H U + bI is numerically singular");
    r.v = gram_u.llt().solve(r.u.adjoint() * y);
    r.objective_history.push_back(altmin_objective(y, r.u, r.v, opt.reg_u, opt.reg_v));

    if (counters) {
      counters->charge_gemm(Stage::AltMin, m, t, k);      // Y V^H
      counters->charge_gemm(Stage::AltMin, k, t, k);      // V V^H
      counters->charge(Stage::AltMin, 2 * k * k * k, 2 * k * k * k);  // factorisations + eigenvalues
      counters->charge_gemm(Stage::AltMin, m, k, k);      // solve for U
      counters->charge_gemm(Stage::AltMin, k, m, k);      // U^H U
      counters->charge_gemm(Stage::AltMin, k, m, t);      // U^H Y
      counters->charge_gemm(Stage::AltMin, k, k, t);      // solve for V
      counters->charge_gemm(Stage::AltMin, m, k, t);      // residual U V
    }

    const double residual = (y - r.u * r.v).norm();
    r.residual_history.push_back(residual);
    r.iterations = it + 1;
    const double change = std::abs(prev_residual - residual) / std::max(prev_residual, 1e-300);
    prev_residual = residual;
    if (change < opt.tol) break;
  }
  return r;
}

SompResult somp_ambiguity(const CMatrix& v, const PilotCodebook& pilots, int rank, double max_condition,
                          ComplexityCounters* counters) {
  const Eigen::Index tp = pilots.length();
  if (rank < 1 || rank > tp) throw ConfigError("SOMP needs 1 <= K <= Tp");
  if (v.rows() != rank || v.cols() < tp) throw ConfigError("V must be K x T with T >= Tp");

  const CMatrix target = v.leftCols(tp).transpose();  // Tp x K
  const Eigen::Index n = pilots.size();
  const Eigen::VectorXd col_norm = pilots.matrix().colwise().norm().transpose();
  std::vector<char> taken(static_cast<std::size_t>(n), 0);

  SompResult out;
  CMatrix residual = target;
  CMatrix xi(tp, 0);
  for (int it = 0; it < rank; ++it) {
    const CMatrix corr = pilots.correlate(residual, counters);  // n x K
    Eigen::Index best = -1;
    double best_score = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double score = corr.row(i).norm() / col_norm(i);
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    if (counters) counters->charge(Stage::Somp, static_cast<U64>(n * rank), static_cast<U64>(n * rank));
    taken[best] = 1;
    out.support.push_back(static_cast<int>(best));
    xi.conservativeResize(Eigen::NoChange, xi.cols() + 1);
    xi.col(xi.cols() - 1) = pilots.column(best);

    // R = V_p^T - Xi Xi^+ V_p^T
    const CMatrix coef = xi.colPivHouseholderQr().solve(target);
    residual = target - xi * coef;
    if (counters) {
      const auto s = static_cast<U64>(xi.cols());
      counters->charge(Stage::Somp, tp * s * s, tp * s * s);
      counters->charge_gemm(Stage::Somp, s, tp, rank);
      counters->charge_gemm(Stage::Somp, tp, s, rank);
    }
  }

  out.g_tilde = xi.colPivHouseholderQr().solve(target);  // K x K, rows follow `support`
  Eigen::JacobiSVD<CMatrix> svd(out.g_tilde);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(cond <= max_condition)) throw ChunkFailure("ambiguity estimate is ill-conditioned");
  out.g = out.g_tilde.transpose().inverse();
  if (counters) counters->charge(Stage::Somp, 2 * static_cast<U64>(rank * rank * rank), 2 * static_cast<U64>(rank * rank * rank));
  return out;
}

Compensated compensate(const CMatrix& u, const CMatrix& v, const CMatrix& g) {
  return {u * g.inverse(), g * v};
}

FactorizationResult factorize_chunk(const CMatrix& y, const PilotCodebook& pilots, double frame_energy,
                                    double noise_variance, const AltMinOptions& opt, Rng& rng, int activity,
                                    ComplexityCounters* counters) {
  FactorizationResult f;
  int k = activity >= 0 ? activity : estimate_activity(y, frame_energy, noise_variance, counters);
  k = std::min<int>(k, static_cast<int>(pilots.length()));
  f.estimated_activity = k;
  if (k == 0) return f;

  AltMinResult am = alternating_minimize(y, k, opt, rng, counters);
  // Fix the factor representative with orthonormal U, so V = U^H Y carries
  // each user's received strength and the noise outside span(U) is dropped.
  // The altmin iterate itself is an arbitrary mix of users.
  {
    Eigen::HouseholderQR<CMatrix> qr(am.u);
    const CMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    am.v = r * am.v;
    am.u = qr.householderQ() * CMatrix::Identity(y.rows(), k);
    if (counters) {
      counters->charge(Stage::AltMin, 2 * static_cast<U64>(y.rows() * k * k), 2 * static_cast<U64>(y.rows() * k * k));
      counters->charge_gemm(Stage::AltMin, k, k, y.cols());
    }
  }
  SompResult sr = somp_ambiguity(am.v, pilots, k, 1e8, counters);
  Compensated c = compensate(am.u, am.v, sr.g);
  if (counters) {
    counters->charge_gemm(Stage::Somp, y.rows(), k, k);
    counters->charge_gemm(Stage::Somp, k, k, y.cols());
  }
  f.u = std::move(am.u);
  f.v = std::move(am.v);
  f.g = std::move(sr.g);
  f.pilot_indices = std::move(sr.support);
  f.h_hat = std::move(c.h_hat);
  f.x_hat = std::move(c.x_hat);
  f.residual_history = std::move(am.residual_history);
  f.objective_history = std::move(am.objective_history);
  return f;
}

}  // namespace odma
