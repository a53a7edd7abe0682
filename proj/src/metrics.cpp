#include "odma/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace odma {

PupeReport compute_pupe(const MessageSet& truth, const std::vector<Bits>& decoded) {
  std::size_t width = truth.messages.empty() ? (decoded.empty() ? 0 : decoded.front().size())
                                             : truth.messages.front().size();
  for (const auto& m : truth.messages)
    if (m.size() != width) throw ConfigError("truth messages have mismatched lengths");
  for (const auto& m : decoded)
    if (m.size() != width) throw ConfigError("decoded message length does not match truth");

  const std::set<Bits> truth_set(truth.messages.begin(), truth.messages.end());
  const std::set<Bits> decoded_set(decoded.begin(), decoded.end());

  PupeReport r;
  for (const auto& m : truth_set)
    if (!decoded_set.count(m)) ++r.missed;
  for (const auto& m : decoded_set)
    if (!truth_set.count(m)) ++r.false_alarms;
  const int ka = static_cast<int>(truth_set.size());
  r.output_size = ka - r.missed + r.false_alarms;
  r.p_md = ka > 0 ? static_cast<double>(r.missed) / ka : 0.0;
  r.p_fa = static_cast<double>(r.false_alarms) / std::max(1, r.output_size);
  r.pupe = r.p_md + r.p_fa;
  return r;
}

Interval wilson_interval(double successes, double n, double z) {
  if (n <= 0) return {0.0, 1.0};
  const double p = successes / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  // The closed-form endpoints are exactly 0 and 1 at the extremes; avoid
  // returning rounding residue there.
  const double lo = successes <= 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = successes >= n ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

}  // namespace odma
