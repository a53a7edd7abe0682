#pragma once

#include <vector>

#include "odma/messages.hpp"

namespace odma {

struct PupeReport {
  int missed = 0;        // n_md
  int false_alarms = 0;  // n_fa
  int output_size = 0;   // |L~|
  double p_md = 0.0;
  double p_fa = 0.0;
  double pupe = 0.0;
};

// `decoded` must be free of duplicates. Order of either list is irrelevant.
PupeReport compute_pupe(const MessageSet& truth, const std::vector<Bits>& decoded);

struct Interval {
  double lo;
  double hi;
};

// Wilson score interval for `successes` out of `n` at the given z.
Interval wilson_interval(double successes, double n, double z = 1.959963984540054);

}  // namespace odma
