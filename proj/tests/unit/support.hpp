#pragma once

#include <cmath>

#include "gapsim/stats.hpp"

namespace test_support {

// |estimate - target| within `k` standard errors, the standard error read off
// the 95% interval. Unit tests use 4 SE so that the many Monte Carlo
// assertions do not fail by chance.
inline bool within_se(const gapsim::EstimateWithCI& e, double target, double k = 4.0) {
  const double se_hi = (e.hi - e.value) / gapsim::kZ95;
  const double se_lo = (e.value - e.lo) / gapsim::kZ95;
  const double se = target >= e.value ? se_hi : se_lo;
  return std::abs(e.value - target) <= k * std::max(se, 1e-300);
}

}  // namespace test_support
