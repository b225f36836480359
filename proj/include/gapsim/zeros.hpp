#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "gapsim/path.hpp"

namespace gapsim {

struct ZeroSet {
  std::vector<double> zeros;  // strictly increasing
  double domain_lo = 0.0;
  double domain_hi = 0.0;
  double refine_tol = 0.0;
};

struct GapRecord {
  double left_zero = 0.0;
  double length = 0.0;
};

struct LargestGap {
  double length = 0.0;    // L_R
  double location = 0.0;  // Z_R
};

// Default localization tolerance relative to the grid step.
inline constexpr double kDefaultRefineFraction = 1e-6;

// One zero per strict sign change between adjacent grid points, localized by
// bisection on the cubic through the four surrounding grid values (linear at
// the path ends). Grid values that are exactly zero are zeros as-is.
ZeroSet find_zeros(const PathSample& path, double refine_tol);
ZeroSet find_zeros(const PathSample& path);

// Root in (x0, x0 + h) of the cubic interpolating (x0 - h, fm), (x0, f0),
// (x0 + h, f1), (x0 + 2h, f2); f0 and f1 must have opposite signs.
double refine_cubic(double x0, double h, double fm, double f0, double f1, double f2,
                    double tol);

std::vector<GapRecord> gaps(const ZeroSet& zeroset);

// Largest gap whose left endpoint lies in [0, R] and its smallest location;
// (0, 0) when no zero lies in [0, R]. Throws HorizonExhausted when a zero in
// [0, R] has no successor inside the simulated domain.
LargestGap largest_gap(const ZeroSet& zeroset, double R);

// First zero strictly after `t` (the refined zero set is searched); returns
// +inf when none is recorded.
double first_zero_after(const ZeroSet& zeroset, double t);

// True when no zero lies in [a, b].
bool gap_event(const ZeroSet& zeroset, double a, double b);

// CSV rows: path_id,z,gap_to_next (empty for the last zero).
void write_zeros_csv_header(std::ostream& out);
void write_zeros_csv(std::ostream& out, std::uint64_t path_id, const ZeroSet& zeroset);

}  // namespace gapsim
