#include "gapsim/zeros.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "gapsim/csv.hpp"
#include "gapsim/error.hpp"

namespace gapsim {

namespace {

inline bool opposite(double a, double b) { return (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0); }

double bisect(const auto& f, double a, double b, double fa, double tol) {
  while (b - a > tol) {
    const double mid = 0.5 * (a + b);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (opposite(fa, fm)) {
      b = mid;
    } else {
      a = mid;
      fa = fm;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double refine_cubic(double x0, double h, double fm, double f0, double f1, double f2,
                    double tol) {
  // Lagrange cubic on nodes t = -1, 0, 1, 2 in units of h.
  auto p = [&](double t) {
    const double a = t + 1.0, b = t, c = t - 1.0, d = t - 2.0;
    return -fm * b * c * d / 6.0 + f0 * a * c * d / 2.0 - f1 * a * b * d / 2.0 +
           f2 * a * b * c / 6.0;
  };
  const double t = bisect(p, 0.0, 1.0, f0, tol / h);
  return x0 + t * h;
}

ZeroSet find_zeros(const PathSample& path, double refine_tol) {
  const auto& v = path.values;
  const std::size_t n = v.size();
  if (n < 2) throw ConfigError("find_zeros needs a path with at least 2 values");
  if (!(refine_tol > 0.0 && refine_tol < path.spacing))
    throw ConfigError("find_zeros needs refine_tol in (0, spacing)");

  ZeroSet out;
  out.domain_lo = path.origin;
  out.domain_hi = path.end();
  out.refine_tol = refine_tol;
  const double h = path.spacing;
  // Keeping zeros refine_tol / 2 away from cell edges keeps zeros from
  // neighbouring cells at least refine_tol apart.
  const double inner = 0.5 * refine_tol;
  const double tol = 0.25 * refine_tol;

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(v[i])) throw NumericalError("find_zeros: path has non-finite values");
    if (v[i] == 0.0) {
      out.zeros.push_back(path.x(i));
      continue;
    }
    if (i + 1 == n || !opposite(v[i], v[i + 1])) continue;
    const double x0 = path.x(i);
    double z;
    if (i >= 1 && i + 2 < n) {
      z = refine_cubic(x0, h, v[i - 1], v[i], v[i + 1], v[i + 2], tol);
    } else {
      z = x0 + h * v[i] / (v[i] - v[i + 1]);
    }
    out.zeros.push_back(std::clamp(z, x0 + inner, x0 + h - inner));
  }
  return out;
}

ZeroSet find_zeros(const PathSample& path) {
  return find_zeros(path, kDefaultRefineFraction * path.spacing);
}

std::vector<GapRecord> gaps(const ZeroSet& zeroset) {
  std::vector<GapRecord> out;
  const auto& z = zeroset.zeros;
  if (z.size() < 2) return out;
  out.reserve(z.size() - 1);
  for (std::size_t i = 0; i + 1 < z.size(); ++i) out.push_back({z[i], z[i + 1] - z[i]});
  return out;
}

LargestGap largest_gap(const ZeroSet& zeroset, double R) {
  const auto& z = zeroset.zeros;
  if (zeroset.domain_lo > 0.0 || zeroset.domain_hi < R) {
    throw HorizonExhausted("simulated domain does not cover [0, R]; extend the simulation");
  }
  auto it = std::lower_bound(z.begin(), z.end(), 0.0);
  LargestGap best;
  bool any = false;
  for (; it != z.end() && *it <= R; ++it) {
    if (std::next(it) == z.end()) {
      throw HorizonExhausted("zero at " + format_double(*it) +
                             " has no recorded successor; extend the simulation horizon");
    }
    const double len = *std::next(it) - *it;
    if (!any || len > best.length) {
      best = {len, *it};
      any = true;
    }
  }
  return best;
}

double first_zero_after(const ZeroSet& zeroset, double t) {
  auto it = std::upper_bound(zeroset.zeros.begin(), zeroset.zeros.end(), t);
  return it == zeroset.zeros.end() ? std::numeric_limits<double>::infinity() : *it;
}

bool gap_event(const ZeroSet& zeroset, double a, double b) {
  auto it = std::lower_bound(zeroset.zeros.begin(), zeroset.zeros.end(), a);
  return it == zeroset.zeros.end() || *it > b;
}

void write_zeros_csv_header(std::ostream& out) { out << "path_id,z,gap_to_next\n"; }

void write_zeros_csv(std::ostream& out, std::uint64_t path_id, const ZeroSet& zeroset) {
  const auto& z = zeroset.zeros;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out << path_id << ',' << format_double(z[i]) << ',';
    if (i + 1 < z.size()) out << format_double(z[i + 1] - z[i]);
    out << '\n';
  }
}

}  // namespace gapsim
