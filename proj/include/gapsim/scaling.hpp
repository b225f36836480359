#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gapsim/kernels.hpp"
#include "gapsim/stats.hpp"

namespace gapsim {

struct CurveOptions {
  double grid_factor = 0.05;
  // Resolution of the r grid; 0 means "same as the path grid".
  double r_step = 0.0;
  unsigned workers = 1;
  // Monte Carlo draws per task (one RNG stream per task).
  std::size_t chunk = 4096;
};

// Survival curve of the first zero after 0 for unconditioned paths.
struct GCurve {
  double r_step = 0.0;
  std::uint64_t n_paths = 0;
  std::vector<double> r;
  std::vector<EstimateWithCI> G;        // no zero in [0, r]
  std::vector<EstimateWithCI> P_pos;    // f > 0 on [0, r]
  std::vector<std::uint64_t> survivors; // paths with no zero in [0, r]
  std::vector<std::uint64_t> positive_survivors;

  // -(G(r + h) - G(r - h)) / (2h) with a Wilson interval on the count of
  // first zeros in (r - h, r + h]; r and h are snapped to the grid.
  EstimateWithCI derivative(double r, double h) const;
};

// Kac-Rice estimate lambda(r) = (2 pi K(0))^{-1/2} E[|f'(0)| 1{no zero in (0, r]} | f(0) = 0].
struct LambdaCurve {
  double r_step = 0.0;
  std::uint64_t n_draws = 0;
  std::vector<double> r;
  std::vector<EstimateWithCI> lambda;     // batch means over 32 batches
  std::vector<double> variance;           // plug-in variance of each estimate
  std::vector<std::uint64_t> survivors;   // draws with no zero in (0, r]
};

inline constexpr std::size_t kLambdaBatches = 32;

GCurve estimate_G_curve(const Kernel& kernel, double r_max, std::size_t n_paths,
                        std::uint64_t seed, const CurveOptions& options = {});

LambdaCurve estimate_lambda_curve(const Kernel& kernel, double r_max, std::size_t n_draws,
                                  std::uint64_t seed, const CurveOptions& options = {});

struct ScalingTable {
  std::vector<double> r;
  std::vector<EstimateWithCI> G_hat;       // optional diagnostic, same grid
  std::vector<EstimateWithCI> lambda_hat;  // raw estimates
  std::vector<double> lambda_iso;          // after isotonic correction
  std::vector<double> theta_hat;           // -log lambda_iso, nondecreasing
  std::vector<std::uint64_t> n_samples;
  // Points where the isotonic correction moved lambda by more than 2 CI widths.
  std::size_t isotonic_flags = 0;

  double r_min() const { return r.front(); }
  double r_max() const { return r.back(); }
  double theta_min() const { return theta_hat.front(); }
  double theta_max() const { return theta_hat.back(); }

  // Table defined directly by theta values (made nondecreasing).
  static ScalingTable from_theta(std::vector<double> r, std::vector<double> theta);
};

// Keeps the r values with at least `min_survivors` conditional draws still
// free of zeros, then applies the isotonic correction and takes logs.
ScalingTable build_scaling_table(const LambdaCurve& lambda, const GCurve* g = nullptr,
                                 std::uint64_t min_survivors = 10);

double theta(const ScalingTable& table, double r);
// Left-continuous inverse of the interpolated theta.
double theta_inverse(const ScalingTable& table, double s);
// theta^{-1}(s + log R)
double t_R(const ScalingTable& table, double s, double R);

struct ZetaFit {
  double zeta_hat = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
  double r_lo = 0.0;
  double r_hi = 0.0;
  // Slope of the residuals against the regressor over the upper half of the
  // fitted window; near zero when the asymptotic form fits.
  double residual_trend = 0.0;
};

// theta ~ zeta r (super-polynomial or alpha > 1) or theta ~ zeta r^alpha log r
// (alpha < 1), fitted over the top half of the table's r range.
ZetaFit fit_theta_asymptotics(const ScalingTable& table, DecayClass decay, double alpha = 0.0);
ZetaFit fit_theta_asymptotics(const ScalingTable& table, const Kernel& kernel);

// Columns: r,G_hat,G_lo,G_hi,lambda_hat,lambda_lo,lambda_hi,theta_hat.
void write_scaling_csv(std::ostream& out, const ScalingTable& table);
ScalingTable read_scaling_csv(std::istream& in);

}  // namespace gapsim
