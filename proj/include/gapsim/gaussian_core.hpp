#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gapsim/kernels.hpp"
#include "gapsim/path.hpp"
#include "gapsim/rng.hpp"
#include "gapsim/stats.hpp"

namespace gapsim {

inline constexpr double kDefaultNegTol = 1e-10;
inline constexpr std::size_t kMaxPaddedSize = std::size_t{1} << 26;

struct ClampReport {
  std::size_t count = 0;
  // Largest |eigenvalue| among the clamped negative ones.
  double magnitude = 0.0;
};

// Spectrum of the circulant extension of the Toeplitz covariance of a
// stationary process on n_grid equispaced points.
struct CirculantSpectrum {
  std::size_t n_grid = 0;
  double spacing = 0.0;
  std::size_t padded_size = 0;
  std::vector<double> eigenvalues;  // all >= 0, length padded_size
  ClampReport clamp_report;
};

using CovarianceFn = std::function<double(double)>;

// Smallest power-of-two embedding (>= 2 (n_grid - 1)) whose eigenvalues are
// all >= -neg_tol * max; negatives within tolerance are clamped to zero.
CirculantSpectrum build_spectrum(const CovarianceFn& covariance, std::size_t n_grid,
                                 double spacing, double neg_tol = kDefaultNegTol,
                                 std::size_t max_padded = kMaxPaddedSize);
CirculantSpectrum build_spectrum(const Kernel& kernel, std::size_t n_grid, double spacing,
                                 double neg_tol = kDefaultNegTol,
                                 std::size_t max_padded = kMaxPaddedSize);

// Exact sampler for the stationary Gaussian vector described by a spectrum.
// Thread-safe: sampling only reads shared state.
class CirculantSampler {
public:
  explicit CirculantSampler(CirculantSpectrum spectrum, double origin = 0.0);

  const CirculantSpectrum& spectrum() const noexcept { return spectrum_; }
  double origin() const noexcept { return origin_; }
  std::size_t n_grid() const noexcept { return spectrum_.n_grid; }

  // One FFT yields two independent paths.
  void sample_pair(RandomStream& rng, PathSample& first, PathSample& second) const;
  PathSample sample_path(RandomStream& rng) const;

private:
  struct Plan;

  CirculantSpectrum spectrum_;
  double origin_;
  std::vector<double> weights_;  // sqrt(eigenvalue / m)
  std::shared_ptr<Plan> plan_;
};

// Sampler for short grids backed by a clamped low-rank eigen-factorization of
// the dense covariance. Cheaper than an FFT when the grid is small and the
// kernel smooth (the numerical rank is then far below the grid size).
class DenseGridSampler {
public:
  DenseGridSampler(const Kernel& kernel, std::size_t n_grid, double spacing, double origin = 0.0);

  std::size_t n_grid() const noexcept { return static_cast<std::size_t>(factor_.rows()); }
  std::size_t rank() const noexcept { return static_cast<std::size_t>(factor_.cols()); }
  double spacing() const noexcept { return spacing_; }
  double origin() const noexcept { return origin_; }

  void sample_values(RandomStream& rng, std::span<double> values) const;
  PathSample sample_path(RandomStream& rng) const;

private:
  Eigen::MatrixXd factor_;
  double spacing_;
  double origin_;
};

// factor * factor^T ~= cov, dropping eigen-directions below 1e-15 * max and
// clamping negative eigenvalues within 1e-9 * max.
Eigen::MatrixXd low_rank_factor(const Eigen::MatrixXd& cov, ClampReport& report);

// Default grid step: a fixed fraction of the mean spacing between zeros.
double default_spacing(const Kernel& kernel, double grid_factor = 0.05);

// Law of (f'(0), f(x_1), ..., f(x_n)) conditional on f(0) = 0, with the
// convention Cov(f'(0), f(x)) = -K'(x).
class ConditionalZeroModel {
public:
  ConditionalZeroModel(const Kernel& kernel, std::vector<double> grid);

  const std::vector<double>& grid() const noexcept { return grid_; }
  std::size_t rank() const noexcept { return static_cast<std::size_t>(factor_.cols()); }
  const ClampReport& clamp_report() const noexcept { return clamp_; }

  // Covariance of (f'(0), f(grid)) given f(0) = 0; index 0 is the slope.
  const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }

  // E[f(x_i) | f(0) = s] = regression()[i] * s.
  const std::vector<double>& regression() const noexcept { return regression_; }

  // Draws the slope at 0 and the path values on the grid.
  void sample(RandomStream& rng, double& slope, std::span<double> values) const;

private:
  std::vector<double> grid_;
  std::vector<double> regression_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd factor_;  // (n + 1) x rank, covariance ~= factor factor^T
  ClampReport clamp_;
};

ConditionalZeroModel build_conditional_zero_model(const Kernel& kernel,
                                                  std::vector<double> grid);

// P[X > 0, Y > 0] for a standard bivariate normal with correlation rho.
double orthant2(double rho);

// Monte Carlo estimate of P[all coordinates > 0] for N(0, cov), dim <= 8.
EstimateWithCI mvn_positive_orthant_mc(const Eigen::MatrixXd& cov, std::size_t n_samples,
                                       RandomStream& rng);

// Covariance matrix K(|x_i - x_j|) on arbitrary points.
Eigen::MatrixXd covariance_matrix(const Kernel& kernel, std::span<const double> points);

}  // namespace gapsim
