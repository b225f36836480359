#include "gapsim/gaussian_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "gapsim/error.hpp"

namespace gapsim {

namespace {

// FFTW planning is not thread-safe; execution of an existing plan is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

FftwBuffer<fftw_complex> alloc_complex(std::size_t n) {
  return FftwBuffer<fftw_complex>(fftw_alloc_complex(n));
}

FftwBuffer<double> alloc_real(std::size_t n) { return FftwBuffer<double>(fftw_alloc_real(n)); }

// Eigenvalues of the symmetric circulant with first row c_0..c_{m/2}..c_1.
std::vector<double> circulant_eigenvalues(const CovarianceFn& covariance, std::size_t m,
                                          double spacing) {
  const std::size_t half = m / 2;
  auto in = alloc_real(half + 1);
  auto out = alloc_real(half + 1);
  for (std::size_t j = 0; j <= half; ++j) in[j] = covariance(static_cast<double>(j) * spacing);
  if (half == 1) {
    out[0] = in[0] + in[1];
    out[1] = in[0] - in[1];
  } else {
    fftw_plan plan;
    {
      std::lock_guard lock(fftw_planner_mutex());
      plan = fftw_plan_r2r_1d(static_cast<int>(half + 1), in.get(), out.get(), FFTW_REDFT00,
                              FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  std::vector<double> eig(m);
  for (std::size_t k = 0; k <= half; ++k) eig[k] = out[k];
  for (std::size_t k = half + 1; k < m; ++k) eig[k] = eig[m - k];
  return eig;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 2;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

CirculantSpectrum build_spectrum(const CovarianceFn& covariance, std::size_t n_grid,
                                 double spacing, double neg_tol, std::size_t max_padded) {
  if (n_grid < 2) throw ConfigError("circulant embedding needs n_grid >= 2");
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw ConfigError("circulant embedding needs a positive grid spacing");
  if (!(neg_tol >= 0.0)) throw ConfigError("negative-eigenvalue tolerance must be >= 0");

  double most_negative = 0.0;
  for (std::size_t m = next_pow2(2 * (n_grid - 1)); m <= max_padded; m <<= 1) {
    std::vector<double> eig = circulant_eigenvalues(covariance, m, spacing);
    const auto [min_it, max_it] = std::minmax_element(eig.begin(), eig.end());
    most_negative = *min_it;
    if (*min_it >= -neg_tol * *max_it) {
      CirculantSpectrum out;
      out.n_grid = n_grid;
      out.spacing = spacing;
      out.padded_size = m;
      for (double& e : eig) {
        if (e < 0.0) {
          ++out.clamp_report.count;
          out.clamp_report.magnitude = std::max(out.clamp_report.magnitude, -e);
          e = 0.0;
        }
      }
      out.eigenvalues = std::move(eig);
      return out;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "circulant embedding failed up to padded size %zu: most negative eigenvalue %.6g",
                max_padded, most_negative);
  throw EmbeddingError(buf, most_negative);
}

CirculantSpectrum build_spectrum(const Kernel& kernel, std::size_t n_grid, double spacing,
                                 double neg_tol, std::size_t max_padded) {
  return build_spectrum([&kernel](double x) { return kernel.eval(x); }, n_grid, spacing,
                        neg_tol, max_padded);
}

struct CirculantSampler::Plan {
  fftw_plan plan = nullptr;

  ~Plan() {
    if (plan) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

CirculantSampler::CirculantSampler(CirculantSpectrum spectrum, double origin)
    : spectrum_(std::move(spectrum)), origin_(origin), plan_(std::make_shared<Plan>()) {
  const std::size_t m = spectrum_.padded_size;
  if (m < 2 || spectrum_.eigenvalues.size() != m)
    throw ConfigError("circulant sampler: malformed spectrum");
  weights_.resize(m);
  for (std::size_t k = 0; k < m; ++k)
    weights_[k] = std::sqrt(std::max(0.0, spectrum_.eigenvalues[k]) / static_cast<double>(m));

  auto buf = alloc_complex(m);
  std::lock_guard lock(fftw_planner_mutex());
  plan_->plan = fftw_plan_dft_1d(static_cast<int>(m), buf.get(), buf.get(), FFTW_FORWARD,
                                 FFTW_ESTIMATE);
}

void CirculantSampler::sample_pair(RandomStream& rng, PathSample& first,
                                   PathSample& second) const {
  const std::size_t m = spectrum_.padded_size;
  const std::size_t n = spectrum_.n_grid;
  auto buf = alloc_complex(m);
  for (std::size_t k = 0; k < m; ++k) {
    buf[k][0] = weights_[k] * rng.normal();
    buf[k][1] = weights_[k] * rng.normal();
  }
  fftw_execute_dft(plan_->plan, buf.get(), buf.get());

  for (PathSample* p : {&first, &second}) {
    p->origin = origin_;
    p->spacing = spectrum_.spacing;
    p->values.resize(n);
    p->seed_info = {rng.seed(), rng.stream_id()};
  }
  for (std::size_t j = 0; j < n; ++j) {
    first.values[j] = buf[j][0];
    second.values[j] = buf[j][1];
  }
}

PathSample CirculantSampler::sample_path(RandomStream& rng) const {
  PathSample a, b;
  sample_pair(rng, a, b);
  return a;
}

double default_spacing(const Kernel& kernel, double grid_factor) {
  if (!(grid_factor > 0.0)) throw ConfigError("grid_factor must be positive");
  return grid_factor / rice_intensity(kernel);
}

Eigen::MatrixXd low_rank_factor(const Eigen::MatrixXd& cov, ClampReport& report) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericalError("covariance eigen-decomposition failed");
  const Eigen::VectorXd& eig = solver.eigenvalues();
  const double max_eig = eig.maxCoeff();
  if (!(max_eig > 0.0)) throw NumericalError("covariance matrix has no positive eigenvalue");
  if (eig.minCoeff() < -1e-9 * max_eig) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "covariance is not positive semidefinite (eigenvalue %.6g)",
                  eig.minCoeff());
    throw NumericalError(buf);
  }
  std::vector<Eigen::Index> kept;
  for (Eigen::Index k = 0; k < eig.size(); ++k) {
    if (eig(k) < 0.0) {
      ++report.count;
      report.magnitude = std::max(report.magnitude, -eig(k));
    }
    if (eig(k) > 1e-15 * max_eig) kept.push_back(k);
  }
  Eigen::MatrixXd factor(cov.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    factor.col(static_cast<Eigen::Index>(c)) =
        solver.eigenvectors().col(kept[c]) * std::sqrt(eig(kept[c]));
  }
  return factor;
}

DenseGridSampler::DenseGridSampler(const Kernel& kernel, std::size_t n_grid, double spacing,
                                   double origin)
    : spacing_(spacing), origin_(origin) {
  if (n_grid < 2) throw ConfigError("dense grid sampler needs n_grid >= 2");
  if (!(spacing > 0.0)) throw ConfigError("dense grid sampler needs a positive spacing");
  std::vector<double> pts(n_grid);
  for (std::size_t i = 0; i < n_grid; ++i) pts[i] = static_cast<double>(i) * spacing;
  ClampReport report;
  factor_ = low_rank_factor(covariance_matrix(kernel, pts), report);
}

void DenseGridSampler::sample_values(RandomStream& rng, std::span<double> values) const {
  const Eigen::Index r = factor_.cols();
  Eigen::VectorXd z(r);
  for (Eigen::Index k = 0; k < r; ++k) z(k) = rng.normal();
  Eigen::Map<Eigen::VectorXd> out(values.data(), static_cast<Eigen::Index>(values.size()));
  out.noalias() = factor_ * z;
}

PathSample DenseGridSampler::sample_path(RandomStream& rng) const {
  PathSample p;
  p.origin = origin_;
  p.spacing = spacing_;
  p.values.resize(n_grid());
  p.seed_info = {rng.seed(), rng.stream_id()};
  sample_values(rng, p.values);
  return p;
}

ConditionalZeroModel::ConditionalZeroModel(const Kernel& kernel, std::vector<double> grid)
    : grid_(std::move(grid)) {
  const std::size_t n = grid_.size();
  if (n == 0) throw ConfigError("conditional zero model needs at least one grid point");

  // Pairwise separation, including the conditioning point 0.
  const double scale = std::sqrt(kernel.variance() / kernel.lambda2());
  const double min_sep = 1e-6 * scale;
  std::vector<std::pair<double, std::size_t>> pts;
  pts.reserve(n + 1);
  pts.emplace_back(0.0, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grid_[i]) || grid_[i] <= 0.0)
      throw ConfigError("conditional zero model: grid points must be finite and > 0");
    pts.emplace_back(grid_[i], i);
  }
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].first - pts[i - 1].first < min_sep) {
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "conditional covariance is near-singular: points %.17g and %.17g are closer "
                    "than %.3g",
                    pts[i - 1].first, pts[i].first, min_sep);
      throw NumericalError(buf);
    }
  }

  const double k0 = kernel.variance();
  regression_.resize(n);
  for (std::size_t i = 0; i < n; ++i) regression_[i] = kernel.eval(grid_[i]) / k0;

  covariance_.resize(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
  covariance_(0, 0) = kernel.lambda2();
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i + 1);
    const double c = -kernel.eval_d1(grid_[i]);
    covariance_(0, ii) = c;
    covariance_(ii, 0) = c;
    for (std::size_t j = 0; j <= i; ++j) {
      const auto jj = static_cast<Eigen::Index>(j + 1);
      const double v = kernel.eval(grid_[i] - grid_[j]) -
                       kernel.eval(grid_[i]) * kernel.eval(grid_[j]) / k0;
      covariance_(ii, jj) = v;
      covariance_(jj, ii) = v;
    }
  }

  factor_ = low_rank_factor(covariance_, clamp_);
}

void ConditionalZeroModel::sample(RandomStream& rng, double& slope,
                                  std::span<double> values) const {
  const Eigen::Index r = factor_.cols();
  Eigen::VectorXd z(r);
  for (Eigen::Index k = 0; k < r; ++k) z(k) = rng.normal();
  const Eigen::VectorXd y = factor_ * z;
  slope = y(0);
  const std::size_t n = std::min(values.size(), grid_.size());
  for (std::size_t i = 0; i < n; ++i) values[i] = y(static_cast<Eigen::Index>(i + 1));
}

ConditionalZeroModel build_conditional_zero_model(const Kernel& kernel,
                                                  std::vector<double> grid) {
  return ConditionalZeroModel(kernel, std::move(grid));
}

double orthant2(double rho) {
  if (!(std::abs(rho) <= 1.0)) throw ConfigError("orthant2 needs |rho| <= 1");
  return 0.25 + std::asin(rho) / (2.0 * std::numbers::pi);
}

EstimateWithCI mvn_positive_orthant_mc(const Eigen::MatrixXd& cov, std::size_t n_samples,
                                       RandomStream& rng) {
  const Eigen::Index d = cov.rows();
  if (d < 1 || d > 8 || cov.cols() != d)
    throw ConfigError("orthant Monte Carlo supports square matrices of dimension 1..8");
  if (n_samples < 10000) throw ConfigError("orthant Monte Carlo needs n_samples >= 1e4");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance matrix is not SPD");
  const Eigen::MatrixXd l = llt.matrixL();

  std::uint64_t hits = 0;
  Eigen::VectorXd z(d);
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (Eigen::Index k = 0; k < d; ++k) z(k) = rng.normal();
    const Eigen::VectorXd x = l * z;
    if ((x.array() > 0.0).all()) ++hits;
  }
  return wilson_interval(hits, n_samples);
}

Eigen::MatrixXd covariance_matrix(const Kernel& kernel, std::span<const double> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      c(i, j) = kernel.eval(points[static_cast<std::size_t>(i)] -
                            points[static_cast<std::size_t>(j)]);
  return c;
}

}  // namespace gapsim
