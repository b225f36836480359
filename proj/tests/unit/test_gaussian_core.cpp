#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gapsim/error.hpp"
#include "support.hpp"
#include "gapsim/gaussian_core.hpp"
#include "gapsim/kernels.hpp"
#include "gapsim/rng.hpp"

using namespace gapsim;
using doctest::Approx;

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// P[X > 0, Y > 0] by integrating the density of X against P[Y > 0 | X].
double orthant2_quadrature(double rho) {
  const double c = rho / std::sqrt(1.0 - rho * rho);
  auto f = [c](double x) { return std_normal_pdf(x) * std_normal_cdf(c * x); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-15);
}

// Equicorrelated normals X_i = sqrt(rho) Z + sqrt(1 - rho) E_i.
double orthant_equicorrelated(int dim, double rho) {
  const double c = std::sqrt(rho / (1.0 - rho));
  auto f = [c, dim](double z) { return std_normal_pdf(z) * std::pow(std_normal_cdf(c * z), dim); };
  const double inf = std::numeric_limits<double>::infinity();
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -inf, inf, 15, 1e-15);
}

}  // namespace

TEST_CASE("orthant2 against quadrature") {
  for (double rho : {-0.9, -0.5, 0.0, 0.3, 0.5, 0.9}) {
    CAPTURE(rho);
    CHECK(std::abs(orthant2(rho) - orthant2_quadrature(rho)) < 1e-10);
  }
  CHECK(orthant2(0.0) == 0.25);
  CHECK(orthant2(1.0) == Approx(0.5));
  CHECK(orthant2(-1.0) == Approx(0.0));
  CHECK(orthant2(0.5) == Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(orthant2(1.0001), ConfigError);
}

TEST_CASE("orthant Monte Carlo") {
  RandomStream rng(3, 0);
  const auto id = mvn_positive_orthant_mc(Eigen::MatrixXd::Identity(2, 2), 200000, rng);
  CHECK(test_support::within_se(id, 0.25));
  Eigen::MatrixXd c2(2, 2);
  c2 << 1.0, 0.5, 0.5, 1.0;
  CHECK(test_support::within_se(mvn_positive_orthant_mc(c2, 200000, rng), 1.0 / 3.0));

  const double oracle3 = orthant_equicorrelated(3, 0.5);
  CHECK(oracle3 == Approx(0.25).epsilon(1e-12));
  Eigen::MatrixXd c3 = Eigen::MatrixXd::Constant(3, 3, 0.5);
  c3.diagonal().setOnes();
  CHECK(test_support::within_se(mvn_positive_orthant_mc(c3, 200000, rng), oracle3));

  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(mvn_positive_orthant_mc(bad, 10000, rng), NumericalError);
  CHECK_THROWS_AS(mvn_positive_orthant_mc(c2, 100, rng), ConfigError);
}

TEST_CASE("circulant spectrum examples") {
  const auto g = build_spectrum(Kernel::gaussian(), 1024, 0.05);
  CHECK(g.padded_size == 2048);
  for (double ev : g.eigenvalues) CHECK(ev >= 0.0);

  const std::size_t n = 64;
  const auto flat = build_spectrum([](double) { return 2.0; }, n, 1.0);
  std::size_t nonzero = 0;
  double big = 0.0;
  for (double ev : flat.eigenvalues) {
    if (std::abs(ev) > 1e-9) ++nonzero;
    big = std::max(big, ev);
  }
  CHECK(nonzero == 1);
  CHECK(big == Approx(2.0 * static_cast<double>(flat.padded_size)));

  const auto c = build_spectrum(Kernel::cauchy(0.5), 4096, 0.1);
  CHECK(c.padded_size >= 2 * 4096);
  for (double ev : c.eigenvalues) CHECK(ev >= 0.0);
}

TEST_CASE("embedding failure names the most negative eigenvalue") {
  // Tridiagonal Toeplitz (1, 0.9): indefinite at every size.
  auto cov = [](double x) { return x == 0.0 ? 1.0 : (std::abs(x - 1.0) < 1e-12 ? 0.9 : 0.0); };
  try {
    build_spectrum(cov, 50, 1.0, kDefaultNegTol, 1u << 12);
    FAIL("expected an embedding failure");
  } catch (const EmbeddingError& e) {
    CHECK(e.most_negative_eigenvalue() < 0.0);
  }
}

TEST_CASE("circulant paths have the target law") {
  const Kernel k = Kernel::gaussian();
  const double h = 0.5;
  const CirculantSampler sampler(build_spectrum(k, 8, h));
  const int n = 100000;
  double s00 = 0.0, s01 = 0.0, s11 = 0.0;
  std::uint64_t both = 0;
  for (int i = 0; i < n / 2; ++i) {
    RandomStream rng(17, static_cast<std::uint64_t>(i));
    PathSample a, b;
    sampler.sample_pair(rng, a, b);
    for (const auto* p : {&a, &b}) {
      const double x = p->values[0], y = p->values[1];
      s00 += x * x;
      s01 += x * y;
      s11 += y * y;
      both += (x > 0 && y > 0);
    }
  }
  const double var0 = s00 / n;
  CHECK(std::abs(var0 - 1.0) < 3.0 * std::sqrt(2.0 / n));
  const double rho = s01 / std::sqrt(s00 * s11);
  const double target = std::exp(-0.125);
  CHECK(target == Approx(0.882497).epsilon(1e-6));
  // delta-method standard error of the sample correlation
  CHECK(std::abs(rho - target) < 3.0 * (1.0 - target * target) / std::sqrt(n));
  const double p = orthant2(k.eval(h));
  CHECK(std::abs(static_cast<double>(both) / n - p) < 3.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST_CASE("circulant covariance matches a direct Cholesky sampler") {
  const Kernel k = Kernel::cauchy(0.5);
  const std::size_t m = 16;
  const double h = 0.3;
  const CirculantSampler sampler(build_spectrum(k, m, h));
  std::vector<double> pts(m);
  for (std::size_t i = 0; i < m; ++i) pts[i] = h * static_cast<double>(i);
  const Eigen::MatrixXd cov = covariance_matrix(k, pts);
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();

  const int n = 100000;
  Eigen::MatrixXd emp_c = Eigen::MatrixXd::Zero(m, m), emp_d = emp_c;
  RandomStream direct(23, 1);
  Eigen::VectorXd z(m);
  for (int i = 0; i < n; ++i) {
    RandomStream rng(23, 1000 + static_cast<std::uint64_t>(i));
    const PathSample p = sampler.sample_path(rng);
    Eigen::Map<const Eigen::VectorXd> x(p.values.data(), static_cast<Eigen::Index>(m));
    emp_c.noalias() += x * x.transpose();
    for (std::size_t j = 0; j < m; ++j) z[static_cast<Eigen::Index>(j)] = direct.normal();
    const Eigen::VectorXd y = L * z;
    emp_d.noalias() += y * y.transpose();
  }
  emp_c /= n;
  emp_d /= n;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double se = std::sqrt(2.0 * (cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n);
      CHECK(std::abs(emp_c(i, j) - emp_d(i, j)) < 4.0 * se);
    }
}

TEST_CASE("sampling is a function of seed and stream only") {
  const auto spec = build_spectrum(Kernel::gaussian(), 100, 0.1);
  const CirculantSampler s1(spec), s2(spec, 0.0);
  RandomStream a(99, 4), b(99, 4);
  CHECK(s1.sample_path(a).values == s2.sample_path(b).values);

  const DenseGridSampler d(Kernel::gaussian(), 40, 0.1, -2.0);
  RandomStream c(99, 4), e(99, 4);
  const PathSample pc = d.sample_path(c);
  CHECK(pc.values == d.sample_path(e).values);
  CHECK(pc.origin == -2.0);
  CHECK(pc.x(10) == Approx(-1.0));
  CHECK(d.rank() < d.n_grid());
}

TEST_CASE("conditional zero model moments") {
  const Kernel k = Kernel::gaussian();
  const auto model = build_conditional_zero_model(k, {1.0});
  CHECK(model.covariance()(0, 0) == Approx(1.0));
  CHECK(model.covariance()(1, 1) == Approx(1.0 - std::exp(-1.0)));
  CHECK(model.covariance()(1, 1) == Approx(0.632121).epsilon(1e-6));
  CHECK(model.covariance()(0, 1) == Approx(-k.eval_d1(1.0)));
  CHECK(model.regression()[0] == Approx(std::exp(-0.5)));

  RandomStream rng(8, 0);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0, slope_sq = 0.0;
  double v[1];
  for (int i = 0; i < n; ++i) {
    double slope = 0.0;
    model.sample(rng, slope, v);
    sum += v[0];
    sum_sq += v[0] * v[0];
    slope_sq += slope * slope;
  }
  const double var = 1.0 - std::exp(-1.0);
  CHECK(std::abs(sum / n) < 3.0 * std::sqrt(var / n));
  CHECK(std::abs(sum_sq / n - var) < 4.0 * var * std::sqrt(2.0 / n));
  CHECK(std::abs(slope_sq / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("conditional slope covariance sign by finite differences") {
  // Cov(f'(0), f(x)) from centred differences of unconditioned paths.
  const Kernel k = Kernel::gaussian();
  const double h = 0.05;
  const DenseGridSampler sampler(k, 23, h, -h);  // -h, 0, h, ..., 1.05
  const auto model = build_conditional_zero_model(k, {h, 1.0});
  const int n = 200000;
  double acc_near = 0.0, acc_far = 0.0, acc_sq = 0.0;
  std::vector<double> v(23);
  for (int i = 0; i < n; ++i) {
    RandomStream rng(31, static_cast<std::uint64_t>(i));
    sampler.sample_values(rng, v);
    const double slope = (v[2] - v[0]) / (2.0 * h);
    acc_near += slope * v[2];
    acc_far += slope * v[21];
    acc_sq += slope * v[21] * slope * v[21];
  }
  const double fd_far = acc_far / n;
  const double se = std::sqrt(acc_sq / n - fd_far * fd_far) / std::sqrt(n);
  CHECK(model.covariance()(0, 2) > 0.0);
  CHECK(std::abs(fd_far - model.covariance()(0, 2)) < 4.0 * se + 2e-3);
  CHECK(acc_near / n > 0.0);
  CHECK(model.covariance()(0, 1) > 0.0);
}

TEST_CASE("conditional variance agrees with rejection near zero") {
  const Kernel k = Kernel::gaussian();
  const CirculantSampler sampler(build_spectrum(k, 5, 0.25));  // 0, 0.25, ..., 1
  const auto model = build_conditional_zero_model(k, {1.0});
  const double eps = 1e-2;
  std::uint64_t kept = 0;
  double sum_sq = 0.0;
  for (int i = 0; i < 300000; ++i) {
    RandomStream rng(41, static_cast<std::uint64_t>(i));
    PathSample a, b;
    sampler.sample_pair(rng, a, b);
    for (const auto* p : {&a, &b})
      if (std::abs(p->values[0]) < eps) {
        ++kept;
        sum_sq += p->values[4] * p->values[4];
      }
  }
  REQUIRE(kept > 3000);
  const double var = model.covariance()(1, 1);
  CHECK(std::abs(sum_sq / static_cast<double>(kept) - var) <
        4.0 * var * std::sqrt(2.0 / static_cast<double>(kept)));
}

TEST_CASE("conditional model rejects nearly coincident points") {
  const Kernel k = Kernel::gaussian();
  CHECK_THROWS_AS(build_conditional_zero_model(k, {0.5, 0.5 + 1e-9}), NumericalError);
  CHECK_THROWS_AS(build_conditional_zero_model(k, {1e-9}), NumericalError);
  CHECK_THROWS_AS(build_conditional_zero_model(k, {-1.0}), ConfigError);
  // A fine grid still works thanks to the low-rank factor.
  std::vector<double> grid;
  for (int i = 1; i <= 200; ++i) grid.push_back(0.05 * i);
  const auto fine = build_conditional_zero_model(k, grid);
  CHECK(fine.rank() < grid.size() + 1);
}

TEST_CASE("default spacing") {
  CHECK(default_spacing(Kernel::gaussian()) == Approx(0.05 * std::numbers::pi));
  CHECK(default_spacing(Kernel::gaussian(), 0.1) == Approx(0.1 * std::numbers::pi));
}
