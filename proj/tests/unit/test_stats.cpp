#include "doctest.h"

#include <cmath>
#include <limits>
#include <numeric>

#include "gapsim/error.hpp"
#include "gapsim/rng.hpp"
#include "gapsim/stats.hpp"

using namespace gapsim;
using doctest::Approx;

TEST_CASE("wilson interval") {
  const auto mid = wilson_interval(50, 100);
  CHECK(mid.value == 0.5);
  CHECK(mid.lo == Approx(0.404).epsilon(1e-3));
  CHECK(mid.hi == Approx(0.596).epsilon(1e-3));
  CHECK(wilson_interval(0, 40).lo == 0.0);
  CHECK(wilson_interval(40, 40).hi == 1.0);
  CHECK_THROWS(wilson_interval(0, 0));
  CHECK_THROWS(wilson_interval(5, 4));
  for (std::uint64_t s : {1u, 7u, 33u}) {
    const auto e = wilson_interval(s, 40);
    CHECK(e.lo <= e.value);
    CHECK(e.value <= e.hi);
    CHECK(e.method == CiMethod::Wilson);
  }
}

TEST_CASE("batch means") {
  const std::vector<double> b = {1.0, 2.0, 3.0, 4.0};
  const auto e = batch_means(b, 400);
  CHECK(e.value == 2.5);
  // sd of the batch means is sqrt(5/3); se = sd / 2
  CHECK(e.half_width() == Approx(kZ95 * std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(e.n == 400);
  CHECK(e.method == CiMethod::BatchMeans);
}

TEST_CASE("moments merge") {
  Moments a, b, all;
  for (int i = 0; i < 10; ++i) {
    (i % 2 ? a : b).add(i * 0.5);
    all.add(i * 0.5);
  }
  a.merge(b);
  CHECK(a.count == all.count);
  CHECK(a.mean() == Approx(all.mean()));
  CHECK(a.variance() == Approx(all.variance()));
  CHECK(all.variance() == Approx(55.0 / 6.0 * 0.25));
}

TEST_CASE("ks statistic on quantile samples is 0.5/n") {
  for (std::size_t n : {8u, 10u, 100u, 1000u}) {
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = (i + 0.5) / static_cast<double>(n);
    const auto r = ks_statistic(xs, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(r.statistic == Approx(0.5 / static_cast<double>(n)).epsilon(1e-12));
    CHECK(r.n == n);
  }
  std::vector<double> g(200);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = -std::log(-std::log((i + 0.5) / 200.0));
  CHECK(ks_statistic(g, gumbel_cdf).statistic == Approx(0.5 / 200.0).epsilon(1e-9));
}

TEST_CASE("ks edge cases") {
  std::vector<double> u(100);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = (i + 0.5) / 100.0;
  const auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  CHECK(ks_statistic(u, uniform).p_value > 0.999);

  std::vector<double> constant(50, 0.3);
  const auto c = ks_statistic(constant, [](double x) { return gumbel_cdf(x * 100.0); });
  CHECK(c.statistic >= 1.0 - 1.0 / 50.0 - 1e-3);
  CHECK(c.p_value < 1e-10);

  std::vector<double> unsorted = {0.1, 0.2, 0.15, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  CHECK_THROWS(ks_statistic(unsorted, uniform));
  CHECK_THROWS(ks_statistic(std::vector<double>{0.1, 0.2}, uniform));

  std::vector<double> with_inf = u;
  with_inf.back() = std::numeric_limits<double>::infinity();
  // the +inf point leaves a gap of 1/n at the top of the support
  CHECK(ks_statistic(with_inf, uniform).statistic == Approx(1.0 / 100.0).epsilon(1e-9));
}

TEST_CASE("kolmogorov survival is a decreasing p-value") {
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(1.3580986) == Approx(0.05).epsilon(1e-5));
  CHECK(kolmogorov_survival(1.6276236) == Approx(0.01).epsilon(1e-5));
  double prev = 1.0;
  for (double t = 0.05; t < 4.0; t += 0.05) {
    const double q = kolmogorov_survival(t);
    CHECK(q <= prev);
    prev = q;
  }
  // Continuity at the switch between the two series.
  CHECK(kolmogorov_survival(1.18 - 1e-9) == Approx(kolmogorov_survival(1.18 + 1e-9)).epsilon(1e-8));
}

namespace {

// Exhaustive weighted least-squares isotonic fit: the optimum is constant on
// consecutive blocks at the block weighted means, so try every partition.
std::vector<double> brute_force_nonincreasing(const std::vector<double>& v,
                                              const std::vector<double>& w) {
  const std::size_t n = v.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_fit;
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::vector<double> fit(n);
    std::size_t start = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == n - 1 || (mask >> i & 1u)) {
        double sw = 0.0, swv = 0.0;
        for (std::size_t j = start; j <= i; ++j) {
          sw += w[j];
          swv += w[j] * v[j];
        }
        for (std::size_t j = start; j <= i; ++j) fit[j] = swv / sw;
        start = i + 1;
      }
    }
    bool monotone = true;
    for (std::size_t i = 1; i < n; ++i) monotone = monotone && fit[i] <= fit[i - 1] + 1e-15;
    if (!monotone) continue;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) sse += w[i] * (v[i] - fit[i]) * (v[i] - fit[i]);
    if (sse < best - 1e-15) {
      best = sse;
      best_fit = fit;
    }
  }
  return best_fit;
}

}  // namespace

TEST_CASE("isotonic regression examples") {
  const std::vector<double> ones2 = {1, 1}, ones3 = {1, 1, 1};
  CHECK(isotonic_nonincreasing(std::vector<double>{3, 2, 2, 1}, std::vector<double>{1, 1, 1, 1}) ==
        std::vector<double>{3, 2, 2, 1});
  CHECK(isotonic_nonincreasing(std::vector<double>{1, 2}, ones2) == std::vector<double>{1.5, 1.5});
  CHECK(isotonic_nonincreasing(std::vector<double>{3, 1, 2}, ones3) ==
        std::vector<double>{3, 1.5, 1.5});
  CHECK(isotonic_nondecreasing(std::vector<double>{2, 1}, ones2) == std::vector<double>{1.5, 1.5});
}

TEST_CASE("isotonic regression matches brute force on short inputs") {
  RandomStream rng(11, 0);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 1 + trial % 5;
    std::vector<double> v(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      // rational inputs: small integers over small denominators
      v[i] = static_cast<double>(rng.next_u32() % 9) / static_cast<double>(1 + rng.next_u32() % 4);
      w[i] = static_cast<double>(1 + rng.next_u32() % 5);
    }
    const auto fast = isotonic_nonincreasing(v, w);
    const auto slow = brute_force_nonincreasing(v, w);
    REQUIRE(fast.size() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(fast[i] == Approx(slow[i]).epsilon(1e-12));
  }
}

TEST_CASE("falling factorials") {
  CHECK(falling_factorial(5, 0) == 1.0);
  CHECK(falling_factorial(5, 2) == 20.0);
  CHECK(falling_factorial(2, 3) == 0.0);
  CHECK(falling_factorial_mean(std::vector<std::uint64_t>{0, 0, 0}, 3) == 0.0);
  CHECK(falling_factorial_mean(std::vector<std::uint64_t>{1, 1, 1}, 2) == 0.0);
  CHECK(falling_factorial_mean(std::vector<std::uint64_t>{2, 3}, 2) == 4.0);
  // (n)_k = n (n-1)_{k-1} and the Poisson identity sum_n p(n) (n)_k = mu^k.
  for (unsigned k = 1; k <= 4; ++k) {
    CHECK(falling_factorial(0, k) == 0.0);
    for (std::uint64_t n = 1; n < 12; ++n)
      CHECK(falling_factorial(n, k) == static_cast<double>(n) * falling_factorial(n - 1, k - 1));
  }
  const double mu = 0.7;
  for (unsigned k = 1; k <= 3; ++k) {
    double sum = 0.0, p = std::exp(-mu);
    for (std::uint64_t n = 0; n < 60; ++n) {
      sum += p * falling_factorial(n, k);
      p *= mu / static_cast<double>(n + 1);
    }
    CHECK(sum == Approx(std::pow(mu, k)).epsilon(1e-12));
  }
}

TEST_CASE("gumbel, correlation, quantiles and least squares") {
  CHECK(gumbel_cdf(0.0) == Approx(std::exp(-1.0)));
  CHECK(gumbel_cdf(-std::numeric_limits<double>::infinity()) == 0.0);
  CHECK(gumbel_cdf(std::numeric_limits<double>::infinity()) == 1.0);

  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> y = {2.5, 4.5, 6.5, 8.5, 10.5};
  const std::vector<double> z = {5, 4, 3, 2, 1};
  CHECK(pearson_correlation(x, y) == Approx(1.0));
  CHECK(pearson_correlation(x, z) == Approx(-1.0));

  CHECK(quantile({3, 1, 2, 4}, 0.5) == 2.5);
  CHECK(quantile({3, 1, 2, 4}, 0.0) == 1.0);
  CHECK(quantile({3, 1, 2, 4}, 1.0) == 4.0);
  CHECK(quantile({1, 2, 3, 4, 5}, 0.25) == 2.0);

  const auto fit = least_squares(x, y);
  CHECK(fit.slope == Approx(2.0));
  CHECK(fit.intercept == Approx(0.5));
  CHECK(fit.r_squared == Approx(1.0));
  CHECK(fit.n == 5);
}
