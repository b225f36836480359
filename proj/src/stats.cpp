#include "gapsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gapsim/error.hpp"

namespace gapsim {

const char* to_string(CiMethod method) noexcept {
  switch (method) {
    case CiMethod::Wilson: return "wilson";
    case CiMethod::BatchMeans: return "batch_means";
    case CiMethod::Delta: return "delta";
  }
  return "unknown";
}

EstimateWithCI wilson_interval(std::uint64_t successes, std::uint64_t n) {
  if (n == 0) throw InsufficientData("Wilson interval needs n >= 1");
  if (successes > n) throw NumericalError("Wilson interval: successes exceed trials");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = kZ95 / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  EstimateWithCI out;
  out.value = p;
  out.lo = successes == 0 ? 0.0 : std::clamp(center - half, 0.0, p);
  out.hi = successes == n ? 1.0 : std::clamp(center + half, p, 1.0);
  out.n = n;
  out.method = CiMethod::Wilson;
  return out;
}

EstimateWithCI batch_means(std::span<const double> batch_values, std::uint64_t n_total) {
  if (batch_values.size() < 2) throw InsufficientData("batch means need at least 2 batches");
  Moments m;
  for (double v : batch_values) m.add(v);
  const double se = std::sqrt(m.variance() / static_cast<double>(m.count));
  EstimateWithCI out;
  out.value = m.mean();
  out.lo = out.value - kZ95 * se;
  out.hi = out.value + kZ95 * se;
  out.n = n_total;
  out.method = CiMethod::BatchMeans;
  return out;
}

double Moments::variance() const {
  if (count < 2) return 0.0;
  const double n = static_cast<double>(count);
  const double mu = sum / n;
  return std::max(0.0, (sum_sq - n * mu * mu) / (n - 1.0));
}

double Moments::standard_error() const {
  return count ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
}

double kolmogorov_survival(double t) {
  if (!(t > 0.0)) return 1.0;
  constexpr int kTerms = 100;
  double q;
  if (t < 1.18) {
    // Jacobi theta form converges fast for small t.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double sum = 0.0;
    for (int k = 1; k <= kTerms; ++k) {
      const double j = 2.0 * k - 1.0;
      sum += std::exp(-j * j * pi2 / (8.0 * t * t));
    }
    q = 1.0 - std::sqrt(2.0 * std::numbers::pi) / t * sum;
  } else {
    double sum = 0.0;
    for (int k = 1; k <= kTerms; ++k) {
      const double term = std::exp(-2.0 * k * k * t * t);
      sum += (k % 2 == 1) ? term : -term;
    }
    q = 2.0 * sum;
  }
  return std::clamp(q, 0.0, 1.0);
}

KsResult ks_statistic(std::span<const double> sorted_sample,
                      const std::function<double(double)>& cdf) {
  const std::size_t n = sorted_sample.size();
  if (n < 8) throw InsufficientData("KS test needs at least 8 observations");
  for (std::size_t i = 1; i < n; ++i) {
    if (sorted_sample[i] < sorted_sample[i - 1] || std::isnan(sorted_sample[i]))
      throw NumericalError("KS test: sample is not sorted");
  }
  const double nn = static_cast<double>(n);
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sorted_sample[i];
    const double f = x == INFINITY ? 1.0 : (x == -INFINITY ? 0.0 : cdf(x));
    d = std::max({d, static_cast<double>(i + 1) / nn - f, f - static_cast<double>(i) / nn});
  }
  return {d, kolmogorov_survival(std::sqrt(nn) * d), n};
}

std::vector<double> isotonic_nonincreasing(std::span<const double> values,
                                           std::span<const double> weights) {
  if (values.size() != weights.size())
    throw NumericalError("isotonic regression: values and weights differ in length");
  struct Block {
    double mean;
    double weight;
    std::size_t length;
  };
  std::vector<Block> blocks;
  blocks.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(weights[i] > 0.0)) throw NumericalError("isotonic regression: weights must be positive");
    blocks.push_back({values[i], weights[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean < blocks.back().mean) {
      const Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      const double w = prev.weight + top.weight;
      prev.mean = (prev.mean * prev.weight + top.mean * top.weight) / w;
      prev.weight = w;
      prev.length += top.length;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const Block& b : blocks) out.insert(out.end(), b.length, b.mean);
  return out;
}

std::vector<double> isotonic_nondecreasing(std::span<const double> values,
                                           std::span<const double> weights) {
  std::vector<double> negated(values.begin(), values.end());
  for (double& v : negated) v = -v;
  auto out = isotonic_nonincreasing(negated, weights);
  for (double& v : out) v = -v;
  return out;
}

double falling_factorial(std::uint64_t n, unsigned k) {
  double out = 1.0;
  for (unsigned j = 0; j < k; ++j) {
    if (n < j + 1) return 0.0;
    out *= static_cast<double>(n - j);
  }
  return out;
}

double falling_factorial_mean(std::span<const std::uint64_t> counts, unsigned k) {
  if (counts.empty()) return 0.0;
  double sum = 0.0;
  for (auto c : counts) sum += falling_factorial(c, k);
  return sum / static_cast<double>(counts.size());
}

double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InsufficientData("correlation needs two equal-length samples of size >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double quantile(std::vector<double> sample, double q) {
  if (sample.empty()) throw InsufficientData("quantile of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double pos = q * static_cast<double>(sample.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sample.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sample[lo] + frac * (sample[hi] - sample[lo]);
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InsufficientData("least squares needs at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw NumericalError("least squares: abscissae are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  fit.n = x.size();
  return fit;
}

}  // namespace gapsim
