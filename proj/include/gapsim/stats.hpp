#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gapsim {

// Two-sided 95% normal quantile used for every interval in the project.
inline constexpr double kZ95 = 1.959964;

enum class CiMethod { Wilson, BatchMeans, Delta };

struct EstimateWithCI {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t n = 0;
  CiMethod method = CiMethod::Wilson;

  double half_width() const { return 0.5 * (hi - lo); }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

const char* to_string(CiMethod method) noexcept;

EstimateWithCI wilson_interval(std::uint64_t successes, std::uint64_t n);

// Mean of per-batch means with a normal-theory interval from their spread.
EstimateWithCI batch_means(std::span<const double> batch_values, std::uint64_t n_total);

// Mergeable count / sum / sum of squares.
struct Moments {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const Moments& other) {
    count += other.count;
    sum += other.sum;
    sum_sq += other.sum_sq;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  // Unbiased sample variance.
  double variance() const;
  double standard_error() const;
};

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

// Asymptotic Kolmogorov survival function Q(t) = P[sqrt(n) D > t].
double kolmogorov_survival(double t);

// One-sample Kolmogorov-Smirnov test. `sorted_sample` must be nondecreasing
// (+inf entries allowed at the end), n >= 8.
KsResult ks_statistic(std::span<const double> sorted_sample,
                      const std::function<double(double)>& cdf);

// Weighted least-squares projection onto nonincreasing sequences (PAV).
std::vector<double> isotonic_nonincreasing(std::span<const double> values,
                                           std::span<const double> weights);
std::vector<double> isotonic_nondecreasing(std::span<const double> values,
                                           std::span<const double> weights);

// Mean of N (N-1) ... (N-k+1) over the counts.
double falling_factorial_mean(std::span<const std::uint64_t> counts, unsigned k);
double falling_factorial(std::uint64_t n, unsigned k);

double gumbel_cdf(double x);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

// Linear empirical quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> sample, double q);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace gapsim
