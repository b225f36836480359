#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gapsim/kernels.hpp"
#include "gapsim/rng.hpp"
#include "gapsim/stats.hpp"

namespace gapsim {

struct ClosedInterval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

// k >= 2 disjoint closed intervals of length <= r, pairwise at distance >= s.
class IntervalConfig {
public:
  IntervalConfig(std::vector<ClosedInterval> intervals, double r, double s);

  // [0, r], [r + s, 2r + s], ... (k intervals).
  static IntervalConfig evenly_spaced(std::size_t k, double r, double s);

  const std::vector<ClosedInterval>& intervals() const noexcept { return intervals_; }
  std::size_t k() const noexcept { return intervals_.size(); }
  double r() const noexcept { return r_; }
  double s() const noexcept { return s_; }
  double hull_lo() const;
  double hull_hi() const;

private:
  std::vector<ClosedInterval> intervals_;
  double r_;
  double s_;
};

// Shared-path accumulator for P[all events] / prod P[event_i]. Marginal
// co-occurrence counts feed the delta-method interval.
class SplittingAccumulator {
public:
  explicit SplittingAccumulator(std::size_t k);

  void add(std::span<const std::uint8_t> events);
  void merge(const SplittingAccumulator& other);

  std::uint64_t n() const noexcept { return n_; }
  std::uint64_t joint() const noexcept { return joint_; }
  std::uint64_t marginal(std::size_t i) const { return pair_[i * k_ + i]; }

  // Ratio with a delta-method interval on the log scale. Throws
  // InsufficientData when a marginal or the joint count is zero.
  EstimateWithCI ratio() const;

private:
  std::size_t k_;
  std::uint64_t n_ = 0;
  std::uint64_t joint_ = 0;
  std::vector<std::uint64_t> pair_;  // k x k co-occurrence counts
};

// Draws one realization and writes one event indicator per interval.
using EventSampler = std::function<void(RandomStream&, std::span<std::uint8_t>)>;

struct McOptions {
  double grid_factor = 0.05;
  unsigned workers = 1;
  std::size_t chunk = 8192;
};

SplittingAccumulator run_event_sampler(const EventSampler& sampler, std::size_t k,
                                       std::size_t n_paths, std::uint64_t seed,
                                       const McOptions& options);

// Gap events on each interval of `config`, evaluated on shared paths.
EventSampler gap_event_sampler(const Kernel& kernel, const IntervalConfig& config,
                               double grid_factor);

struct SplittingResult {
  EstimateWithCI ratio;
  std::uint64_t joint = 0;
  std::vector<std::uint64_t> marginals;
  std::uint64_t n = 0;
};

SplittingResult splitting_ratio(const Kernel& kernel, const IntervalConfig& config,
                                std::size_t n_paths, std::uint64_t seed,
                                const McOptions& options = {});
SplittingResult splitting_ratio(const EventSampler& sampler, std::size_t k, std::size_t n_paths,
                                std::uint64_t seed, const McOptions& options = {});

struct SplittingScanRow {
  double s = 0.0;
  EstimateWithCI ratio;
  // |ratio - 1| with the interval mapped through |.|.
  double deviation = 0.0;
  double deviation_lo = 0.0;
  double deviation_hi = 0.0;
  double kbar = 0.0;           // sup_{x >= s} |K(x)|
  double weak_bound_shape = 0.0;  // r^2 Kbar(s), up to a constant
};

struct SplittingScan {
  std::string kernel;
  std::size_t k = 0;
  double r = 0.0;
  std::vector<SplittingScanRow> rows;
  // |ratio - 1| nonincreasing along s.
  bool decreasing = false;
};

SplittingScan splitting_decay_scan(const Kernel& kernel, double r, std::span<const double> s_list,
                                   std::size_t k, std::size_t n_paths, std::uint64_t seed,
                                   const McOptions& options = {});

struct ClusteringProbe {
  std::string probe_id;
  ClosedInterval first;
  ClosedInterval second;
  EstimateWithCI p_hat;
};

struct ClusteringResult {
  double r = 0.0;
  std::vector<ClusteringProbe> probes;
  // Max over the probe family: a lower bound on the supremum over all pairs.
  EstimateWithCI phi_hat;
  EstimateWithCI G_r;
  EstimateWithCI G_2r;
  // log phi / log G(r), with an interval from the endpoint combinations.
  double kappa_hat = 0.0;
  double kappa_lo = 0.0;
  double kappa_hi = 0.0;
};

// Probes: touching ([0,r],[r,2r]) and separated pairs at distance r/2, r, 2r.
ClusteringResult clustering_estimate(const Kernel& kernel, double r, std::size_t n_paths,
                                     std::uint64_t seed, const McOptions& options = {});

// CSV: kernel,k,r,s,ratio,ratio_lo,ratio_hi,Kbar_s
void write_splitting_csv_header(std::ostream& out);
void write_splitting_csv(std::ostream& out, const SplittingScan& scan);
// CSV: kernel,r,probe_id,phi_hat,lo,hi,G_hat_r,kappa_hat
void write_clustering_csv_header(std::ostream& out);
void write_clustering_csv(std::ostream& out, const std::string& kernel,
                          const ClusteringResult& result);

}  // namespace gapsim
