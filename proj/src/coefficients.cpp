#include "gapsim/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "gapsim/csv.hpp"
#include "gapsim/error.hpp"
#include "gapsim/gaussian_core.hpp"
#include "gapsim/parallel.hpp"
#include "gapsim/zeros.hpp"

namespace gapsim {

IntervalConfig::IntervalConfig(std::vector<ClosedInterval> intervals, double r, double s)
    : intervals_(std::move(intervals)), r_(r), s_(s) {
  if (intervals_.size() < 2) throw ConfigError("interval configuration needs k >= 2 intervals");
  if (!(r >= 0.0) || !(s > 0.0)) throw ConfigError("interval configuration needs r >= 0, s > 0");
  std::sort(intervals_.begin(), intervals_.end(),
            [](const ClosedInterval& a, const ClosedInterval& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const auto& iv = intervals_[i];
    if (!(iv.hi >= iv.lo)) throw ConfigError("interval with hi < lo");
    if (iv.length() > r * (1.0 + 1e-12)) throw ConfigError("interval longer than r");
    if (i > 0 && iv.lo - intervals_[i - 1].hi < s * (1.0 - 1e-12))
      throw ConfigError("intervals closer than the separation s (or overlapping)");
  }
}

IntervalConfig IntervalConfig::evenly_spaced(std::size_t k, double r, double s) {
  std::vector<ClosedInterval> iv;
  for (std::size_t i = 0; i < k; ++i) {
    const double lo = static_cast<double>(i) * (r + s);
    iv.push_back({lo, lo + r});
  }
  return IntervalConfig(std::move(iv), r, s);
}

double IntervalConfig::hull_lo() const { return intervals_.front().lo; }
double IntervalConfig::hull_hi() const { return intervals_.back().hi; }

SplittingAccumulator::SplittingAccumulator(std::size_t k) : k_(k), pair_(k * k, 0) {}

void SplittingAccumulator::add(std::span<const std::uint8_t> events) {
  ++n_;
  bool all = true;
  for (std::size_t i = 0; i < k_; ++i) {
    if (!events[i]) {
      all = false;
      continue;
    }
    for (std::size_t j = 0; j < k_; ++j)
      if (events[j]) ++pair_[i * k_ + j];
  }
  if (all) ++joint_;
}

void SplittingAccumulator::merge(const SplittingAccumulator& other) {
  n_ += other.n_;
  joint_ += other.joint_;
  for (std::size_t i = 0; i < pair_.size(); ++i) pair_[i] += other.pair_[i];
}

EstimateWithCI SplittingAccumulator::ratio() const {
  if (n_ == 0) throw InsufficientData("splitting ratio: no samples");
  const double n = static_cast<double>(n_);
  std::vector<double> p(k_);
  for (std::size_t i = 0; i < k_; ++i) {
    if (marginal(i) == 0) throw InsufficientData("splitting ratio undefined: a marginal count is zero");
    p[i] = static_cast<double>(marginal(i)) / n;
  }
  if (joint_ == 0) throw InsufficientData("splitting ratio: joint count is zero");
  const double pj = static_cast<double>(joint_) / n;
  double log_ratio = std::log(pj);
  for (double pi : p) log_ratio -= std::log(pi);

  // Influence function of log ratio: 1_J / p_J - sum_i 1_i / p_i.
  double second = 1.0 / pj;
  for (std::size_t i = 0; i < k_; ++i) second -= 2.0 / p[i];
  for (std::size_t i = 0; i < k_; ++i)
    for (std::size_t j = 0; j < k_; ++j)
      second += static_cast<double>(pair_[i * k_ + j]) / n / (p[i] * p[j]);
  const double mean = 1.0 - static_cast<double>(k_);
  const double var = std::max(0.0, second - mean * mean) / n;
  const double se = std::sqrt(var);

  EstimateWithCI out;
  out.value = std::exp(log_ratio);
  out.lo = std::exp(log_ratio - kZ95 * se);
  out.hi = std::exp(log_ratio + kZ95 * se);
  out.n = n_;
  out.method = CiMethod::Delta;
  return out;
}

SplittingAccumulator run_event_sampler(const EventSampler& sampler, std::size_t k,
                                       std::size_t n_paths, std::uint64_t seed,
                                       const McOptions& options) {
  const Chunking tasks{n_paths, std::max<std::size_t>(1, options.chunk)};
  auto parts = parallel_map(tasks.n_tasks(), options.workers, [&](std::size_t task) {
    SplittingAccumulator acc(k);
    RandomStream rng(seed, task);
    std::vector<std::uint8_t> events(k);
    for (std::size_t i = tasks.begin(task); i < tasks.end(task); ++i) {
      sampler(rng, events);
      acc.add(events);
    }
    return acc;
  });
  SplittingAccumulator total(k);
  for (const auto& part : parts) total.merge(part);
  return total;
}

EventSampler gap_event_sampler(const Kernel& kernel, const IntervalConfig& config,
                               double grid_factor) {
  const double h = default_spacing(kernel, grid_factor);
  // Two spare cells on each side give the cubic refinement its stencil.
  const double origin = config.hull_lo() - 2.0 * h;
  const auto n = static_cast<std::size_t>(std::ceil((config.hull_hi() - origin) / h)) + 3;
  auto sampler = std::make_shared<const DenseGridSampler>(kernel, n, h, origin);
  auto intervals = config.intervals();
  return [sampler, intervals](RandomStream& rng, std::span<std::uint8_t> events) {
    const ZeroSet zs = find_zeros(sampler->sample_path(rng));
    for (std::size_t i = 0; i < intervals.size(); ++i)
      events[i] = gap_event(zs, intervals[i].lo, intervals[i].hi) ? 1 : 0;
  };
}

SplittingResult splitting_ratio(const EventSampler& sampler, std::size_t k, std::size_t n_paths,
                                std::uint64_t seed, const McOptions& options) {
  const SplittingAccumulator acc = run_event_sampler(sampler, k, n_paths, seed, options);
  SplittingResult out;
  out.n = acc.n();
  out.joint = acc.joint();
  for (std::size_t i = 0; i < k; ++i) out.marginals.push_back(acc.marginal(i));
  out.ratio = acc.ratio();
  return out;
}

SplittingResult splitting_ratio(const Kernel& kernel, const IntervalConfig& config,
                                std::size_t n_paths, std::uint64_t seed,
                                const McOptions& options) {
  return splitting_ratio(gap_event_sampler(kernel, config, options.grid_factor), config.k(),
                         n_paths, seed, options);
}

SplittingScan splitting_decay_scan(const Kernel& kernel, double r, std::span<const double> s_list,
                                   std::size_t k, std::size_t n_paths, std::uint64_t seed,
                                   const McOptions& options) {
  for (std::size_t i = 1; i < s_list.size(); ++i)
    if (!(s_list[i] > s_list[i - 1])) throw ConfigError("splitting scan needs increasing s values");
  SplittingScan scan;
  scan.kernel = kernel.spec();
  scan.k = k;
  scan.r = r;
  for (std::size_t i = 0; i < s_list.size(); ++i) {
    const double s = s_list[i];
    const IntervalConfig config = IntervalConfig::evenly_spaced(k, r, s);
    // Each separation gets its own seed so rows are independent estimates.
    const SplittingResult res = splitting_ratio(kernel, config, n_paths, seed + i, options);
    SplittingScanRow row;
    row.s = s;
    row.ratio = res.ratio;
    row.deviation = std::abs(res.ratio.value - 1.0);
    if (res.ratio.lo <= 1.0 && res.ratio.hi >= 1.0) {
      row.deviation_lo = 0.0;
      row.deviation_hi = std::max(1.0 - res.ratio.lo, res.ratio.hi - 1.0);
    } else {
      row.deviation_lo = std::min(std::abs(res.ratio.lo - 1.0), std::abs(res.ratio.hi - 1.0));
      row.deviation_hi = std::max(std::abs(res.ratio.lo - 1.0), std::abs(res.ratio.hi - 1.0));
    }
    row.kbar = kernel.envelope(s);
    row.weak_bound_shape = r * r * row.kbar;
    scan.rows.push_back(row);
  }
  scan.decreasing = true;
  for (std::size_t i = 1; i < scan.rows.size(); ++i)
    if (scan.rows[i].deviation > scan.rows[i - 1].deviation) scan.decreasing = false;
  return scan;
}

ClusteringResult clustering_estimate(const Kernel& kernel, double r, std::size_t n_paths,
                                     std::uint64_t seed, const McOptions& options) {
  if (!(r >= 0.0)) throw ConfigError("clustering estimate needs r >= 0");
  if (n_paths < 10000) throw ConfigError("clustering estimate needs n_paths >= 1e4");

  ClusteringResult out;
  out.r = r;
  out.probes = {
      {"touching", {0.0, r}, {r, 2.0 * r}, {}},
      {"sep_half_r", {0.0, r}, {1.5 * r, 2.5 * r}, {}},
      {"sep_r", {0.0, r}, {2.0 * r, 3.0 * r}, {}},
      {"sep_2r", {0.0, r}, {3.0 * r, 4.0 * r}, {}},
  };
  const std::size_t n_probes = out.probes.size();

  // Event slots: each probe's joint event, then G(r) and G(2r).
  const std::size_t n_events = n_probes + 2;
  std::vector<std::uint64_t> hits(n_events, 0);
  std::uint64_t total = 0;

  if (r == 0.0) {
    // A single point is almost surely not a zero.
    hits.assign(n_events, n_paths);
    total = n_paths;
  } else {
    const double h = default_spacing(kernel, options.grid_factor);
    const double origin = -2.0 * h;
    const auto n = static_cast<std::size_t>(std::ceil((4.0 * r - origin) / h)) + 3;
    const DenseGridSampler sampler(kernel, n, h, origin);
    const Chunking tasks{n_paths, std::max<std::size_t>(1, options.chunk)};
    auto parts = parallel_map(tasks.n_tasks(), options.workers, [&](std::size_t task) {
      std::vector<std::uint64_t> local(n_events + 1, 0);
      RandomStream rng(seed, task);
      for (std::size_t i = tasks.begin(task); i < tasks.end(task); ++i) {
        const ZeroSet zs = find_zeros(sampler.sample_path(rng));
        for (std::size_t p = 0; p < n_probes; ++p) {
          const auto& pr = out.probes[p];
          if (gap_event(zs, pr.first.lo, pr.first.hi) && gap_event(zs, pr.second.lo, pr.second.hi))
            ++local[p];
        }
        if (gap_event(zs, 0.0, r)) ++local[n_probes];
        if (gap_event(zs, 0.0, 2.0 * r)) ++local[n_probes + 1];
        ++local[n_events];
      }
      return local;
    });
    for (const auto& part : parts) {
      for (std::size_t e = 0; e < n_events; ++e) hits[e] += part[e];
      total += part[n_events];
    }
  }

  std::size_t best = 0;
  for (std::size_t p = 0; p < n_probes; ++p) {
    out.probes[p].p_hat = wilson_interval(hits[p], total);
    if (hits[p] > hits[best]) best = p;
  }
  out.phi_hat = out.probes[best].p_hat;
  out.G_r = wilson_interval(hits[n_probes], total);
  out.G_2r = wilson_interval(hits[n_probes + 1], total);

  const auto ratio = [](double phi, double g) {
    if (phi <= 0.0 || g <= 0.0 || g >= 1.0) return std::nan("");
    return std::log(phi) / std::log(g);
  };
  out.kappa_hat = ratio(out.phi_hat.value, out.G_r.value);
  out.kappa_lo = ratio(out.phi_hat.hi, out.G_r.lo);
  out.kappa_hi = ratio(out.phi_hat.lo, out.G_r.hi);
  return out;
}

void write_splitting_csv_header(std::ostream& out) {
  out << "kernel,k,r,s,ratio,ratio_lo,ratio_hi,Kbar_s\n";
}

void write_splitting_csv(std::ostream& out, const SplittingScan& scan) {
  for (const auto& row : scan.rows) {
    out << '"' << scan.kernel << '"' << ',' << scan.k << ',' << format_double(scan.r) << ','
        << format_double(row.s) << ',' << format_double(row.ratio.value) << ','
        << format_double(row.ratio.lo) << ',' << format_double(row.ratio.hi) << ','
        << format_double(row.kbar) << '\n';
  }
}

void write_clustering_csv_header(std::ostream& out) {
  out << "kernel,r,probe_id,phi_hat,lo,hi,G_hat_r,kappa_hat\n";
}

void write_clustering_csv(std::ostream& out, const std::string& kernel,
                          const ClusteringResult& result) {
  for (const auto& probe : result.probes) {
    const double kappa = probe.p_hat.value > 0.0 && result.G_r.value > 0.0 && result.G_r.value < 1.0
                             ? std::log(probe.p_hat.value) / std::log(result.G_r.value)
                             : std::nan("");
    out << '"' << kernel << '"' << ',' << format_double(result.r) << ',' << probe.probe_id << ','
        << format_double(probe.p_hat.value) << ',' << format_double(probe.p_hat.lo) << ','
        << format_double(probe.p_hat.hi) << ',' << format_double(result.G_r.value) << ','
        << format_double(kappa) << '\n';
  }
}

}  // namespace gapsim
