#include "gapsim/pointprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>

#include "gapsim/csv.hpp"
#include "gapsim/error.hpp"
#include "gapsim/gaussian_core.hpp"
#include "gapsim/parallel.hpp"

namespace gapsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMomentBatches = 32;

// Theta of a gap length: sentinel beyond the table, clamped below it.
std::optional<double> theta_or_sentinel(const ScalingTable& table, double gap) {
  if (gap > table.r_max()) return std::nullopt;
  return theta(table, std::max(gap, table.r_min()));
}

}  // namespace

AtomSet build_psi(const ZeroSet& zeroset, double R, const ScalingTable& table) {
  if (!(R > 1.0)) throw ConfigError("the rescaled gap process needs R > 1");
  const auto& z = zeroset.zeros;
  if (zeroset.domain_lo > 0.0 || zeroset.domain_hi < R)
    throw HorizonExhausted("simulated domain does not cover [0, R]; extend the simulation");
  AtomSet out;
  out.R = R;
  const double log_r = std::log(R);
  for (auto it = std::lower_bound(z.begin(), z.end(), 0.0); it != z.end() && *it <= R; ++it) {
    if (std::next(it) == z.end())
      throw HorizonExhausted("zero at " + format_double(*it) +
                             " has no recorded successor; extend the simulation horizon");
    const double gap = *std::next(it) - *it;
    Atom atom{*it / R, kInf, true};
    if (auto th = theta_or_sentinel(table, gap)) {
      atom.v = *th - log_r;
      atom.sentinel = false;
    } else {
      ++out.sentinel_count;
    }
    out.atoms.push_back(atom);
  }
  return out;
}

bool ValueWindow::contains(double v) const {
  if (v == kInf) return include_infinity;
  return v >= lo && v < hi;
}

double ValueWindow::exp_mass() const {
  if (!(hi > lo)) return 0.0;
  const double upper = hi == kInf ? 0.0 : std::exp(-hi);
  const double lower = lo == -kInf ? kInf : std::exp(-lo);
  return lower - upper;
}

std::size_t count(const AtomSet& atoms, LocationWindow where, ValueWindow values) {
  std::size_t n = 0;
  for (const Atom& a : atoms.atoms)
    if (a.u >= where.lo && a.u <= where.hi && values.contains(a.v)) ++n;
  return n;
}

FactorialMomentResult factorial_moment_test(std::span<const std::uint64_t> counts, unsigned k,
                                            double target_mean) {
  if (counts.size() < 100) throw InsufficientData("factorial moment test needs >= 100 runs");
  if (k < 1 || k > 3) throw ConfigError("factorial moment order must be 1, 2 or 3");
  const std::size_t n = counts.size();
  std::vector<double> batches(kMomentBatches, 0.0);
  std::vector<std::size_t> sizes(kMomentBatches, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = i * kMomentBatches / n;
    batches[b] += falling_factorial(counts[i], k);
    ++sizes[b];
  }
  for (std::size_t b = 0; b < kMomentBatches; ++b) batches[b] /= static_cast<double>(sizes[b]);
  FactorialMomentResult out;
  out.k = k;
  out.m_hat = batch_means(batches, n);
  out.m_hat.value = falling_factorial_mean(counts, k);
  out.m_hat.lo = std::min(out.m_hat.lo, out.m_hat.value);
  out.m_hat.hi = std::max(out.m_hat.hi, out.m_hat.value);
  out.target = std::pow(target_mean, static_cast<double>(k));
  return out;
}

FactorialMomentResult factorial_moment_test(std::span<const AtomSet> runs, unsigned k,
                                            LocationWindow where, ValueWindow values) {
  std::vector<std::uint64_t> counts;
  counts.reserve(runs.size());
  for (const AtomSet& a : runs) counts.push_back(count(a, where, values));
  const double width = std::max(0.0, std::min(where.hi, 1.0) - std::max(where.lo, 0.0));
  return factorial_moment_test(counts, k, width * values.exp_mass());
}

GumbelUniformResult gumbel_uniform_tests(std::span<const ExtremeSample> extremes,
                                         const ScalingTable& table) {
  GumbelUniformResult out;
  std::vector<double> xs, us, xs_finite, us_finite;
  for (const ExtremeSample& e : extremes) {
    if (e.L_R <= 0.0) {
      ++out.n_excluded;
      continue;
    }
    const double u = e.Z_R / e.R;
    double x = kInf;
    if (auto th = theta_or_sentinel(table, e.L_R)) {
      x = *th - std::log(e.R);
      xs_finite.push_back(x);
      us_finite.push_back(u);
    } else {
      ++out.n_sentinel;
    }
    xs.push_back(x);
    us.push_back(u);
  }
  if (xs.size() < 200) throw InsufficientData("Gumbel/uniform tests need >= 200 usable runs");
  out.n_used = xs.size();
  std::sort(xs.begin(), xs.end());
  std::sort(us.begin(), us.end());
  out.ks_gumbel = ks_statistic(xs, gumbel_cdf);
  out.ks_uniform = ks_statistic(us, [](double u) { return std::clamp(u, 0.0, 1.0); });
  out.correlation = pearson_correlation(us_finite, xs_finite);
  return out;
}

ScalingLawReport scaling_law_check(std::span<const ExtremeSample> extremes, const Kernel& kernel,
                                   std::optional<double> fitted_zeta) {
  ScalingLawReport out;
  std::optional<double> zeta = zeta_predicted(kernel);
  if (!zeta) {
    if (!fitted_zeta) throw ConfigError("zeta has no closed form for this kernel; pass a fitted zeta");
    zeta = fitted_zeta;
    out.used_fitted_zeta = true;
  }
  out.zeta = *zeta;
  const bool anomalous = kernel.decay_class() == DecayClass::Poly && kernel.alpha() < 1.0;
  const double a = kernel.alpha();
  const double predicted = anomalous ? std::pow(a / *zeta, 1.0 / a) : 1.0 / *zeta;

  std::map<double, std::vector<double>> by_r;
  for (const ExtremeSample& e : extremes) {
    if (e.L_R <= 0.0) continue;
    const double lr = std::log(e.R);
    const double stat = anomalous
                            ? e.L_R * std::pow(std::log(lr), 1.0 / a) / std::pow(lr, 1.0 / a)
                            : e.L_R / lr;
    by_r[e.R].push_back(stat);
  }
  if (by_r.size() < 2) throw InsufficientData("scaling law check needs >= 2 distinct R values");
  for (auto& [R, stats] : by_r) {
    if (stats.size() < 100) throw InsufficientData("scaling law check needs >= 100 runs per R");
    ScalingLawRow row;
    row.R = R;
    row.n_runs = stats.size();
    row.median = quantile(stats, 0.5);
    row.q25 = quantile(stats, 0.25);
    row.q75 = quantile(stats, 0.75);
    row.predicted = predicted;
    row.relative_gap = std::abs(row.median - predicted) / predicted;
    out.rows.push_back(row);
  }
  out.monotone_toward_prediction = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (!(out.rows[i].relative_gap < out.rows[i - 1].relative_gap))
      out.monotone_toward_prediction = false;
  return out;
}

std::vector<PoissonRun> simulate_poisson_runs(const Kernel& kernel, double R, std::size_t n_runs,
                                              const ScalingTable& table, std::uint64_t seed,
                                              const PoissonRunOptions& options) {
  if (!(R > 1.0)) throw ConfigError("Poisson runs need R > 1");
  const double h = default_spacing(kernel, options.grid_factor);
  const double log_r = std::log(R);
  const double scale =
      log_r >= table.theta_min() && log_r <= table.theta_max() ? theta_inverse(table, log_r)
                                                               : table.r_max();
  const double horizon = options.horizon_factor * std::max(scale, 1.0 / rice_intensity(kernel));

  auto make_sampler = [&](double H) {
    const auto n = static_cast<std::size_t>(std::ceil((R + H) / h)) + 1;
    return std::make_shared<const CirculantSampler>(build_spectrum(kernel, n, h), 0.0);
  };
  const auto sampler = make_sampler(horizon);
  std::once_flag extended_once;
  std::shared_ptr<const CirculantSampler> extended;

  return parallel_map(n_runs, options.workers, [&](std::size_t run) {
    auto attempt = [&](const CirculantSampler& s, std::uint64_t stream) {
      RandomStream rng(seed, stream);
      const ZeroSet zs = find_zeros(s.sample_path(rng));
      PoissonRun out;
      const LargestGap lg = largest_gap(zs, R);
      out.atoms = build_psi(zs, R, table);
      out.extreme = {lg.length, lg.location, R, seed, stream, out.atoms.atoms.size()};
      return out;
    };
    try {
      return attempt(*sampler, run);
    } catch (const HorizonExhausted&) {
      std::call_once(extended_once, [&] { extended = make_sampler(2.0 * horizon); });
      return attempt(*extended, substream_id(run, 1));
    }
  });
}

void write_runs_csv_header(std::ostream& out) { out << "run_id,R,L_R,Z_R,n_zeros,seed\n"; }

void write_runs_csv(std::ostream& out, std::span<const PoissonRun> runs, std::uint64_t first_id) {
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const ExtremeSample& e = runs[i].extreme;
    out << first_id + i << ',' << format_double(e.R) << ',' << format_double(e.L_R) << ','
        << format_double(e.Z_R) << ',' << e.n_zeros << ',' << e.seed << '\n';
  }
}

}  // namespace gapsim
