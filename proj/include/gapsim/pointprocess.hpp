#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gapsim/kernels.hpp"
#include "gapsim/scaling.hpp"
#include "gapsim/stats.hpp"
#include "gapsim/zeros.hpp"

namespace gapsim {

struct Atom {
  double u = 0.0;  // z_i / R
  double v = 0.0;  // theta(z_{i+1} - z_i) - log R; +inf for sentinels
  bool sentinel = false;
};

// Atoms of the rescaled gap point process on [0, R].
struct AtomSet {
  double R = 0.0;
  std::vector<Atom> atoms;  // ordered by u
  std::size_t sentinel_count = 0;
};

// Gaps longer than the theta table range become sentinel atoms at v = +inf.
AtomSet build_psi(const ZeroSet& zeroset, double R, const ScalingTable& table);

// Closed interval [lo, hi] of atom locations.
struct LocationWindow {
  double lo = 0.0;
  double hi = 1.0;
};

// Interval [lo, hi) of atom values, optionally including the point +inf.
struct ValueWindow {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool include_infinity = true;

  static ValueWindow at_least(double a) { return {a, std::numeric_limits<double>::infinity(), true}; }
  static ValueWindow everything() { return {}; }
  static ValueWindow empty() { return {0.0, 0.0, false}; }
  bool contains(double v) const;
  // Integral of e^{-y} over the window (the +inf point has no mass).
  double exp_mass() const;
};

std::size_t count(const AtomSet& atoms, LocationWindow where, ValueWindow values);

struct FactorialMomentResult {
  EstimateWithCI m_hat;
  double target = 0.0;
  unsigned k = 0;
};

// Mean falling factorial of the window counts across independent runs versus
// the Poisson target (|I| * mass(A))^k.
FactorialMomentResult factorial_moment_test(std::span<const AtomSet> runs, unsigned k,
                                            LocationWindow where, ValueWindow values);
FactorialMomentResult factorial_moment_test(std::span<const std::uint64_t> counts, unsigned k,
                                            double target_mean);

struct ExtremeSample {
  double L_R = 0.0;
  double Z_R = 0.0;
  double R = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t n_zeros = 0;
};

struct GumbelUniformResult {
  KsResult ks_gumbel;
  KsResult ks_uniform;
  double correlation = 0.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;  // runs with L_R = 0
  std::size_t n_sentinel = 0;  // runs whose L_R exceeds the theta table
};

GumbelUniformResult gumbel_uniform_tests(std::span<const ExtremeSample> extremes,
                                         const ScalingTable& table);

struct ScalingLawRow {
  double R = 0.0;
  std::size_t n_runs = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double predicted = 0.0;
  double relative_gap = 0.0;  // |median - predicted| / predicted
};

struct ScalingLawReport {
  std::vector<ScalingLawRow> rows;  // increasing R
  bool monotone_toward_prediction = false;
  bool used_fitted_zeta = false;
  double zeta = 0.0;
};

// Normalized largest gap per R against its first-order limit: L_R / log R vs
// 1 / zeta, or L_R (log log R)^{1/a} / (log R)^{1/a} vs (a / zeta)^{1/a} for a < 1.
// zeta comes from the closed form when known, otherwise from `fitted_zeta`.
ScalingLawReport scaling_law_check(std::span<const ExtremeSample> extremes, const Kernel& kernel,
                                   std::optional<double> fitted_zeta = std::nullopt);

// One simulated window: extreme sample, atoms and zero count.
struct PoissonRun {
  ExtremeSample extreme;
  AtomSet atoms;
};

struct PoissonRunOptions {
  double grid_factor = 0.05;
  unsigned workers = 1;
  // Horizon = horizon_factor * theta^{-1}(log R) beyond R.
  double horizon_factor = 10.0;
};

// n_runs independent paths on [0, R + H], run i on stream i.
std::vector<PoissonRun> simulate_poisson_runs(const Kernel& kernel, double R, std::size_t n_runs,
                                              const ScalingTable& table, std::uint64_t seed,
                                              const PoissonRunOptions& options = {});

void write_runs_csv_header(std::ostream& out);
void write_runs_csv(std::ostream& out, std::span<const PoissonRun> runs, std::uint64_t first_id);

}  // namespace gapsim
