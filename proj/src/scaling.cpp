#include "gapsim/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "gapsim/csv.hpp"
#include "gapsim/error.hpp"
#include "gapsim/gaussian_core.hpp"
#include "gapsim/parallel.hpp"
#include "gapsim/zeros.hpp"

namespace gapsim {

namespace {

constexpr std::size_t kDenseGridLimit = 1500;

std::size_t n_r_points(double r_max, double r_step) {
  return static_cast<std::size_t>(std::floor(r_max / r_step + 1e-9)) + 1;
}

// Index j of the r-grid cell (r_{j-1}, r_j] holding tau; n_r means "beyond".
std::size_t tau_bin(double tau, double r_step, std::size_t n_r) {
  if (!std::isfinite(tau)) return n_r;
  const double j = std::ceil(tau / r_step - 1e-12);
  if (j >= static_cast<double>(n_r)) return n_r;
  return static_cast<std::size_t>(std::max(0.0, j));
}

// First zero in (0, +inf) of the path given f(0) = 0 and f'(0) = slope,
// sampled at x_k = k h, k = 1..n. Returns +inf when none is found.
double first_zero_conditional(double slope, const std::vector<double>& v, double h,
                              double tol) {
  const std::size_t n = v.size();
  if (n == 0 || slope == 0.0) return std::numeric_limits<double>::infinity();
  auto val = [&](std::size_t k) { return k == 0 ? 0.0 : v[k - 1]; };

  // First cell: quadratic through f(0) = 0 with slope f'(0) and f(h).
  if (v[0] == 0.0) return h;
  if ((slope > 0.0) != (v[0] > 0.0)) {
    const double c = (v[0] - slope * h) / (h * h);
    const double root = c != 0.0 ? -slope / c : 0.5 * h;
    return std::clamp(root, 0.5 * tol, h - 0.5 * tol);
  }
  for (std::size_t k = 1; k < n; ++k) {
    const double a = val(k), b = val(k + 1);
    if (b == 0.0) return static_cast<double>(k + 1) * h;
    if ((a > 0.0) == (b > 0.0)) continue;
    const double x0 = static_cast<double>(k) * h;
    double z;
    if (k + 2 <= n) {
      z = refine_cubic(x0, h, val(k - 1), a, b, val(k + 2), 0.25 * tol);
    } else {
      z = x0 + h * a / (a - b);
    }
    return std::clamp(z, x0 + 0.5 * tol, x0 + h - 0.5 * tol);
  }
  return std::numeric_limits<double>::infinity();
}

struct GTaskResult {
  std::vector<std::uint64_t> hist;      // first zero in (r_{j-1}, r_j], last = beyond
  std::vector<std::uint64_t> pos_hist;  // same, for paths with f(0) > 0
  std::uint64_t n = 0;
};

struct LambdaTaskResult {
  std::vector<double> w_hist;   // sum of |f'(0)| per tau bin
  std::vector<double> w2_hist;  // sum of |f'(0)|^2 per tau bin
  std::vector<std::uint64_t> count_hist;
  std::uint64_t n = 0;
};

}  // namespace

GCurve estimate_G_curve(const Kernel& kernel, double r_max, std::size_t n_paths,
                        std::uint64_t seed, const CurveOptions& options) {
  if (!(r_max > 0.0)) throw ConfigError("estimate_G_curve needs r_max > 0");
  if (n_paths < 1000) throw ConfigError("estimate_G_curve needs n_paths >= 1000");

  const double h = default_spacing(kernel, options.grid_factor);
  const double r_step = options.r_step > 0.0 ? options.r_step : h;
  const std::size_t n_r = n_r_points(r_max, r_step);
  const double pad = 5.0 / rice_intensity(kernel);
  const auto n_left = static_cast<std::size_t>(std::ceil(pad / h));
  const auto n_right = static_cast<std::size_t>(std::ceil(r_max / h)) + 3;
  const double origin = -static_cast<double>(n_left) * h;
  const std::size_t n_grid = n_left + n_right + 1;
  auto spectrum = build_spectrum(kernel, n_grid, h);
  // Heavy-tailed kernels can need a padding far beyond the grid; a short grid
  // is then cheaper to sample from the dense factor.
  std::optional<CirculantSampler> circulant;
  std::optional<DenseGridSampler> dense;
  if (n_grid <= kDenseGridLimit && spectrum.padded_size > 16 * n_grid)
    dense.emplace(kernel, n_grid, h, origin);
  else
    circulant.emplace(std::move(spectrum), origin);

  // Paths come in pairs, so chunks are even.
  const std::size_t chunk = std::max<std::size_t>(2, options.chunk + options.chunk % 2);
  const Chunking tasks{n_paths, chunk};
  auto results = parallel_map(tasks.n_tasks(), options.workers, [&](std::size_t task) {
    GTaskResult res;
    res.hist.assign(n_r + 1, 0);
    res.pos_hist.assign(n_r + 1, 0);
    RandomStream rng(seed, task);
    PathSample a, b;
    const std::size_t count = tasks.end(task) - tasks.begin(task);
    for (std::size_t i = 0; i < count; i += 2) {
      if (circulant) {
        circulant->sample_pair(rng, a, b);
      } else {
        a = dense->sample_path(rng);
        if (i + 1 < count) b = dense->sample_path(rng);
      }
      for (int which = 0; which < 2 && i + which < count; ++which) {
        const PathSample& p = which == 0 ? a : b;
        const ZeroSet zs = find_zeros(p);
        // First zero at or after 0.
        auto it = std::lower_bound(zs.zeros.begin(), zs.zeros.end(), 0.0);
        const double tau = it == zs.zeros.end() ? std::numeric_limits<double>::infinity() : *it;
        const std::size_t bin = tau_bin(tau, r_step, n_r);
        ++res.hist[bin];
        if (p.values[n_left] > 0.0) ++res.pos_hist[bin];
        ++res.n;
      }
    }
    return res;
  });

  std::vector<std::uint64_t> hist(n_r + 1, 0), pos_hist(n_r + 1, 0);
  std::uint64_t total = 0, total_pos = 0;
  for (const auto& res : results) {
    for (std::size_t j = 0; j <= n_r; ++j) {
      hist[j] += res.hist[j];
      pos_hist[j] += res.pos_hist[j];
    }
    total += res.n;
  }
  for (auto c : pos_hist) total_pos += c;

  GCurve out;
  out.r_step = r_step;
  out.n_paths = total;
  std::uint64_t gone = 0, gone_pos = 0;
  for (std::size_t j = 0; j < n_r; ++j) {
    gone += hist[j];
    gone_pos += pos_hist[j];
    out.r.push_back(static_cast<double>(j) * r_step);
    out.survivors.push_back(total - gone);
    out.positive_survivors.push_back(total_pos - gone_pos);
    out.G.push_back(wilson_interval(total - gone, total));
    out.P_pos.push_back(wilson_interval(total_pos - gone_pos, total));
  }
  return out;
}

EstimateWithCI GCurve::derivative(double at, double h) const {
  const auto j = static_cast<std::size_t>(std::llround(at / r_step));
  const auto k = static_cast<std::size_t>(std::max<long long>(1, std::llround(h / r_step)));
  if (j < k || j + k >= r.size())
    throw RangeError("G derivative stencil leaves the curve", r.front(), r.back());
  const std::uint64_t count = survivors[j - k] - survivors[j + k];
  const double width = 2.0 * static_cast<double>(k) * r_step;
  EstimateWithCI ci = wilson_interval(count, n_paths);
  ci.value /= width;
  ci.lo /= width;
  ci.hi /= width;
  return ci;
}

LambdaCurve estimate_lambda_curve(const Kernel& kernel, double r_max, std::size_t n_draws,
                                  std::uint64_t seed, const CurveOptions& options) {
  if (!(r_max > 0.0)) throw ConfigError("estimate_lambda_curve needs r_max > 0");
  if (n_draws < 1000) throw ConfigError("estimate_lambda_curve needs n_paths >= 1000");

  const double h = default_spacing(kernel, options.grid_factor);
  const double r_step = options.r_step > 0.0 ? options.r_step : h;
  const std::size_t n_r = n_r_points(r_max, r_step);
  const auto n_grid = static_cast<std::size_t>(std::ceil(r_max / h)) + 3;
  std::vector<double> grid(n_grid);
  for (std::size_t k = 0; k < n_grid; ++k) grid[k] = static_cast<double>(k + 1) * h;
  const ConditionalZeroModel model(kernel, grid);
  const double tol = kDefaultRefineFraction * h;

  // At least kLambdaBatches tasks so every batch is populated.
  const std::size_t chunk =
      std::max<std::size_t>(1, std::min(options.chunk, n_draws / kLambdaBatches));
  const Chunking tasks{n_draws, chunk};
  const std::size_t n_tasks = tasks.n_tasks();

  auto results = parallel_map(n_tasks, options.workers, [&](std::size_t task) {
    LambdaTaskResult res;
    res.w_hist.assign(n_r + 1, 0.0);
    res.w2_hist.assign(n_r + 1, 0.0);
    res.count_hist.assign(n_r + 1, 0);
    RandomStream rng(seed, task);
    std::vector<double> values(n_grid);
    for (std::size_t i = tasks.begin(task); i < tasks.end(task); ++i) {
      double slope = 0.0;
      model.sample(rng, slope, values);
      const double tau = first_zero_conditional(slope, values, h, tol);
      const std::size_t bin = tau_bin(tau, r_step, n_r);
      const double w = std::abs(slope);
      res.w_hist[bin] += w;
      res.w2_hist[bin] += w * w;
      ++res.count_hist[bin];
      ++res.n;
    }
    return res;
  });

  const double prefactor = 1.0 / std::sqrt(2.0 * std::numbers::pi * kernel.variance());

  // Tail sums S(r_j) = sum over draws with tau > r_j, per batch and overall.
  std::vector<std::vector<double>> batch_tail(kLambdaBatches, std::vector<double>(n_r, 0.0));
  std::vector<std::uint64_t> batch_n(kLambdaBatches, 0);
  std::vector<double> tail_w(n_r, 0.0), tail_w2(n_r, 0.0);
  std::vector<std::uint64_t> tail_count(n_r, 0);
  std::uint64_t total = 0;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    const auto& res = results[t];
    const std::size_t batch = t * kLambdaBatches / n_tasks;
    double acc = res.w_hist[n_r], acc2 = res.w2_hist[n_r];
    std::uint64_t accn = res.count_hist[n_r];
    for (std::size_t j = n_r; j-- > 0;) {
      batch_tail[batch][j] += acc;
      tail_w[j] += acc;
      tail_w2[j] += acc2;
      tail_count[j] += accn;
      acc += res.w_hist[j];
      acc2 += res.w2_hist[j];
      accn += res.count_hist[j];
    }
    batch_n[batch] += res.n;
    total += res.n;
  }

  LambdaCurve out;
  out.r_step = r_step;
  out.n_draws = total;
  const double nn = static_cast<double>(total);
  std::vector<double> per_batch(kLambdaBatches);
  for (std::size_t j = 0; j < n_r; ++j) {
    out.r.push_back(static_cast<double>(j) * r_step);
    for (std::size_t b = 0; b < kLambdaBatches; ++b)
      per_batch[b] = prefactor * batch_tail[b][j] / static_cast<double>(batch_n[b]);
    EstimateWithCI ci = batch_means(per_batch, total);
    ci.value = prefactor * tail_w[j] / nn;
    ci.lo = std::max(0.0, std::min(ci.lo, ci.value));
    ci.hi = std::max(ci.hi, ci.value);
    out.lambda.push_back(ci);
    const double mean = tail_w[j] / nn;
    const double var = std::max(0.0, (tail_w2[j] - nn * mean * mean) / (nn - 1.0));
    out.variance.push_back(prefactor * prefactor * var / nn);
    out.survivors.push_back(tail_count[j]);
  }
  return out;
}

ScalingTable ScalingTable::from_theta(std::vector<double> r, std::vector<double> theta) {
  if (r.size() != theta.size() || r.size() < 2)
    throw ConfigError("theta table needs at least two (r, theta) pairs");
  for (std::size_t i = 1; i < r.size(); ++i)
    if (!(r[i] > r[i - 1])) throw ConfigError("theta table r values must be increasing");
  ScalingTable t;
  t.r = std::move(r);
  t.theta_hat = isotonic_nondecreasing(theta, std::vector<double>(theta.size(), 1.0));
  for (double th : t.theta_hat) {
    const double lam = std::exp(-th);
    t.lambda_iso.push_back(lam);
    t.lambda_hat.push_back({lam, lam, lam, 0, CiMethod::BatchMeans});
    t.n_samples.push_back(0);
  }
  return t;
}

ScalingTable build_scaling_table(const LambdaCurve& lambda, const GCurve* g,
                                 std::uint64_t min_survivors) {
  std::size_t n = 0;
  while (n < lambda.r.size() && lambda.survivors[n] >= min_survivors &&
         lambda.lambda[n].value > 0.0)
    ++n;
  if (n < 2) throw InsufficientData("too few reliable points to build a scaling table");
  if (g && (g->r_step != lambda.r_step || g->r.size() < n)) {
    throw ConfigError("G and lambda curves must share the r grid");
  }

  ScalingTable t;
  std::vector<double> raw(n), weights(n);
  for (std::size_t j = 0; j < n; ++j) {
    t.r.push_back(lambda.r[j]);
    t.lambda_hat.push_back(lambda.lambda[j]);
    t.n_samples.push_back(lambda.n_draws);
    if (g) t.G_hat.push_back(g->G[j]);
    raw[j] = lambda.lambda[j].value;
    const double var = lambda.variance[j];
    weights[j] = var > 0.0 ? 1.0 / var : 1.0 / (raw[j] * raw[j] * 1e-12);
  }
  t.lambda_iso = isotonic_nonincreasing(raw, weights);
  for (std::size_t j = 0; j < n; ++j) {
    const double width = t.lambda_hat[j].hi - t.lambda_hat[j].lo;
    if (std::abs(t.lambda_iso[j] - raw[j]) > 2.0 * width) ++t.isotonic_flags;
    t.theta_hat.push_back(-std::log(t.lambda_iso[j]));
  }
  return t;
}

double theta(const ScalingTable& table, double r) {
  const auto& rs = table.r;
  if (!(r >= rs.front() && r <= rs.back()))
    throw RangeError("theta queried outside the table range", rs.front(), rs.back());
  auto it = std::upper_bound(rs.begin(), rs.end(), r);
  if (it == rs.end()) return table.theta_hat.back();
  const std::size_t j = static_cast<std::size_t>(it - rs.begin());
  const double w = (r - rs[j - 1]) / (rs[j] - rs[j - 1]);
  return table.theta_hat[j - 1] + w * (table.theta_hat[j] - table.theta_hat[j - 1]);
}

double theta_inverse(const ScalingTable& table, double s) {
  const auto& th = table.theta_hat;
  if (!(s >= th.front() && s <= th.back()))
    throw RangeError("theta inverse queried outside the table range", th.front(), th.back());
  const auto it = std::lower_bound(th.begin(), th.end(), s);
  const std::size_t j = static_cast<std::size_t>(it - th.begin());
  if (j == 0) return table.r.front();
  const double w = (s - th[j - 1]) / (th[j] - th[j - 1]);
  return table.r[j - 1] + w * (table.r[j] - table.r[j - 1]);
}

double t_R(const ScalingTable& table, double s, double R) {
  if (!(R > 0.0)) throw ConfigError("t_R needs R > 0");
  return theta_inverse(table, s + std::log(R));
}

ZetaFit fit_theta_asymptotics(const ScalingTable& table, DecayClass decay, double alpha) {
  const bool anomalous = decay == DecayClass::Poly && alpha > 0.0 && alpha < 1.0;
  const double r_top = table.r_max();
  std::vector<double> x, y;
  for (std::size_t j = 0; j < table.r.size(); ++j) {
    const double r = table.r[j];
    if (r < 0.5 * r_top || r <= 0.0) continue;
    if (anomalous && r <= 1.0) continue;
    x.push_back(anomalous ? std::pow(r, alpha) * std::log(r) : r);
    y.push_back(table.theta_hat[j]);
  }
  if (x.size() < 5) throw InsufficientData("fewer than 5 usable r points for the theta fit");
  const LinearFit fit = least_squares(x, y);
  ZetaFit out;
  out.zeta_hat = fit.slope;
  out.intercept = fit.intercept;
  out.r_squared = fit.r_squared;
  out.n_points = x.size();
  out.r_lo = 0.5 * r_top;
  out.r_hi = r_top;

  const std::size_t half = x.size() / 2;
  std::vector<double> xs(x.begin() + static_cast<std::ptrdiff_t>(half), x.end());
  std::vector<double> res;
  for (std::size_t i = half; i < x.size(); ++i)
    res.push_back(y[i] - fit.intercept - fit.slope * x[i]);
  if (xs.size() >= 2 && xs.front() != xs.back()) out.residual_trend = least_squares(xs, res).slope;
  return out;
}

ZetaFit fit_theta_asymptotics(const ScalingTable& table, const Kernel& kernel) {
  return fit_theta_asymptotics(table, kernel.decay_class(), kernel.alpha());
}

void write_scaling_csv(std::ostream& out, const ScalingTable& table) {
  out << "r,G_hat,G_lo,G_hi,lambda_hat,lambda_lo,lambda_hi,theta_hat\n";
  for (std::size_t j = 0; j < table.r.size(); ++j) {
    out << format_double(table.r[j]) << ',';
    if (j < table.G_hat.size()) {
      out << format_double(table.G_hat[j].value) << ',' << format_double(table.G_hat[j].lo) << ','
          << format_double(table.G_hat[j].hi) << ',';
    } else {
      out << ",,,";
    }
    const auto& l = table.lambda_hat[j];
    out << format_double(l.value) << ',' << format_double(l.lo) << ',' << format_double(l.hi)
        << ',' << format_double(table.theta_hat[j]) << '\n';
  }
}

ScalingTable read_scaling_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("r,", 0) != 0)
    throw ConfigError("scaling CSV: missing header");
  ScalingTable t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw ConfigError("scaling CSV: expected 8 columns");
    auto num = [](const std::string& s) { return std::stod(s); };
    t.r.push_back(num(cells[0]));
    if (!cells[1].empty())
      t.G_hat.push_back({num(cells[1]), num(cells[2]), num(cells[3]), 0, CiMethod::Wilson});
    t.lambda_hat.push_back({num(cells[4]), num(cells[5]), num(cells[6]), 0, CiMethod::BatchMeans});
    t.theta_hat.push_back(num(cells[7]));
    t.lambda_iso.push_back(std::exp(-t.theta_hat.back()));
    t.n_samples.push_back(0);
  }
  if (t.r.size() < 2) throw ConfigError("scaling CSV: need at least two rows");
  return t;
}

}  // namespace gapsim
