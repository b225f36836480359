#include "gapsim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gapsim/coefficients.hpp"
#include "gapsim/csv.hpp"
#include "gapsim/error.hpp"
#include "gapsim/gaussian_core.hpp"
#include "gapsim/kernels.hpp"
#include "gapsim/parallel.hpp"
#include "gapsim/pointprocess.hpp"
#include "gapsim/scaling.hpp"
#include "gapsim/zeros.hpp"

namespace gapsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kPurposeG = 1;
constexpr std::uint64_t kPurposeLambda = 2;
constexpr std::uint64_t kPurposeRuns = 3;
constexpr std::uint64_t kPurposeSplit = 4;
constexpr std::uint64_t kPurposeCluster = 5;
constexpr std::uint64_t kPurposeRice = 6;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const auto x = std::stoull(v, &pos);
    if (pos != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a non-negative integer: '" + v + "'");
  }
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double(xs[i]);
  }
  return out;
}

json estimate_json(const EstimateWithCI& e) {
  return {{"value", e.value}, {"lo", e.lo}, {"hi", e.hi}, {"n", e.n},
          {"method", to_string(e.method)}};
}

template <class T>
T or_default(T value, T fallback) {
  return value == T{} ? fallback : value;
}

struct Context {
  const ExperimentConfig& config;
  Kernel kernel;
  fs::path dir;
  RunResult result;

  void write(const std::string& name, const std::string& text) {
    write_text_file(dir / name, text);
    result.files.push_back(dir / name);
  }
};

void run_rice(Context& ctx) {
  const auto& cfg = ctx.config;
  const std::size_t n_paths = or_default<std::size_t>(cfg.n_paths, 200);
  const double rho = rice_intensity(ctx.kernel);
  const double h = default_spacing(ctx.kernel, cfg.grid_factor);
  const double length = cfg.r_max > 0.0 ? cfg.r_max : 500.0 / rho;
  const auto n = static_cast<std::size_t>(std::ceil(length / h)) + 1;
  const CirculantSampler sampler(build_spectrum(ctx.kernel, n, h));
  const std::uint64_t seed = derive_seed(cfg.seed, kPurposeRice);

  struct PathCount {
    std::uint64_t zeros;
    std::string dump;
  };
  auto counts = parallel_map(n_paths, cfg.workers, [&](std::size_t i) {
    RandomStream rng(seed, i);
    const ZeroSet zs = find_zeros(sampler.sample_path(rng));
    PathCount pc{zs.zeros.size(), {}};
    if (cfg.dump_zeros) {
      std::ostringstream os;
      write_zeros_csv(os, i, zs);
      pc.dump = os.str();
    }
    return pc;
  });
  ctx.result.streams.push_back({"rice_paths", seed, 0, n_paths});

  const double span = sampler.spectrum().spacing * static_cast<double>(n - 1);
  Moments rates;
  std::uint64_t total = 0;
  for (const auto& c : counts) {
    rates.add(static_cast<double>(c.zeros) / span);
    total += c.zeros;
  }
  const double value = static_cast<double>(total) / (span * static_cast<double>(n_paths));
  const double half = kZ95 * rates.standard_error();

  std::ostringstream os;
  os << "kernel,n_paths,path_length,n_zeros,intensity_hat,intensity_lo,intensity_hi,rice_intensity\n";
  os << '"' << ctx.kernel.spec() << '"' << ',' << n_paths << ',' << format_double(span) << ','
     << total << ',' << format_double(value) << ',' << format_double(value - half) << ','
     << format_double(value + half) << ',' << format_double(rho) << '\n';
  ctx.write("rice.csv", os.str());
  if (cfg.dump_zeros) {
    std::ostringstream zs;
    write_zeros_csv_header(zs);
    for (const auto& c : counts) zs << c.dump;
    ctx.write("zeros.csv", zs.str());
  }
  ctx.result.summary = {{"kernel", ctx.kernel.spec()},
                        {"intensity_hat", value},
                        {"intensity_lo", value - half},
                        {"intensity_hi", value + half},
                        {"rice_intensity", rho},
                        {"relative_error", std::abs(value - rho) / rho},
                        {"path_units", span * static_cast<double>(n_paths)}};
}

ScalingTable estimate_table(Context& ctx, std::size_t n_paths, bool with_g) {
  const auto& cfg = ctx.config;
  const double r_max = cfg.r_max > 0.0 ? cfg.r_max : 12.0 / rice_intensity(ctx.kernel);
  CurveOptions opt;
  opt.grid_factor = cfg.grid_factor;
  opt.workers = cfg.workers;
  const std::uint64_t seed_l = derive_seed(cfg.seed, kPurposeLambda);
  const LambdaCurve lambda = estimate_lambda_curve(ctx.kernel, r_max, n_paths, seed_l, opt);
  const std::size_t lambda_chunk =
      std::max<std::size_t>(1, std::min(opt.chunk, n_paths / kLambdaBatches));
  ctx.result.streams.push_back(
      {"lambda_curve", seed_l, 0, Chunking{n_paths, lambda_chunk}.n_tasks()});
  if (!with_g) return build_scaling_table(lambda);

  const std::uint64_t seed_g = derive_seed(cfg.seed, kPurposeG);
  const GCurve g = estimate_G_curve(ctx.kernel, r_max, n_paths, seed_g, opt);
  ctx.result.streams.push_back(
      {"G_curve", seed_g, 0, Chunking{n_paths, opt.chunk + opt.chunk % 2}.n_tasks()});
  return build_scaling_table(lambda, &g);
}

void run_scaling(Context& ctx) {
  const std::size_t n_paths = or_default<std::size_t>(ctx.config.n_paths, 200000);
  const ScalingTable table = estimate_table(ctx, n_paths, true);
  std::ostringstream os;
  write_scaling_csv(os, table);
  ctx.write("scaling.csv", os.str());

  json fit_json = nullptr;
  try {
    const ZetaFit fit = fit_theta_asymptotics(table, ctx.kernel);
    fit_json = {{"zeta_hat", fit.zeta_hat},       {"intercept", fit.intercept},
                {"r_squared", fit.r_squared},     {"n_points", fit.n_points},
                {"r_lo", fit.r_lo},               {"r_hi", fit.r_hi},
                {"residual_trend", fit.residual_trend}};
  } catch (const InsufficientData& e) {
    fit_json = {{"error", e.what()}};
  }
  auto opt_json = [](std::optional<double> x) { return x ? json(*x) : json(nullptr); };
  ctx.result.summary = {{"kernel", ctx.kernel.spec()},
                        {"n_paths", n_paths},
                        {"r_reliable_max", table.r_max()},
                        {"isotonic_flags", table.isotonic_flags},
                        {"rice_intensity", rice_intensity(ctx.kernel)},
                        {"lambda0", estimate_json(table.lambda_hat.front())},
                        {"fit", fit_json},
                        {"zeta_predicted", opt_json(zeta_predicted(ctx.kernel))},
                        {"zeta_gamma_form", opt_json(zeta_gamma_form(ctx.kernel))}};
  ctx.write("scaling_fit.json", dump_json(ctx.result.summary));
}

void run_poisson(Context& ctx) {
  const auto& cfg = ctx.config;
  const std::size_t n_runs = or_default<std::size_t>(cfg.n_runs, 500);
  const std::vector<double> Rs = cfg.R.empty() ? std::vector<double>{2000.0} : cfg.R;

  ScalingTable table;
  if (!cfg.theta_table.empty()) {
    std::ifstream in(cfg.theta_table);
    if (!in) throw IoError("cannot read theta table '" + cfg.theta_table + "'");
    table = read_scaling_csv(in);
  } else {
    table = estimate_table(ctx, or_default<std::size_t>(cfg.n_paths, 400000), false);
    std::ostringstream os;
    write_scaling_csv(os, table);
    ctx.write("theta_table.csv", os.str());
  }

  PoissonRunOptions opt;
  opt.grid_factor = cfg.grid_factor;
  opt.workers = cfg.workers;

  std::ostringstream runs_csv;
  write_runs_csv_header(runs_csv);
  json summaries = json::array();
  std::vector<ExtremeSample> all_extremes;
  std::uint64_t run_id = 0;
  for (std::size_t i = 0; i < Rs.size(); ++i) {
    const double R = Rs[i];
    const std::uint64_t seed = derive_seed(cfg.seed, kPurposeRuns + 16 * (i + 1));
    const auto runs = simulate_poisson_runs(ctx.kernel, R, n_runs, table, seed, opt);
    ctx.result.streams.push_back({"poisson_runs_R" + format_double(R), seed, 0, n_runs});
    write_runs_csv(runs_csv, runs, run_id);
    run_id += runs.size();

    std::vector<AtomSet> atoms;
    std::vector<ExtremeSample> extremes;
    for (const auto& run : runs) {
      atoms.push_back(run.atoms);
      extremes.push_back(run.extreme);
      all_extremes.push_back(run.extreme);
    }
    json s = {{"kernel", ctx.kernel.spec()}, {"R", R}, {"n_runs", runs.size()}};
    json m_hat = json::object();
    if (runs.size() >= 100) {
      for (unsigned k = 1; k <= 2; ++k) {
        const auto fm = factorial_moment_test(atoms, k, {0.0, 1.0}, ValueWindow::at_least(0.0));
        m_hat[std::to_string(k)] = fm.m_hat.value;
      }
    }
    s["m_hat"] = m_hat;
    if (runs.size() >= 200) {
      const auto gu = gumbel_uniform_tests(extremes, table);
      s["ks_gumbel"] = gu.ks_gumbel.statistic;
      s["ks_uniform"] = gu.ks_uniform.statistic;
      s["p_values"] = {{"gumbel", gu.ks_gumbel.p_value}, {"uniform", gu.ks_uniform.p_value}};
      s["correlation"] = gu.correlation;
      s["n_excluded"] = gu.n_excluded;
      s["n_sentinel"] = gu.n_sentinel;
    } else {
      s["ks_gumbel"] = nullptr;
      s["ks_uniform"] = nullptr;
      s["p_values"] = nullptr;
    }
    summaries.push_back(s);
  }
  ctx.write("runs.csv", runs_csv.str());
  ctx.write("poisson_summary.json", dump_json(summaries));
  ctx.result.summary = summaries;

  if (Rs.size() >= 2 && n_runs >= 100) {
    std::optional<double> fitted;
    if (!zeta_predicted(ctx.kernel)) fitted = fit_theta_asymptotics(table, ctx.kernel).zeta_hat;
    const ScalingLawReport law = scaling_law_check(all_extremes, ctx.kernel, fitted);
    std::ostringstream os;
    os << "R,n_runs,median,q25,q75,predicted,relative_gap\n";
    for (const auto& row : law.rows) {
      os << format_double(row.R) << ',' << row.n_runs << ',' << format_double(row.median) << ','
         << format_double(row.q25) << ',' << format_double(row.q75) << ','
         << format_double(row.predicted) << ',' << format_double(row.relative_gap) << '\n';
    }
    ctx.write("scaling_law.csv", os.str());
  }
}

void run_splitting(Context& ctx) {
  const auto& cfg = ctx.config;
  const std::size_t n_paths = or_default<std::size_t>(cfg.n_paths, 200000);
  const std::vector<double> rs = cfg.r.empty() ? std::vector<double>{3.0} : cfg.r;
  const std::vector<double> ss = cfg.s.empty() ? std::vector<double>{3.0, 6.0, 10.0} : cfg.s;
  McOptions opt;
  opt.grid_factor = cfg.grid_factor;
  opt.workers = cfg.workers;
  std::ostringstream os;
  write_splitting_csv_header(os);
  json rows = json::array();
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const std::uint64_t seed = derive_seed(cfg.seed, kPurposeSplit + 16 * (i + 1));
    const auto scan = splitting_decay_scan(ctx.kernel, rs[i], ss, cfg.k, n_paths, seed, opt);
    for (std::size_t j = 0; j < ss.size(); ++j)
      ctx.result.streams.push_back({"splitting_r" + format_double(rs[i]) + "_s" + format_double(ss[j]),
                                    seed + j, 0, Chunking{n_paths, opt.chunk}.n_tasks()});
    write_splitting_csv(os, scan);
    rows.push_back({{"r", rs[i]}, {"decreasing", scan.decreasing}});
  }
  ctx.write("splitting.csv", os.str());
  ctx.result.summary = {{"kernel", ctx.kernel.spec()}, {"scans", rows}};
}

void run_clustering(Context& ctx) {
  const auto& cfg = ctx.config;
  const std::size_t n_paths = or_default<std::size_t>(cfg.n_paths, 200000);
  const std::vector<double> rs = cfg.r.empty() ? std::vector<double>{1.0, 2.0, 3.0} : cfg.r;
  McOptions opt;
  opt.grid_factor = cfg.grid_factor;
  opt.workers = cfg.workers;
  std::ostringstream os;
  write_clustering_csv_header(os);
  json rows = json::array();
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const std::uint64_t seed = derive_seed(cfg.seed, kPurposeCluster + 16 * (i + 1));
    const auto res = clustering_estimate(ctx.kernel, rs[i], n_paths, seed, opt);
    ctx.result.streams.push_back(
        {"clustering_r" + format_double(rs[i]), seed, 0, Chunking{n_paths, opt.chunk}.n_tasks()});
    write_clustering_csv(os, ctx.kernel.spec(), res);
    rows.push_back({{"r", rs[i]},
                    {"phi_hat", estimate_json(res.phi_hat)},
                    {"G_r", estimate_json(res.G_r)},
                    {"G_2r", estimate_json(res.G_2r)},
                    {"kappa_hat", res.kappa_hat},
                    {"kappa_lo", res.kappa_lo},
                    {"kappa_hi", res.kappa_hi}});
  }
  ctx.write("clustering.csv", os.str());
  ctx.result.summary = {{"kernel", ctx.kernel.spec()}, {"rows", rows}};
}

void run_report(Context& ctx) {
  json report = json::object();
  for (const char* name :
       {"manifest.json", "scaling_fit.json", "poisson_summary.json"}) {
    const fs::path p = ctx.dir / name;
    if (!fs::exists(p)) continue;
    std::ifstream in(p);
    try {
      report[name] = json::parse(in);
    } catch (const json::exception& e) {
      throw IoError("cannot parse '" + p.string() + "': " + e.what());
    }
  }
  for (const char* name : {"rice.csv", "scaling.csv", "runs.csv", "splitting.csv",
                           "clustering.csv", "scaling_law.csv"}) {
    const fs::path p = ctx.dir / name;
    if (!fs::exists(p)) continue;
    std::ifstream in(p);
    std::size_t lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    report["csv_rows"][name] = lines > 0 ? lines - 1 : 0;
  }
  if (report.empty()) throw IoError("no experiment outputs found in '" + ctx.dir.string() + "'");
  ctx.result.summary = report;
  ctx.write("report.json", dump_json(report));
}

}  // namespace

const char* to_string(Experiment e) noexcept {
  switch (e) {
    case Experiment::Rice: return "rice";
    case Experiment::Scaling: return "scaling";
    case Experiment::Poisson: return "poisson";
    case Experiment::Splitting: return "splitting";
    case Experiment::Clustering: return "clustering";
    case Experiment::Report: return "report";
  }
  return "unknown";
}

Experiment parse_experiment(const std::string& name) {
  for (Experiment e : {Experiment::Rice, Experiment::Scaling, Experiment::Poisson,
                       Experiment::Splitting, Experiment::Clustering, Experiment::Report})
    if (name == to_string(e)) return e;
  throw ConfigError("unknown experiment '" + name + "'");
}

void ExperimentConfig::validate() const {
  parse_kernel(kernel);
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(grid_factor > 0.0) || grid_factor > 1.0) throw ConfigError("grid-factor must be in (0, 1]");
  for (double x : R)
    if (!(x > 1.0)) throw ConfigError("R values must be > 1");
  if (r_max < 0.0) throw ConfigError("r-max must be positive");
  for (double x : r)
    if (!(x >= 0.0)) throw ConfigError("r values must be >= 0");
  for (double x : s)
    if (!(x > 0.0)) throw ConfigError("s values must be positive");
  if (k < 2 || k > 8) throw ConfigError("k must be between 2 and 8");
  if (out_dir.empty()) throw ConfigError("out directory must be given");
}

ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig cfg) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "experiment") cfg.experiment = parse_experiment(value);
    else if (key == "kernel") cfg.kernel = value;
    else if (key == "seed") cfg.seed = to_uint(key, value);
    else if (key == "workers") cfg.workers = static_cast<unsigned>(to_uint(key, value));
    else if (key == "n-paths") cfg.n_paths = to_uint(key, value);
    else if (key == "n-runs") cfg.n_runs = to_uint(key, value);
    else if (key == "R") cfg.R = to_list(key, value);
    else if (key == "r-max") cfg.r_max = to_double(key, value);
    else if (key == "r") cfg.r = to_list(key, value);
    else if (key == "s") cfg.s = to_list(key, value);
    else if (key == "k") cfg.k = to_uint(key, value);
    else if (key == "grid-factor") cfg.grid_factor = to_double(key, value);
    else if (key == "out") cfg.out_dir = value;
    else if (key == "theta-table") cfg.theta_table = value;
    else if (key == "dump-zeros") cfg.dump_zeros = value == "1" || value == "true";
    else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return cfg;
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "experiment=" << to_string(c.experiment) << '\n'
     << "kernel=" << c.kernel << '\n'
     << "seed=" << c.seed << '\n'
     << "workers=" << c.workers << '\n'
     << "n-paths=" << c.n_paths << '\n'
     << "n-runs=" << c.n_runs << '\n';
  if (!c.R.empty()) os << "R=" << join(c.R) << '\n';
  os << "r-max=" << format_double(c.r_max) << '\n';
  if (!c.r.empty()) os << "r=" << join(c.r) << '\n';
  if (!c.s.empty()) os << "s=" << join(c.s) << '\n';
  os << "k=" << c.k << '\n'
     << "grid-factor=" << format_double(c.grid_factor) << '\n'
     << "out=" << c.out_dir << '\n';
  if (!c.theta_table.empty()) os << "theta-table=" << c.theta_table << '\n';
  os << "dump-zeros=" << (c.dump_zeros ? 1 : 0) << '\n';
  return os.str();
}

json to_json(const ExperimentConfig& c) {
  return {{"experiment", to_string(c.experiment)},
          {"kernel", c.kernel},
          {"seed", c.seed},
          {"workers", c.workers},
          {"n_paths", c.n_paths},
          {"n_runs", c.n_runs},
          {"R", c.R},
          {"r_max", c.r_max},
          {"r", c.r},
          {"s", c.s},
          {"k", c.k},
          {"grid_factor", c.grid_factor},
          {"out", c.out_dir},
          {"theta_table", c.theta_table},
          {"dump_zeros", c.dump_zeros}};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) noexcept {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (purpose + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

const char* git_describe() noexcept { return GAPSIM_GIT_DESCRIBE; }

RunResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  Context ctx{config, parse_kernel(config.kernel), fs::path(config.out_dir), {}};
  std::error_code ec;
  fs::create_directories(ctx.dir, ec);
  if (ec || !fs::is_directory(ctx.dir))
    throw IoError("cannot create output directory '" + config.out_dir + "'");

  switch (config.experiment) {
    case Experiment::Rice: run_rice(ctx); break;
    case Experiment::Scaling: run_scaling(ctx); break;
    case Experiment::Poisson: run_poisson(ctx); break;
    case Experiment::Splitting: run_splitting(ctx); break;
    case Experiment::Clustering: run_clustering(ctx); break;
    case Experiment::Report: run_report(ctx); return ctx.result;
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json streams = json::array();
  for (const auto& s : ctx.result.streams)
    streams.push_back({{"name", s.name}, {"seed", s.seed}, {"first_task", s.first},
                       {"n_tasks", s.count}});
  json outputs = json::array();
  for (const auto& f : ctx.result.files) outputs.push_back(f.filename().string());
  const json manifest = {{"config", to_json(config)},
                         {"git_describe", git_describe()},
                         {"wall_time_s", wall},
                         {"rng", {{"generator", "philox4x32-10"},
                                  {"master_seed", config.seed},
                                  {"stream_rule", "key = task seed, counter = (draw, task index)"},
                                  {"tasks", streams}}},
                         {"outputs", outputs}};
  ctx.write("manifest.json", dump_json(manifest));
  ctx.write("config.txt", to_config_text(config));
  return ctx.result;
}

int exit_code_for(const std::exception& e) noexcept {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::Config: return 2;
      case ErrorKind::Io: return 3;
      case ErrorKind::Embedding: return 4;
      case ErrorKind::HorizonExhausted: return 5;
      case ErrorKind::Range: return 6;
      case ErrorKind::InsufficientData: return 7;
      case ErrorKind::Numerical: return 8;
    }
  }
  return 1;
}

}  // namespace gapsim
