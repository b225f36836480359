#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gapsim/error.hpp"
#include "gapsim/experiments.hpp"

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  invalid configuration\n"
    "  3  I/O failure\n"
    "  4  circulant embedding failed\n"
    "  5  simulation horizon exhausted\n"
    "  6  value outside the theta table\n"
    "  7  insufficient data for an estimate\n"
    "  8  numerical failure\n"
    "Errors are also reported as one JSON object on stderr.";

void report_error(const std::exception& e, int code) {
  nlohmann::json record = {{"error", e.what()}, {"exit_code", code}};
  if (const auto* err = dynamic_cast<const gapsim::Error*>(&e))
    record["kind"] = gapsim::to_string(err->kind());
  else
    record["kind"] = "internal";
  std::cerr << record.dump() << '\n';
}

// Values given on the command line; unset ones keep the config file value.
struct Flags {
  std::string config_file;
  std::string kernel;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::size_t n_paths = 0;
  std::size_t n_runs = 0;
  std::vector<double> R;
  double r_max = 0.0;
  std::vector<double> r;
  std::vector<double> s;
  std::size_t k = 0;
  double grid_factor = 0.0;
  std::string out;
  std::string theta_table;
  bool dump_zeros = false;
};

void add_common(CLI::App* sub, Flags& f, std::map<std::string, CLI::Option*>& opts) {
  opts["config"] = sub->add_option("--config", f.config_file, "key=value config file");
  opts["kernel"] = sub->add_option("--kernel", f.kernel, "gaussian | cauchy:alpha=A[,scale=C][,len=L]");
  opts["seed"] = sub->add_option("--seed", f.seed, "master seed (default: $GAPSIM_SEED or 1)");
  opts["workers"] = sub->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
  opts["out"] = sub->add_option("--out", f.out, "output directory");
  opts["grid-factor"] = sub->add_option("--grid-factor", f.grid_factor, "grid spacing times Rice intensity");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaps between zeros of stationary Gaussian processes"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gapsim::git_describe()));

  Flags f;
  std::map<std::string, std::map<std::string, CLI::Option*>> opts;

  auto* rice = app.add_subcommand("rice", "zero intensity against the Rice formula");
  auto* scaling = app.add_subcommand("scaling", "G(r), lambda(r) and theta(r) tables");
  auto* poisson = app.add_subcommand("poisson", "rescaled gap point process and largest gaps");
  auto* splitting = app.add_subcommand("splitting", "gap probability splitting ratios");
  auto* clustering = app.add_subcommand("clustering", "clustering exponent probes");
  auto* report = app.add_subcommand("report", "summarize outputs in --out");

  for (auto* sub : {rice, scaling, poisson, splitting, clustering}) {
    auto& o = opts[sub->get_name()];
    add_common(sub, f, o);
    o["n-paths"] = sub->add_option("--n-paths", f.n_paths, "Monte Carlo paths");
  }
  opts["report"]["out"] = report->add_option("--out", f.out, "output directory");
  opts["report"]["config"] = report->add_option("--config", f.config_file, "key=value config file");

  opts["rice"]["r-max"] = rice->add_option("--r-max", f.r_max, "path length");
  opts["rice"]["dump-zeros"] = rice->add_flag("--dump-zeros", f.dump_zeros, "write zeros.csv");
  opts["scaling"]["r-max"] = scaling->add_option("--r-max", f.r_max, "largest r (default 12 / Rice intensity)");
  auto& po = opts["poisson"];
  po["n-runs"] = poisson->add_option("--n-runs", f.n_runs, "independent windows per R");
  po["R"] = poisson->add_option("--R", f.R, "window length (repeatable)")->delimiter(',');
  po["r-max"] = poisson->add_option("--r-max", f.r_max, "theta table range");
  po["theta-table"] = poisson->add_option("--theta-table", f.theta_table, "scaling.csv to reuse");
  auto& so = opts["splitting"];
  so["r"] = splitting->add_option("--r", f.r, "interval length (repeatable)")->delimiter(',');
  so["s"] = splitting->add_option("--s", f.s, "separation (repeatable)")->delimiter(',');
  so["k"] = splitting->add_option("--k", f.k, "number of intervals");
  opts["clustering"]["r"] =
      clustering->add_option("--r", f.r, "interval length (repeatable)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    auto& o = opts[name];
    auto given = [&](const char* key) { return o.count(key) && o[key]->count() > 0; };

    gapsim::ExperimentConfig cfg;
    if (const char* env = std::getenv("GAPSIM_SEED")) {
      try {
        cfg.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw gapsim::ConfigError("GAPSIM_SEED is not an integer: '" + std::string(env) + "'");
      }
    }
    if (given("config")) {
      std::ifstream in(f.config_file);
      if (!in) throw gapsim::IoError("cannot read config file '" + f.config_file + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      cfg = gapsim::parse_config_text(ss.str(), cfg);
    }
    cfg.experiment = gapsim::parse_experiment(name);
    if (given("kernel")) cfg.kernel = f.kernel;
    if (given("seed")) cfg.seed = f.seed;
    if (given("workers")) cfg.workers = f.workers;
    if (given("out")) cfg.out_dir = f.out;
    if (given("grid-factor")) cfg.grid_factor = f.grid_factor;
    if (given("n-paths")) cfg.n_paths = f.n_paths;
    if (given("n-runs")) cfg.n_runs = f.n_runs;
    if (given("R")) cfg.R = f.R;
    if (given("r-max")) cfg.r_max = f.r_max;
    if (given("r")) cfg.r = f.r;
    if (given("s")) cfg.s = f.s;
    if (given("k")) cfg.k = f.k;
    if (given("theta-table")) cfg.theta_table = f.theta_table;
    if (given("dump-zeros")) cfg.dump_zeros = f.dump_zeros;

    const auto result = gapsim::run_experiment(cfg);
    std::cout << result.summary.dump(2) << '\n';
    return 0;
  } catch (const std::exception& e) {
    const int code = gapsim::exit_code_for(e);
    report_error(e, code);
    return code;
  }
}
