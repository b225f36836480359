#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace gapsim {

enum class Experiment { Rice, Scaling, Poisson, Splitting, Clustering, Report };

const char* to_string(Experiment e) noexcept;
Experiment parse_experiment(const std::string& name);

// Flat configuration shared by the config file, the CLI flags and the
// manifest. Zero-valued sizes mean "experiment default".
struct ExperimentConfig {
  Experiment experiment = Experiment::Rice;
  std::string kernel = "gaussian";
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::size_t n_paths = 0;
  std::size_t n_runs = 0;
  std::vector<double> R;
  double r_max = 0.0;
  std::vector<double> r;        // splitting / clustering interval lengths
  std::vector<double> s;        // splitting separations
  std::size_t k = 2;
  double grid_factor = 0.05;
  std::string out_dir = "out";
  std::string theta_table;      // scaling CSV reused by the poisson experiment
  bool dump_zeros = false;

  // Validates ranges; throws ConfigError.
  void validate() const;
};

// "key=value" lines; '#' starts a comment. Keys match the long CLI flags.
ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base = {});
std::string to_config_text(const ExperimentConfig& config);
nlohmann::json to_json(const ExperimentConfig& config);

// Tasks first..first+count-1 of one estimator, keyed by `seed`.
struct StreamBlock {
  std::string name;
  std::uint64_t seed = 0;
  std::uint64_t first = 0;
  std::uint64_t count = 0;
};

struct RunResult {
  std::vector<std::filesystem::path> files;
  std::vector<StreamBlock> streams;
  nlohmann::json summary;
};

// Runs the experiment, writes its CSV/JSON outputs plus manifest.json and
// config.txt into config.out_dir.
RunResult run_experiment(const ExperimentConfig& config);

// Exit code for each error kind; documented in --help.
int exit_code_for(const std::exception& e) noexcept;

const char* git_describe() noexcept;

// Independent master seed for one component of an experiment.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) noexcept;

}  // namespace gapsim
