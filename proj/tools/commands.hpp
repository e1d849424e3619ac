#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "infoflow/config.hpp"

namespace infoflow::cli {

/// Accumulates the run record: every command writes out_dir/manifest.json
/// listing the config hash, seeds, per-phase wall-clock and every output
/// file it produced.
class RunManifest {
 public:
  RunManifest(std::string command, std::string out_dir,
              std::uint64_t config_hash, std::uint64_t seed);

  void add_output(const std::string& path);
  void add_phase(const std::string& name, double seconds);
  void write() const;

  /// Register + return an output path inside out_dir.
  std::string out_path(const std::string& filename);

 private:
  std::string command_;
  std::string out_dir_;
  std::uint64_t config_hash_;
  std::uint64_t seed_;
  std::vector<std::pair<std::string, double>> phases_;
  std::vector<std::string> outputs_;
};

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key.path=json_value
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
};

/// Load + patch + parse the experiment config for a command.
ExperimentConfig resolve_config(const CommonArgs& args);

int cmd_train(const ExperimentConfig& cfg);
int cmd_estimate(const ExperimentConfig& cfg, const std::string& checkpoints);

struct TheoryArgs {
  int dim = 5;
  double beta = 0.1;
  std::int64_t n = 1000000;
  std::int64_t n_mc = 1000;
  double epsilon = 0.01;
  double delta = 0.1;
  bool bounded = true;
  bool subgaussian = false;
  double mu = 0.0;
  double k = 1.0;
  double second_moment = 1.0;
  std::string out_dir = "out";
};
int cmd_theory(const TheoryArgs& args);

struct ToyArgs {
  std::string which = "tanh1";  // tanh1 | leaky_relu2
  std::vector<double> betas;    // empty = config beta
};
int cmd_toy(const CommonArgs& common, const ToyArgs& args);

struct AnalyzeDumpArgs {
  std::vector<std::string> dumps;
  std::string out_dir = "out";
  double bin_size = 0.001;
  double lo = -1.0;
  double hi = 1.0;
  int histogram_bins = 50;
  bool per_unit = true;
  std::uint64_t seed = 1;
};
int cmd_analyze_dump(const AnalyzeDumpArgs& args);

struct AdviseArgs {
  int layer = 1;
  double target_tol = 0.05;
  std::int64_t cap = 4096;
  std::string checkpoint;  // optional: estimate on a trained net
};
int cmd_advise_n(const ExperimentConfig& cfg, const AdviseArgs& args);

}  // namespace infoflow::cli
