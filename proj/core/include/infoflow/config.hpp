#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "infoflow/clustering.hpp"
#include "infoflow/noisy_net.hpp"
#include "infoflow/sp_estimator.hpp"

namespace infoflow {

struct NetworkConfig {
  std::string kind = "mlp";  // mlp | szt | spiral | toy_tanh | toy_leaky_relu
  std::vector<int> dims;     // mlp only
  Activation activation = Activation::kTanh;
  double leaky_slope = 0.1;
  double beta = 0.005;
};

struct DatasetConfig {
  std::string kind = "spiral";  // file|spiral|clusters|scalar_step|leaky_relu_toy
  std::string path;
  int n_per_class = 100;
  double noise_std = 0.05;
  double turns = 0.75;
  double max_radius = 2.0;
  int m = 1000;
  int dim = 12;
  int n_clusters = 16;
  double jitter = 0.1;
  double lo = -2.0;
  double hi = 2.0;
  std::uint64_t seed = 1;
};

struct BinningConfig {
  std::optional<double> bin_size;  // default: 10 * beta (0.001 when beta = 0)
  double lo = -1.0;
  double hi = 1.0;
  bool clamp = true;
  /// For unbounded activations: use [0, observed max] per layer per epoch.
  bool auto_range_unbounded = true;
};

struct OutputConfig {
  bool per_unit_entropy = false;
  bool distance_histograms = false;
  int histogram_bins = 50;
  std::vector<int> density_epochs;  // 1-d density snapshots at these epochs
};

/// Everything one run needs. Parsed from JSON with unknown keys rejected and
/// every validation error reported at once.
struct ExperimentConfig {
  std::string name = "run";
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = "out";

  NetworkConfig network;
  DatasetConfig dataset;
  std::optional<DatasetConfig> test_dataset;
  TrainConfig train;
  EstimatorOptions estimator;
  std::vector<int> estimator_layers;  // empty = all layers
  /// Reuse one sampling seed per layer across all checkpoints, so curves
  /// over epochs move only when the parameters move.
  bool common_random_numbers = true;
  std::optional<double> beta_override;  // estimation-time noise, discouraged
  BinningConfig binning;
  OutputConfig outputs;
  std::vector<int> checkpoint_epochs;

  /// Stable 64-bit hash of the canonical JSON form; machine-independent.
  std::uint64_t config_hash() const;
  std::string canonical_json() const;
};

/// Parse + validate. Throws ConfigError listing every problem found.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

NoisyNet build_network(const NetworkConfig& cfg, std::uint64_t seed);
LabeledDataset build_dataset(const DatasetConfig& cfg);

/// Bin width resolution: explicit value, else 10 * beta, else 0.001.
double resolve_bin_size(const BinningConfig& binning, double beta);

}  // namespace infoflow
