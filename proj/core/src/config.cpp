#include "infoflow/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "infoflow/datasets.hpp"
#include "infoflow/errors.hpp"

namespace infoflow {

namespace {

using nlohmann::json;

/// Collects problems so a bad config reports everything at once.
struct Checker {
  std::vector<std::string> errors;

  void fail(const std::string& where, const std::string& what) {
    errors.push_back(where + ": " + what);
  }

  void known_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
      if (allowed.count(key) == 0) {
        fail(where, "unknown key '" + key + "'");
      }
    }
  }

  template <typename T>
  void read(const json& obj, const std::string& where, const char* key,
            T& out) {
    if (!obj.contains(key)) return;
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(where, std::string("bad value for '") + key + "': " + e.what());
    }
  }

  void read_activation(const json& obj, const std::string& where,
                       const char* key, Activation& out) {
    if (!obj.contains(key)) return;
    try {
      out = activation_from_name(obj.at(key).get<std::string>());
    } catch (const std::exception& e) {
      fail(where, std::string("bad value for '") + key + "': " + e.what());
    }
  }
};

void parse_dataset(Checker& ck, const json& obj, const std::string& where,
                   DatasetConfig& out) {
  ck.known_keys(obj, where,
                {"kind", "path", "n_per_class", "noise_std", "turns",
                 "max_radius", "m", "dim", "n_clusters", "jitter", "lo", "hi",
                 "seed"});
  ck.read(obj, where, "kind", out.kind);
  ck.read(obj, where, "path", out.path);
  ck.read(obj, where, "n_per_class", out.n_per_class);
  ck.read(obj, where, "noise_std", out.noise_std);
  ck.read(obj, where, "turns", out.turns);
  ck.read(obj, where, "max_radius", out.max_radius);
  ck.read(obj, where, "m", out.m);
  ck.read(obj, where, "dim", out.dim);
  ck.read(obj, where, "n_clusters", out.n_clusters);
  ck.read(obj, where, "jitter", out.jitter);
  ck.read(obj, where, "lo", out.lo);
  ck.read(obj, where, "hi", out.hi);
  ck.read(obj, where, "seed", out.seed);
  static const std::set<std::string> kinds{
      "file", "spiral", "clusters", "scalar_step", "leaky_relu_toy"};
  if (kinds.count(out.kind) == 0) {
    ck.fail(where, "unknown dataset kind '" + out.kind + "'");
  }
  if (out.kind == "file" && out.path.empty()) {
    ck.fail(where, "file datasets need a 'path'");
  }
}

json dataset_to_json(const DatasetConfig& d) {
  json j;
  j["kind"] = d.kind;
  if (d.kind == "file") {
    j["path"] = d.path;
  } else if (d.kind == "spiral") {
    j["n_per_class"] = d.n_per_class;
    j["noise_std"] = d.noise_std;
    j["turns"] = d.turns;
    j["max_radius"] = d.max_radius;
    j["seed"] = d.seed;
  } else if (d.kind == "clusters") {
    j["m"] = d.m;
    j["dim"] = d.dim;
    j["n_clusters"] = d.n_clusters;
    j["jitter"] = d.jitter;
    j["seed"] = d.seed;
  } else if (d.kind == "scalar_step") {
    j["m"] = d.m;
    j["lo"] = d.lo;
    j["hi"] = d.hi;
  }
  return j;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");

  Checker ck;
  ExperimentConfig cfg;
  ck.known_keys(root, "config",
                {"name", "seed", "threads", "out_dir", "network", "dataset",
                 "test_dataset", "train", "estimator", "binning", "outputs",
                 "checkpoint_epochs"});
  ck.read(root, "config", "name", cfg.name);
  ck.read(root, "config", "seed", cfg.seed);
  ck.read(root, "config", "threads", cfg.threads);
  ck.read(root, "config", "out_dir", cfg.out_dir);
  ck.read(root, "config", "checkpoint_epochs", cfg.checkpoint_epochs);

  if (root.contains("network")) {
    const json& net = root["network"];
    const std::string where = "network";
    ck.known_keys(net, where,
                  {"kind", "dims", "activation", "leaky_slope", "beta"});
    ck.read(net, where, "kind", cfg.network.kind);
    ck.read(net, where, "dims", cfg.network.dims);
    ck.read_activation(net, where, "activation", cfg.network.activation);
    ck.read(net, where, "leaky_slope", cfg.network.leaky_slope);
    ck.read(net, where, "beta", cfg.network.beta);
    static const std::set<std::string> kinds{"mlp", "szt", "spiral",
                                             "toy_tanh", "toy_leaky_relu"};
    if (kinds.count(cfg.network.kind) == 0) {
      ck.fail(where, "unknown network kind '" + cfg.network.kind + "'");
    }
    if (cfg.network.kind == "mlp" && cfg.network.dims.size() < 2) {
      ck.fail(where, "mlp networks need 'dims' with at least two entries");
    }
    if (cfg.network.beta < 0.0) ck.fail(where, "beta must be >= 0");
  }

  if (root.contains("dataset")) {
    parse_dataset(ck, root["dataset"], "dataset", cfg.dataset);
  }
  if (root.contains("test_dataset")) {
    DatasetConfig test;
    parse_dataset(ck, root["test_dataset"], "test_dataset", test);
    cfg.test_dataset = test;
  }

  if (root.contains("train")) {
    const json& tr = root["train"];
    const std::string where = "train";
    ck.known_keys(tr, where,
                  {"loss", "learning_rate", "lr_decay", "epochs", "batch_size",
                   "ortho_alpha", "noise_during_training"});
    std::string loss;
    ck.read(tr, where, "loss", loss);
    if (!loss.empty()) {
      if (loss == "cross_entropy") {
        cfg.train.loss = LossKind::kCrossEntropy;
      } else if (loss == "mean_squared") {
        cfg.train.loss = LossKind::kMeanSquared;
      } else {
        ck.fail(where, "loss must be 'cross_entropy' or 'mean_squared'");
      }
    }
    ck.read(tr, where, "learning_rate", cfg.train.learning_rate);
    ck.read(tr, where, "lr_decay", cfg.train.lr_decay);
    ck.read(tr, where, "epochs", cfg.train.epochs);
    ck.read(tr, where, "batch_size", cfg.train.batch_size);
    ck.read(tr, where, "ortho_alpha", cfg.train.ortho_alpha);
    ck.read(tr, where, "noise_during_training",
            cfg.train.noise_during_training);
    if (cfg.train.learning_rate < 0.0) {
      ck.fail(where, "learning_rate must be >= 0");
    }
    // Zero epochs is allowed so snapshot-only runs can reuse the schema;
    // the train command itself insists on at least one epoch.
    if (cfg.train.epochs < 0) ck.fail(where, "epochs must be >= 0");
    if (cfg.train.batch_size < 0) ck.fail(where, "batch_size must be >= 0");
    if (cfg.train.ortho_alpha < 0.0) {
      ck.fail(where, "ortho_alpha must be >= 0");
    }
    if (!(cfg.train.lr_decay > 0.0) || cfg.train.lr_decay > 1.0) {
      ck.fail(where, "lr_decay must lie in (0, 1]");
    }
  }

  if (root.contains("estimator")) {
    const json& est = root["estimator"];
    const std::string where = "estimator";
    ck.known_keys(est, where,
                  {"n", "n_x", "n_mc", "control_variate", "layers",
                   "common_random_numbers", "beta_override"});
    ck.read(est, where, "n", cfg.estimator.n);
    ck.read(est, where, "n_x", cfg.estimator.n_x);
    ck.read(est, where, "n_mc", cfg.estimator.n_mc);
    ck.read(est, where, "control_variate", cfg.estimator.control_variate);
    ck.read(est, where, "layers", cfg.estimator_layers);
    ck.read(est, where, "common_random_numbers", cfg.common_random_numbers);
    if (est.contains("beta_override")) {
      double v = 0.0;
      ck.read(est, where, "beta_override", v);
      cfg.beta_override = v;
      if (!(v > 0.0)) ck.fail(where, "beta_override must be > 0");
    }
    if (cfg.estimator.n < 1 || cfg.estimator.n_x < 1 ||
        cfg.estimator.n_mc < 1) {
      ck.fail(where, "n, n_x and n_mc must be >= 1");
    }
  }

  if (root.contains("binning")) {
    const json& bin = root["binning"];
    const std::string where = "binning";
    ck.known_keys(bin, where,
                  {"bin_size", "lo", "hi", "clamp", "auto_range_unbounded"});
    if (bin.contains("bin_size")) {
      double v = 0.0;
      ck.read(bin, where, "bin_size", v);
      cfg.binning.bin_size = v;
      if (!(v > 0.0)) ck.fail(where, "bin_size must be > 0");
    }
    ck.read(bin, where, "lo", cfg.binning.lo);
    ck.read(bin, where, "hi", cfg.binning.hi);
    ck.read(bin, where, "clamp", cfg.binning.clamp);
    ck.read(bin, where, "auto_range_unbounded",
            cfg.binning.auto_range_unbounded);
    if (!(cfg.binning.hi > cfg.binning.lo)) {
      ck.fail(where, "binning range must satisfy hi > lo");
    }
  }

  if (root.contains("outputs")) {
    const json& out = root["outputs"];
    const std::string where = "outputs";
    ck.known_keys(out, where,
                  {"per_unit_entropy", "distance_histograms", "histogram_bins",
                   "density_epochs"});
    ck.read(out, where, "per_unit_entropy", cfg.outputs.per_unit_entropy);
    ck.read(out, where, "distance_histograms",
            cfg.outputs.distance_histograms);
    ck.read(out, where, "histogram_bins", cfg.outputs.histogram_bins);
    ck.read(out, where, "density_epochs", cfg.outputs.density_epochs);
  }

  for (int e : cfg.checkpoint_epochs) {
    if (e < 0) ck.fail("checkpoint_epochs", "epochs must be >= 0");
  }
  if (cfg.estimator_layers.size() > 0) {
    for (int l : cfg.estimator_layers) {
      if (l < 1) ck.fail("estimator", "layers are 1-based");
    }
  }

  if (!ck.errors.empty()) {
    std::ostringstream msg;
    msg << "invalid configuration (" << ck.errors.size() << " problem"
        << (ck.errors.size() > 1 ? "s" : "") << "):";
    for (const auto& e : ck.errors) msg << "\n  - " << e;
    throw ConfigError(msg.str());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["name"] = name;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["network"] =
      json{{"kind", network.kind},
           {"dims", network.dims},
           {"activation", activation_name(network.activation)},
           {"leaky_slope", network.leaky_slope},
           {"beta", network.beta}};
  j["dataset"] = dataset_to_json(dataset);
  if (test_dataset) j["test_dataset"] = dataset_to_json(*test_dataset);
  j["train"] = json{
      {"loss", train.loss == LossKind::kCrossEntropy ? "cross_entropy"
                                                     : "mean_squared"},
      {"learning_rate", train.learning_rate},
      {"lr_decay", train.lr_decay},
      {"epochs", train.epochs},
      {"batch_size", train.batch_size},
      {"ortho_alpha", train.ortho_alpha},
      {"noise_during_training", train.noise_during_training}};
  j["estimator"] = json{{"n", estimator.n},
                        {"n_x", estimator.n_x},
                        {"n_mc", estimator.n_mc},
                        {"control_variate", estimator.control_variate},
                        {"common_random_numbers", common_random_numbers},
                        {"layers", estimator_layers}};
  if (beta_override) j["estimator"]["beta_override"] = *beta_override;
  j["binning"] = json{{"lo", binning.lo},
                      {"hi", binning.hi},
                      {"clamp", binning.clamp},
                      {"auto_range_unbounded", binning.auto_range_unbounded}};
  if (binning.bin_size) j["binning"]["bin_size"] = *binning.bin_size;
  j["outputs"] = json{{"per_unit_entropy", outputs.per_unit_entropy},
                      {"distance_histograms", outputs.distance_histograms},
                      {"histogram_bins", outputs.histogram_bins},
                      {"density_epochs", outputs.density_epochs}};
  j["checkpoint_epochs"] = checkpoint_epochs;
  // threads intentionally excluded: worker count never changes results.
  return j.dump();
}

std::uint64_t ExperimentConfig::config_hash() const {
  const std::string canon = canonical_json();
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

NoisyNet build_network(const NetworkConfig& cfg, std::uint64_t seed) {
  if (cfg.kind == "mlp") {
    NoisyNet net = make_mlp(cfg.dims, cfg.activation, Activation::kLinear,
                            cfg.beta, seed);
    for (auto& l : net.layers) l.leaky_slope = cfg.leaky_slope;
    return net;
  }
  if (cfg.kind == "szt") return szt_net(seed, cfg.activation, cfg.beta);
  if (cfg.kind == "spiral") return spiral_net(seed, cfg.activation, cfg.beta);
  if (cfg.kind == "toy_tanh") return toy_tanh_net(cfg.beta);
  if (cfg.kind == "toy_leaky_relu") return toy_leaky_relu_net(cfg.beta);
  throw ConfigError("unknown network kind: " + cfg.kind);
}

LabeledDataset build_dataset(const DatasetConfig& cfg) {
  if (cfg.kind == "file") return load_dataset(cfg.path);
  if (cfg.kind == "spiral") {
    return spiral_dataset(cfg.n_per_class, cfg.noise_std, cfg.turns, cfg.seed,
                          cfg.max_radius);
  }
  if (cfg.kind == "clusters") {
    return clustered_binary_dataset(cfg.m, cfg.dim, cfg.n_clusters, cfg.jitter,
                                    cfg.seed);
  }
  if (cfg.kind == "scalar_step") {
    return scalar_step_dataset(cfg.m, cfg.lo, cfg.hi);
  }
  if (cfg.kind == "leaky_relu_toy") return leaky_relu_toy_dataset();
  throw ConfigError("unknown dataset kind: " + cfg.kind);
}

double resolve_bin_size(const BinningConfig& binning, double beta) {
  if (binning.bin_size) return *binning.bin_size;
  return beta > 0.0 ? 10.0 * beta : 0.001;
}

}  // namespace infoflow
