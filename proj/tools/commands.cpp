#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "infoflow/clustering.hpp"
#include "infoflow/datasets.hpp"
#include "infoflow/entropy.hpp"
#include "infoflow/errors.hpp"
#include "infoflow/io.hpp"
#include "infoflow/rng.hpp"
#include "infoflow/sp_estimator.hpp"
#include "infoflow/svg.hpp"
#include "infoflow/theory.hpp"

namespace infoflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string checkpoint_name(int epoch) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "checkpoint_epoch_%06d.ckpt", epoch);
  return buf;
}

/// Noisy layer outputs T_layer = S_layer + Z for the whole dataset.
ActivationSet layer_outputs(const NoisyNet& net, const LabeledDataset& data,
                            int layer, std::uint64_t seed) {
  ActivationSet acts =
      collect_activations(net, data, layer, ForwardMode::with_noise(seed));
  const Layer& target = net.layers[static_cast<std::size_t>(layer - 1)];
  if (target.beta > 0.0) {
    for (Eigen::Index r = 0; r < acts.values.rows(); ++r) {
      auto stream = rng::substream(
          seed, {rng::tag::kLayerNoise, static_cast<std::uint64_t>(r)});
      for (Eigen::Index c = 0; c < acts.values.cols(); ++c) {
        acts.values(r, c) += stream.normal() * target.beta;
      }
    }
  }
  return acts;
}

/// Activation-aware binning range: saturating layers use the configured
/// range, rectified layers use [0, observed max], unbounded layers use the
/// observed span.
BinningSpec binning_for_layer(const BinningConfig& cfg, double bin_size,
                              Activation act,
                              const Eigen::MatrixXd& values) {
  double lo = cfg.lo;
  double hi = cfg.hi;
  if (cfg.auto_range_unbounded &&
      (act == Activation::kRelu || act == Activation::kLeakyRelu ||
       act == Activation::kLinear)) {
    const double vmin = values.minCoeff();
    const double vmax = values.maxCoeff();
    lo = act == Activation::kRelu ? 0.0 : vmin;
    hi = std::max(vmax, lo + bin_size);
  }
  if (hi - lo < bin_size) hi = lo + bin_size;
  BinningSpec spec;
  spec.bin_size = bin_size;
  spec.lo = lo;
  spec.hi = hi;
  spec.clamp_out_of_range = true;
  return spec;
}

struct LossTrace {
  std::map<int, double> train;
  std::map<int, double> test;
};

LossTrace read_loss_csv(const std::string& path) {
  LossTrace trace;
  std::ifstream in(path);
  if (!in) return trace;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string field;
    std::getline(row, field, ',');
    const int epoch = std::stoi(field);
    std::getline(row, field, ',');
    trace.train[epoch] = std::strtod(field.c_str(), nullptr);
    if (std::getline(row, field, ',')) {
      trace.test[epoch] = std::strtod(field.c_str(), nullptr);
    }
  }
  return trace;
}

double lookup_or_nan(const std::map<int, double>& m, int key) {
  const auto it = m.find(key);
  return it == m.end() ? std::numeric_limits<double>::quiet_NaN()
                       : it->second;
}

void write_loss_csv(const std::string& path,
                    const std::vector<double>& train_loss,
                    const std::vector<double>& test_loss) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  out << "epoch,train_loss,test_loss\n";
  for (std::size_t e = 0; e < train_loss.size(); ++e) {
    out << (e + 1) << ',' << format_double(train_loss[e]) << ','
        << format_double(e < test_loss.size()
                             ? test_loss[e]
                             : std::numeric_limits<double>::quiet_NaN())
        << '\n';
  }
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

RunManifest::RunManifest(std::string command, std::string out_dir,
                         std::uint64_t config_hash, std::uint64_t seed)
    : command_(std::move(command)),
      out_dir_(std::move(out_dir)),
      config_hash_(config_hash),
      seed_(seed) {
  fs::create_directories(out_dir_);
}

void RunManifest::add_output(const std::string& path) {
  outputs_.push_back(path);
}

void RunManifest::add_phase(const std::string& name, double seconds) {
  phases_.emplace_back(name, seconds);
}

std::string RunManifest::out_path(const std::string& filename) {
  const std::string full = (fs::path(out_dir_) / filename).string();
  outputs_.push_back(full);
  return full;
}

void RunManifest::write() const {
  json j;
  j["command"] = command_;
  j["config_hash"] = hex64(config_hash_);
  j["seed"] = seed_;
  j["version"] = kVersion;
  json phases = json::object();
  for (const auto& [name, secs] : phases_) phases[name] = secs;
  j["wall_clock_s"] = phases;
  j["outputs"] = outputs_;
  const std::string path = (fs::path(out_dir_) / "manifest.json").string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  out << j.dump(2) << '\n';
}

ExperimentConfig resolve_config(const CommonArgs& args) {
  json root = json::object();
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw ConfigError("cannot open config file: " + args.config_path);
    try {
      in >> root;
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  for (const std::string& ov : args.overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override must look like key.path=value: " + ov);
    }
    const std::string path = ov.substr(0, eq);
    const std::string value = ov.substr(eq + 1);
    json* node = &root;
    std::istringstream segs(path);
    std::string seg;
    std::vector<std::string> parts;
    while (std::getline(segs, seg, '.')) parts.push_back(seg);
    if (parts.empty()) throw ConfigError("empty override path: " + ov);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      node = &((*node)[parts[i]]);
    }
    try {
      (*node)[parts.back()] = json::parse(value);
    } catch (const json::parse_error&) {
      (*node)[parts.back()] = value;  // bare strings need no quotes
    }
  }
  ExperimentConfig cfg = parse_experiment_config(root.dump());
  if (args.seed) cfg.seed = *args.seed;
  if (args.threads) cfg.threads = *args.threads;
  if (args.out_dir) cfg.out_dir = *args.out_dir;
  return cfg;
}

int cmd_train(const ExperimentConfig& cfg) {
  if (cfg.train.epochs < 1) {
    throw ConfigError("train needs at least one epoch");
  }
  RunManifest manifest("train", cfg.out_dir, cfg.config_hash(), cfg.seed);

  Timer setup;
  NoisyNet net = build_network(cfg.network, cfg.seed);
  const LabeledDataset data = build_dataset(cfg.dataset);
  LabeledDataset test_data;
  const bool has_test = cfg.test_dataset.has_value();
  if (has_test) test_data = build_dataset(*cfg.test_dataset);
  manifest.add_phase("setup", setup.seconds());

  std::vector<int> snaps = cfg.checkpoint_epochs;
  if (snaps.empty()) snaps = {0, cfg.train.epochs};

  TrainConfig tcfg = cfg.train;
  tcfg.seed = cfg.seed;

  Timer fit;
  const TrainResult result =
      train(net, data, tcfg, snaps, has_test ? &test_data : nullptr);
  manifest.add_phase("train", fit.seconds());

  Timer io;
  for (const auto& [epoch, snapshot] : result.checkpoints) {
    save_checkpoint(manifest.out_path(checkpoint_name(epoch)), snapshot,
                    epoch);
  }
  write_loss_csv(manifest.out_path("loss.csv"), result.train_loss,
                 result.test_loss);
  manifest.add_phase("write", io.seconds());
  manifest.write();

  std::cout << "trained " << cfg.network.kind << " for " << cfg.train.epochs
            << " epochs; final train loss "
            << format_double(result.train_loss.empty()
                                 ? std::numeric_limits<double>::quiet_NaN()
                                 : result.train_loss.back())
            << "; " << result.checkpoints.size() << " checkpoints in "
            << cfg.out_dir << "\n";
  return 0;
}

int cmd_estimate(const ExperimentConfig& cfg, const std::string& checkpoints) {
  const std::string ckpt_dir = checkpoints.empty() ? cfg.out_dir : checkpoints;
  RunManifest manifest("estimate", cfg.out_dir, cfg.config_hash(), cfg.seed);

  // Collect checkpoints sorted by epoch.
  std::vector<std::pair<int, std::string>> found;
  if (fs::exists(ckpt_dir)) {
    for (const auto& entry : fs::directory_iterator(ckpt_dir)) {
      const std::string name = entry.path().filename().string();
      int epoch = 0;
      if (std::sscanf(name.c_str(), "checkpoint_epoch_%d.ckpt", &epoch) == 1) {
        found.emplace_back(epoch, entry.path().string());
      }
    }
  }
  std::sort(found.begin(), found.end());
  if (found.empty()) {
    throw ConfigError("no checkpoints found in '" + ckpt_dir +
                      "' (expected checkpoint_epoch_*.ckpt)");
  }
  for (int epoch : cfg.checkpoint_epochs) {
    const bool present = std::any_of(
        found.begin(), found.end(),
        [epoch](const auto& f) { return f.first == epoch; });
    if (!present) {
      throw ConfigError("missing checkpoint for epoch " +
                        std::to_string(epoch) + " in '" + ckpt_dir + "'");
    }
  }
  const LossTrace losses =
      read_loss_csv((fs::path(ckpt_dir) / "loss.csv").string());

  const LabeledDataset data = build_dataset(cfg.dataset);

  Timer run;
  std::vector<ResultRow> rows;
  std::map<int, std::vector<std::pair<int, double>>> mi_series;   // layer -> (epoch, val)
  std::map<int, std::vector<std::pair<int, double>>> bin_series;  // layer -> (epoch, val)
  bool warned_deterministic = false;
  bool warned_override = false;
  std::optional<std::ofstream> unit_out;
  std::optional<std::ofstream> hist_out;
  if (cfg.outputs.per_unit_entropy) {
    unit_out.emplace(manifest.out_path("per_unit_entropy.csv"),
                     std::ios::binary);
    *unit_out << "epoch,layer,unit,entropy\n";
  }
  if (cfg.outputs.distance_histograms) {
    hist_out.emplace(manifest.out_path("distance_histograms.csv"),
                     std::ios::binary);
    *hist_out << "epoch,layer,bin_lo,bin_hi,within,between\n";
  }

  for (const auto& [epoch, path] : found) {
    Checkpoint ck = load_checkpoint(path);
    if (cfg.beta_override) {
      if (!warned_override) {
        std::cerr << "warning: estimating with beta = " << *cfg.beta_override
                  << " instead of the training noise; the estimate no longer "
                     "describes the trained channel\n";
        warned_override = true;
      }
      for (auto& l : ck.net.layers) l.beta = *cfg.beta_override;
    }
    std::vector<int> layers = cfg.estimator_layers;
    if (layers.empty()) {
      for (int l = 1; l <= ck.net.depth(); ++l) layers.push_back(l);
    }

    for (int layer : layers) {
      if (layer < 1 || layer > ck.net.depth()) {
        throw ConfigError("estimator layer " + std::to_string(layer) +
                          " out of range for this network");
      }
      const Layer& target = ck.net.layers[static_cast<std::size_t>(layer - 1)];
      ResultRow row;
      row.epoch = epoch;
      row.layer = layer;
      row.train_loss = lookup_or_nan(losses.train, epoch);
      row.test_loss = lookup_or_nan(losses.test, epoch);

      const std::uint64_t layer_seed =
          cfg.common_random_numbers
              ? rng::derive_key(cfg.seed,
                                {static_cast<std::uint64_t>(layer)})
              : rng::derive_key(cfg.seed,
                                {static_cast<std::uint64_t>(epoch),
                                 static_cast<std::uint64_t>(layer)});

      const ActivationSet outputs =
          layer_outputs(ck.net, data, layer, layer_seed);
      const double bin_size =
          resolve_bin_size(cfg.binning, target.beta);
      const BinningSpec spec = binning_for_layer(
          cfg.binning, bin_size, target.activation, outputs.values);
      row.binned_entropy = binned_entropy(outputs, spec);
      bin_series[layer].emplace_back(epoch, row.binned_entropy);

      if (target.beta > 0.0) {
        EstimatorOptions opts = cfg.estimator;
        opts.threads = cfg.threads;
        const MIEstimate mi =
            estimate_mi(ck.net, data, layer, layer_seed, opts);
        row.i_sp = mi.i_sp;
        row.h_uncond = mi.h_unconditional.value;
        row.h_cond_mean = mi.h_conditional_mean;
        row.lb = mi.h_unconditional.lower_bound;
        row.ub = mi.h_unconditional.upper_bound;
        row.mc_se = mi.combined_std_error;
        mi_series[layer].emplace_back(epoch, mi.i_sp);
      } else if (!warned_deterministic) {
        std::cerr << "note: network layers with beta = 0 are deterministic; "
                     "I(X;T) is vacuous there and only binned diagnostics "
                     "are reported\n";
        warned_deterministic = true;
      }

      if (unit_out) {
        const auto units = per_unit_binned_entropy(outputs, spec);
        for (std::size_t k = 0; k < units.size(); ++k) {
          *unit_out << epoch << ',' << layer << ',' << k << ','
                    << format_double(units[k]) << '\n';
        }
      }
      if (hist_out && outputs.labels) {
        HistogramOptions hopts;
        hopts.n_bins = cfg.outputs.histogram_bins;
        hopts.seed = layer_seed;
        const auto hist = pairwise_distance_histogram(outputs, hopts);
        for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) {
          *hist_out << epoch << ',' << layer << ','
                    << format_double(hist.edges[b]) << ','
                    << format_double(hist.edges[b + 1]) << ','
                    << hist.within_counts[b] << ',' << hist.between_counts[b]
                    << '\n';
        }
      }
      rows.push_back(row);
    }
  }
  manifest.add_phase("estimate", run.seconds());

  Timer io;
  write_results_csv(manifest.out_path("results.csv"), rows);
  for (const auto& [layer, serie] : bin_series) {
    std::vector<PlotSeries> plot;
    PlotSeries bin_plot{"binned entropy", {}, {}};
    for (const auto& [e, v] : serie) {
      bin_plot.x.push_back(e);
      bin_plot.y.push_back(v);
    }
    plot.push_back(std::move(bin_plot));
    if (mi_series.count(layer) != 0) {
      PlotSeries mi_plot{"mutual information", {}, {}};
      for (const auto& [e, v] : mi_series[layer]) {
        mi_plot.x.push_back(e);
        mi_plot.y.push_back(v);
      }
      plot.push_back(std::move(mi_plot));
    }
    write_line_svg(
        manifest.out_path("layer_" + std::to_string(layer) + ".svg"),
        "layer " + std::to_string(layer), "epoch", "nats", plot);
  }
  manifest.add_phase("write", io.seconds());
  manifest.write();
  std::cout << "estimated " << rows.size() << " (epoch, layer) points into "
            << cfg.out_dir << "\n";
  return 0;
}

int cmd_theory(const TheoryArgs& args) {
  RunManifest manifest("theory", args.out_dir, 0, 0);
  std::vector<std::pair<std::string, TheoryReport>> reports;
  if (args.bounded) {
    reports.emplace_back(
        "bounded",
        theory_report(args.dim, args.beta, args.n, args.n_mc, args.epsilon,
                      args.delta, RiskClass::bounded(), args.second_moment));
  }
  if (args.subgaussian) {
    reports.emplace_back(
        "subgaussian",
        theory_report(args.dim, args.beta, args.n, args.n_mc, args.epsilon,
                      args.delta, RiskClass::subgaussian(args.mu, args.k),
                      args.second_moment));
  }
  if (reports.empty()) {
    throw ConfigError("select at least one class: --bounded / --subgaussian");
  }

  std::ostringstream table;
  table << "inputs: d=" << args.dim << " beta=" << format_double(args.beta)
        << " n=" << args.n << " n_mc=" << args.n_mc
        << " epsilon=" << format_double(args.epsilon)
        << " delta=" << format_double(args.delta);
  if (args.subgaussian) {
    table << " mu=" << format_double(args.mu) << " K=" << format_double(args.k)
          << " M_C=" << format_double(args.second_moment);
  }
  table << "\n";
  table << "class        risk_bound     bias_floor     k_star  min_n"
           "            mc_mse\n";
  for (const auto& [name, r] : reports) {
    char line[256];
    std::snprintf(line, sizeof(line),
                  "%-12s %-14.8g %-14.8g %-7lld %-16s %-14.8g\n", name.c_str(),
                  r.risk, r.bias, static_cast<long long>(r.k_star),
                  r.min_n.saturated
                      ? ("~e^" + format_double(r.min_n.log_n)).c_str()
                      : std::to_string(r.min_n.n).c_str(),
                  r.mc_mse);
    table << line;
  }
  std::cout << table.str();

  const std::string csv = manifest.out_path("theory.csv");
  std::ofstream out(csv, std::ios::binary);
  out << "class,d,beta,n,n_mc,epsilon,delta,risk_bound,bias_floor,k_star,"
         "min_n,log_min_n,mc_mse\n";
  for (const auto& [name, r] : reports) {
    out << name << ',' << r.dim << ',' << format_double(r.beta) << ',' << r.n
        << ',' << r.n_mc << ',' << format_double(r.epsilon) << ','
        << format_double(r.delta) << ',' << format_double(r.risk) << ','
        << format_double(r.bias) << ',' << r.k_star << ',' << r.min_n.n << ','
        << format_double(r.min_n.log_n) << ',' << format_double(r.mc_mse)
        << '\n';
  }
  out.close();
  manifest.write();
  return 0;
}

namespace {

/// Density snapshot rows for every 1-d layer of a toy net.
void density_snapshot(std::ofstream& out, const NoisyNet& net,
                      const LabeledDataset& data, int epoch,
                      std::uint64_t seed) {
  for (int layer = 1; layer <= net.depth(); ++layer) {
    const Layer& target = net.layers[static_cast<std::size_t>(layer - 1)];
    if (target.out_dim() != 1 || target.beta <= 0.0) continue;
    const ActivationSet acts = collect_activations(
        net, data, layer,
        ForwardMode::with_noise(rng::derive_key(
            seed, {static_cast<std::uint64_t>(epoch),
                   static_cast<std::uint64_t>(layer), 0x5eed})));
    const GaussianMixture g = mixture_from_samples(acts.values, target.beta);
    const double lo = g.centers.minCoeff() - 4.0 * g.beta;
    const double hi = g.centers.maxCoeff() + 4.0 * g.beta;
    const int steps = 400;
    for (int k = 0; k <= steps; ++k) {
      Eigen::VectorXd t(1);
      t[0] = lo + (hi - lo) * k / steps;
      out << epoch << ',' << layer << ',' << format_double(t[0]) << ','
          << format_double(std::exp(mixture_log_density(g, t))) << '\n';
    }
  }
}

}  // namespace

int cmd_toy(const CommonArgs& common, const ToyArgs& args) {
  // Toy defaults are prepended so explicit --set / config values still win.
  CommonArgs patched = common;
  std::vector<std::string> defaults;
  if (args.which == "tanh1") {
    defaults = {"network.kind=toy_tanh", "dataset.kind=scalar_step",
                "dataset.m=32", "train.loss=mean_squared",
                "train.learning_rate=0.01", "network.beta=0.05",
                "train.epochs=500"};
  } else if (args.which == "leaky_relu2") {
    defaults = {"network.kind=toy_leaky_relu", "dataset.kind=leaky_relu_toy",
                "train.loss=mean_squared", "train.learning_rate=0.001",
                "network.beta=0.05", "train.epochs=500"};
  } else {
    throw ConfigError("unknown toy '" + args.which +
                      "' (expected tanh1 or leaky_relu2)");
  }
  patched.overrides.insert(patched.overrides.begin(), defaults.begin(),
                           defaults.end());
  ExperimentConfig cfg = resolve_config(patched);

  RunManifest manifest("toy", cfg.out_dir, cfg.config_hash(), cfg.seed);
  const LabeledDataset data = build_dataset(cfg.dataset);

  std::vector<double> betas = args.betas;
  if (betas.empty()) betas.push_back(cfg.network.beta);

  std::vector<int> snaps = cfg.checkpoint_epochs;
  if (snaps.empty()) {
    snaps = {0};
    if (cfg.train.epochs > 0) snaps.push_back(cfg.train.epochs);
  }

  std::vector<PlotSeries> mi_plot;
  Timer run;
  for (double beta : betas) {
    cfg.network.beta = beta;
    NoisyNet net = build_network(cfg.network, cfg.seed);

    std::vector<std::pair<int, NoisyNet>> checkpoints;
    std::vector<double> train_loss;
    if (cfg.train.epochs == 0) {
      checkpoints.emplace_back(0, net);  // initial-state snapshot only
    } else {
      TrainConfig tcfg = cfg.train;
      tcfg.seed = cfg.seed;
      const TrainResult result = train(net, data, tcfg, snaps);
      checkpoints = result.checkpoints;
      train_loss = result.train_loss;
    }

    const std::string tag = format_double(beta);
    std::vector<ResultRow> rows;
    std::ofstream density(manifest.out_path("density_beta_" + tag + ".csv"),
                          std::ios::binary);
    density << "epoch,layer,t,density\n";

    std::map<int, PlotSeries> series_per_layer;
    for (const auto& [epoch, snapshot] : checkpoints) {
      for (int layer = 1; layer <= snapshot.depth(); ++layer) {
        const std::uint64_t layer_seed = rng::derive_key(
            cfg.seed, {static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(layer)});
        EstimatorOptions opts = cfg.estimator;
        opts.threads = cfg.threads;
        const MIEstimate mi =
            estimate_mi(snapshot, data, layer, layer_seed, opts);

        ResultRow row;
        row.epoch = epoch;
        row.layer = layer;
        row.i_sp = mi.i_sp;
        row.h_uncond = mi.h_unconditional.value;
        row.h_cond_mean = mi.h_conditional_mean;
        row.lb = mi.h_unconditional.lower_bound;
        row.ub = mi.h_unconditional.upper_bound;
        row.mc_se = mi.combined_std_error;
        row.train_loss =
            epoch >= 1 && epoch <= static_cast<int>(train_loss.size())
                ? train_loss[static_cast<std::size_t>(epoch - 1)]
                : std::numeric_limits<double>::quiet_NaN();

        const Layer& target =
            snapshot.layers[static_cast<std::size_t>(layer - 1)];
        const ActivationSet outputs =
            layer_outputs(snapshot, data, layer, layer_seed);
        const double bin_size = resolve_bin_size(cfg.binning, target.beta);
        row.binned_entropy = binned_entropy(
            outputs, binning_for_layer(cfg.binning, bin_size,
                                       target.activation, outputs.values));
        rows.push_back(row);

        auto& serie = series_per_layer[layer];
        serie.name = "beta " + tag + " layer " + std::to_string(layer);
        serie.x.push_back(epoch);
        serie.y.push_back(mi.i_sp);
      }
      const bool want_density =
          cfg.outputs.density_epochs.empty() ||
          std::find(cfg.outputs.density_epochs.begin(),
                    cfg.outputs.density_epochs.end(),
                    epoch) != cfg.outputs.density_epochs.end();
      if (want_density) {
        density_snapshot(density, snapshot, data, epoch, cfg.seed);
      }
    }
    write_results_csv(manifest.out_path("results_beta_" + tag + ".csv"),
                      rows);
    for (auto& [layer, serie] : series_per_layer) {
      mi_plot.push_back(std::move(serie));
    }
  }
  manifest.add_phase("run", run.seconds());

  write_line_svg(manifest.out_path("toy_mi.svg"),
                 args.which + " mutual information", "epoch", "nats",
                 mi_plot);
  manifest.write();
  std::cout << "toy " << args.which << " finished; outputs in " << cfg.out_dir
            << "\n";
  return 0;
}

int cmd_analyze_dump(const AnalyzeDumpArgs& args) {
  if (args.dumps.empty()) {
    throw ConfigError("analyze-dump needs at least one dump file");
  }
  RunManifest manifest("analyze-dump", args.out_dir, 0, args.seed);

  std::vector<ActivationSet> dumps;
  for (const auto& path : args.dumps) {
    dumps.push_back(read_activation_dump(path));
  }
  const Eigen::Index d = dumps.front().dim();
  for (std::size_t i = 1; i < dumps.size(); ++i) {
    if (dumps[i].dim() != d) {
      throw ConfigError(
          "inconsistent dimensions across dumps: " + args.dumps[0] + " has " +
          std::to_string(d) + " columns, " + args.dumps[i] + " has " +
          std::to_string(dumps[i].dim()));
    }
  }
  std::sort(dumps.begin(), dumps.end(),
            [](const ActivationSet& a, const ActivationSet& b) {
              return a.epoch < b.epoch;
            });

  BinningSpec spec;
  spec.bin_size = args.bin_size;
  spec.lo = args.lo;
  spec.hi = args.hi;
  spec.clamp_out_of_range = true;

  std::ofstream metrics(manifest.out_path("clustering.csv"),
                        std::ios::binary);
  metrics << "epoch,layer,n,d,binned_entropy\n";
  std::ofstream units_out(manifest.out_path("per_unit_entropy.csv"),
                          std::ios::binary);
  units_out << "epoch,layer,unit,entropy\n";
  std::ofstream hist_out(manifest.out_path("distance_histograms.csv"),
                         std::ios::binary);
  hist_out << "epoch,layer,bin_lo,bin_hi,within,between\n";

  std::vector<std::vector<double>> per_epoch_units;
  std::vector<double> epochs;
  for (const auto& acts : dumps) {
    const double h = binned_entropy(acts, spec);
    metrics << acts.epoch << ',' << acts.layer_index << ',' << acts.size()
            << ',' << acts.dim() << ',' << format_double(h) << '\n';
    const auto units = per_unit_binned_entropy(acts, spec);
    for (std::size_t k = 0; k < units.size(); ++k) {
      units_out << acts.epoch << ',' << acts.layer_index << ',' << k << ','
                << format_double(units[k]) << '\n';
    }
    per_epoch_units.push_back(units);
    epochs.push_back(acts.epoch);
    if (acts.labels) {
      HistogramOptions hopts;
      hopts.n_bins = args.histogram_bins;
      hopts.seed = args.seed;
      const auto hist = pairwise_distance_histogram(acts, hopts);
      for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) {
        hist_out << acts.epoch << ',' << acts.layer_index << ','
                 << format_double(hist.edges[b]) << ','
                 << format_double(hist.edges[b + 1]) << ','
                 << hist.within_counts[b] << ',' << hist.between_counts[b]
                 << '\n';
      }
    }
  }

  if (dumps.size() >= 2) {
    const auto slopes = entropy_slopes(per_epoch_units, epochs);
    std::ofstream slope_out(manifest.out_path("entropy_slopes.csv"),
                            std::ios::binary);
    slope_out << "unit,slope\n";
    for (std::size_t k = 0; k < slopes.per_unit_slopes.size(); ++k) {
      slope_out << k << ',' << format_double(slopes.per_unit_slopes[k])
                << '\n';
    }
    slope_out << "mean," << format_double(slopes.mean_slope) << '\n';
    slope_out << "std," << format_double(slopes.std_slope) << '\n';
    std::cout << "mean per-unit entropy slope "
              << format_double(slopes.mean_slope) << " nats/epoch (std "
              << format_double(slopes.std_slope) << ")\n";
  } else {
    std::cout << "single dump: slopes unavailable, other metrics emitted\n";
  }
  manifest.write();
  return 0;
}

int cmd_advise_n(const ExperimentConfig& cfg, const AdviseArgs& args) {
  RunManifest manifest("advise-n", cfg.out_dir, cfg.config_hash(), cfg.seed);
  NoisyNet net;
  if (!args.checkpoint.empty()) {
    net = load_checkpoint(args.checkpoint).net;
  } else {
    net = build_network(cfg.network, cfg.seed);
  }
  const LabeledDataset data = build_dataset(cfg.dataset);

  AdviseOptions opts;
  opts.cap = args.cap;
  opts.n_mc = cfg.estimator.n_mc;
  opts.threads = cfg.threads;
  Timer run;
  const AdviseResult advice =
      advise_n(net, data, args.layer, args.target_tol, cfg.seed, opts);
  manifest.add_phase("ladder", run.seconds());

  std::ofstream out(manifest.out_path("advise.csv"), std::ios::binary);
  out << "n,i_sp,diff_to_half\n";
  for (const auto& rung : advice.trace) {
    out << rung.n << ',' << format_double(rung.i_sp) << ','
        << format_double(rung.diff_to_half) << '\n';
  }
  out.close();
  manifest.write();

  std::cout << "recommended n = " << advice.recommended_n
            << (advice.stable ? "" : " (WARNING: ladder exhausted the cap "
                                     "without stabilizing)")
            << "\n";
  for (const auto& rung : advice.trace) {
    std::cout << "  n = " << rung.n << ": estimate "
              << format_double(rung.i_sp);
    if (std::isfinite(rung.diff_to_half)) {
      std::cout << ", step change " << format_double(rung.diff_to_half);
    }
    std::cout << "\n";
  }
  return 0;
}

}  // namespace infoflow::cli
