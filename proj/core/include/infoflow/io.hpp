#pragma once

#include <string>
#include <vector>

#include "infoflow/activation_set.hpp"
#include "infoflow/noisy_net.hpp"

namespace infoflow {

/// Activation dump: one JSON header line
/// {"n":..,"d":..,"dtype":"f64le","layer":..,"epoch":..,"has_labels":..,
///  "noisy":..} followed by n*d little-endian f64 values row-major, then
/// (when present) n little-endian i32 class labels. Parse failures carry the
/// exact byte offset.
void write_activation_dump(const std::string& path, const ActivationSet& acts);
ActivationSet read_activation_dump(const std::string& path);

/// Checkpoint: one JSON manifest line (dims, activations, slopes, betas,
/// epoch, dtype) followed by per-layer parameter blobs, each weight matrix
/// row-major then its bias vector, all little-endian f64.
void save_checkpoint(const std::string& path, const NoisyNet& net, int epoch);
struct Checkpoint {
  NoisyNet net;
  int epoch = 0;
};
Checkpoint load_checkpoint(const std::string& path);

/// One line of the per-(epoch, layer) results table. Quantities that were
/// not computed stay NaN and are serialized as "nan".
struct ResultRow {
  int epoch = 0;
  int layer = 0;
  double i_sp;
  double h_uncond;
  double h_cond_mean;
  double lb;
  double ub;
  double mc_se;
  double binned_entropy;
  double train_loss;
  double test_loss;

  ResultRow();
};

/// Fixed column set, rows sorted by (epoch, layer), numbers rendered with
/// std::to_chars at 9 significant digits (locale-independent, so repeated
/// runs produce byte-identical files).
void write_results_csv(const std::string& path,
                       std::vector<ResultRow> rows);

/// 9-significant-digit locale-independent rendering used by every CSV.
std::string format_double(double v);

}  // namespace infoflow
