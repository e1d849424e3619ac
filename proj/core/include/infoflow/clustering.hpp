#pragma once

#include <cstdint>
#include <vector>

#include "infoflow/activation_set.hpp"

namespace infoflow {

/// Equal-width quantization grid shared by all coordinates. Bins are
/// anchored at `lo`; a value equal to `hi` lands in the last bin. With
/// clamping on, out-of-range values accumulate in the edge bins (so the top
/// bin doubles as an overflow bin for unbounded activations).
struct BinningSpec {
  double bin_size = 0.1;
  double lo = -1.0;
  double hi = 1.0;
  bool clamp_out_of_range = true;

  void validate() const;
  std::int64_t bins_per_dim() const;

  static BinningSpec for_range(double bin_size, double lo, double hi,
                               bool clamp = true);
};

/// Discrete Shannon entropy (nats) of the d-dimensional bin-index tuples of
/// the rows. Tuples are hashed exactly; the full d-power grid is never built.
/// Throws std::invalid_argument for out-of-range values when clamping is off,
/// naming the offending coordinate.
double binned_entropy(const ActivationSet& acts, const BinningSpec& spec);

/// binned_entropy applied to each coordinate independently.
std::vector<double> per_unit_binned_entropy(const ActivationSet& acts,
                                            const BinningSpec& spec);

struct SlopeSummary {
  double mean_slope = 0.0;
  double std_slope = 0.0;  // population std across units
  std::vector<double> per_unit_slopes;
};

/// Ordinary least squares slope of each unit's entropy against the epoch
/// index; nats per epoch. Requires at least two epochs and consistent d.
SlopeSummary entropy_slopes(const std::vector<std::vector<double>>& per_epoch,
                            const std::vector<double>& epochs);

struct DistanceHistogram {
  std::vector<double> edges;  // n_bins + 1 ascending edges
  std::vector<std::int64_t> within_counts;
  std::vector<std::int64_t> between_counts;
  std::int64_t n_within_pairs = 0;   // total within-class pairs in the data
  std::int64_t n_between_pairs = 0;  // total between-class pairs in the data
  std::int64_t sampled_pairs = 0;    // pairs actually histogrammed
  bool subsampled = false;
};

struct HistogramOptions {
  int n_bins = 50;
  double max_distance = 0.0;  // 0 = use the observed maximum
  std::int64_t pair_cap = 2'000'000;
  std::uint64_t seed = 0;  // used only when subsampling above the cap
};

/// Euclidean distances of all unordered row pairs, split by label equality.
/// Above the pair cap a uniform seeded subsample of pairs is used and
/// recorded in the result.
DistanceHistogram pairwise_distance_histogram(const ActivationSet& acts,
                                              const HistogramOptions& opts);

}  // namespace infoflow
