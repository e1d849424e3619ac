#include "infoflow/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "infoflow/rng.hpp"

namespace infoflow {

void BinningSpec::validate() const {
  if (!(bin_size > 0.0)) {
    throw std::invalid_argument("bin_size must be positive");
  }
  if (!(hi > lo)) throw std::invalid_argument("binning range must be nonempty");
  if (bin_size > hi - lo) {
    throw std::invalid_argument("bin_size exceeds the binning range");
  }
}

std::int64_t BinningSpec::bins_per_dim() const {
  return static_cast<std::int64_t>(std::ceil((hi - lo) / bin_size));
}

BinningSpec BinningSpec::for_range(double bin_size, double lo, double hi,
                                   bool clamp) {
  BinningSpec spec;
  spec.bin_size = bin_size;
  spec.lo = lo;
  spec.hi = hi;
  spec.clamp_out_of_range = clamp;
  spec.validate();
  return spec;
}

namespace {

std::int64_t bin_index(double v, const BinningSpec& spec, std::int64_t bins,
                       Eigen::Index row, Eigen::Index col) {
  if (v < spec.lo || v > spec.hi) {
    if (!spec.clamp_out_of_range) {
      throw std::invalid_argument(
          "value " + std::to_string(v) + " at row " + std::to_string(row) +
          ", coordinate " + std::to_string(col) +
          " is outside the binning range [" + std::to_string(spec.lo) + ", " +
          std::to_string(spec.hi) + "]");
    }
    return v < spec.lo ? 0 : bins - 1;
  }
  const std::int64_t idx = static_cast<std::int64_t>((v - spec.lo) / spec.bin_size);
  return std::min<std::int64_t>(idx, bins - 1);
}

/// Entropy of a frequency table, in nats: log n - (1/n) sum c log c.
/// All-singleton tables give exactly log(n).
double table_entropy(const std::unordered_map<std::string, std::int64_t>& tab,
                     std::int64_t n) {
  double acc = 0.0;
  for (const auto& [key, count] : tab) {
    acc += static_cast<double>(count) * std::log(static_cast<double>(count));
  }
  return std::log(static_cast<double>(n)) - acc / static_cast<double>(n);
}

}  // namespace

double binned_entropy(const ActivationSet& acts, const BinningSpec& spec) {
  spec.validate();
  acts.validate();
  const Eigen::Index n = acts.size();
  const Eigen::Index d = acts.dim();
  const std::int64_t bins = spec.bins_per_dim();

  std::unordered_map<std::string, std::int64_t> table;
  table.reserve(static_cast<std::size_t>(n));
  std::string key(static_cast<std::size_t>(d) * sizeof(std::int64_t), '\0');
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      const std::int64_t idx = bin_index(acts.values(r, c), spec, bins, r, c);
      std::memcpy(key.data() + static_cast<std::size_t>(c) * sizeof(idx), &idx,
                  sizeof(idx));
    }
    ++table[key];
  }
  return table_entropy(table, n);
}

std::vector<double> per_unit_binned_entropy(const ActivationSet& acts,
                                            const BinningSpec& spec) {
  spec.validate();
  acts.validate();
  const Eigen::Index n = acts.size();
  const Eigen::Index d = acts.dim();
  const std::int64_t bins = spec.bins_per_dim();

  std::vector<double> out(static_cast<std::size_t>(d));
  std::unordered_map<std::string, std::int64_t> table;
  for (Eigen::Index c = 0; c < d; ++c) {
    table.clear();
    std::string key(sizeof(std::int64_t), '\0');
    for (Eigen::Index r = 0; r < n; ++r) {
      const std::int64_t idx = bin_index(acts.values(r, c), spec, bins, r, c);
      std::memcpy(key.data(), &idx, sizeof(idx));
      ++table[key];
    }
    out[static_cast<std::size_t>(c)] = table_entropy(table, n);
  }
  return out;
}

SlopeSummary entropy_slopes(const std::vector<std::vector<double>>& per_epoch,
                            const std::vector<double>& epochs) {
  if (per_epoch.size() < 2) {
    throw std::invalid_argument("entropy_slopes needs at least two epochs");
  }
  if (per_epoch.size() != epochs.size()) {
    throw std::invalid_argument("entropy_slopes: epochs length mismatch");
  }
  const std::size_t d = per_epoch.front().size();
  for (const auto& row : per_epoch) {
    if (row.size() != d) {
      throw std::invalid_argument("entropy_slopes: inconsistent unit count");
    }
  }

  const std::size_t t = epochs.size();
  double mean_x = 0.0;
  for (double e : epochs) mean_x += e;
  mean_x /= static_cast<double>(t);
  double sxx = 0.0;
  for (double e : epochs) sxx += (e - mean_x) * (e - mean_x);
  if (sxx == 0.0) {
    throw std::invalid_argument("entropy_slopes: epochs are all identical");
  }

  SlopeSummary summary;
  summary.per_unit_slopes.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    double mean_y = 0.0;
    for (std::size_t i = 0; i < t; ++i) mean_y += per_epoch[i][k];
    mean_y /= static_cast<double>(t);
    double sxy = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      sxy += (epochs[i] - mean_x) * (per_epoch[i][k] - mean_y);
    }
    summary.per_unit_slopes[k] = sxy / sxx;
  }

  double mean = 0.0;
  for (double s : summary.per_unit_slopes) mean += s;
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (double s : summary.per_unit_slopes) var += (s - mean) * (s - mean);
  summary.mean_slope = mean;
  summary.std_slope = std::sqrt(var / static_cast<double>(d));
  return summary;
}

DistanceHistogram pairwise_distance_histogram(const ActivationSet& acts,
                                              const HistogramOptions& opts) {
  acts.validate();
  if (!acts.labels) {
    throw std::invalid_argument(
        "pairwise_distance_histogram requires labels");
  }
  const Eigen::Index n = acts.size();
  if (n < 2) {
    throw std::invalid_argument(
        "pairwise_distance_histogram needs at least two rows");
  }
  if (opts.n_bins < 1) {
    throw std::invalid_argument("histogram needs at least one bin");
  }

  const Eigen::VectorXd& labels = *acts.labels;
  DistanceHistogram hist;

  // Exact pair totals by label multiplicity.
  std::unordered_map<double, std::int64_t> class_counts;
  for (Eigen::Index i = 0; i < n; ++i) ++class_counts[labels[i]];
  std::int64_t within = 0;
  for (const auto& [label, c] : class_counts) within += c * (c - 1) / 2;
  const std::int64_t total_pairs = n * (n - 1) / 2;
  hist.n_within_pairs = within;
  hist.n_between_pairs = total_pairs - within;

  hist.subsampled = total_pairs > opts.pair_cap;
  const std::int64_t target = hist.subsampled ? opts.pair_cap : total_pairs;

  // Enumerate pairs (all of them, or a uniform seeded sample by flat index).
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(target));
  if (!hist.subsampled) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
  } else {
    auto stream = rng::substream(opts.seed, {rng::tag::kPairSubsample});
    for (std::int64_t k = 0; k < target; ++k) {
      const std::uint64_t flat =
          stream.next_u64() % static_cast<std::uint64_t>(total_pairs);
      // Invert the row-major unordered-pair index.
      Eigen::Index i = 0;
      std::uint64_t remaining = flat;
      std::uint64_t row_len = static_cast<std::uint64_t>(n - 1);
      while (remaining >= row_len) {
        remaining -= row_len;
        --row_len;
        ++i;
      }
      pairs.emplace_back(i, i + 1 + static_cast<Eigen::Index>(remaining));
    }
  }
  hist.sampled_pairs = static_cast<std::int64_t>(pairs.size());

  std::vector<double> dist(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    dist[k] =
        (acts.values.row(pairs[k].first) - acts.values.row(pairs[k].second))
            .norm();
  }

  double max_d = opts.max_distance;
  if (!(max_d > 0.0)) {
    max_d = *std::max_element(dist.begin(), dist.end());
    if (!(max_d > 0.0)) max_d = 1.0;  // all points identical
  }

  hist.edges.resize(static_cast<std::size_t>(opts.n_bins) + 1);
  for (int b = 0; b <= opts.n_bins; ++b) {
    hist.edges[static_cast<std::size_t>(b)] =
        max_d * static_cast<double>(b) / static_cast<double>(opts.n_bins);
  }
  hist.within_counts.assign(static_cast<std::size_t>(opts.n_bins), 0);
  hist.between_counts.assign(static_cast<std::size_t>(opts.n_bins), 0);

  for (std::size_t k = 0; k < pairs.size(); ++k) {
    int b = static_cast<int>(dist[k] / max_d * opts.n_bins);
    b = std::clamp(b, 0, opts.n_bins - 1);  // top bin absorbs the maximum
    const bool same =
        labels[pairs[k].first] == labels[pairs[k].second];
    if (same) {
      ++hist.within_counts[static_cast<std::size_t>(b)];
    } else {
      ++hist.between_counts[static_cast<std::size_t>(b)];
    }
  }
  return hist;
}

}  // namespace infoflow
