#pragma once

#include <cstdint>
#include <vector>

#include "infoflow/entropy.hpp"
#include "infoflow/noisy_net.hpp"

namespace infoflow {

/// Mutual-information estimate for one layer, in nats: the unconditional
/// mixture entropy minus the average conditional mixture entropy.
struct MIEstimate {
  int layer_index = 0;
  double i_sp = 0.0;
  EntropyEstimate h_unconditional;
  double h_conditional_mean = 0.0;
  std::vector<double> h_conditional_per_x;
  std::int64_t n = 0;    // unconditional samples
  std::int64_t n_x = 0;  // conditional samples per input
  double combined_std_error = 0.0;
};

struct EstimatorOptions {
  std::int64_t n = 1024;    // unconditional samples
  std::int64_t n_x = 256;   // conditional samples per dataset input
  std::int64_t n_mc = 256;  // Monte Carlo draws per mixture center
  int threads = 0;
  bool control_variate = true;
};

/// Estimate I(X; T_layer) for a noisy net over the dataset's uniform input
/// law. The unconditional mixture is built from n fresh propagated samples
/// (exact duplicates merged into weights); one conditional mixture is built
/// per dataset input. For layer 1 the conditional term is the closed form
/// (d/2) log(2 pi e beta^2) with zero error.
/// Throws std::invalid_argument when the layer's beta is zero: without noise
/// I(X; T) carries no information about the network.
MIEstimate estimate_mi(const NoisyNet& net, const LabeledDataset& data,
                       int layer, std::uint64_t seed,
                       const EstimatorOptions& opts = {});

/// Build the weighted mixture over the distinct rows of an activation set.
GaussianMixture mixture_from_samples(const Eigen::MatrixXd& rows, double beta);

struct LadderRung {
  std::int64_t n = 0;
  double i_sp = 0.0;
  double diff_to_half = 0.0;  // |I(n) - I(n/2)|, NaN on the last rung
};

struct AdviseResult {
  std::int64_t recommended_n = 0;
  bool stable = true;  // false when the ladder exhausted the cap
  std::vector<LadderRung> trace;
};

struct AdviseOptions {
  std::int64_t cap = 4096;   // upper limit on tested n
  std::int64_t floor = 16;   // smallest rung
  std::int64_t n_mc = 256;
  int threads = 0;
};

/// Halving ladder: start from min(worst-case-bound n, cap), estimate at each
/// rung with an independent seed, and recommend the smallest n whose estimate
/// moved by at most target_tol from the next rung down.
AdviseResult advise_n(const NoisyNet& net, const LabeledDataset& data,
                      int layer, double target_tol, std::uint64_t seed,
                      const AdviseOptions& opts = {});

}  // namespace infoflow
