#include "infoflow/sp_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "infoflow/parallel.hpp"
#include "infoflow/rng.hpp"
#include "infoflow/theory.hpp"

namespace infoflow {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Exact byte-level row key; duplicates only ever come from genuinely
/// identical propagation results.
std::string row_key(const Eigen::MatrixXd& rows, Eigen::Index r) {
  std::string key(static_cast<std::size_t>(rows.cols()) * sizeof(double),
                  '\0');
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const double v = rows(r, c);
    std::memcpy(key.data() + static_cast<std::size_t>(c) * sizeof(double), &v,
                sizeof(double));
  }
  return key;
}

}  // namespace

GaussianMixture mixture_from_samples(const Eigen::MatrixXd& rows,
                                     double beta) {
  const Eigen::Index n = rows.rows();
  std::unordered_map<std::string, Eigen::Index> first_index;
  std::vector<Eigen::Index> representative;
  std::vector<std::int64_t> counts;
  representative.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    auto [it, inserted] = first_index.try_emplace(
        row_key(rows, r), static_cast<Eigen::Index>(representative.size()));
    if (inserted) {
      representative.push_back(r);
      counts.push_back(1);
    } else {
      ++counts[static_cast<std::size_t>(it->second)];
    }
  }

  GaussianMixture g;
  const Eigen::Index k = static_cast<Eigen::Index>(representative.size());
  g.centers.resize(k, rows.cols());
  g.weights.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    g.centers.row(i) = rows.row(representative[static_cast<std::size_t>(i)]);
    g.weights[i] = static_cast<double>(counts[static_cast<std::size_t>(i)]) /
                   static_cast<double>(n);
  }
  g.beta = beta;
  return g;
}

MIEstimate estimate_mi(const NoisyNet& net, const LabeledDataset& data,
                       int layer, std::uint64_t seed,
                       const EstimatorOptions& opts) {
  net.validate();
  data.validate();
  if (layer < 1 || layer > net.depth()) {
    throw std::invalid_argument("estimate_mi: layer out of range");
  }
  const Layer& target = net.layers[static_cast<std::size_t>(layer - 1)];
  if (!(target.beta > 0.0)) {
    throw std::invalid_argument(
        "estimate_mi: layer " + std::to_string(layer) +
        " has beta = 0; in a deterministic network I(X;T) is vacuous "
        "(use binned diagnostics instead)");
  }
  if (opts.n < 1 || opts.n_x < 1 || opts.n_mc < 1) {
    throw std::invalid_argument("estimate_mi: n, n_x, n_mc must be >= 1");
  }

  const double beta = target.beta;
  const Eigen::Index d = target.out_dim();
  const Eigen::Index m = data.size();

  // Unconditional mixture: n i.i.d. draws from the dataset's uniform law,
  // each propagated with fresh upstream noise.
  LabeledDataset resampled;
  resampled.inputs.resize(opts.n, data.dim());
  resampled.labels.resize(opts.n);
  resampled.class_labels = data.class_labels;
  auto pick = rng::substream(seed, {rng::tag::kResample});
  for (std::int64_t r = 0; r < opts.n; ++r) {
    const Eigen::Index idx = static_cast<Eigen::Index>(
        pick.next_u64() % static_cast<std::uint64_t>(m));
    resampled.inputs.row(r) = data.inputs.row(idx);
    resampled.labels[r] = data.labels[idx];
  }
  const ActivationSet uncond_samples = collect_activations(
      net, resampled, layer,
      ForwardMode::with_noise(rng::derive_key(seed, {rng::tag::kUncond})));
  const GaussianMixture uncond_mixture =
      mixture_from_samples(uncond_samples.values, beta);

  McOptions mc_opts;
  mc_opts.threads = opts.threads;
  mc_opts.control_variate = opts.control_variate;
  const EntropyEstimate h_uncond =
      mc_entropy(uncond_mixture, opts.n_mc,
                 rng::derive_key(seed, {rng::tag::kUncond, 1}), mc_opts);

  MIEstimate mi;
  mi.layer_index = layer;
  mi.h_unconditional = h_uncond;
  mi.n = opts.n;
  mi.n_x = opts.n_x;

  if (layer == 1) {
    // Conditional law of T_1 given X is exactly the noise Gaussian.
    mi.h_conditional_mean =
        0.5 * static_cast<double>(d) * std::log(kTwoPi * M_E * beta * beta);
    mi.i_sp = h_uncond.value - mi.h_conditional_mean;
    mi.combined_std_error = h_uncond.std_error;
    return mi;
  }

  // One conditional mixture per dataset input; jobs are independent and
  // reduced in input order.
  std::vector<EntropyEstimate> cond(static_cast<std::size_t>(m));
  McOptions cond_opts = mc_opts;
  cond_opts.threads = 1;  // parallelism lives at the per-input level
  parallel_for_index(static_cast<std::size_t>(m), opts.threads,
                     [&](std::size_t i) {
                       const ActivationSet samples = conditional_activations(
                           net, data.inputs.row(static_cast<Eigen::Index>(i)),
                           layer, opts.n_x,
                           rng::derive_key(seed, {rng::tag::kCond,
                                                  static_cast<std::uint64_t>(i),
                                                  0}));
                       const GaussianMixture gx =
                           mixture_from_samples(samples.values, beta);
                       cond[i] = mc_entropy(
                           gx, opts.n_mc,
                           rng::derive_key(seed, {rng::tag::kCond,
                                                  static_cast<std::uint64_t>(i),
                                                  1}),
                           cond_opts);
                     });

  double cond_sum = 0.0;
  double cond_var = 0.0;
  mi.h_conditional_per_x.resize(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < cond.size(); ++i) {
    cond_sum += cond[i].value;
    cond_var += cond[i].std_error * cond[i].std_error;
    mi.h_conditional_per_x[i] = cond[i].value;
  }
  mi.h_conditional_mean = cond_sum / static_cast<double>(m);
  mi.i_sp = h_uncond.value - mi.h_conditional_mean;
  mi.combined_std_error =
      std::sqrt(h_uncond.std_error * h_uncond.std_error +
                cond_var / (static_cast<double>(m) * static_cast<double>(m)));
  return mi;
}

AdviseResult advise_n(const NoisyNet& net, const LabeledDataset& data,
                      int layer, double target_tol, std::uint64_t seed,
                      const AdviseOptions& opts) {
  net.validate();
  if (layer < 1 || layer > net.depth()) {
    throw std::invalid_argument("advise_n: layer out of range");
  }
  const Layer& target = net.layers[static_cast<std::size_t>(layer - 1)];
  if (!(target.beta > 0.0)) {
    throw std::invalid_argument("advise_n: layer has beta = 0");
  }

  // Start from the worst-case-bound n (both terms scale as 1/sqrt(n)), but
  // never above the configured cap.
  std::int64_t start = opts.cap;
  if (std::isfinite(target_tol) && target_tol > 0.0) {
    const double risk_at_1 =
        risk_bound(static_cast<int>(target.out_dim()), target.beta, 1,
                   RiskClass::bounded());
    const double wanted = risk_at_1 / target_tol;
    if (wanted * wanted < static_cast<double>(opts.cap)) {
      start = std::max<std::int64_t>(
          opts.floor, static_cast<std::int64_t>(std::ceil(wanted * wanted)));
    }
  }

  // Estimate along the halving ladder, one independent seed per rung.
  std::vector<std::int64_t> rungs;
  for (std::int64_t n = start; n >= opts.floor; n /= 2) rungs.push_back(n);
  if (rungs.empty()) rungs.push_back(opts.floor);

  std::vector<double> values(rungs.size());
  for (std::size_t k = 0; k < rungs.size(); ++k) {
    EstimatorOptions est;
    est.n = rungs[k];
    est.n_x = std::max<std::int64_t>(16, rungs[k] / 4);
    est.n_mc = opts.n_mc;
    est.threads = opts.threads;
    values[k] = estimate_mi(net, data, layer,
                            rng::derive_key(seed, {rng::tag::kLadder,
                                                   static_cast<std::uint64_t>(k)}),
                            est)
                    .i_sp;
  }

  AdviseResult result;
  result.trace.resize(rungs.size());
  for (std::size_t k = 0; k < rungs.size(); ++k) {
    result.trace[k].n = rungs[k];
    result.trace[k].i_sp = values[k];
    result.trace[k].diff_to_half =
        k + 1 < rungs.size() ? std::abs(values[k] - values[k + 1])
                             : std::numeric_limits<double>::quiet_NaN();
  }

  // A stable pair (n, n/2) certifies the half. Take the deepest stable pair;
  // an unbounded tolerance accepts the smallest rung outright.
  result.stable = false;
  if (!(target_tol < std::numeric_limits<double>::infinity())) {
    result.recommended_n = rungs.back();
    result.stable = true;
    return result;
  }
  for (std::size_t k = rungs.size() - 1; k-- > 0;) {
    if (result.trace[k].diff_to_half <= target_tol) {
      result.recommended_n = rungs[k + 1];
      result.stable = true;
      break;
    }
  }
  if (!result.stable) result.recommended_n = opts.cap;
  return result;
}

}  // namespace infoflow
