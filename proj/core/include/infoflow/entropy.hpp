#pragma once

#include <cstdint>
#include <optional>

#include "infoflow/gaussian_mixture.hpp"

namespace infoflow {

/// Differential entropy estimate of a Gaussian mixture, in nats, together
/// with its Monte Carlo standard error and the analytic bracket.
struct EntropyEstimate {
  double value = 0.0;      // Monte Carlo estimate of h(g)
  double std_error = 0.0;  // standard error of the mean
  std::int64_t n_mc = 0;   // draws per center
  double lower_bound = 0.0;  // greatest analytic lower bound
  double upper_bound = 0.0;  // least analytic upper bound
  std::uint64_t seed = 0;
};

/// The three lower and three upper analytic bounds on h(g), in nats.
/// lower[0]: Gaussian noise floor; lower[1]: pairwise-overlap (Jensen);
/// lower[2]: Bhattacharyya. upper[0]: noise floor plus mixing entropy;
/// upper[1]: pairwise KL; upper[2]: moment-matched Gaussian (+inf when the
/// covariance is numerically degenerate).
struct EntropyBounds {
  double lower[3];
  double upper[3];
  double max_lower() const;
  double min_upper() const;
};

EntropyBounds entropy_bounds(const GaussianMixture& g);

struct McOptions {
  int threads = 0;  // 0 = hardware concurrency
  /// Subtract the per-draw log of the own-component density and add back its
  /// closed-form mean. Exactly unbiased for the same integral; removes nearly
  /// all variance when components are well separated.
  bool control_variate = false;
  /// Optional center cutoff radius in units of beta; density terms beyond it
  /// are skipped only when the skipped mass is provably below 1e-12 of the
  /// densest term. Disabled by default.
  std::optional<double> cutoff_radius;
};

/// Monte Carlo estimate of h(g): per center i, average -log g(mu_i + Z) over
/// n_mc fresh draws Z ~ N(0, beta^2 I); combine per-center means with the
/// mixture weights. Deterministic given (g, n_mc, seed) for any thread count.
EntropyEstimate mc_entropy(const GaussianMixture& g, std::int64_t n_mc,
                           std::uint64_t seed, const McOptions& opts = {});

/// Unbiased variant for very large mixtures: draws n_outer centers with
/// replacement according to the weights instead of enumerating all of them.
/// The standard error reflects both sampling levels.
EntropyEstimate mc_entropy_subsampled(const GaussianMixture& g,
                                      std::int64_t n_outer, std::int64_t n_mc,
                                      std::uint64_t seed,
                                      const McOptions& opts = {});

enum class SupportClass {
  kBoundedUnitCube,  // centers in [-1,1]^d
  kSecondMoment,     // E|C|^2 <= second_moment
};

/// Variance constant for the bounded-support MSE bound. The conservative
/// form is the default.
enum class MseConstant {
  kTight,         // 2d(2+beta^2)/beta^2
  kConservative,  // 2d(4+beta^2)/beta^2
};

/// Worst-case mean squared error of the Monte Carlo entropy estimate, in
/// nats^2, for a mixture of n centers with n_mc draws per center.
double mc_mse_bound(int dim, double beta, std::int64_t n, std::int64_t n_mc,
                    SupportClass support, double second_moment = 0.0,
                    MseConstant constant = MseConstant::kConservative);

}  // namespace infoflow
