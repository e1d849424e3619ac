#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace infoflow {

/// Isotropic Gaussian mixture: centers mu_i (rows), weights c_i summing to 1,
/// shared per-coordinate noise standard deviation beta.
struct GaussianMixture {
  Eigen::MatrixXd centers;  // n x d, one center per row
  Eigen::VectorXd weights;  // n, nonnegative, sums to 1
  double beta = 0.0;

  Eigen::Index size() const { return centers.rows(); }
  Eigen::Index dim() const { return centers.cols(); }

  /// Uniform-weight mixture over the given centers.
  static GaussianMixture uniform(Eigen::MatrixXd centers, double beta);

  /// Throws std::invalid_argument if any invariant is violated
  /// (n >= 1, d >= 1, beta > 0, finite centers, weights >= 0 summing to 1
  /// within 1e-12).
  void validate() const;
};

/// Log density of the mixture at a point, in nats. Evaluated with
/// log-sum-exp; stable for separations up to ~1e6 * beta.
/// Throws std::invalid_argument on dimension mismatch or non-finite input.
double mixture_log_density(const GaussianMixture& g,
                           const Eigen::VectorXd& point);

namespace detail {

/// Shared evaluation state for repeated log-density queries against one
/// mixture. Centers are anchored to the first center so that translating the
/// whole mixture leaves every computed difference unchanged.
class MixtureDensityKernel {
 public:
  explicit MixtureDensityKernel(const GaussianMixture& g);

  /// Kernel over a subset of already-anchored centers (cutoff machinery).
  static MixtureDensityKernel from_anchored(Eigen::MatrixXd anchored_centers,
                                            Eigen::VectorXd log_weights,
                                            double beta,
                                            double log_norm_const);

  /// points: p x d matrix of query points expressed relative to the anchor
  /// (first center). Writes p log-density values.
  void log_density_anchored(const Eigen::Ref<const Eigen::MatrixXd>& points,
                            Eigen::Ref<Eigen::VectorXd> out) const;

  const Eigen::MatrixXd& anchored_centers() const { return anchored_; }
  double log_norm_const() const { return log_norm_const_; }
  double inv_two_beta_sq() const { return inv_two_beta_sq_; }

 private:
  MixtureDensityKernel() = default;

  Eigen::MatrixXd anchored_;       // n x d, centers minus centers.row(0)
  Eigen::VectorXd log_weights_;    // n
  Eigen::VectorXd center_sqnorm_;  // n, rowwise squared norms of anchored_
  double inv_two_beta_sq_ = 0.0;
  double log_norm_const_ = 0.0;  // -(d/2) log(2 pi beta^2)
};

}  // namespace detail
}  // namespace infoflow
