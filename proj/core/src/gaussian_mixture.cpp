#include "infoflow/gaussian_mixture.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace infoflow {

GaussianMixture GaussianMixture::uniform(Eigen::MatrixXd centers,
                                         double beta) {
  GaussianMixture g;
  const Eigen::Index n = centers.rows();
  g.centers = std::move(centers);
  g.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  g.beta = beta;
  return g;
}

void GaussianMixture::validate() const {
  if (centers.rows() < 1 || centers.cols() < 1) {
    throw std::invalid_argument("mixture needs at least one center and d >= 1");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("mixture beta must be positive and finite");
  }
  if (weights.size() != centers.rows()) {
    throw std::invalid_argument("mixture weights/centers size mismatch");
  }
  if (!centers.allFinite()) {
    throw std::invalid_argument("mixture centers must be finite");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0)) {
      throw std::invalid_argument("mixture weight " + std::to_string(i) +
                                  " is negative or NaN");
    }
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture weights sum to " +
                                std::to_string(sum) + ", expected 1");
  }
}

namespace detail {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

MixtureDensityKernel::MixtureDensityKernel(const GaussianMixture& g) {
  anchored_ = g.centers;
  const Eigen::RowVectorXd anchor = g.centers.row(0);
  anchored_.rowwise() -= anchor;
  log_weights_ = g.weights.array().max(0.0).log().matrix();
  center_sqnorm_ = anchored_.rowwise().squaredNorm();
  inv_two_beta_sq_ = 1.0 / (2.0 * g.beta * g.beta);
  log_norm_const_ =
      -0.5 * static_cast<double>(g.dim()) * std::log(kTwoPi * g.beta * g.beta);
}

MixtureDensityKernel MixtureDensityKernel::from_anchored(
    Eigen::MatrixXd anchored_centers, Eigen::VectorXd log_weights, double beta,
    double log_norm_const) {
  MixtureDensityKernel k;
  k.anchored_ = std::move(anchored_centers);
  k.log_weights_ = std::move(log_weights);
  k.center_sqnorm_ = k.anchored_.rowwise().squaredNorm();
  k.inv_two_beta_sq_ = 1.0 / (2.0 * beta * beta);
  k.log_norm_const_ = log_norm_const;
  return k;
}

void MixtureDensityKernel::log_density_anchored(
    const Eigen::Ref<const Eigen::MatrixXd>& points,
    Eigen::Ref<Eigen::VectorXd> out) const {
  const Eigen::Index p = points.rows();
  const Eigen::Index n = anchored_.rows();
  constexpr Eigen::Index kCenterBlock = 512;

  const Eigen::VectorXd point_sqnorm = points.rowwise().squaredNorm();

  // Streaming log-sum-exp over center blocks, fixed block order.
  Eigen::VectorXd running_max =
      Eigen::VectorXd::Constant(p, -std::numeric_limits<double>::infinity());
  Eigen::VectorXd running_sum = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd expo;  // p x block

  for (Eigen::Index c0 = 0; c0 < n; c0 += kCenterBlock) {
    const Eigen::Index bc = std::min(kCenterBlock, n - c0);
    // Squared distances via (|t|^2 - 2 t.mu + |mu|^2), clamped at zero.
    expo.noalias() = points * anchored_.middleRows(c0, bc).transpose();
    expo = (-2.0 * expo).colwise() + point_sqnorm;
    expo.rowwise() += center_sqnorm_.segment(c0, bc).transpose();
    expo = expo.array().max(0.0).matrix();
    // exponent = log c_j - dist^2 / (2 beta^2)
    expo *= -inv_two_beta_sq_;
    expo.rowwise() += log_weights_.segment(c0, bc).transpose();

    const Eigen::VectorXd block_max = expo.rowwise().maxCoeff();
    for (Eigen::Index r = 0; r < p; ++r) {
      const double bm = block_max[r];
      if (bm == -std::numeric_limits<double>::infinity()) continue;
      if (bm > running_max[r]) {
        if (std::isfinite(running_max[r])) {
          running_sum[r] *= std::exp(running_max[r] - bm);
        }
        running_max[r] = bm;
      }
      running_sum[r] += (expo.row(r).array() - running_max[r]).exp().sum();
    }
  }

  for (Eigen::Index r = 0; r < p; ++r) {
    out[r] = running_max[r] + std::log(running_sum[r]) + log_norm_const_;
  }
}

}  // namespace detail

double mixture_log_density(const GaussianMixture& g,
                           const Eigen::VectorXd& point) {
  g.validate();
  if (point.size() != g.dim()) {
    throw std::invalid_argument(
        "point dimension " + std::to_string(point.size()) +
        " does not match mixture dimension " + std::to_string(g.dim()));
  }
  if (!point.allFinite()) {
    throw std::invalid_argument("point has non-finite coordinates");
  }
  detail::MixtureDensityKernel kernel(g);
  Eigen::MatrixXd q = (point - g.centers.row(0).transpose()).transpose();
  Eigen::VectorXd out(1);
  kernel.log_density_anchored(q, out);
  return out[0];
}

}  // namespace infoflow
