#include "infoflow/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>

#include "infoflow/parallel.hpp"
#include "infoflow/rng.hpp"

namespace infoflow {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kInf = std::numeric_limits<double>::infinity();

double mixing_entropy(const Eigen::VectorXd& w) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) h -= w[i] * std::log(w[i]);
  }
  return h;
}

/// ln sum_j c_j exp(-|mu_i - mu_j|^2 / (k beta^2)) for k in {2, 4, 8},
/// all centers i at once, blockwise with streaming log-sum-exp.
void pairwise_lse_sums(const Eigen::MatrixXd& anchored,
                       const Eigen::VectorXd& log_weights, double beta,
                       Eigen::VectorXd out[3]) {
  const Eigen::Index n = anchored.rows();
  const double inv_k[3] = {1.0 / (2.0 * beta * beta), 1.0 / (4.0 * beta * beta),
                           1.0 / (8.0 * beta * beta)};
  const Eigen::VectorXd sqnorm = anchored.rowwise().squaredNorm();

  Eigen::VectorXd run_max[3], run_sum[3];
  for (int k = 0; k < 3; ++k) {
    run_max[k] = Eigen::VectorXd::Constant(n, -kInf);
    run_sum[k] = Eigen::VectorXd::Zero(n);
  }

  constexpr Eigen::Index kBlock = 512;
  Eigen::MatrixXd dist, expo;
  for (Eigen::Index c0 = 0; c0 < n; c0 += kBlock) {
    const Eigen::Index bc = std::min(kBlock, n - c0);
    dist.noalias() = anchored * anchored.middleRows(c0, bc).transpose();
    dist = (-2.0 * dist).colwise() + sqnorm;
    dist.rowwise() += sqnorm.segment(c0, bc).transpose();
    dist = dist.array().max(0.0).matrix();

    for (int k = 0; k < 3; ++k) {
      expo = dist * (-inv_k[k]);
      expo.rowwise() += log_weights.segment(c0, bc).transpose();
      const Eigen::VectorXd block_max = expo.rowwise().maxCoeff();
      for (Eigen::Index r = 0; r < n; ++r) {
        const double bm = block_max[r];
        if (bm == -kInf) continue;
        if (bm > run_max[k][r]) {
          if (std::isfinite(run_max[k][r])) {
            run_sum[k][r] *= std::exp(run_max[k][r] - bm);
          }
          run_max[k][r] = bm;
        }
        run_sum[k][r] += (expo.row(r).array() - run_max[k][r]).exp().sum();
      }
    }
  }

  for (int k = 0; k < 3; ++k) {
    out[k].resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      out[k][r] = run_max[k][r] + std::log(run_sum[k][r]);
    }
  }
}

/// Gaussian upper bound written as base + (1/2) logdet(I + Cov / beta^2);
/// the second term is nonnegative by construction, so this bound can never
/// drop below the noise floor even when the covariance nearly vanishes.
double gaussian_upper_bound(const GaussianMixture& g, double base) {
  const Eigen::Index d = g.dim();
  Eigen::MatrixXd dev = g.centers;
  dev.rowwise() -= g.centers.row(0);
  const Eigen::RowVectorXd mean = g.weights.transpose() * dev;
  Eigen::MatrixXd cov =
      dev.transpose() * g.weights.asDiagonal() * dev - mean.transpose() * mean;
  Eigen::MatrixXd m =
      Eigen::MatrixXd::Identity(d, d) + cov / (g.beta * g.beta);
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return kInf;
  double half_logdet = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double diag = llt.matrixL()(k, k);
    if (!(diag > 0.0)) return kInf;
    half_logdet += std::log(diag);
  }
  return base + std::max(0.0, half_logdet);
}

void repair_bound_ordering(EntropyBounds& b) {
  // The six quantities bound the same entropy, so max-lower <= min-upper
  // holds in exact arithmetic; near-coincident mixtures can flip it by a few
  // ulps. Lift such uppers onto the max lower.
  const double l = b.max_lower();
  if (!std::isfinite(l)) return;
  const double tol = 1e-9 * std::max(1.0, std::abs(l));
  for (double& u : b.upper) {
    if (u < l && l - u <= tol) u = l;
  }
}

EntropyBounds cheap_bounds(const GaussianMixture& g) {
  const double base = 0.5 * static_cast<double>(g.dim()) *
                      std::log(kTwoPi * M_E * g.beta * g.beta);
  EntropyBounds b;
  b.lower[0] = base;
  b.lower[1] = -kInf;
  b.lower[2] = -kInf;
  b.upper[0] = base + mixing_entropy(g.weights);
  b.upper[1] = kInf;
  b.upper[2] = gaussian_upper_bound(g, base);
  repair_bound_ordering(b);
  return b;
}

struct Welford {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const Welford& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double delta = o.mean - mean;
    const std::int64_t total = count + o.count;
    mean += delta * static_cast<double>(o.count) / static_cast<double>(total);
    m2 += o.m2 + delta * delta * static_cast<double>(count) *
                     static_cast<double>(o.count) / static_cast<double>(total);
    count = total;
  }

  double sample_variance() const {
    if (count < 2) return 0.0;
    return std::max(0.0, m2 / static_cast<double>(count - 1));
  }
};

constexpr std::int64_t kDrawBlock = 256;

/// Center subset used when the cutoff knob is active.
struct CutoffPlan {
  bool enabled = false;
  double radius_sq = 0.0;       // (r * beta)^2 threshold on |z|-inflated dist
  double z_cap_sq = 0.0;        // draws beyond this fall back to full eval
  double cert_rhs_base = 0.0;   // 2 ln(1e12 / c_i), per center
};

/// One work item: draws [j0, j0+bc) of center `center`, evaluated against
/// either the full kernel or a certified neighbor subset.
Welford run_draw_chunk(const detail::MixtureDensityKernel& kernel,
                       const detail::MixtureDensityKernel* sub_kernel,
                       const Eigen::RowVectorXd& anchored_center,
                       Eigen::Index dim, double beta, bool control_variate,
                       const CutoffPlan& plan, double cert_rhs,
                       std::uint64_t seed, std::uint64_t stream_id,
                       std::int64_t j0, std::int64_t bc) {
  Eigen::MatrixXd pts(bc, dim);
  Eigen::VectorXd zsq(bc);
  std::vector<char> use_sub(static_cast<std::size_t>(bc), 0);
  const double inv_beta_sq = 1.0 / (beta * beta);

  for (std::int64_t j = 0; j < bc; ++j) {
    auto stream = rng::substream(
        seed, {rng::tag::kMcDraw, stream_id,
               static_cast<std::uint64_t>(j0 + j)});
    double s = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) {
      const double z = stream.normal() * beta;
      pts(j, k) = anchored_center[k] + z;
      s += z * z;
    }
    zsq[j] = s;
    if (plan.enabled && sub_kernel != nullptr && s <= plan.z_cap_sq &&
        plan.radius_sq * inv_beta_sq >= cert_rhs + s * inv_beta_sq) {
      use_sub[static_cast<std::size_t>(j)] = 1;
    }
  }

  Eigen::VectorXd logd(bc);
  if (!plan.enabled || sub_kernel == nullptr) {
    kernel.log_density_anchored(pts, logd);
  } else {
    // Split the chunk between the subset and the full kernel.
    for (std::int64_t j = 0; j < bc; ++j) {
      Eigen::VectorXd one(1);
      if (use_sub[static_cast<std::size_t>(j)]) {
        sub_kernel->log_density_anchored(pts.row(j), one);
      } else {
        kernel.log_density_anchored(pts.row(j), one);
      }
      logd[j] = one[0];
    }
  }

  Welford w;
  const double half_dim = 0.5 * static_cast<double>(dim);
  const double inv_two_beta_sq = 1.0 / (2.0 * beta * beta);
  for (std::int64_t j = 0; j < bc; ++j) {
    double v = -logd[j];
    if (control_variate) v += half_dim - zsq[j] * inv_two_beta_sq;
    w.add(v);
  }
  return w;
}

}  // namespace

double EntropyBounds::max_lower() const {
  return std::max({lower[0], lower[1], lower[2]});
}

double EntropyBounds::min_upper() const {
  return std::min({upper[0], upper[1], upper[2]});
}

EntropyBounds entropy_bounds(const GaussianMixture& g) {
  g.validate();
  const double base = 0.5 * static_cast<double>(g.dim()) *
                      std::log(kTwoPi * M_E * g.beta * g.beta);

  Eigen::MatrixXd anchored = g.centers;
  anchored.rowwise() -= g.centers.row(0);
  const Eigen::VectorXd log_weights =
      g.weights.array().max(0.0).log().matrix();

  Eigen::VectorXd lse[3];  // exponents /2b^2, /4b^2, /8b^2
  pairwise_lse_sums(anchored, log_weights, g.beta, lse);

  auto weighted = [&](const Eigen::VectorXd& s) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) acc += g.weights[i] * s[i];
    return acc;
  };

  EntropyBounds b;
  b.lower[0] = base;
  b.lower[1] = 0.5 * static_cast<double>(g.dim()) *
                   std::log(2.0 * kTwoPi * g.beta * g.beta) -
               weighted(lse[1]);
  b.lower[2] = base - weighted(lse[2]);
  b.upper[0] = base + mixing_entropy(g.weights);
  b.upper[1] = base - weighted(lse[0]);
  b.upper[2] = gaussian_upper_bound(g, base);
  // Separations beyond ~1e150 overflow the squared distances; the pairwise
  // bounds then degrade to the always-valid trivial ones.
  if (!std::isfinite(b.lower[1])) b.lower[1] = -kInf;
  if (!std::isfinite(b.lower[2])) b.lower[2] = -kInf;
  if (std::isnan(b.upper[1])) b.upper[1] = kInf;
  repair_bound_ordering(b);
  return b;
}

EntropyEstimate mc_entropy(const GaussianMixture& g, std::int64_t n_mc,
                           std::uint64_t seed, const McOptions& opts) {
  g.validate();
  if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");

  const Eigen::Index n = g.size();
  const Eigen::Index d = g.dim();
  const detail::MixtureDensityKernel kernel(g);
  const Eigen::MatrixXd& anchored = kernel.anchored_centers();
  const Eigen::VectorXd log_weights =
      g.weights.array().max(0.0).log().matrix();

  CutoffPlan plan;
  std::vector<detail::MixtureDensityKernel> sub_kernels;
  std::vector<double> cert_rhs(static_cast<std::size_t>(n), 0.0);
  if (opts.cutoff_radius && *opts.cutoff_radius > 0.0) {
    plan.enabled = true;
    const double r = *opts.cutoff_radius * g.beta;
    plan.radius_sq = r * r;
    const double z_cap =
        g.beta * (4.0 * std::sqrt(static_cast<double>(d)) + 8.0);
    plan.z_cap_sq = z_cap * z_cap;
    sub_kernels.reserve(static_cast<std::size_t>(n));
    const double ln1e12 = 12.0 * std::log(10.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      cert_rhs[static_cast<std::size_t>(i)] = 2.0 * (ln1e12 - log_weights[i]);
      // neighbor set: centers within r*beta + z_cap of center i
      const double thresh = r + z_cap;
      std::vector<Eigen::Index> idx;
      for (Eigen::Index j = 0; j < n; ++j) {
        if ((anchored.row(j) - anchored.row(i)).squaredNorm() <=
            thresh * thresh) {
          idx.push_back(j);
        }
      }
      Eigen::MatrixXd sub_centers(static_cast<Eigen::Index>(idx.size()), d);
      Eigen::VectorXd sub_logw(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        sub_centers.row(static_cast<Eigen::Index>(k)) = anchored.row(idx[k]);
        sub_logw[static_cast<Eigen::Index>(k)] = log_weights[idx[k]];
      }
      sub_kernels.push_back(detail::MixtureDensityKernel::from_anchored(
          std::move(sub_centers), std::move(sub_logw), g.beta,
          kernel.log_norm_const()));
    }
  }

  const std::int64_t chunks =
      (n_mc + kDrawBlock - 1) / kDrawBlock;
  const std::size_t total_items =
      static_cast<std::size_t>(n) * static_cast<std::size_t>(chunks);
  std::vector<Welford> partials(total_items);

  parallel_for_index(total_items, opts.threads, [&](std::size_t item) {
    const Eigen::Index i = static_cast<Eigen::Index>(item / chunks);
    const std::int64_t c = static_cast<std::int64_t>(item % chunks);
    const std::int64_t j0 = c * kDrawBlock;
    const std::int64_t bc = std::min<std::int64_t>(kDrawBlock, n_mc - j0);
    partials[item] = run_draw_chunk(
        kernel, plan.enabled ? &sub_kernels[static_cast<std::size_t>(i)]
                             : nullptr,
        anchored.row(i), d, g.beta, opts.control_variate, plan,
        cert_rhs[static_cast<std::size_t>(i)], seed,
        static_cast<std::uint64_t>(i), j0, bc);
  });

  double value = 0.0;
  double variance = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Welford acc;
    for (std::int64_t c = 0; c < chunks; ++c) {
      acc.merge(partials[static_cast<std::size_t>(i) *
                             static_cast<std::size_t>(chunks) +
                         static_cast<std::size_t>(c)]);
    }
    value += g.weights[i] * acc.mean;
    variance += g.weights[i] * g.weights[i] * acc.sample_variance() /
                static_cast<double>(n_mc);
  }

  const EntropyBounds bounds = entropy_bounds(g);
  EntropyEstimate est;
  est.value = value;
  est.std_error = std::sqrt(variance);
  est.n_mc = n_mc;
  est.lower_bound = bounds.max_lower();
  est.upper_bound = bounds.min_upper();
  est.seed = seed;
  return est;
}

EntropyEstimate mc_entropy_subsampled(const GaussianMixture& g,
                                      std::int64_t n_outer, std::int64_t n_mc,
                                      std::uint64_t seed,
                                      const McOptions& opts) {
  g.validate();
  if (n_outer < 1) throw std::invalid_argument("n_outer must be >= 1");
  if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");

  const Eigen::Index n = g.size();
  const Eigen::Index d = g.dim();
  const detail::MixtureDensityKernel kernel(g);
  const Eigen::MatrixXd& anchored = kernel.anchored_centers();

  // Cumulative weights for inverse-CDF center sampling.
  Eigen::VectorXd cdf(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += g.weights[i];
    cdf[i] = acc;
  }

  std::vector<Welford> outer(static_cast<std::size_t>(n_outer));
  CutoffPlan no_cutoff;
  parallel_for_index(static_cast<std::size_t>(n_outer), opts.threads,
                     [&](std::size_t k) {
                       auto pick = rng::substream(
                           seed, {rng::tag::kMcOuter,
                                  static_cast<std::uint64_t>(k)});
                       const double u = pick.uniform() * acc;
                       Eigen::Index i = 0;
                       while (i + 1 < n && cdf[i] <= u) ++i;
                       Welford w;
                       for (std::int64_t j0 = 0; j0 < n_mc;
                            j0 += kDrawBlock) {
                         const std::int64_t bc =
                             std::min<std::int64_t>(kDrawBlock, n_mc - j0);
                         w.merge(run_draw_chunk(
                             kernel, nullptr, anchored.row(i), d, g.beta,
                             opts.control_variate, no_cutoff, 0.0, seed,
                             rng::derive_key(
                                 seed, {rng::tag::kMcOuter,
                                        static_cast<std::uint64_t>(k)}),
                             j0, bc));
                       }
                       outer[k] = w;
                     });

  Welford top;
  double inner_var = 0.0;
  for (std::size_t k = 0; k < outer.size(); ++k) {
    top.add(outer[k].mean);
    inner_var += outer[k].sample_variance() /
                 static_cast<double>(n_mc * n_outer * n_outer);
  }

  const EntropyBounds bounds = cheap_bounds(g);
  EntropyEstimate est;
  est.value = top.mean;
  est.std_error =
      n_outer >= 2
          ? std::sqrt(top.sample_variance() / static_cast<double>(n_outer))
          : std::sqrt(inner_var);
  est.n_mc = n_mc;
  est.lower_bound = bounds.max_lower();
  est.upper_bound = bounds.min_upper();
  est.seed = seed;
  return est;
}

double mc_mse_bound(int dim, double beta, std::int64_t n, std::int64_t n_mc,
                    SupportClass support, double second_moment,
                    MseConstant constant) {
  if (dim < 1 || !(beta > 0.0) || n < 1 || n_mc < 1) {
    throw std::invalid_argument("mc_mse_bound: parameters must be positive");
  }
  const double d = static_cast<double>(dim);
  const double denom =
      static_cast<double>(n) * static_cast<double>(n_mc) * beta * beta;
  switch (support) {
    case SupportClass::kBoundedUnitCube: {
      const double shift = constant == MseConstant::kTight ? 2.0 : 4.0;
      return 2.0 * d * (shift + beta * beta) / denom;
    }
    case SupportClass::kSecondMoment: {
      if (second_moment < 0.0) {
        throw std::invalid_argument("second moment must be nonnegative");
      }
      const double m = second_moment;
      const double sd = std::sqrt(d);
      const double num = 9.0 * d * beta * beta +
                         8.0 * (2.0 + beta * sd) * m +
                         3.0 * (11.0 * beta * sd + 1.0) * std::sqrt(m);
      return num / denom;
    }
  }
  throw std::invalid_argument("unknown support class");
}

}  // namespace infoflow
