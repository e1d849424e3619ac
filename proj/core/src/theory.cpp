#include "infoflow/theory.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "infoflow/entropy.hpp"

namespace infoflow {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;

/// Lower-tail inverse normal CDF for p in (0, 0.5], rational approximation
/// (Acklam), |relative error| < 1.2e-9 before refinement.
double probit_lower(double p) {
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double q_function(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double inverse_q(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::invalid_argument("inverse_q: p must lie in (0,1)");
  }
  // Q(x) = p  <=>  Phi(-x) = p for the lower tail.
  double x = p <= 0.5 ? -probit_lower(p) : probit_lower(1.0 - p);
  // Newton refinement on Q itself; two steps reach machine precision.
  for (int it = 0; it < 3; ++it) {
    const double err = q_function(x) - p;
    const double pdf =
        std::exp(-0.5 * x * x) * 0.39894228040143267793994605993438;
    if (pdf <= 0.0) break;
    x += err / pdf;
  }
  return x;
}

double binary_entropy(double eps) {
  if (eps < 0.0 || eps > 1.0) {
    throw std::invalid_argument("binary_entropy: argument outside [0,1]");
  }
  double h = 0.0;
  if (eps > 0.0) h -= eps * std::log(eps);
  if (eps < 1.0) h -= (1.0 - eps) * std::log(1.0 - eps);
  return h;
}

double entropy_risk_bound(int dim, double beta, std::int64_t n,
                          const RiskClass& cls) {
  if (dim < 1 || !(beta > 0.0) || n < 1) {
    throw std::invalid_argument("risk bound: parameters must be positive");
  }
  const double d = static_cast<double>(dim);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  if (cls.kind == RiskClass::kBounded) {
    // max{1, beta^-d} 2^{d+2} sqrt(d/n), evaluated in log space.
    const double log_term = std::max(0.0, -d * std::log(beta)) +
                            (d + 2.0) * std::log(2.0) +
                            0.5 * std::log(d / static_cast<double>(n));
    return std::exp(log_term);
  }
  const double k = cls.k;
  const double mu = cls.mu;
  if (!(k > 0.0) || mu < 0.0) {
    throw std::invalid_argument("subgaussian class needs k > 0 and mu >= 0");
  }
  const double kb = k + beta / kSqrt2;
  const double log_pref = 0.5 * d * std::log(1.0 / kSqrt2 + k / beta);
  const double inner = 8.0 * (2.0 * std::pow(mu, 4.0) +
                              32.0 * d * d * std::pow(k, 4.0) +
                              d * (d + 2.0) * std::pow(kb, 4.0)) /
                       std::pow(beta, 4.0);
  const double log_exp = 3.0 * d / 16.0 + mu * mu / (4.0 * kb * kb);
  return std::exp(log_pref + 0.5 * std::log(inner) + log_exp) / sqrt_n;
}

double risk_bound(int dim, double beta, std::int64_t n, const RiskClass& cls) {
  const double d = static_cast<double>(dim);
  const double stat = d * std::log1p(1.0 / (beta * beta)) /
                      (4.0 * std::sqrt(static_cast<double>(n)));
  return 2.0 * entropy_risk_bound(dim, beta, n, cls) + stat;
}

double epsilon_window_lower(int dim, double beta) {
  // 1 - (1 - 2Q(1/(2 beta)))^d without cancellation.
  const double q = q_function(1.0 / (2.0 * beta));
  const double log_inner = std::log1p(-2.0 * q);
  return -std::expm1(static_cast<double>(dim) * log_inner);
}

namespace {

void check_epsilon_window(int dim, double beta, double epsilon) {
  const double lo = epsilon_window_lower(dim, beta);
  if (!(epsilon > lo) || !(epsilon <= 1.0)) {
    std::ostringstream msg;
    msg << "epsilon = " << epsilon << " outside the valid window ("
        << lo << ", 1] for d = " << dim << ", beta = " << beta;
    throw std::invalid_argument(msg.str());
  }
}

double log_kstar_pow(int dim, double epsilon, std::int64_t ks) {
  return static_cast<double>(dim) * (1.0 - epsilon) *
         std::log(static_cast<double>(ks));
}

}  // namespace

std::int64_t k_star(int dim, double beta, double epsilon) {
  if (dim < 1 || !(beta > 0.0)) {
    throw std::invalid_argument("k_star: need d >= 1 and beta > 0");
  }
  check_epsilon_window(dim, beta, epsilon);
  // (1 - (1-eps)^(1/d)) / 2, with log1p/expm1 to keep precision for large d.
  const double p =
      -0.5 * std::expm1(std::log1p(-epsilon) / static_cast<double>(dim));
  const double x = inverse_q(p);
  const std::int64_t ks = static_cast<std::int64_t>(
      std::floor(1.0 / (beta * x)));
  return ks;
}

double bias_floor(int dim, double beta, double epsilon, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("bias_floor: n must be >= 1");
  const std::int64_t ks = k_star(dim, beta, epsilon);
  const double raw = log_kstar_pow(dim, epsilon, ks) -
                     std::log(static_cast<double>(n)) -
                     binary_entropy(epsilon);
  return std::max(0.0, raw);
}

MinSamples min_n_for_bias(int dim, double beta, double epsilon, double delta) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument("min_n_for_bias: delta must be positive");
  }
  const std::int64_t ks = k_star(dim, beta, epsilon);
  MinSamples out;
  out.log_n = log_kstar_pow(dim, epsilon, ks) - delta - binary_entropy(epsilon);
  // ceil(exp(log_n)) with saturation.
  if (out.log_n >= 44.0) {  // exp(44) > 2^63
    out.n = std::numeric_limits<std::uint64_t>::max();
    out.saturated = true;
  } else {
    out.n = static_cast<std::uint64_t>(
        std::max(1.0, std::ceil(std::exp(out.log_n))));
  }
  return out;
}

TheoryReport theory_report(int dim, double beta, std::int64_t n,
                           std::int64_t n_mc, double epsilon, double delta,
                           const RiskClass& cls, double second_moment) {
  TheoryReport r;
  r.dim = dim;
  r.beta = beta;
  r.n = n;
  r.n_mc = n_mc;
  r.epsilon = epsilon;
  r.delta = delta;
  r.cls = cls;
  r.second_moment = second_moment;
  r.risk = risk_bound(dim, beta, n, cls);
  r.k_star = k_star(dim, beta, epsilon);
  r.bias = bias_floor(dim, beta, epsilon, n);
  r.min_n = min_n_for_bias(dim, beta, epsilon, delta);
  r.mc_mse = cls.kind == RiskClass::kBounded
                 ? mc_mse_bound(dim, beta, n, n_mc,
                                SupportClass::kBoundedUnitCube)
                 : mc_mse_bound(dim, beta, n, n_mc,
                                SupportClass::kSecondMoment, second_moment);
  return r;
}

}  // namespace infoflow
