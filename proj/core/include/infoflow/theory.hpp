#pragma once

#include <cstdint>
#include <optional>

namespace infoflow {

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
double q_function(double x);

/// Inverse of the Q-function, accurate to full double precision
/// (rational initial guess refined by Newton steps on erfc).
double inverse_q(double p);

/// Binary entropy in nats; H_b(0) = H_b(1) = 0.
double binary_entropy(double eps);

/// Estimation class for the plug-in risk bound.
struct RiskClass {
  enum Kind { kBounded, kSubgaussian } kind = kBounded;
  double mu = 0.0;  // subgaussian mean-norm bound
  double k = 1.0;   // subgaussian parameter
  static RiskClass bounded() { return {kBounded, 0.0, 0.0}; }
  static RiskClass subgaussian(double mu, double k) {
    return {kSubgaussian, mu, k};
  }
};

/// Worst-case absolute-error bound for one plug-in entropy estimate from n
/// samples, in nats.
double entropy_risk_bound(int dim, double beta, std::int64_t n,
                          const RiskClass& cls);

/// Composed worst-case risk for the mutual-information estimate:
/// 2 * entropy risk + d log(1 + 1/beta^2) / (4 sqrt(n)).
double risk_bound(int dim, double beta, std::int64_t n, const RiskClass& cls);

/// Valid epsilon interval lower endpoint for the bias bound:
/// 1 - (1 - 2 Q(1/(2 beta)))^d, computed in log space.
double epsilon_window_lower(int dim, double beta);

/// Quantizer resolution of the bias lower bound:
/// floor(1 / (beta * Qinv( (1 - (1-eps)^(1/d)) / 2 ))).  Always >= 2 for
/// valid epsilon. Throws std::invalid_argument outside the valid window,
/// quoting the window.
std::int64_t k_star(int dim, double beta, double epsilon);

/// Lower bound on the estimator bias given n samples:
/// max(0, log(k*^{d(1-eps)} / n) - H_b(eps)), in nats.
double bias_floor(int dim, double beta, double epsilon, std::int64_t n);

/// Smallest n for which the bias bound drops below delta:
/// ceil(k*^{d(1-eps)} * exp(-(delta + H_b(eps)))), evaluated in log space.
/// Saturates at the largest uint64 for astronomically large values; the
/// exact natural log of the unrounded value is always reported alongside.
struct MinSamples {
  std::uint64_t n = 0;
  double log_n = 0.0;  // ln of the exact (pre-ceiling) value
  bool saturated = false;
};
MinSamples min_n_for_bias(int dim, double beta, double epsilon, double delta);

/// All theory calculator outputs for one parameter point.
struct TheoryReport {
  // echoed inputs
  int dim = 0;
  double beta = 0.0;
  std::int64_t n = 0;
  std::int64_t n_mc = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  RiskClass cls;
  double second_moment = 0.0;

  // outputs
  double risk = 0.0;           // composed MI risk bound, nats
  std::int64_t k_star = 0;     // quantizer resolution
  double bias = 0.0;           // bias floor at n, nats
  MinSamples min_n;            // smallest n for bias <= delta
  double mc_mse = 0.0;         // MC computation MSE bound, nats^2
};

TheoryReport theory_report(int dim, double beta, std::int64_t n,
                           std::int64_t n_mc, double epsilon, double delta,
                           const RiskClass& cls, double second_moment = 0.0);

}  // namespace infoflow
