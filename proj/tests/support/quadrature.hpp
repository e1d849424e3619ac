#pragma once

// Brute-force entropy references, deliberately independent of the library's
// log-sum-exp kernel: densities are summed term by term in long double.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "infoflow/gaussian_mixture.hpp"

namespace oracle {

inline long double mixture_density_1d(const infoflow::GaussianMixture& g,
                                      long double t) {
  const long double beta = g.beta;
  const long double norm =
      1.0L / std::sqrt(2.0L * 3.14159265358979323846264338327950288L * beta *
                       beta);
  long double acc = 0.0L;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const long double dx = t - static_cast<long double>(g.centers(i, 0));
    acc += static_cast<long double>(g.weights[i]) * norm *
           std::exp(-dx * dx / (2.0L * beta * beta));
  }
  return acc;
}

/// -integral g log g over [lo, hi] by composite Simpson with step ~h.
inline double entropy_quadrature_1d(const infoflow::GaussianMixture& g,
                                    double lo, double hi, double h) {
  const long long steps_raw = static_cast<long long>((hi - lo) / h) + 1;
  const long long steps = steps_raw + (steps_raw % 2);  // Simpson needs even
  const long double dx = (static_cast<long double>(hi) - lo) / steps;
  auto f = [&](long double t) -> long double {
    const long double v = mixture_density_1d(g, t);
    return v > 0.0L ? -v * std::log(v) : 0.0L;
  };
  long double acc = f(lo) + f(hi);
  for (long long k = 1; k < steps; ++k) {
    acc += f(lo + dx * k) * (k % 2 == 1 ? 4.0L : 2.0L);
  }
  return static_cast<double>(acc * dx / 3.0L);
}

/// Convenience: integrate over [min center - pad*beta, max center + pad*beta].
inline double entropy_quadrature_1d(const infoflow::GaussianMixture& g,
                                    double pad = 12.0, double h = 1e-4) {
  const double lo = g.centers.col(0).minCoeff() - pad * g.beta;
  const double hi = g.centers.col(0).maxCoeff() + pad * g.beta;
  return entropy_quadrature_1d(g, lo, hi, std::min(h, g.beta / 200.0));
}

inline long double mixture_density_2d(const infoflow::GaussianMixture& g,
                                      long double x, long double y) {
  const long double beta = g.beta;
  const long double two_pi = 6.28318530717958647692528676655900577L;
  const long double norm = 1.0L / (two_pi * beta * beta);
  long double acc = 0.0L;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const long double dx = x - static_cast<long double>(g.centers(i, 0));
    const long double dy = y - static_cast<long double>(g.centers(i, 1));
    acc += static_cast<long double>(g.weights[i]) * norm *
           std::exp(-(dx * dx + dy * dy) / (2.0L * beta * beta));
  }
  return acc;
}

/// Tensor Simpson on a square domain padded by pad*beta around the centers.
inline double entropy_quadrature_2d(const infoflow::GaussianMixture& g,
                                    double pad = 9.0, int steps = 600) {
  const double lo_x = g.centers.col(0).minCoeff() - pad * g.beta;
  const double hi_x = g.centers.col(0).maxCoeff() + pad * g.beta;
  const double lo_y = g.centers.col(1).minCoeff() - pad * g.beta;
  const double hi_y = g.centers.col(1).maxCoeff() + pad * g.beta;
  const int n = steps + (steps % 2);
  const long double dx = (static_cast<long double>(hi_x) - lo_x) / n;
  const long double dy = (static_cast<long double>(hi_y) - lo_y) / n;
  auto w = [&](int k) -> long double {
    if (k == 0 || k == n) return 1.0L;
    return k % 2 == 1 ? 4.0L : 2.0L;
  };
  long double acc = 0.0L;
  for (int i = 0; i <= n; ++i) {
    const long double x = lo_x + dx * i;
    long double row = 0.0L;
    for (int j = 0; j <= n; ++j) {
      const long double y = lo_y + dy * j;
      const long double v = mixture_density_2d(g, x, y);
      row += w(j) * (v > 0.0L ? -v * std::log(v) : 0.0L);
    }
    acc += w(i) * row;
  }
  return static_cast<double>(acc * dx * dy / 9.0L);
}

}  // namespace oracle
