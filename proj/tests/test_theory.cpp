#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "infoflow/theory.hpp"

using namespace infoflow;

TEST_CASE("inverse q function round trips to high precision") {
  for (double p : {0.4, 0.1, 1e-2, 1e-4, 1e-7, 1e-12, 0.6, 0.97}) {
    const double x = inverse_q(p);
    CHECK(q_function(x) == doctest::Approx(p).epsilon(1e-11));
  }
  CHECK(inverse_q(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(inverse_q(0.0), std::invalid_argument);
  CHECK_THROWS_AS(inverse_q(1.0), std::invalid_argument);
}

TEST_CASE("binary entropy in nats") {
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(binary_entropy(0.01) == doctest::Approx(0.0560).epsilon(1e-3));
}

TEST_CASE("quantizer resolution table at beta 0.1, epsilon 0.01") {
  for (int d = 1; d <= 11; ++d) CHECK(k_star(d, 0.1, 0.01) == 3);
  CHECK(k_star(12, 0.1, 0.01) == 2);
  CHECK(k_star(100, 0.1, 0.01) == 2);
  CHECK(k_star(1000, 0.1, 0.01) == 2);
  CHECK(k_star(10000, 0.1, 0.01) == 2);
}

TEST_CASE("epsilon window is enforced verbatim") {
  const double lo = epsilon_window_lower(5, 0.1);
  CHECK(lo > 0.0);
  CHECK(lo < 1e-4);
  CHECK_THROWS_WITH_AS(k_star(5, 0.1, lo * 0.5),
                       doctest::Contains("valid window"),
                       std::invalid_argument);
  // Large beta makes the window collapse towards 1.
  const double lo_big = epsilon_window_lower(10, 2.0);
  CHECK(lo_big > 0.5);
}

TEST_CASE("bias floor boundary and monotonicity") {
  const int d = 6;
  const double beta = 0.1;
  const double eps = 0.01;
  const std::int64_t ks = k_star(d, beta, eps);
  const double log_pow = d * (1.0 - eps) * std::log(static_cast<double>(ks));
  const std::int64_t n_boundary = static_cast<std::int64_t>(
      std::ceil(std::exp(log_pow - binary_entropy(eps))));
  CHECK(bias_floor(d, beta, eps, n_boundary) == 0.0);
  CHECK(bias_floor(d, beta, eps, n_boundary / 8) > 0.0);
  CHECK(bias_floor(d, beta, eps, 4 * n_boundary) == 0.0);
  CHECK(bias_floor(d, beta, eps, 100) >=
        bias_floor(d, beta, eps, 200));
}

TEST_CASE("minimum sample size follows the log-space arithmetic") {
  const auto m = min_n_for_bias(20, 0.1, 0.01, 0.1);
  const double expected_log =
      20.0 * 0.99 * std::log(2.0) - 0.1 - binary_entropy(0.01);
  CHECK(m.log_n == doctest::Approx(expected_log).epsilon(1e-12));
  CHECK(!m.saturated);
  CHECK(std::log(static_cast<double>(m.n)) ==
        doctest::Approx(expected_log).epsilon(1e-3));

  // Large d saturates the integer but keeps the log.
  const auto big = min_n_for_bias(1000, 0.1, 0.01, 0.1);
  CHECK(big.saturated);
  CHECK(big.log_n == doctest::Approx(1000.0 * 0.99 * std::log(2.0) - 0.1 -
                                     binary_entropy(0.01))
                         .epsilon(1e-12));
}

TEST_CASE("bounded-class risk bound by direct substitution") {
  // d=3, beta=0.5, n=1e6: 2 * (8 * 32 * sqrt(3e-6)) + 3 ln 5 / 4000.
  const double expected =
      2.0 * (8.0 * 32.0 * std::sqrt(3.0 / 1e6)) +
      3.0 * std::log(5.0) / 4000.0;
  CHECK(risk_bound(3, 0.5, 1000000, RiskClass::bounded()) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("risk bound shrinks with n at the 1/sqrt rate") {
  const double r1 = risk_bound(4, 0.3, 10000, RiskClass::bounded());
  const double r2 = risk_bound(4, 0.3, 20000, RiskClass::bounded());
  CHECK(r2 < r1);
  // Both terms scale as 1/sqrt(n), so the ratio is exactly sqrt(2).
  CHECK(r1 / r2 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("risk bound decreases as the noise grows") {
  double prev = risk_bound(3, 0.05, 100000, RiskClass::bounded());
  for (double beta : {0.1, 0.2, 0.5, 1.0, 2.0, 5.0}) {
    const double cur = risk_bound(3, beta, 100000, RiskClass::bounded());
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("subgaussian class evaluates and behaves monotonically") {
  const double r = risk_bound(3, 0.5, 1000000, RiskClass::subgaussian(0.5, 1.0));
  CHECK(std::isfinite(r));
  CHECK(r > 0.0);
  const double r_more = risk_bound(3, 0.5, 4000000,
                                   RiskClass::subgaussian(0.5, 1.0));
  CHECK(r_more == doctest::Approx(r / 2.0).epsilon(1e-12));
}

TEST_CASE("theory report collects every calculator") {
  const auto r = theory_report(5, 0.1, 100000, 1000, 0.01, 0.1,
                               RiskClass::bounded());
  CHECK(r.k_star == 3);
  CHECK(r.risk > 0.0);
  CHECK(r.bias >= 0.0);
  CHECK(r.min_n.n > 0);
  CHECK(r.mc_mse > 0.0);
}
