#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "splab/csbp.hpp"

using namespace splab;

TEST_CASE("mechanism values") {
  ScalarMechanism q = ScalarMechanism::quadratic(1.0, 1.0);
  CHECK(psi(q, 1.0) == doctest::Approx(0.0));
  CHECK(psi(q, 0.5) == doctest::Approx(-0.25));
  CHECK(psi(q, 0.0) == 0.0);
  CHECK_THROWS(psi(q, -1.0));

  // psi'(0) = -lambda0 by finite differences
  const double h = 1e-7;
  CHECK(std::abs((psi(q, h) - psi(q, 0.0)) / h + 1.0) < 1e-5);

  // convexity on a grid
  double prev = psi_deriv(q, 0.0);
  for (double u = 0.1; u < 3.0; u += 0.1) {
    CHECK(psi_deriv(q, u) >= prev - 1e-12);
    prev = psi_deriv(q, u);
  }
}

TEST_CASE("forward flow solves the logistic exactly") {
  ScalarMechanism q = ScalarMechanism::quadratic(1.0, 1.0);
  CHECK(forward_flow(q, 0.5, std::log(2.0)) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(forward_flow(q, 1.0, 7.0) == doctest::Approx(1.0));  // fixed point
  CHECK(forward_flow(q, 0.0, 3.0) == 0.0);
}

TEST_CASE("backward flow inverts and round-trips") {
  ScalarMechanism q = ScalarMechanism::quadratic(1.0, 1.0);
  CHECK(backward_flow(q, 0.5, std::log(2.0)) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(backward_flow(q, 0.37, 0.0) == 0.37);
  CHECK_THROWS(backward_flow(q, 1.5, 1.0));

  ScalarMechanism j = ScalarMechanism::with_jumps(1.0, 1.0, 1.0, 3.0);
  const double v = extinction_root(j);
  for (double u0 : {0.1 * v, 0.5 * v, 0.9 * v}) {
    const double back = backward_flow(j, u0, 5.0);
    CHECK(back > 0.0);
    CHECK(back < v);
    CHECK(std::abs(forward_flow(j, back, 5.0) - u0) <= 1e-9 * u0);
  }
}

TEST_CASE("flow semigroup and monotonicity") {
  ScalarMechanism j = ScalarMechanism::with_jumps(1.0, 0.8, 0.7, 2.5);
  for (double u0 : {0.02, 0.1}) {
    const double ab = forward_flow(j, forward_flow(j, u0, 0.7), 1.3);
    const double once = forward_flow(j, u0, 2.0);
    CHECK(std::abs(ab - once) <= 1e-10 * std::max(1.0, once));
  }
  CHECK(forward_flow(j, 0.02, 1.0) < forward_flow(j, 0.03, 1.0));
  const double v = extinction_root(j);
  CHECK(backward_flow(j, 0.3 * v, 1.0) < backward_flow(j, 0.4 * v, 1.0));
}

TEST_CASE("seneta-heyde constants for the quadratic mechanism") {
  ScalarMechanism q = ScalarMechanism::quadratic(1.0, 1.0);
  std::vector<double> tgrid;
  for (double t = 0.0; t <= 30.0 + 1e-9; t += 0.25) tgrid.push_back(t);

  ShConstants sh = sh_constants(q, 0.5, tgrid);
  CHECK(sh.status == LimitStatus::kFinite);
  CHECK(std::abs(sh.l0 - 1.0) < 1e-3);
  REQUIRE(sh.l0_closed.has_value());
  CHECK(*sh.l0_closed == doctest::Approx(1.0));
  // identity route: gamma_0 + int e^s eta_s^2 ds = 1/2 + 1/2
  CHECK(std::abs(sh.route_b - 1.0) < 1e-3);

  ShConstants sh3 = sh_constants(q, 1.0 / 3.0, tgrid);
  CHECK(*sh3.l0_closed == doctest::Approx(0.5));
  CHECK(std::abs(sh3.l0 - 0.5) < 1e-3);

  // normalizer monotonicity: L nondecreasing, gamma ratios below e^{lambda s}
  for (size_t k = 1; k < sh.L.size(); ++k) {
    CHECK(sh.L[k] >= sh.L[k - 1] * (1.0 - 1e-12));
    const double ratio = sh.gamma[k - 1] / sh.gamma[k];
    CHECK(ratio <= std::exp(1.0 * 0.25) * (1.0 + 1e-12));
  }
  const size_t n = sh.gamma.size();
  CHECK(sh.gamma[n - 2] / sh.gamma[n - 1] ==
        doctest::Approx(std::exp(0.25)).epsilon(1e-4));
}

TEST_CASE("heavy-tail dichotomy in the oracle") {
  // beta* = 1.5: the L log L moment diverges and L(t) runs away
  ScalarMechanism heavy = ScalarMechanism::with_jumps(1.0, 1.0, 1.0, 1.5);
  const double v = extinction_root(heavy);
  std::vector<double> tgrid;
  for (double t = 0.0; t <= 30.0 + 1e-9; t += 0.25) tgrid.push_back(t);
  ShConstants sh = sh_constants(heavy, 0.5 * v, tgrid);
  CHECK(sh.status == LimitStatus::kDivergent);
  CHECK(sh.L.back() > 10.0 * sh.L.front());

  // beta* = 3: finite limit, visible on a long horizon
  ScalarMechanism light = ScalarMechanism::with_jumps(1.0, 1.0, 1.0, 3.0);
  const double v3 = extinction_root(light);
  std::vector<double> tlong;
  for (double t = 0.0; t <= 200.0 + 1e-9; t += 0.5) tlong.push_back(t);
  ShConstants sh3 = sh_constants(light, 0.5 * v3, tlong);
  CHECK(sh3.status == LimitStatus::kFinite);
  CHECK(sh3.l0 > 0.0);
  // identity route agrees to the plateau accuracy
  CHECK(std::abs(sh3.route_b - sh3.l0) < 0.02 * sh3.l0);
}
