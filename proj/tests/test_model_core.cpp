#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "splab/flow.hpp"
#include "splab/jumps.hpp"
#include "splab/model.hpp"
#include "splab/quadrature.hpp"

using namespace splab;

namespace {
constexpr double kLn2 = 0.6931471805599453094;
}

TEST_CASE("inner product discretizes Lebesgue m") {
  Grid g(100);
  Field one = constant_field(g, 1.0);
  CHECK(inner_product_m(g, one, one) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(inner_product_m(g, Field::Zero(100), one) == 0.0);

  Grid g2(200);
  Field s(200);
  for (int i = 0; i < 200; ++i) s[i] = std::sqrt(2.0) * std::sin(M_PI * g2.node(i));
  // midpoint rule for int_0^1 2 sin^2(pi x) dx = 1
  CHECK(std::abs(inner_product_m(g2, s, s) - 1.0) < 1e-3);
}

TEST_CASE("inner product is bilinear and symmetric") {
  Grid g(64);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Field f(64), h(64), w(64);
    for (int i = 0; i < 64; ++i) {
      f[i] = u(rng);
      h[i] = u(rng);
      w[i] = u(rng);
    }
    const double a = u(rng), b = u(rng);
    CHECK(inner_product_m(g, f, h) ==
          doctest::Approx(inner_product_m(g, h, f)).epsilon(1e-14));
    CHECK(inner_product_m(g, a * f + b * w, h) ==
          doctest::Approx(a * inner_product_m(g, f, h) +
                          b * inner_product_m(g, w, h))
              .epsilon(1e-12));
  }
}

TEST_CASE("inner product rejects length mismatch") {
  Grid g(10);
  CHECK_THROWS(inner_product_m(g, Field::Zero(9), Field::Zero(10)));
}

TEST_CASE("jump moments match closed forms") {
  Grid g(16);
  JumpFamily fam = JumpFamily::homogeneous(g, 1.0, 3.0);

  // int_0^1 r^2 + int_1^2 r over the flat part = 11/6; isolate it by
  // subtracting the closed-form tail from the full (r /\ r^2) moment.
  const double full = jump_moment(fam, g, 0, JumpMomentKind::kRWedgeR2);
  const double tail2 = jump_moment(fam, g, 0, JumpMomentKind::kTailR, 2.0);
  CHECK(full - tail2 == doctest::Approx(11.0 / 6.0).epsilon(1e-12));

  // int_2^inf r^{-1} (ln r)^{-3} dr = 1/(2 ln^2 2)
  CHECK(tail2 == doctest::Approx(1.0 / (2.0 * kLn2 * kLn2)).epsilon(1e-12));

  // int_2^inf r ln r r^{-2} (ln r)^{-3} dr = 1/ln 2
  CHECK(jump_moment(fam, g, 0, JumpMomentKind::kRLogRTail) ==
        doctest::Approx(1.0 / kLn2).epsilon(1e-12));

  // quadrature route agrees with the closed-form tail mass
  const double mass_quad = integrate_gk(
      [](double u) { return std::exp(-u) * std::pow(u, -3.0); }, kLn2,
      kLn2 + 60.0, 1e-13, 1e-300);
  CHECK(jump_moment(fam, g, 0, JumpMomentKind::kTailMass, 2.0) ==
        doctest::Approx(mass_quad).epsilon(1e-11));
}

TEST_CASE("jump moments are monotone with vanishing tails") {
  Grid g(8);
  JumpFamily fam = JumpFamily::homogeneous(g, 2.0, 2.5);
  double prev = jump_moment(fam, g, 3, JumpMomentKind::kTailR, 1.0);
  for (double H : {2.0, 5.0, 10.0, 100.0, 1e4, 1e8, 1e16}) {
    const double cur = jump_moment(fam, g, 3, JumpMomentKind::kTailR, H);
    CHECK(cur >= 0.0);
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }
  // the tail vanishes, but only at log-power speed
  CHECK(jump_moment(fam, g, 3, JumpMomentKind::kTailR, 1e16) < 1e-2);

  double prev_eps = 0.0;
  for (double eps : {0.1, 0.5, 1.0, 2.0}) {
    const double cur = jump_moment(fam, g, 3, JumpMomentKind::kSmallR2, eps);
    CHECK(cur >= prev_eps);
    prev_eps = cur;
  }
}

TEST_CASE("divergent-tail parameters are rejected or flagged") {
  Grid g(8);
  JumpFamily fam = JumpFamily::homogeneous(g, 1.0, 1.0);
  CHECK_THROWS(jump_moment(fam, g, 0, JumpMomentKind::kTailR, 2.0));
  JumpFamily heavy = JumpFamily::homogeneous(g, 1.0, 1.5);
  CHECK(std::isinf(jump_moment(heavy, g, 0, JumpMomentKind::kRLogRTail)));
}

TEST_CASE("jump kernel table matches the quadrature reference") {
  for (double bstar : {1.5, 3.0}) {
    JumpKernel k(bstar);
    for (double th : {1e-9, 1e-6, 1e-3, 0.07, 0.5, 1.0, 3.0, 11.0, 40.0, 100.0}) {
      CAPTURE(bstar);
      CAPTURE(th);
      const double ref = unit_jumps::compensated_exp_moment(th, bstar);
      const double refd = unit_jumps::compensated_exp_moment_deriv(th, bstar);
      CHECK(std::abs(k.value(th) - ref) < 1e-9 * (1.0 + std::abs(ref)));
      CHECK(std::abs(k.deriv(th) - refd) < 1e-9 * (1.0 + std::abs(refd)));
    }
    CHECK(k.value(0.0) == 0.0);
    CHECK(k.deriv(0.0) == 0.0);
  }
}

TEST_CASE("branching rate reference at theta=1 splits into flat and tail parts") {
  // flat part: int_0^2 (e^{-r} - 1 + r) dr = 1 - e^{-2}. The tail part is
  // assembled from the exponentially decaying piece int (e^{-r} - 1) n plus
  // the closed-form first moment (itself verified in the moment tests).
  ModelSpec spec = ModelSpec::with_jumps(16, 0.0, 1e-12, 1.0, 3.0);
  const double tail_exp = integrate_gk(
      [](double u) {
        const double r = std::exp(u);
        return (std::expm1(-r)) * std::exp(-u) * std::pow(u, -3.0);
      },
      kLn2, kLn2 + 60.0, 1e-13, 1e-300);
  const double m1t = std::pow(kLn2, -2.0) / 2.0;
  const double tail = tail_exp + m1t;
  const double r1 = branching_r(spec, 0, 1.0) - 1e-12;  // remove beta part
  CHECK(r1 - tail == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-10));
}

TEST_CASE("model validation") {
  ModelSpec ok = ModelSpec::quadratic(64, 6.0, 1.0);
  ValidationReport rep = validate_model(ok);
  CHECK(rep.ok);
  CHECK(rep.realized_bound == doctest::Approx(7.0));

  ModelSpec zero_beta = ok;
  zero_beta.beta = Field::Zero(64);
  CHECK_FALSE(validate_model(zero_beta).ok);

  ModelSpec bad_tail = ModelSpec::quadratic(64, 6.0, 1.0);
  bad_tail.jumps = JumpFamily::homogeneous(bad_tail.grid, 1.0, 1.0);
  const ValidationReport r2 = validate_model(bad_tail);
  CHECK_FALSE(r2.ok);
  CHECK(r2.violations.size() >= 1);
}

TEST_CASE("grid interpolation hits nodes and midpoints") {
  Grid g(10);
  Field f(10);
  for (int i = 0; i < 10; ++i) f[i] = g.node(i);
  CHECK(g.interpolate(f, g.node(3)) == doctest::Approx(g.node(3)));
  CHECK(g.interpolate(f, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
}
