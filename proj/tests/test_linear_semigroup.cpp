#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "splab/semigroup.hpp"

using namespace splab;

namespace {

const double kPi = M_PI;

// Dirichlet heat kernel on (0,1) for generator (1/2)d^2/dx^2:
// p(t,x,y) = 2 sum_k e^{-pi^2 k^2 t / 2} sin(k pi x) sin(k pi y).
double heat_kernel_series(double t, double x, double y) {
  double s = 0.0;
  for (int k = 1; k <= 60; ++k)
    s += 2.0 * std::exp(-kPi * kPi * k * k * t / 2.0) * std::sin(k * kPi * x) *
         std::sin(k * kPi * y);
  return s;
}

Field random_nonneg(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Field f(g.n_cells);
  for (int i = 0; i < g.n_cells; ++i)
    f[i] = u(rng) * (1.0 + std::sin(3.0 * g.node(i)));
  return f;
}

}  // namespace

TEST_CASE("generator structure") {
  ModelSpec spec = ModelSpec::quadratic(50, 0.0, 1.0);
  GeneratorMatrix gen = build_generator(spec);
  const Field ones = constant_field(spec.grid, 1.0);
  const Field row_sums = gen.A * ones;
  for (int i = 0; i < 50; ++i) CHECK(row_sums[i] <= 1e-9);
  // interior rows annihilate constants
  for (int i = 1; i < 49; ++i) CHECK(std::abs(row_sums[i]) < 1e-9);
  CHECK(row_sums[0] < -1.0);  // boundary killing
}

TEST_CASE("principal eigenvalue of the killed motion") {
  ModelSpec spec = ModelSpec::quadratic(200, 0.0, 1.0);
  GeneratorMatrix gen = build_generator(spec);
  EigenTriple tr = principal_eigentriple(gen, spec.grid);
  CHECK(std::abs(tr.lambda0 + kPi * kPi / 2.0) < 0.01);
}

TEST_CASE("eigen triple for constant alpha = 6") {
  ModelSpec spec = ModelSpec::quadratic(200, 6.0, 1.0);
  GeneratorMatrix gen = build_generator(spec);
  EigenTriple tr = principal_eigentriple(gen, spec.grid);
  CHECK(std::abs(tr.lambda0 - (6.0 - kPi * kPi / 2.0)) < 0.01);
  CHECK(sup_norm(tr.psi0 - tr.phi0) < 1e-6);  // self-adjoint generator
  CHECK(std::abs(spec.grid.interpolate(tr.phi0, 0.5) - std::sqrt(2.0)) < 5e-3);
  CHECK(tr.phi0.minCoeff() > 0.0);
  CHECK(std::abs(inner_product_m(spec.grid, tr.phi0, tr.phi0) - 1.0) < 1e-12);
  CHECK(std::abs(inner_product_m(spec.grid, tr.phi0, tr.psi0) - 1.0) < 1e-12);
  CHECK(tr.residual < 1e-6);

  // dual route: the full symmetric eigendecomposition must agree with the
  // shift-inverted power iteration
  Propagator prop(gen);
  const double lam_dense = prop.eigenvalues().tail(1)[0];
  CHECK(std::abs(lam_dense - tr.lambda0) < 1e-9);
  Field phi_dense = prop.eigenvectors().rightCols(1);
  if (phi_dense.sum() < 0) phi_dense = -phi_dense;
  phi_dense /= std::sqrt(inner_product_m(spec.grid, phi_dense, phi_dense));
  CHECK(sup_norm(phi_dense - tr.phi0) < 1e-8);
}

TEST_CASE("semigroup application") {
  ModelSpec spec = ModelSpec::quadratic(200, 0.0, 1.0);
  GeneratorMatrix gen = build_generator(spec);
  Propagator prop(gen);
  EigenTriple tr = principal_eigentriple(gen, spec.grid);

  std::mt19937_64 rng(7);
  Field f = random_nonneg(spec.grid, rng);
  CHECK(sup_norm(prop.apply(0.0, f) - f) == 0.0);

  // eigen-relation
  Field g1 = prop.apply(1.0, tr.phi0);
  CHECK(sup_norm(g1 - std::exp(tr.lambda0) * tr.phi0) < 1e-8);

  // kernel value against the sine-series oracle
  const double oracle = heat_kernel_series(1.0, 0.25, 0.75);
  CHECK(std::abs(prop.kernel(1.0, 0.25, 0.75, spec.grid) - oracle) < 1e-4);

  // positivity
  CHECK(prop.apply(0.7, f).minCoeff() >= 0.0);
}

TEST_CASE("semigroup law, duality, domination") {
  ModelSpec spec = ModelSpec::quadratic(120, 6.0, 1.0);
  GeneratorMatrix gen = build_generator(spec);
  Propagator prop(gen);
  EigenTriple tr = principal_eigentriple(gen, spec.grid);
  std::mt19937_64 rng(11);

  for (double t : {0.1, 0.5, 1.0})
    for (double s : {0.1, 0.5, 1.0}) {
      Field f = random_nonneg(spec.grid, rng);
      Field a = prop.apply(t + s, f);
      Field b = prop.apply(t, prop.apply(s, f));
      CHECK(sup_norm(a - b) <= 1e-8 * sup_norm(f));
    }

  for (int rep = 0; rep < 5; ++rep) {
    Field f = random_nonneg(spec.grid, rng);
    const double t = 0.3 + 0.2 * rep;
    const double lhs = inner_product_m(spec.grid, prop.apply(t, f), tr.psi0);
    const double rhs =
        std::exp(tr.lambda0 * t) * inner_product_m(spec.grid, f, tr.psi0);
    CHECK(std::abs(lhs - rhs) < 1e-8 * std::abs(rhs));

    CHECK(sup_norm(prop.apply(t, f)) <=
          std::exp(spec.realized_bound() * t) * sup_norm(f) * (1.0 + 1e-12));
  }
}

TEST_CASE("matrix exponential cross-check") {
  ModelSpec spec = ModelSpec::quadratic(80, 6.0, 1.0);
  GeneratorMatrix gen = build_generator(spec);
  Propagator prop(gen);
  const Matrix a = prop.matrix(0.3);
  const Matrix b = prop.expm_reference(0.3);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-11 * a.cwiseAbs().maxCoeff());
}

TEST_CASE("uniform kernel bound") {
  ModelSpec spec = ModelSpec::quadratic(200, 6.0, 1.0);
  GeneratorMatrix gen = build_generator(spec);
  Propagator prop(gen);
  EigenTriple tr = principal_eigentriple(gen, spec.grid);

  // spectral decay of the deviation
  const double d1 = kernel_deviation(prop, tr, spec.grid, 0.5);
  const double d2 = kernel_deviation(prop, tr, spec.grid, 1.0);
  CHECK(d2 <= d1);

  UniformBound ub = fit_uniform_bound(prop, tr, spec.grid,
                                      {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5});
  CHECK(std::abs(ub.gamma - 3.0 * kPi * kPi / 2.0) < 0.1);

  // the bound holds with the fitted constants on the fitted range
  for (double t : {0.25, 0.6, 1.0, 2.0})
    CHECK(kernel_deviation(prop, tr, spec.grid, t) <=
          ub.c * std::exp(-ub.gamma * t) * (1.0 + 1e-12));

  // once c e^{-gamma t} < 1/2 the kernel dominates phi0 psi0 / 2
  const double t_half = std::log(2.0 * ub.c) / ub.gamma + 0.05;
  const Matrix& P = prop.matrix(t_half);
  const double scale = std::exp(-tr.lambda0 * t_half) * spec.grid.n_cells;
  for (int i = 0; i < 200; i += 17)
    for (int j = 0; j < 200; j += 17)
      CHECK(scale * P(i, j) >= 0.5 * tr.phi0[i] * tr.psi0[j]);

  // two-sided mean estimate for nonnegative f and t >= delta
  std::mt19937_64 rng(3);
  Field f = random_nonneg(spec.grid, rng);
  const double fp = inner_product_m(spec.grid, f, tr.psi0);
  for (double t : {0.5, 1.0, 2.0}) {
    Field Tf = prop.apply(t, f);
    const double grow = std::exp(tr.lambda0 * t) * fp;
    const double lo = (1.0 - ub.c * std::exp(-ub.gamma * t)) * grow;
    const double hi = (1.0 + ub.c) * grow;
    for (int i = 0; i < 200; i += 13) {
      CHECK(Tf[i] >= lo * tr.phi0[i] - 1e-12);
      CHECK(Tf[i] <= hi * tr.phi0[i] + 1e-12);
    }
  }
}
