#include "splab/model.hpp"

#include <cmath>

namespace splab {

ModelSpec ModelSpec::quadratic(int n_cells, double alpha_const,
                               double beta_const) {
  ModelSpec s;
  s.grid = Grid(n_cells);
  s.alpha = Field::Constant(n_cells, alpha_const);
  s.beta = Field::Constant(n_cells, beta_const);
  s.jumps = JumpFamily::disabled(s.grid);
  s.bound_M = s.realized_bound();
  return s;
}

ModelSpec ModelSpec::with_jumps(int n_cells, double alpha_const,
                                double beta_const, double c_const,
                                double beta_star) {
  ModelSpec s = quadratic(n_cells, alpha_const, beta_const);
  s.jumps = JumpFamily::homogeneous(s.grid, c_const, beta_star);
  s.bound_M = s.realized_bound();
  return s;
}

double ModelSpec::realized_bound() const {
  double m = 0.0;
  const bool tail_ok = !jumps.enabled || jumps.beta_star > 1.0;
  for (int i = 0; i < grid.n_cells; ++i) {
    double b = std::abs(alpha[i]) + beta[i];
    if (jumps.enabled && tail_ok)
      b += jumps.c[i] * unit_jumps::r_wedge_r2(jumps.beta_star);
    m = std::max(m, b);
  }
  return m;
}

ValidationReport validate_model(const ModelSpec& spec) {
  ValidationReport rep;
  auto fail = [&rep](const std::string& msg) {
    rep.ok = false;
    rep.violations.push_back(msg);
  };

  if (spec.grid.n_cells < 8) fail("grid too coarse (n_cells < 8)");
  if (spec.alpha.size() != spec.grid.n_cells ||
      spec.beta.size() != spec.grid.n_cells)
    fail("alpha/beta length does not match grid");
  if (spec.alpha.size() == spec.grid.n_cells && !spec.alpha.allFinite())
    fail("alpha has non-finite entries");
  if (spec.beta.size() == spec.grid.n_cells &&
      (!spec.beta.allFinite() || spec.beta.minCoeff() <= 0.0))
    fail("inf beta must be > 0 (sufficient condition for positive extinction "
         "probability)");
  if (spec.jumps.enabled) {
    if (spec.jumps.c.size() != spec.grid.n_cells ||
        spec.jumps.c.minCoeff() < 0.0)
      fail("jump intensity c must be a nonnegative field on the grid");
    if (!(spec.jumps.beta_star > 1.0))
      fail("jump tail integral int r n(x,dr) diverges for beta_star <= 1");
  }
  if (rep.ok) {
    rep.realized_bound = spec.realized_bound();
    if (spec.bound_M > 0.0 && rep.realized_bound > spec.bound_M * (1.0 + 1e-12))
      fail("declared bound_M is smaller than the realized bound");
  }
  return rep;
}

}  // namespace splab
