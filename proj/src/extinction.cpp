#include "splab/extinction.hpp"

#include <cmath>
#include <stdexcept>

namespace splab {
namespace {

struct Sweep {
  Field v;
  double residual;
  int sweeps;
};

Sweep iterate_to_fixed_point(const NonlinearFlow& flow, Field v,
                             const ExtinctionConfig& cfg,
                             const FlowConfig& fcfg) {
  double res = 0.0;
  for (int k = 0; k < cfg.max_sweeps; ++k) {
    Field next = flow.solve(v, cfg.s, fcfg);
    res = sup_norm(next - v);
    v = next;
    if (res < cfg.tol) return {v, res, k + 1};
  }
  throw std::runtime_error(
      "extinction_v: fixed-point sweep cap reached, residual " +
      std::to_string(res));
}

}  // namespace

ExtinctionResult extinction_v(const NonlinearFlow& flow,
                              const EigenTriple& triple,
                              const ExtinctionConfig& cfg,
                              const FlowConfig& fcfg) {
  if (triple.lambda0 <= 0.0)
    throw std::runtime_error(
        "extinction_v requires a supercritical model (lambda0 > 0)");
  const ModelSpec& spec = flow.spec();
  const double beta_min = spec.beta.minCoeff();
  double theta = 10.0 * triple.lambda0 / beta_min;

  ExtinctionResult out;
  Sweep base = iterate_to_fixed_point(
      flow, constant_field(spec.grid, theta), cfg, fcfg);
  for (int d = 0; d < cfg.max_doublings; ++d) {
    theta *= 2.0;
    Sweep doubled = iterate_to_fixed_point(
        flow, constant_field(spec.grid, theta), cfg, fcfg);
    if (sup_norm(doubled.v - base.v) < cfg.tol) {
      out.v = doubled.v;
      out.residual = doubled.residual;
      out.theta_cap = theta;
      out.sweeps = base.sweeps + doubled.sweeps;
      if (out.v.minCoeff() <= 0.0)
        throw std::runtime_error("extinction_v: v is not strictly positive");
      return out;
    }
    base = doubled;
  }
  throw std::runtime_error(
      "extinction_v: doubled-Theta limits kept moving; Theta cap reached");
}

double survival_prob(const ExtinctionResult& res, const Field& mu) {
  if (mu.size() != res.v.size())
    throw std::invalid_argument("survival_prob: mass vector length mismatch");
  if (mu.minCoeff() < 0.0)
    throw std::invalid_argument("survival_prob: negative mass");
  return -std::expm1(-res.v.dot(mu));
}

}  // namespace splab
