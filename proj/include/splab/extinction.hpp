#pragma once

#include "splab/flow.hpp"

namespace splab {

struct ExtinctionConfig {
  double s{1.0};        // flow horizon per iteration
  double tol{1e-8};     // sup-norm fixed-point tolerance
  int max_sweeps{400};  // V_s applications per Theta level
  int max_doublings{10};
};

struct ExtinctionResult {
  Field v;
  double residual{0.0};   // ||V_s v - v||_inf at convergence
  double theta_cap{0.0};  // largest constant Theta used
  int sweeps{0};
};

/// Extinction function v = -log q as the large-initial-condition fixed point
/// of V_s: iterate v <- V_s(v) from the constant field Theta, then double
/// Theta and require the limit to move by less than tol.
ExtinctionResult extinction_v(const NonlinearFlow& flow, const EigenTriple& triple,
                              const ExtinctionConfig& cfg, const FlowConfig& fcfg);

/// P(extinction never happens | X_0 = mu) = 1 - exp(-<v, mu>).
/// mu holds the per-cell masses.
double survival_prob(const ExtinctionResult& res, const Field& mu);

}  // namespace splab
