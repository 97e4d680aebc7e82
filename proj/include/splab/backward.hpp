#pragma once

#include <vector>

#include "splab/csbp.hpp"
#include "splab/extinction.hpp"
#include "splab/flow.hpp"

namespace splab {

struct BackwardConfig {
  double delta{0.05};
  double horizon{12.0};
  int k_back{12};          // spectral modes carried by the Newton inversion
  double newton_tol{1e-12};
  int max_newton{30};
  double cond_cap{1e4};    // per-substep backward amplification cap
  double invert_cap{3e4};  // modes amplified beyond this over delta are slaved
};

/// Discretized backward iterates eta_{k delta} with the Seneta-Heyde
/// normalizers. eta[k] = V_{(K-k) delta}(deep seed); by construction
/// eta_k = V_delta(eta_{k+1}) holds at solver precision for every k.
struct BackwardFamily {
  double delta{0.0};
  double lambda0{0.0};
  std::vector<Field> eta;
  std::vector<double> gamma;  // <eta_k, psi0>_m, strictly decreasing
  std::vector<double> L;      // e^{lambda0 k delta} gamma_k, nondecreasing
  std::vector<double> h_sup;  // ||eta_k / (gamma_k phi0) - 1||_inf

  double horizon() const { return delta * (eta.size() - 1); }
};

/// One backward step: eta with ||V_delta(eta) - target|| small, computed by
/// Newton on the discrete forward map restricted to the leading k_back
/// spectral modes. The step is split into substeps so the per-substep
/// backward amplification stays below cond_cap; modes whose amplification
/// over a full substep chain exceeds invert_cap carry no recoverable
/// information and are slaved to the e^{-lambda0 s} ray scaling instead of
/// inverted. Throws on Newton failure or when the result leaves [0, v].
Field invert_flow_step(const NonlinearFlow& flow, const EigenTriple& triple,
                       const Field& target, double delta, const Field& v,
                       const BackwardConfig& cfg, const FlowConfig& fcfg);

/// Builds the family on {0, delta, ..., K delta}. The backward recursion is
/// exponentially unstable in every non-principal mode (shapes collapse onto
/// phi0 forward, so they blow up backward), so the family is constructed
/// deep-first: a small seed on the phi0 ray at t = K delta, its amplitude
/// calibrated by a 1-D secant so that <eta_0, psi0>_m matches the requested
/// anchor's projection, then a single forward pass stores every level.
BackwardFamily build_backward_family(const NonlinearFlow& flow,
                                     const EigenTriple& triple, const Field& v,
                                     const Field& eta0, const BackwardConfig& cfg,
                                     const FlowConfig& fcfg);

/// max_k || V_delta(eta_{k+1}) - eta_k ||_inf, recomputed with fresh solves.
double round_trip_defect(const BackwardFamily& fam, const NonlinearFlow& flow,
                         const FlowConfig& fcfg, int stride = 1);

/// Newton-inversion cross-check of the stored family: sampled k, the defect
/// || V_delta(invert_flow_step(eta_k)) - eta_k ||_inf.
double inversion_crosscheck(const BackwardFamily& fam, const NonlinearFlow& flow,
                            const EigenTriple& triple, const Field& v,
                            const BackwardConfig& cfg, const FlowConfig& fcfg,
                            int stride = 40);

/// <psi0, l>_m with l(x) = int over the heavy tail r >= 2 of
/// (r phi0(x)) ln^+(r phi0(x)) n(x, dr), in closed form. Returns +inf for
/// beta* <= 2 (the r ln r tail diverges); 0 when jumps are disabled.
double llogl_criterion(const ModelSpec& spec, const EigenTriple& triple);

enum class LlogLRegime { kHolds, kFails };

struct SHReport {
  LimitStatus route_a_status{LimitStatus::kInconclusive};
  double l0_route_a{0.0};  // valid when route_a_status == kFinite
  LimitStatus route_b_status{LimitStatus::kInconclusive};
  double l0_route_b{0.0};  // trailing value of the identity route
  double llogl_value{0.0};
  bool llogl_infinite{false};
  LlogLRegime regime{LlogLRegime::kHolds};
};

/// Route A: plateau detection on L(t). Route B: the identity
/// l0 = gamma_0 + int_0^inf e^{lambda0 s} <r(., eta_s), psi0>_m ds truncated
/// at the horizon (trapezoid on the stored eta). Both routes are classified
/// with the same plateau detector as the scalar oracle.
SHReport estimate_l0(const BackwardFamily& fam, const NonlinearFlow& flow,
                     const EigenTriple& triple);

}  // namespace splab
