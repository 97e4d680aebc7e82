#pragma once

#include <optional>
#include <vector>

#include "splab/jumps.hpp"

namespace splab {

/// Spatially homogeneous mechanism psi(u) = -lambda0 u + beta u^2
///   + c int (e^{-ur} - 1 + ur) n_unit(dr); the continuous-state branching
/// ground truth for the grid solvers.
struct ScalarMechanism {
  double lambda0{1.0};
  double beta{1.0};
  double jump_c{0.0};
  double jump_beta_star{3.0};
  bool jumps_enabled{false};

  static ScalarMechanism quadratic(double lambda0, double beta) {
    return {lambda0, beta, 0.0, 3.0, false};
  }
  static ScalarMechanism with_jumps(double lambda0, double beta, double c,
                                    double beta_star) {
    return {lambda0, beta, c, beta_star, true};
  }
};

double psi(const ScalarMechanism& mech, double u);
double psi_deriv(const ScalarMechanism& mech, double u);

/// Grey's condition int^inf du/psi(u) < inf (finite extinction value).
/// For this family it holds exactly when the quadratic term is present.
bool grey_condition_holds(const ScalarMechanism& mech);

/// Largest root of psi (the scalar extinction value). Throws when Grey's
/// condition fails.
double extinction_root(const ScalarMechanism& mech, double tol = 1e-14);

/// u' = -psi(u) started from u0, evaluated at time t. Closed-form logistic
/// for the pure quadratic mechanism, adaptive Dormand-Prince otherwise
/// (log-coordinates, so arbitrarily small values stay resolved).
double forward_flow(const ScalarMechanism& mech, double u0, double t,
                    double rel_tol = 1e-12);

/// u' = +psi(u): the exact backward iterate. Requires 0 < u0 < v.
double backward_flow(const ScalarMechanism& mech, double u0, double t,
                     double rel_tol = 1e-12);

enum class LimitStatus { kFinite, kDivergent, kInconclusive };

struct ShConstants {
  std::vector<double> t;
  std::vector<double> gamma;  // eta_t
  std::vector<double> L;      // e^{lambda0 t} eta_t
  LimitStatus status{LimitStatus::kInconclusive};
  double l0{0.0};                      // valid when status == kFinite
  std::optional<double> l0_closed;     // exact limit for the pure quadratic
  double route_b{0.0};                 // gamma_0 + int e^{lambda0 s} r(eta_s) ds
};

/// Plateau / divergence classification shared with the grid-side estimator:
/// FINITE when the relative slope of L over the trailing window drops below
/// slope_tol (per unit time); DIVERGENT when L has grown by growth_factor with
/// the slope still above slope_tol; INCONCLUSIVE otherwise.
LimitStatus classify_l0(const std::vector<double>& t, const std::vector<double>& L,
                        double slope_tol = 1e-4, double growth_factor = 10.0,
                        double window_fraction = 0.1);

ShConstants sh_constants(const ScalarMechanism& mech, double eta0,
                         const std::vector<double>& t_grid);

}  // namespace splab
