#pragma once

#include <memory>
#include <vector>

#include "splab/field.hpp"

namespace splab {

/// Parametric jump-measure family
///   n(x, dr) = c(x) * [ 1_{(0,2)}(r) + 1_{[2,inf)}(r) r^{-2} (ln r)^{-beta*} ] dr.
/// c is a nonnegative spatial intensity multiplier; beta_star > 1 controls the
/// heavy tail. The family is disabled by setting `enabled = false`.
struct JumpFamily {
  Field c;
  double beta_star{3.0};
  bool enabled{false};

  static JumpFamily disabled(const Grid& g) {
    JumpFamily f;
    f.c = Field::Zero(g.n_cells);
    f.enabled = false;
    return f;
  }
  static JumpFamily homogeneous(const Grid& g, double c_const, double bstar) {
    JumpFamily f;
    f.c = Field::Constant(g.n_cells, c_const);
    f.beta_star = bstar;
    f.enabled = true;
    return f;
  }
};

enum class JumpMomentKind {
  kRWedgeR2,   // int_0^inf (r /\ r^2) n(x,dr)
  kTailR,      // int_H^inf r n(x,dr), H >= 1
  kTailMass,   // n(x, (H,inf)), H > 0
  kSmallR2,    // int_0^eps r^2 n(x,dr), eps in (0,2]
  kRLogRTail,  // int_2^inf r ln r n(x,dr); +inf when beta* <= 2
};

/// Moments of the unit-intensity density (c == 1). Closed forms are used on
/// (0,2) and for the log-power tail; the remaining tail pieces integrate
/// exp(-u) u^{-beta*} after the substitution u = ln r.
namespace unit_jumps {
double tail_r(double H, double beta_star);
double tail_mass(double H, double beta_star);
double small_r2(double eps);
double r_wedge_r2(double beta_star);
double rlogr_tail(double beta_star);  // +inf for beta_star <= 2
/// int (e^{-theta r} - 1 + theta r) n_unit(dr), theta >= 0.
double compensated_exp_moment(double theta, double beta_star);
/// d/dtheta of the above: int (1 - e^{-theta r}) r n_unit(dr).
double compensated_exp_moment_deriv(double theta, double beta_star);
}  // namespace unit_jumps

double jump_moment(const JumpFamily& family, const Grid& g, int x_index,
                   JumpMomentKind kind, double param = 0.0);

/// Fast evaluator for the compensated jump integral J(theta) and its
/// derivative, shared by the nonlinear flow and the scalar oracle's fast path.
/// Tabulates J and J' on a log-theta grid (cubic Hermite segments) with
/// closed-form continuations below/above the table.
class JumpKernel {
 public:
  /// Inert kernel (no jumps): J == 0.
  JumpKernel();
  explicit JumpKernel(double beta_star);

  bool active() const { return active_; }
  double beta_star() const { return beta_star_; }

  /// J(theta) for the unit family; 0 for theta <= 0.
  double value(double theta) const;
  /// J'(theta) = int (1-e^{-theta r}) r n_unit(dr); 0 for theta <= 0.
  double deriv(double theta) const;

  double first_moment() const { return m1_; }   // int r n_unit(dr)
  double total_mass() const { return m0_; }     // n_unit((0,inf))

 private:
  bool active_{false};
  double beta_star_{0.0};
  double m1_{0.0}, m0_{0.0};        // full first moment / mass
  double m1t_{0.0}, m0t_{0.0};      // tail ([2,inf)) first moment / mass
  double s_lo_{0.0}, s_hi_{0.0}, ds_{0.0};
  std::vector<double> val_, dval_;  // J(theta_k) and dJ/ds at table nodes
  std::vector<double> der_, dder_;  // J'(theta_k) and dJ'/ds

  double eval_table(const std::vector<double>& y, const std::vector<double>& dy,
                    double s) const;
};

}  // namespace splab
