#pragma once

#include <vector>

#include "splab/model.hpp"
#include "splab/semigroup.hpp"

namespace splab {

struct FlowConfig {
  double dt{1e-3};
  double picard_tol{1e-12};
  int max_picard{50};
  std::vector<double> record_times;
};

struct FlowResult {
  std::vector<double> times;
  std::vector<Field> fields;
  bool converged{true};
};

/// Local branching rate r(x,theta) = beta(x) theta^2
///   + int_0^inf (e^{-theta s} - 1 + theta s) n(x, ds),
/// evaluated by direct quadrature. Reference route; the solver uses the
/// tabulated kernel which must agree with this.
double branching_r(const ModelSpec& spec, int x_index, double theta);
double branching_r_deriv(const ModelSpec& spec, int x_index, double theta);

/// Log-Laplace flow V_t f = u_f(t, .) solved through the mild equation with
/// one implicit rectangle step per dt: u_{k+1} + s * r(., u_{k+1}) = e^{sA} u_k,
/// fixed point per node by Picard iteration. First order in dt, monotone and
/// positivity-preserving; the final step is shortened so the horizon is hit
/// exactly.
class NonlinearFlow {
 public:
  NonlinearFlow(const ModelSpec& spec, const Propagator& prop);

  const Propagator& propagator() const { return *prop_; }
  const ModelSpec& spec() const { return *spec_; }

  double rate(int i, double theta) const;
  double rate_deriv(int i, double theta) const;

  /// One implicit mild step of size s.
  Field step(const Field& u, double s, const FlowConfig& cfg) const;

  Field solve(const Field& f, double T, const FlowConfig& cfg) const;

  /// Solve while storing the post-step field of every internal step
  /// (path[0] = f) together with the step sizes; this is the exact
  /// linearization data for derivative().
  Field solve_with_path(const Field& f, double T, const FlowConfig& cfg,
                        std::vector<Field>& path,
                        std::vector<double>& steps) const;

  /// Solve and record u(t,.) at cfg.record_times (each a multiple of dt up to
  /// 1e-9, increasing).
  FlowResult solve_recorded(const Field& f, const FlowConfig& cfg) const;

  /// Directional derivatives of the discrete flow along a stored path:
  /// columns of G evolve by W <- (I + s diag(r'(u_next)))^{-1} e^{sA} W.
  Matrix derivative(const std::vector<Field>& path,
                    const std::vector<double>& steps, const Matrix& G) const;
  Field derivative(const std::vector<Field>& path,
                   const std::vector<double>& steps, const Field& g) const;

 private:
  const ModelSpec* spec_;
  const Propagator* prop_;
  JumpKernel kernel_;

  Field implicit_update(const Field& b, double s, const FlowConfig& cfg,
                        int step_index) const;
};

/// Number of steps and last-step size used to reach T on a dt grid.
std::pair<int, double> step_layout(double T, double dt);

}  // namespace splab
