#include "splab/flow.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace splab {

double branching_r(const ModelSpec& spec, int x_index, double theta) {
  if (theta < 0.0) throw std::invalid_argument("branching_r: theta must be >= 0");
  if (x_index < 0 || x_index >= spec.grid.n_cells)
    throw std::out_of_range("branching_r: x_index out of range");
  double r = spec.beta[x_index] * theta * theta;
  if (spec.jumps.enabled && theta > 0.0)
    r += spec.jumps.c[x_index] *
         unit_jumps::compensated_exp_moment(theta, spec.jumps.beta_star);
  return r;
}

double branching_r_deriv(const ModelSpec& spec, int x_index, double theta) {
  if (theta < 0.0) throw std::invalid_argument("branching_r_deriv: theta >= 0");
  double r = 2.0 * spec.beta[x_index] * theta;
  if (spec.jumps.enabled && theta > 0.0)
    r += spec.jumps.c[x_index] *
         unit_jumps::compensated_exp_moment_deriv(theta, spec.jumps.beta_star);
  return r;
}

std::pair<int, double> step_layout(double T, double dt) {
  if (T < 0.0) throw std::invalid_argument("flow horizon must be >= 0");
  if (dt <= 0.0) throw std::invalid_argument("flow dt must be > 0");
  if (T == 0.0) return {0, dt};
  int n = static_cast<int>(std::ceil(T / dt - 1e-9));
  double last = T - (n - 1) * dt;
  if (last <= 0.0) {
    n -= 1;
    last = T - (n - 1) * dt;
  }
  return {n, last};
}

NonlinearFlow::NonlinearFlow(const ModelSpec& spec, const Propagator& prop)
    : spec_(&spec), prop_(&prop) {
  if (spec.jumps.enabled) kernel_ = JumpKernel(spec.jumps.beta_star);
}

double NonlinearFlow::rate(int i, double theta) const {
  if (theta <= 0.0) return 0.0;
  double r = spec_->beta[i] * theta * theta;
  if (kernel_.active()) r += spec_->jumps.c[i] * kernel_.value(theta);
  return r;
}

double NonlinearFlow::rate_deriv(int i, double theta) const {
  if (theta <= 0.0) return 0.0;
  double r = 2.0 * spec_->beta[i] * theta;
  if (kernel_.active()) r += spec_->jumps.c[i] * kernel_.deriv(theta);
  return r;
}

Field NonlinearFlow::implicit_update(const Field& b, double s,
                                     const FlowConfig& cfg,
                                     int step_index) const {
  const int n = b.size();
  Field w = b;
  double res = 0.0;
  for (int it = 0; it < cfg.max_picard; ++it) {
    res = 0.0;
    for (int i = 0; i < n; ++i) {
      const double next = b[i] - s * rate(i, w[i]);
      res = std::max(res, std::abs(next - w[i]));
      w[i] = next;
    }
    if (res < cfg.picard_tol) return w;
  }
  throw std::runtime_error("solve_flow: Picard failed at step " +
                           std::to_string(step_index) + ", residual " +
                           std::to_string(res) +
                           " (dt too large for this mechanism?)");
}

Field NonlinearFlow::step(const Field& u, double s, const FlowConfig& cfg) const {
  Field b = prop_->matrix(s) * u;
  return implicit_update(b, s, cfg, -1);
}

Field NonlinearFlow::solve(const Field& f, double T, const FlowConfig& cfg) const {
  std::vector<Field> path;
  std::vector<double> steps;
  return solve_with_path(f, T, cfg, path, steps);
}

Field NonlinearFlow::solve_with_path(const Field& f, double T,
                                     const FlowConfig& cfg,
                                     std::vector<Field>& path,
                                     std::vector<double>& steps) const {
  path.clear();
  steps.clear();
  path.push_back(f);
  if (T == 0.0) return f;
  auto [n_steps, last] = step_layout(T, cfg.dt);
  Field u = f;
  for (int k = 0; k < n_steps; ++k) {
    const double s = (k == n_steps - 1) ? last : cfg.dt;
    Field b = prop_->matrix(s) * u;
    u = implicit_update(b, s, cfg, k);
    path.push_back(u);
    steps.push_back(s);
  }
  return u;
}

FlowResult NonlinearFlow::solve_recorded(const Field& f,
                                         const FlowConfig& cfg) const {
  FlowResult out;
  if (cfg.record_times.empty())
    throw std::invalid_argument("solve_recorded: record_times empty");
  double prev = 0.0;
  Field u = f;
  for (double t : cfg.record_times) {
    if (t < prev - 1e-12)
      throw std::invalid_argument("record_times must be increasing");
    std::vector<Field> path;
    std::vector<double> steps;
    u = solve_with_path(u, t - prev, cfg, path, steps);
    out.times.push_back(t);
    out.fields.push_back(u);
    prev = t;
  }
  return out;
}

Matrix NonlinearFlow::derivative(const std::vector<Field>& path,
                                 const std::vector<double>& steps,
                                 const Matrix& G) const {
  Matrix W = G;
  for (size_t k = 0; k < steps.size(); ++k) {
    const double s = steps[k];
    W = prop_->matrix(s) * W;
    const Field& u_next = path[k + 1];
    for (int i = 0; i < W.rows(); ++i)
      W.row(i) /= 1.0 + s * rate_deriv(i, u_next[i]);
  }
  return W;
}

Field NonlinearFlow::derivative(const std::vector<Field>& path,
                                const std::vector<double>& steps,
                                const Field& g) const {
  Matrix G(g.size(), 1);
  G.col(0) = g;
  return derivative(path, steps, G).col(0);
}

}  // namespace splab
