#include "splab/csbp.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace splab {
namespace {

// The adaptive ODE solver needs a smooth right-hand side; the tabulated
// kernel supplies the jump integral without quadrature noise.
const JumpKernel& kernel_for(double beta_star) {
  static std::mutex mu;
  static std::map<double, std::unique_ptr<JumpKernel>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[beta_star];
  if (!slot) slot = std::make_unique<JumpKernel>(beta_star);
  return *slot;
}

double psi_smooth(const ScalarMechanism& mech, double u) {
  double p = -mech.lambda0 * u + mech.beta * u * u;
  if (mech.jumps_enabled && u > 0.0)
    p += mech.jump_c * kernel_for(mech.jump_beta_star).value(u);
  return p;
}

// Dormand-Prince 5(4), adaptive, scalar. Integrates y' = f(t,y) on [0,T].
// visit(t, y) is called at t=0, at every accepted step, and at t=T.
void dopri5(const std::function<double(double, double)>& f, double y0, double T,
            double rel_tol, double abs_tol,
            const std::function<void(double, double)>& visit) {
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                      a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                      a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  double t = 0.0, y = y0;
  visit(t, y);
  if (T <= 0.0) return;
  double h = std::min(1e-3, T);
  double k1 = f(t, y);
  int rejects_in_row = 0;
  while (t < T) {
    if (t + h > T) h = T - t;
    const double k2 = f(t + c2 * h, y + h * a21 * k1);
    const double k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const double k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const double k5 =
        f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const double k6 = f(
        t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const double ynew =
        y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double k7 = f(t + h, ynew);
    const double err = std::abs(
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
    const double tol = abs_tol + rel_tol * std::max(std::abs(y), std::abs(ynew));
    if (err <= tol) {
      t += h;
      y = ynew;
      k1 = k7;
      visit(t, y);
      rejects_in_row = 0;
    } else if (++rejects_in_row > 60) {
      throw std::runtime_error("dopri5: step size underflow");
    }
    const double fac =
        0.9 * std::pow(tol / std::max(err, 1e-300), 0.2);
    h *= std::min(5.0, std::max(0.2, fac));
    if (h < 1e-14 * std::max(1.0, t))
      throw std::runtime_error("dopri5: step size underflow");
  }
}

}  // namespace

double psi(const ScalarMechanism& mech, double u) {
  if (u < 0.0) throw std::invalid_argument("psi: u must be >= 0");
  double p = -mech.lambda0 * u + mech.beta * u * u;
  if (mech.jumps_enabled && u > 0.0)
    p += mech.jump_c *
         unit_jumps::compensated_exp_moment(u, mech.jump_beta_star);
  return p;
}

double psi_deriv(const ScalarMechanism& mech, double u) {
  if (u < 0.0) throw std::invalid_argument("psi_deriv: u must be >= 0");
  double p = -mech.lambda0 + 2.0 * mech.beta * u;
  if (mech.jumps_enabled && u > 0.0)
    p += mech.jump_c *
         unit_jumps::compensated_exp_moment_deriv(u, mech.jump_beta_star);
  return p;
}

bool grey_condition_holds(const ScalarMechanism& mech) {
  // The jump part grows only linearly in u (finite first moment), so the
  // integral int^inf du/psi converges exactly when beta > 0.
  return mech.beta > 0.0;
}

double extinction_root(const ScalarMechanism& mech, double tol) {
  if (!grey_condition_holds(mech))
    throw std::runtime_error(
        "extinction_root: Grey's condition fails (no quadratic term)");
  if (mech.lambda0 <= 0.0)
    throw std::runtime_error("extinction_root: mechanism must be supercritical");
  // Bracket the largest root: psi < 0 just above 0, psi > 0 at u_hi.
  double lo = mech.lambda0 / (2.0 * mech.beta);
  while (psi_smooth(mech, lo) >= 0.0) lo *= 0.5;
  double hi = std::max(1.0, 2.0 * mech.lambda0 / mech.beta);
  while (psi_smooth(mech, hi) <= 0.0) hi *= 2.0;
  // Bisection then Newton polish on the reference psi.
  for (int i = 0; i < 200 && hi - lo > tol * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (psi_smooth(mech, mid) < 0.0 ? lo : hi) = mid;
  }
  double v = 0.5 * (lo + hi);
  for (int i = 0; i < 4; ++i) v -= psi(mech, v) / psi_deriv(mech, v);
  return v;
}

double forward_flow(const ScalarMechanism& mech, double u0, double t,
                    double rel_tol) {
  if (u0 < 0.0) throw std::invalid_argument("forward_flow: u0 must be >= 0");
  if (u0 == 0.0 || t == 0.0) return u0;
  if (!mech.jumps_enabled) {
    // logistic: u(t) = l u0 e^{l t} / (l + b u0 (e^{l t} - 1))
    const double l = mech.lambda0, b = mech.beta;
    const double e = std::exp(l * t);
    return l * u0 * e / (l + b * u0 * (e - 1.0));
  }
  double y = std::log(u0);
  dopri5([&mech](double, double yy) {
    const double u = std::exp(yy);
    return -psi_smooth(mech, u) / u;
  }, y, t, rel_tol, rel_tol, [&y](double, double yy) { y = yy; });
  return std::exp(y);
}

double backward_flow(const ScalarMechanism& mech, double u0, double t,
                     double rel_tol) {
  const double v = extinction_root(mech);
  if (!(u0 > 0.0 && u0 < v))
    throw std::invalid_argument("backward_flow: u0 must lie in (0, v)");
  if (t == 0.0) return u0;
  if (!mech.jumps_enabled) {
    const double l = mech.lambda0, b = mech.beta;
    const double e = std::exp(-l * t);
    return l * u0 * e / (l - b * u0 * (1.0 - e));
  }
  double y = std::log(u0);
  dopri5([&mech](double, double yy) {
    const double u = std::exp(yy);
    return psi_smooth(mech, u) / u;
  }, y, t, rel_tol, rel_tol, [&y](double, double yy) { y = yy; });
  return std::exp(y);
}

LimitStatus classify_l0(const std::vector<double>& t,
                        const std::vector<double>& L, double slope_tol,
                        double growth_factor, double window_fraction) {
  if (t.size() < 4 || t.size() != L.size())
    throw std::invalid_argument("classify_l0: need a sampled L curve");
  const double T = t.back();
  const double t_win = std::max(window_fraction * T, t[1] - t[0]);
  size_t i = t.size() - 1;
  while (i > 0 && t.back() - t[i - 1] < t_win) --i;
  if (i == t.size() - 1) i = t.size() - 2;
  const double slope =
      (L.back() - L[i]) / (std::max(L.back(), 1e-300) * (t.back() - t[i]));
  if (slope < slope_tol) return LimitStatus::kFinite;
  if (L.back() > growth_factor * L.front()) return LimitStatus::kDivergent;
  return LimitStatus::kInconclusive;
}

ShConstants sh_constants(const ScalarMechanism& mech, double eta0,
                         const std::vector<double>& t_grid) {
  if (t_grid.empty() || t_grid.front() != 0.0)
    throw std::invalid_argument("sh_constants: t_grid must start at 0");
  ShConstants out;
  out.t = t_grid;
  out.gamma.resize(t_grid.size());
  out.L.resize(t_grid.size());
  double u = eta0;
  const double v = extinction_root(mech);
  if (!(eta0 > 0.0 && eta0 < v))
    throw std::invalid_argument("sh_constants: eta0 must lie in (0, v)");
  for (size_t k = 0; k < t_grid.size(); ++k) {
    if (k > 0) u = backward_flow(mech, u, t_grid[k] - t_grid[k - 1]);
    out.gamma[k] = u;
    out.L[k] = std::exp(mech.lambda0 * t_grid[k]) * u;
  }
  out.status = classify_l0(out.t, out.L);
  if (out.status == LimitStatus::kFinite) out.l0 = out.L.back();
  if (!mech.jumps_enabled)
    out.l0_closed = mech.lambda0 * eta0 / (mech.lambda0 - mech.beta * eta0);

  // Identity route: gamma_0 + int_0^T e^{lambda0 s} r(eta_s) ds with
  // r(u) = psi(u) + lambda0 u, trapezoid on the stored grid.
  double integral = 0.0;
  auto integrand = [&](size_t k) {
    const double g = out.gamma[k];
    return std::exp(mech.lambda0 * out.t[k]) * (psi(mech, g) + mech.lambda0 * g);
  };
  for (size_t k = 1; k < t_grid.size(); ++k)
    integral += 0.5 * (integrand(k - 1) + integrand(k)) * (out.t[k] - out.t[k - 1]);
  out.route_b = out.gamma[0] + integral;
  return out;
}

}  // namespace splab
