#include "splab/jumps.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "splab/quadrature.hpp"

namespace splab {
namespace {

constexpr double kLn2 = 0.6931471805599453094;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_tail_convergent(double beta_star) {
  if (!(beta_star > 1.0))
    throw std::invalid_argument(
        "jump family: beta_star must be > 1 for a convergent r-tail");
}

// Tail density after u = ln r:  r^{-2}(ln r)^{-b} dr  ->  e^{-u} u^{-b} du.
double tail_mass_above(double H, double b) {
  require_tail_convergent(b);
  const double lo = std::log(std::max(H, 2.0));
  return integrate_gk([b](double u) { return std::exp(-u) * std::pow(u, -b); },
                      lo, lo + 60.0, 1e-13, 1e-300);
}

// int_0^2 (e^{-t r} - 1 + t r) dr, stable for small t.
double small_comp_exp(double t) {
  if (t <= 0.0) return 0.0;
  if (t < 1e-3) {
    // sum_{k>=2} (-t)^k 2^{k+1} / (k! (k+1))
    double term = 4.0 / 3.0 * t * t, sum = term;
    double tk = t * t;
    for (int k = 3; k <= 8; ++k) {
      tk *= -t;
      double c = std::pow(2.0, k + 1);
      double kf = 1.0;
      for (int j = 2; j <= k; ++j) kf *= j;
      term = tk * c / (kf * (k + 1));
      sum += term;
    }
    return sum;
  }
  return -std::expm1(-2.0 * t) / t - 2.0 + 2.0 * t;
}

// int_0^2 (1 - e^{-t r}) r dr, stable for small t.
double small_comp_exp_deriv(double t) {
  if (t <= 0.0) return 0.0;
  if (t < 1e-3) {
    // sum_{k>=1} (-1)^{k+1} t^k 2^{k+2} / ((k+2) k!)
    double sum = 0.0, tk = 1.0, kf = 1.0;
    for (int k = 1; k <= 9; ++k) {
      tk *= t;
      kf *= k;
      const double term = std::pow(2.0, k + 2) / ((k + 2) * kf) * tk;
      sum += (k % 2 == 1) ? term : -term;
    }
    return sum;
  }
  return 2.0 - (1.0 - std::exp(-2.0 * t) * (1.0 + 2.0 * t)) / (t * t);
}

// e^{-x} - 1 + x without cancellation near 0.
double compexp(double x) {
  if (x < 1e-3)
    return x * x * (0.5 + x * (-1.0 / 6.0 + x * (1.0 / 24.0 - x / 120.0)));
  return std::expm1(-x) + x;
}

// Tail part of int (e^{-t r} - 1 + t r) n(dr) over r >= 2, split at
// r* = max(2, 1/t) so every piece keeps its relative accuracy down to
// arbitrarily small t:
//   [2, r*]:      compensated integrand, series-stabilized;
//   [r*, inf):    (e^{-tr} - 1) part by quadrature (bounded, decaying)
//                 plus the linear part t * int_{r*} r n = closed form.
double tail_comp_exp(double t, double b) {
  require_tail_convergent(b);
  const double us = std::max(kLn2, std::log(1.0 / t));
  double val = 0.0;
  if (us > kLn2)
    val += integrate_gk(
        [t, b](double u) {
          return compexp(t * std::exp(u)) * std::exp(-u) * std::pow(u, -b);
        },
        kLn2, us, 1e-13, 1e-300);
  val += integrate_gk(
      [t, b](double u) {
        const double x = t * std::exp(u);
        return (x > 745.0 ? -1.0 : std::expm1(-x)) * std::exp(-u) *
               std::pow(u, -b);
      },
      us, us + 50.0, 1e-13, 1e-300);
  val += t * std::pow(us, 1.0 - b) / (b - 1.0);
  return val;
}

// Tail part of int (1 - e^{-t r}) r n(dr) over r >= 2, same splitting.
double tail_comp_exp_deriv(double t, double b) {
  require_tail_convergent(b);
  const double us = std::max(kLn2, std::log(1.0 / t));
  double val = 0.0;
  if (us > kLn2)
    val += integrate_gk(
        [t, b](double u) {
          return -std::expm1(-t * std::exp(u)) * std::pow(u, -b);
        },
        kLn2, us, 1e-13, 1e-300);
  val += std::pow(us, 1.0 - b) / (b - 1.0);
  val -= integrate_gk(
      [t, b](double u) {
        const double x = t * std::exp(u);
        return (x > 745.0 ? 0.0 : std::exp(-x)) * std::pow(u, -b);
      },
      us, us + 50.0, 1e-13, 1e-300);
  return val;
}

}  // namespace

namespace unit_jumps {

double tail_r(double H, double beta_star) {
  require_tail_convergent(beta_star);
  if (H < 1.0) throw std::invalid_argument("tail_r: H must be >= 1");
  const double b = beta_star;
  // int_2^inf r^{-1}(ln r)^{-b} dr = (ln H)^{1-b}/(b-1) from max(H,2).
  const double cut = std::max(H, 2.0);
  double tail = std::pow(std::log(cut), 1.0 - b) / (b - 1.0);
  if (H < 2.0) tail += 0.5 * (4.0 - H * H);
  return tail;
}

double tail_mass(double H, double beta_star) {
  if (H <= 0.0) throw std::invalid_argument("tail_mass: H must be > 0");
  double mass = tail_mass_above(H, beta_star);
  if (H < 2.0) mass += 2.0 - H;
  return mass;
}

double small_r2(double eps) {
  if (!(eps > 0.0 && eps <= 2.0))
    throw std::invalid_argument("small_r2: eps must lie in (0,2]");
  return eps * eps * eps / 3.0;
}

double r_wedge_r2(double beta_star) {
  // (0,1): r^2, (1,2): r, tail: r.
  return 1.0 / 3.0 + 1.5 + tail_r(2.0, beta_star);
}

double rlogr_tail(double beta_star) {
  require_tail_convergent(beta_star);
  if (beta_star <= 2.0) return kInf;
  // int_2^inf r^{-1}(ln r)^{1-b} dr = (ln 2)^{2-b}/(b-2).
  return std::pow(kLn2, 2.0 - beta_star) / (beta_star - 2.0);
}

double compensated_exp_moment(double theta, double beta_star) {
  if (theta < 0.0) throw std::invalid_argument("theta must be >= 0");
  if (theta == 0.0) return 0.0;
  require_tail_convergent(beta_star);
  return small_comp_exp(theta) + tail_comp_exp(theta, beta_star);
}

double compensated_exp_moment_deriv(double theta, double beta_star) {
  if (theta < 0.0) throw std::invalid_argument("theta must be >= 0");
  if (theta == 0.0) return 0.0;
  require_tail_convergent(beta_star);
  return small_comp_exp_deriv(theta) + tail_comp_exp_deriv(theta, beta_star);
}

}  // namespace unit_jumps

double jump_moment(const JumpFamily& family, const Grid& g, int x_index,
                   JumpMomentKind kind, double param) {
  if (x_index < 0 || x_index >= g.n_cells)
    throw std::out_of_range("jump_moment: x_index out of range");
  if (!family.enabled) return 0.0;
  const double c = family.c[x_index];
  switch (kind) {
    case JumpMomentKind::kRWedgeR2:
      return c * unit_jumps::r_wedge_r2(family.beta_star);
    case JumpMomentKind::kTailR:
      return c * unit_jumps::tail_r(param, family.beta_star);
    case JumpMomentKind::kTailMass:
      return c * unit_jumps::tail_mass(param, family.beta_star);
    case JumpMomentKind::kSmallR2:
      return c * unit_jumps::small_r2(param);
    case JumpMomentKind::kRLogRTail:
      return c * unit_jumps::rlogr_tail(family.beta_star);
  }
  throw std::logic_error("jump_moment: unknown kind");
}

JumpKernel::JumpKernel() = default;

JumpKernel::JumpKernel(double beta_star) : active_(true), beta_star_(beta_star) {
  require_tail_convergent(beta_star);
  m1t_ = std::pow(kLn2, 1.0 - beta_star) / (beta_star - 1.0);
  m0t_ = tail_mass_above(2.0, beta_star);
  m1_ = 2.0 + m1t_;
  m0_ = 2.0 + m0t_;

  s_lo_ = std::log(1e-14);
  s_hi_ = std::log(64.0);
  const int n = 8192;
  ds_ = (s_hi_ - s_lo_) / n;
  val_.resize(n + 1);
  dval_.resize(n + 1);
  der_.resize(n + 1);
  dder_.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double s = s_lo_ + k * ds_;
    const double th = std::exp(s);
    const double J = unit_jumps::compensated_exp_moment(th, beta_star);
    const double Jp = unit_jumps::compensated_exp_moment_deriv(th, beta_star);
    // J''(t) = int e^{-t r} r^2 n(dr) (finite for t > 0); the tail becomes
    // int e^{-t e^u} e^u u^{-b} du after r = e^u.
    const double Jpp =
        integrate_gk(
            [th](double r) { return std::exp(-th * r) * r * r; }, 0.0, 2.0,
            1e-13, 1e-300) +
        integrate_gk(
            [th, beta_star](double u) {
              const double r = std::exp(u);
              const double x = th * r;
              return (x > 745.0 ? 0.0 : std::exp(-x)) * r *
                     std::pow(u, -beta_star);
            },
            kLn2, std::min(kLn2 + 60.0, std::log(746.0 / th) + 1.0), 1e-12,
            1e-300);
    val_[k] = J;
    dval_[k] = th * Jp;  // dJ/ds with s = ln(theta)
    der_[k] = Jp;
    dder_[k] = th * Jpp;
  }
}

double JumpKernel::eval_table(const std::vector<double>& y,
                              const std::vector<double>& dy, double s) const {
  const double p = (s - s_lo_) / ds_;
  int k = static_cast<int>(p);
  if (k < 0) k = 0;
  if (k >= static_cast<int>(y.size()) - 1) k = static_cast<int>(y.size()) - 2;
  const double t = p - k;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * y[k] + h10 * ds_ * dy[k] + h01 * y[k + 1] + h11 * ds_ * dy[k + 1];
}

double JumpKernel::value(double theta) const {
  if (!active_ || theta <= 0.0) return 0.0;
  const double th_lo = std::exp(s_lo_);
  if (theta < th_lo) {
    // J ~ theta (ln 1/theta)^{1-b}/(b-1): continue the table edge with the
    // asymptotic log factor so r(u)/u keeps its slow decay.
    const double logratio = std::log(theta) / s_lo_;
    return val_.front() * (theta / th_lo) *
           std::pow(logratio, 1.0 - beta_star_);
  }
  if (theta > std::exp(s_hi_))
    return small_comp_exp(theta) + tail_comp_exp(theta, beta_star_);
  return eval_table(val_, dval_, std::log(theta));
}

double JumpKernel::deriv(double theta) const {
  if (!active_ || theta <= 0.0) return 0.0;
  const double th_lo = std::exp(s_lo_);
  if (theta < th_lo) {
    const double logratio = std::log(theta) / s_lo_;
    return der_.front() * std::pow(logratio, 1.0 - beta_star_);
  }
  if (theta > std::exp(s_hi_))
    return small_comp_exp_deriv(theta) + tail_comp_exp_deriv(theta, beta_star_);
  return eval_table(der_, dder_, std::log(theta));
}

}  // namespace splab
