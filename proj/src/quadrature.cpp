#include "splab/quadrature.hpp"

#include <array>

namespace splab {
namespace {

// 15-point Kronrod nodes/weights on [-1,1] with the embedded 7-point Gauss rule.
constexpr std::array<double, 8> kKronrodX = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0};
constexpr std::array<double, 8> kKronrodW = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussW = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct PanelResult {
  double integral;
  double error;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double resk = 0.0, resg = 0.0;
  for (int j = 0; j < 8; ++j) {
    const double dx = half * kKronrodX[j];
    double fv;
    if (j == 7) {
      fv = f(c);
      resk += kKronrodW[7] * fv;
      resg += kGaussW[3] * fv;
    } else {
      const double f1 = f(c - dx);
      const double f2 = f(c + dx);
      fv = f1 + f2;
      resk += kKronrodW[j] * fv;
      if (j % 2 == 1) resg += kGaussW[j / 2] * fv;
    }
  }
  resk *= half;
  resg *= half;
  return {resk, std::abs(resk - resg)};
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double rel_tol, double abs_tol, int depth, int max_depth) {
  const PanelResult r = gk15(f, a, b);
  const double tol = abs_tol + rel_tol * std::abs(r.integral);
  if (r.error <= tol || depth >= max_depth) return r.integral;
  const double c = 0.5 * (a + b);
  return adapt(f, a, c, rel_tol, 0.5 * abs_tol, depth + 1, max_depth) +
         adapt(f, c, b, rel_tol, 0.5 * abs_tol, depth + 1, max_depth);
}

}  // namespace

double integrate_gk(const std::function<double(double)>& f, double a, double b,
                    double rel_tol, double abs_tol, int max_depth) {
  if (!(a <= b)) throw std::invalid_argument("integrate_gk: empty interval");
  if (a == b) return 0.0;
  return adapt(f, a, b, rel_tol, abs_tol, 0, max_depth);
}

}  // namespace splab
