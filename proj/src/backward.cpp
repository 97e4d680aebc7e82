#include "splab/backward.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace splab {
namespace {

constexpr double kLn2 = 0.6931471805599453094;

struct ModeBasis {
  Matrix VK;        // n x K, leading eigenvectors (ascending within block)
  Field lambdas;    // matching eigenvalues
  int soft{0};      // trailing `soft` columns are Newton unknowns
};

ModeBasis leading_modes(const Propagator& prop, int k_back, double delta,
                        double invert_cap) {
  const int n = prop.n();
  const int K = std::min(k_back, n);
  ModeBasis mb;
  mb.VK = prop.eigenvectors().rightCols(K);
  mb.lambdas = prop.eigenvalues().tail(K);
  const double lam0 = mb.lambdas[K - 1];
  // Modes whose backward amplification over the whole step exceeds the cap
  // carry no recoverable information in double precision; they are slaved to
  // the e^{-lambda0 t} ray scaling instead of inverted.
  mb.soft = 0;
  for (int j = K - 1; j >= 0; --j) {
    if ((lam0 - mb.lambdas[j]) * delta <= std::log(invert_cap))
      mb.soft = K - j;
    else
      break;
  }
  if (mb.soft == 0) mb.soft = 1;
  return mb;
}

// The substep count must divide the dt-grid of the step so that the chained
// substep flows compose to exactly the same discrete map as one delta-solve.
int substep_count(double delta, double dt, double amp, double cond_cap) {
  const int want = std::max(
      1, static_cast<int>(std::ceil(amp * delta / std::log(cond_cap))));
  const double steps_d = delta / dt;
  const int n_steps = static_cast<int>(std::lround(steps_d));
  if (std::abs(steps_d - n_steps) > 1e-9 || n_steps < 1)
    return want;  // off-grid delta: layouts differ anyway
  for (int m = want; m <= n_steps; ++m)
    if (n_steps % m == 0) return m;
  return n_steps;
}

// Newton solve of VK^T (V_sub(VK a) - target) = 0 over the soft block; the
// stiff block of `a` stays at its slaved value.
Eigen::VectorXd newton_substep(const NonlinearFlow& flow, const ModeBasis& mb,
                               const Field& target, double sub,
                               const BackwardConfig& cfg,
                               const FlowConfig& fcfg) {
  const int K = static_cast<int>(mb.lambdas.size());
  const int soft = mb.soft;
  const double lam0 = mb.lambdas[K - 1];
  Eigen::VectorXd a = mb.VK.transpose() * (std::exp(-lam0 * sub) * target);
  const Eigen::VectorXd t_proj = mb.VK.transpose() * target;
  const double scale = std::max(1.0, t_proj.cwiseAbs().maxCoeff());

  Eigen::PartialPivLU<Matrix> lu;
  bool have_jac = false;
  double prev_res = 1e300;
  for (int it = 0; it < cfg.max_newton; ++it) {
    Field g = mb.VK * a;
    std::vector<Field> path;
    std::vector<double> steps;
    Field Vg = flow.solve_with_path(g, sub, fcfg, path, steps);
    Eigen::VectorXd res = mb.VK.transpose() * Vg - t_proj;
    const double rn = res.tail(soft).cwiseAbs().maxCoeff();
    if (rn < cfg.newton_tol * scale) return a;
    if (!have_jac || it > 4 || rn > prev_res) {
      const Matrix soft_cols = mb.VK.rightCols(soft);
      Matrix JW = flow.derivative(path, steps, soft_cols);
      Matrix J = mb.VK.rightCols(soft).transpose() * JW;
      lu.compute(J);
      have_jac = true;
    }
    prev_res = rn;
    Eigen::VectorXd da = lu.solve(res.tail(soft));
    const double damp = (it < 2) ? 0.5 : 1.0;
    a.tail(soft) -= damp * da;
  }
  throw std::runtime_error(
      "invert_flow_step: Newton failed to converge (delta too large or "
      "k_back too small?)");
}

double gamma_of(const Grid& g, const Field& f, const EigenTriple& tr) {
  return inner_product_m(g, f, tr.psi0);
}

}  // namespace

Field invert_flow_step(const NonlinearFlow& flow, const EigenTriple& triple,
                       const Field& target, double delta, const Field& v,
                       const BackwardConfig& cfg, const FlowConfig& fcfg) {
  const Grid& grid = flow.spec().grid;
  grid.check(target);
  if (sup_norm(target) == 0.0) return Field::Zero(grid.n_cells);
  if (target.minCoeff() < 0.0 || (target - v).maxCoeff() > 1e-12 * sup_norm(v))
    throw std::invalid_argument("invert_flow_step: target must lie in [0, v]");
  if (delta <= 0.0) throw std::invalid_argument("invert_flow_step: delta > 0");

  const Propagator& prop = flow.propagator();
  ModeBasis mb = leading_modes(prop, cfg.k_back, delta, cfg.invert_cap);
  const int K = static_cast<int>(mb.lambdas.size());
  const double lam0 = mb.lambdas[K - 1];
  const double lam_soft_min = mb.lambdas[K - mb.soft];
  const int m =
      substep_count(delta, fcfg.dt, lam0 - lam_soft_min, cfg.cond_cap);
  const double sub = delta / m;

  Field cur = target;
  for (int s = 0; s < m; ++s) {
    Eigen::VectorXd a = newton_substep(flow, mb, cur, sub, cfg, fcfg);
    cur = mb.VK * a;
  }
  if ((cur - v).maxCoeff() > 1e-9 * sup_norm(v) ||
      cur.minCoeff() < -1e-6 * sup_norm(cur))
    throw std::runtime_error(
        "invert_flow_step: result left [0, v] (delta too large or k_back too "
        "small)");
  return cur;
}

BackwardFamily build_backward_family(const NonlinearFlow& flow,
                                     const EigenTriple& triple, const Field& v,
                                     const Field& eta0,
                                     const BackwardConfig& cfg,
                                     const FlowConfig& fcfg) {
  const Grid& grid = flow.spec().grid;
  grid.check(eta0);
  if (eta0.minCoeff() <= 0.0 || (eta0 - v).minCoeff() >= 0.0)
    throw std::invalid_argument(
        "build_backward_family: anchor must satisfy 0 < eta0 < v somewhere");
  if (cfg.delta <= 0.0 || cfg.horizon < 2.0 * cfg.delta)
    throw std::invalid_argument("build_backward_family: bad delta/horizon");
  const int K = static_cast<int>(std::lround(cfg.horizon / cfg.delta));
  if (std::abs(K * cfg.delta - cfg.horizon) > 1e-9)
    throw std::invalid_argument("horizon must be a multiple of delta");
  const int per = static_cast<int>(std::lround(cfg.delta / fcfg.dt));
  if (std::abs(per * fcfg.dt - cfg.delta) > 1e-9)
    throw std::invalid_argument("delta must be a multiple of the flow dt");

  const double lam0 = triple.lambda0;
  const double T = cfg.horizon;
  const double g_anchor = gamma_of(grid, eta0, triple);

  auto gamma_at_anchor = [&](double s) {
    return gamma_of(grid, flow.solve(s * triple.phi0, T, fcfg), triple);
  };

  // Secant calibration of the seed amplitude; the linear flow prediction
  // brackets from below because the nonlinearity only removes mass.
  double s0 = g_anchor * std::exp(-lam0 * T);
  double g0 = gamma_at_anchor(s0);
  double s1 = s0 * g_anchor / g0;
  double g1 = gamma_at_anchor(s1);
  int it = 0;
  while (std::abs(g1 - g_anchor) > 1e-12 * g_anchor && it < 40) {
    if (g1 == g0) break;
    const double s2 = s1 + (g_anchor - g1) * (s1 - s0) / (g1 - g0);
    s0 = s1;
    g0 = g1;
    s1 = s2;
    g1 = gamma_at_anchor(s1);
    ++it;
  }
  if (std::abs(g1 - g_anchor) > 1e-9 * g_anchor)
    throw std::runtime_error(
        "build_backward_family: seed calibration did not converge");
  const Field seed = s1 * triple.phi0;
  if ((seed - v).minCoeff() >= 0.0)
    throw std::runtime_error("build_backward_family: seed not below v");

  BackwardFamily fam;
  fam.delta = cfg.delta;
  fam.lambda0 = lam0;
  fam.eta.assign(K + 1, Field());
  fam.eta[K] = seed;
  Field u = seed;
  for (int k = K - 1; k >= 0; --k) {
    u = flow.solve(u, cfg.delta, fcfg);
    fam.eta[k] = u;
  }

  fam.gamma.resize(K + 1);
  fam.L.resize(K + 1);
  fam.h_sup.resize(K + 1);
  for (int k = 0; k <= K; ++k) {
    fam.gamma[k] = gamma_of(grid, fam.eta[k], triple);
    fam.L[k] = std::exp(lam0 * k * cfg.delta) * fam.gamma[k];
    Field ratio = fam.eta[k].cwiseQuotient(fam.gamma[k] * triple.phi0);
    fam.h_sup[k] = sup_norm(ratio - Field::Ones(grid.n_cells));
  }
  return fam;
}

double round_trip_defect(const BackwardFamily& fam, const NonlinearFlow& flow,
                         const FlowConfig& fcfg, int stride) {
  double worst = 0.0;
  for (size_t k = 0; k + 1 < fam.eta.size(); k += stride) {
    Field w = flow.solve(fam.eta[k + 1], fam.delta, fcfg);
    worst = std::max(worst, sup_norm(w - fam.eta[k]));
  }
  return worst;
}

double inversion_crosscheck(const BackwardFamily& fam, const NonlinearFlow& flow,
                            const EigenTriple& triple, const Field& v,
                            const BackwardConfig& cfg, const FlowConfig& fcfg,
                            int stride) {
  double worst = 0.0;
  for (size_t k = 0; k + 1 < fam.eta.size(); k += stride) {
    Field inv = invert_flow_step(flow, triple, fam.eta[k], fam.delta, v, cfg,
                                 fcfg);
    Field round = flow.solve(inv, fam.delta, fcfg);
    worst = std::max(worst, sup_norm(round - fam.eta[k]));
  }
  return worst;
}

double llogl_criterion(const ModelSpec& spec, const EigenTriple& triple) {
  if (!spec.jumps.enabled) return 0.0;
  const double b = spec.jumps.beta_star;
  if (b <= 2.0) return std::numeric_limits<double>::infinity();
  const Grid& g = spec.grid;
  Field l(g.n_cells);
  for (int i = 0; i < g.n_cells; ++i) {
    const double phi = triple.phi0[i];
    const double u0 = std::max(kLn2, -std::log(phi));
    l[i] = spec.jumps.c[i] * phi *
           (std::pow(u0, 2.0 - b) / (b - 2.0) +
            std::log(phi) * std::pow(u0, 1.0 - b) / (b - 1.0));
  }
  return inner_product_m(g, triple.psi0, l);
}

SHReport estimate_l0(const BackwardFamily& fam, const NonlinearFlow& flow,
                     const EigenTriple& triple) {
  const Grid& grid = flow.spec().grid;
  const int K = static_cast<int>(fam.eta.size()) - 1;
  std::vector<double> t(K + 1);
  for (int k = 0; k <= K; ++k) t[k] = k * fam.delta;

  SHReport rep;
  rep.route_a_status = classify_l0(t, fam.L);
  if (rep.route_a_status == LimitStatus::kFinite) rep.l0_route_a = fam.L.back();

  // Identity route: partial sums of gamma_0 + int e^{lambda0 s} <r, psi0> ds.
  std::vector<double> partial(K + 1);
  auto integrand = [&](int k) {
    const Field& e = fam.eta[k];
    Field r(grid.n_cells);
    for (int i = 0; i < grid.n_cells; ++i) r[i] = flow.rate(i, std::max(e[i], 0.0));
    return std::exp(fam.lambda0 * t[k]) * inner_product_m(grid, r, triple.psi0);
  };
  double prev = integrand(0);
  partial[0] = fam.gamma[0];
  for (int k = 1; k <= K; ++k) {
    const double cur = integrand(k);
    partial[k] = partial[k - 1] + 0.5 * (prev + cur) * fam.delta;
    prev = cur;
  }
  rep.route_b_status = classify_l0(t, partial);
  rep.l0_route_b = partial.back();

  rep.llogl_value = llogl_criterion(flow.spec(), triple);
  rep.llogl_infinite = std::isinf(rep.llogl_value);
  rep.regime = rep.llogl_infinite ? LlogLRegime::kFails : LlogLRegime::kHolds;
  return rep;
}

}  // namespace splab
