#include "splab/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace splab {
namespace {

constexpr double kLn2 = 0.6931471805599453094;
constexpr int kBatch = 64;

std::vector<std::uint64_t> record_steps(const std::vector<double>& times,
                                        double dt) {
  std::vector<std::uint64_t> steps;
  double prev = 0.0;
  for (double t : times) {
    if (t <= prev - 1e-12)
      throw std::invalid_argument("record_times must be increasing");
    const double k = t / dt;
    const auto kk = static_cast<std::uint64_t>(std::llround(k));
    if (std::abs(k - static_cast<double>(kk)) > 1e-6)
      throw std::invalid_argument("record_times must be multiples of sim dt");
    steps.push_back(kk);
    prev = t;
  }
  return steps;
}

}  // namespace

SimEngine::SimEngine(const ModelSpec& spec, const EigenTriple& triple,
                     const Propagator& prop, const SimConfig& cfg)
    : spec_(&spec), phi0_(triple.phi0), lambda0_(triple.lambda0), dt_(cfg.dt) {
  if (cfg.dt <= 0.0) throw std::invalid_argument("sim dt must be > 0");
  if (!(cfg.eps_cut > 0.0 && cfg.eps_cut <= 2.0))
    throw std::invalid_argument("eps_cut must lie in (0, 2]");
  prop_T_ = prop.matrix(cfg.dt).transpose();
  eps_ = cfg.eps_cut;
  jumps_ = spec.jumps.enabled;
  const int n = spec.grid.n_cells;
  beta_eff_ = spec.beta;
  jump_rate_ = Field::Zero(n);
  comp_rate_ = Field::Zero(n);
  if (jumps_) {
    beta_star_ = spec.jumps.beta_star;
    const double small_var = unit_jumps::small_r2(eps_);  // int_0^eps r^2 n
    flat_mass_ = 2.0 - eps_;
    tail_mass_ = unit_jumps::tail_mass(2.0, beta_star_);
    const double mass_above = flat_mass_ + tail_mass_;
    // int_eps^inf r n_unit(dr) = (4 - eps^2)/2 + closed-form log-power tail
    const double r_above =
        0.5 * (4.0 - eps_ * eps_) + unit_jumps::tail_r(2.0, beta_star_);
    for (int i = 0; i < n; ++i) {
      const double c = spec.jumps.c[i];
      beta_eff_[i] += 0.5 * c * small_var;  // Gaussian fold-in of (0,eps]
      jump_rate_[i] = c * mass_above;
      comp_rate_[i] = c * r_above;
    }
  }
}

double SimEngine::sample_jump_size(RngStream& rng) const {
  const double total = flat_mass_ + tail_mass_;
  if (rng.uniform() * total < flat_mass_) {
    return eps_ + rng.uniform() * (2.0 - eps_);
  }
  // Pareto envelope r^{-2} on [2,inf), accept with (ln2/ln r)^{beta*}.
  while (true) {
    const double r = 2.0 / rng.uniform();
    if (rng.uniform() < std::pow(kLn2 / std::log(r), beta_star_)) return r;
  }
}

void SimEngine::step(MassState& state, RngStream& rng,
                     std::uint64_t step_index) const {
  rng.at_step(step_index);
  const int n = static_cast<int>(state.masses.size());
  state.masses = (prop_T_ * state.masses).cwiseMax(0.0);
  // Exact branching transition per cell: the Feller part with effective
  // coefficient beta_eff has law Gamma(N, beta_eff dt), N ~ Poisson(m/(b dt)).
  // Beyond lam ~ 1e9 the compound law is Gaussian to ~1/sqrt(lam); sampling
  // switches to that limit before the counts overflow.
  for (int i = 0; i < n; ++i) {
    const double m = state.masses[i];
    if (m <= 0.0) {
      state.masses[i] = 0.0;
      continue;
    }
    const double bd = beta_eff_[i] * dt_;
    const double lam = m / bd;
    if (lam > 1e9) {
      state.masses[i] =
          std::max(m + std::sqrt(2.0 * m * bd) * rng.normal(), 0.0);
    } else {
      const std::uint64_t N = rng.poisson(lam);
      state.masses[i] = (N == 0) ? 0.0 : rng.gamma(static_cast<double>(N)) * bd;
    }
  }
  if (jumps_) {
    for (int i = 0; i < n; ++i) {
      const double m = state.masses[i];
      if (m <= 0.0) continue;
      double add = 0.0;
      const std::uint64_t k = rng.poisson(m * jump_rate_[i] * dt_);
      for (std::uint64_t j = 0; j < k; ++j) add += sample_jump_size(rng);
      state.masses[i] = std::max(m + add - m * comp_rate_[i] * dt_, 0.0);
    }
  }
  if (!state.masses.allFinite())
    throw std::runtime_error("simulate: non-finite mass state at step " +
                             std::to_string(step_index));
}

Field SimEngine::initial_masses(const SimConfig& cfg) const {
  return cfg.mu_scale * phi0_ / spec_->grid.n_cells;
}

std::vector<PathRecord> SimEngine::simulate_ensemble(
    const SimConfig& cfg, const std::vector<Field>& test_functions,
    const std::vector<double>& gamma_at_records, std::uint64_t first_path,
    int n_paths_override) const {
  const int n_paths = n_paths_override >= 0 ? n_paths_override : cfg.n_paths;
  if (n_paths < 0) throw std::invalid_argument("n_paths must be >= 0");
  const auto rec_steps = record_steps(cfg.record_times, cfg.dt);
  if (!gamma_at_records.empty() &&
      gamma_at_records.size() != cfg.record_times.size())
    throw std::invalid_argument("gamma_at_records length mismatch");
  const std::uint64_t total_steps = rec_steps.empty() ? 0 : rec_steps.back();
  const Field mu = initial_masses(cfg);
  const int n_rec = static_cast<int>(rec_steps.size());

  std::vector<PathRecord> out(n_paths);
  auto run_path = [&](int p) {
    PathRecord& rec = out[p];
    rec.path_id = first_path + p;
    rec.phi0_mass.assign(n_rec, 0.0);
    rec.M.assign(n_rec, 0.0);
    rec.S.assign(n_rec, 0.0);
    rec.test_values.assign(test_functions.size(),
                           std::vector<double>(n_rec, 0.0));
    RngStream rng(cfg.seed, rec.path_id);
    MassState st{mu};
    int next_rec = 0;
    bool dead = false;
    for (std::uint64_t k = 1; k <= total_steps; ++k) {
      if (!dead) {
        step(st, rng, k);
        if (st.total() <= 0.0) {
          dead = true;
          rec.extinct = true;
          rec.extinction_time = k * cfg.dt;
        }
      }
      while (next_rec < n_rec && rec_steps[next_rec] == k) {
        const double t = cfg.record_times[next_rec];
        const double pm = dead ? 0.0 : phi0_.dot(st.masses);
        rec.phi0_mass[next_rec] = pm;
        rec.M[next_rec] = std::exp(-lambda0_ * t) * pm;
        const double g = gamma_at_records.empty() ? std::exp(-lambda0_ * t)
                                                  : gamma_at_records[next_rec];
        rec.S[next_rec] = g * pm;
        for (size_t f = 0; f < test_functions.size(); ++f)
          rec.test_values[f][next_rec] =
              dead ? 0.0 : test_functions[f].dot(st.masses);
        ++next_rec;
      }
    }
    return;
  };

  int hw = cfg.n_threads > 0 ? cfg.n_threads
                             : static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (n_paths < 2 * kBatch || hw == 1) {
    for (int p = 0; p < n_paths; ++p) run_path(p);
  } else {
    std::atomic<int> cursor{0};
    auto worker = [&]() {
      while (true) {
        const int start = cursor.fetch_add(kBatch);
        if (start >= n_paths) break;
        const int end = std::min(start + kBatch, n_paths);
        for (int p = start; p < end; ++p) run_path(p);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < hw; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

LaplaceCheck laplace_check(const std::vector<double>& f_values_at_t,
                           double solver_value, double dt,
                           std::uint64_t bootstrap_seed) {
  const size_t n = f_values_at_t.size();
  if (n < 10) throw std::invalid_argument("laplace_check: too few paths");
  std::vector<double> y(n);
  double mean = 0.0;
  for (size_t i = 0; i < n; ++i) {
    y[i] = std::exp(-f_values_at_t[i]);
    mean += y[i];
  }
  mean /= n;
  if (mean <= 0.0) throw std::runtime_error("laplace_check: degenerate sample");
  LaplaceCheck out;
  out.solver_value = solver_value;
  out.mc_value = -std::log(mean);
  out.bias_budget = 3.0 * dt;
  if (mean >= 1.0) {  // f vanished on every path (e.g. f = 0, or all extinct)
    out.pass = std::abs(solver_value) <= out.bias_budget;
    return out;
  }

  const int B = 2000;
  std::vector<double> boot(B);
  RngStream rng(bootstrap_seed, 0x626f6f74);
  for (int b = 0; b < B; ++b) {
    rng.at_step(b);
    double s = 0.0;
    for (size_t i = 0; i < n; ++i)
      s += y[static_cast<size_t>(rng.uniform() * n) % n];
    boot[b] = -std::log(s / n);
  }
  std::sort(boot.begin(), boot.end());
  out.ci_lo = boot[static_cast<int>(0.005 * B)];
  out.ci_hi = boot[static_cast<int>(0.995 * B) - 1];
  out.pass = solver_value >= out.ci_lo - out.bias_budget &&
             solver_value <= out.ci_hi + out.bias_budget;
  return out;
}

ShDiagnostics sh_diagnostics(const std::vector<PathRecord>& paths,
                             const std::vector<double>& record_times,
                             const Field& v, const Field& mu,
                             const EigenTriple& triple, const Grid& grid,
                             double l0, bool l0_finite, int test_index,
                             double ratio_expected) {
  if (paths.empty()) throw std::invalid_argument("sh_diagnostics: no paths");
  const int n_rec = static_cast<int>(record_times.size());
  const int last = n_rec - 1;
  const double phi_mu = triple.phi0.dot(mu);
  ShDiagnostics d;
  d.w_floor = 1e-6 * phi_mu;
  d.extinct_expected = std::exp(-v.dot(mu));
  d.ratio_expected = ratio_expected;

  int below = 0;
  double sw = 0.0, sw2 = 0.0;
  std::vector<double> osc;
  std::vector<double> ratio_err;
  osc.reserve(paths.size());
  for (const PathRecord& p : paths) {
    const double w_est = p.S[last];
    if (w_est < d.w_floor) ++below;
    sw += w_est;
    sw2 += w_est * w_est;
    double m = 0.0;
    for (int k = n_rec / 2; k < last; ++k)
      m = std::max(m, std::abs(p.S[k] - p.S[last]));
    osc.push_back(m / (p.S[last] + d.w_floor));
    if (w_est >= d.w_floor && test_index >= 0) {
      const double ratio =
          p.test_values[test_index][last] / p.phi0_mass[last];
      ratio_err.push_back(std::abs(ratio - ratio_expected) /
                          std::abs(ratio_expected));
    }
  }
  const auto n = static_cast<double>(paths.size());
  d.extinct_frac = below / n;
  d.extinct_se =
      std::sqrt(std::max(d.extinct_frac * (1.0 - d.extinct_frac), 1e-12) / n);
  d.extinct_pass =
      std::abs(d.extinct_frac - d.extinct_expected) <= 3.0 * d.extinct_se;

  auto p90 = [](std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    return xs[static_cast<size_t>(0.9 * (xs.size() - 1))];
  };
  d.osc_p90 = p90(osc);
  d.survivors = static_cast<int>(ratio_err.size());
  d.ratio_p90_err = p90(ratio_err);

  d.mean_w = sw / n;
  d.mean_w_se = std::sqrt(std::max(sw2 / n - d.mean_w * d.mean_w, 0.0) / n);
  d.mean_w_applicable = l0_finite;
  if (l0_finite) {
    d.mean_w_expected = l0 * phi_mu;
    d.mean_w_pass =
        std::abs(d.mean_w - d.mean_w_expected) <= 3.0 * d.mean_w_se;
  }
  return d;
}

}  // namespace splab
