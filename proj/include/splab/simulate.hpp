#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splab/backward.hpp"
#include "splab/rng.hpp"

namespace splab {

struct SimConfig {
  double dt{1e-3};
  int n_paths{1000};
  std::uint64_t seed{12345};
  double eps_cut{0.05};  // small-jump cutoff folded into the branching noise
  std::vector<double> record_times;   // increasing, multiples of dt
  double mu_scale{0.5};               // initial masses mu_i = scale*phi0_i/n
  int n_threads{0};                   // 0: hardware concurrency
};

struct MassState {
  Field masses;  // per-cell mass, >= 0
  double total() const { return masses.sum(); }
};

struct PathRecord {
  std::uint64_t path_id{0};
  std::vector<double> phi0_mass;  // <phi0, X_t> at each record time
  std::vector<double> M;          // e^{-lambda0 t} <phi0, X_t>
  std::vector<double> S;          // gamma_t <phi0, X_t>
  std::vector<std::vector<double>> test_values;  // per test function
  bool extinct{false};
  double extinction_time{-1.0};
};

/// Precomputed per-model simulation tables: exact linear propagator for the
/// step size, effective branching coefficient with the small-jump variance
/// folded in, and the tail-jump rates with their compensator.
class SimEngine {
 public:
  SimEngine(const ModelSpec& spec, const EigenTriple& triple,
            const Propagator& prop, const SimConfig& cfg);

  /// One Euler split step: exact linear propagation, exact branching
  /// transition (compound Poisson-Gamma), compensated tail jumps.
  void step(MassState& state, RngStream& rng, std::uint64_t step_index) const;

  /// Seeded ensemble; records are bitwise reproducible for a given
  /// (seed, path_id) independent of thread count or path batching.
  /// gamma_at_records supplies the Seneta-Heyde normalizer at each record
  /// time; when empty, the classical e^{-lambda0 t} norming is used for S.
  std::vector<PathRecord> simulate_ensemble(
      const SimConfig& cfg, const std::vector<Field>& test_functions,
      const std::vector<double>& gamma_at_records,
      std::uint64_t first_path = 0, int n_paths_override = -1) const;

  Field initial_masses(const SimConfig& cfg) const;
  double lambda0() const { return lambda0_; }
  const Field& phi0() const { return phi0_; }

 private:
  const ModelSpec* spec_;
  Matrix prop_T_;      // transpose of e^{dt A}
  Field phi0_;
  double lambda0_{0.0};
  double dt_{0.0};
  Field beta_eff_;     // beta + c * eps^3/6
  Field jump_rate_;    // c * n_unit((eps, inf)) per unit mass-time
  Field comp_rate_;    // c * int_eps^inf r n_unit(dr) per unit mass-time
  double eps_{0.0};
  double beta_star_{0.0};
  double flat_mass_{0.0}, tail_mass_{0.0};  // unit-family pieces above eps
  bool jumps_{false};

  double sample_jump_size(RngStream& rng) const;
};

struct LaplaceCheck {
  double solver_value{0.0};   // <u_f(t), mu>
  double mc_value{0.0};       // -log mean e^{-<f, X_t>}
  double ci_lo{0.0}, ci_hi{0.0};  // 99% bootstrap CI of mc_value
  double bias_budget{0.0};    // 3*dt
  bool pass{false};
};

/// Compares -log(sample mean of e^{-<f,X_t>}) against the log-Laplace solver
/// value; passes when the solver value lies in the 99% bootstrap CI widened
/// by the scheme-bias budget 3*dt.
LaplaceCheck laplace_check(const std::vector<double>& f_values_at_t,
                           double solver_value, double dt,
                           std::uint64_t bootstrap_seed = 0xb00f);

struct ShDiagnostics {
  double w_floor{0.0};
  double extinct_frac{0.0};        // fraction of W-estimates below w_floor
  double extinct_expected{0.0};    // e^{-<v, mu>}
  double extinct_se{0.0};
  bool extinct_pass{false};
  double osc_p90{0.0};             // tail-oscillation proxy, 90th percentile
  double mean_w{0.0};
  double mean_w_se{0.0};
  double mean_w_expected{0.0};     // l0 <phi0, mu>
  bool mean_w_pass{false};
  bool mean_w_applicable{false};
  double ratio_p90_err{0.0};       // |<f,X>/<phi0,X> - <f,psi0>| rel, 90th pct
  double ratio_expected{0.0};
  int survivors{0};
};

/// Empirical checks of the almost-sure limit theorems on a recorded ensemble.
/// test_index selects the ratio-statistic test function (must satisfy
/// |f| <= c phi0; the recorded values are <f phi0, X_t> style functionals).
ShDiagnostics sh_diagnostics(const std::vector<PathRecord>& paths,
                             const std::vector<double>& record_times,
                             const Field& v, const Field& mu,
                             const EigenTriple& triple, const Grid& grid,
                             double l0, bool l0_finite, int test_index,
                             double ratio_expected);

}  // namespace splab
