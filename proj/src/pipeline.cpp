#include "splab/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "splab/csv.hpp"

namespace splab {

const char* kToolVersion = "splab 1.0.0";

namespace {

namespace fs = std::filesystem;

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

const std::vector<std::string> kStageOrder = {
    "eigen", "flow", "extinct", "norming", "oracle", "simulate", "verify"};

const std::map<std::string, std::vector<std::string>> kDeps = {
    {"eigen", {}},
    {"flow", {"eigen"}},
    {"extinct", {"eigen"}},
    {"norming", {"extinct"}},
    {"oracle", {}},
    {"simulate", {"norming"}},
    {"verify", {"simulate", "oracle", "flow"}},
};

void close_deps(std::set<std::string>& wanted) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& s : std::vector<std::string>(wanted.begin(), wanted.end()))
      for (const auto& d : kDeps.at(s))
        if (wanted.insert(d).second) changed = true;
  }
}

void record_file(RunManifest& man, const std::string& dir,
                 const std::string& name, const std::string& content) {
  write_file(dir + "/" + name, content);
  man.files.emplace_back(name, fnv1a_hex(content));
}

ScalarMechanism oracle_mechanism(const RunConfig& cfg) {
  // Spatially homogeneous ground truth; by convention it runs at unit growth
  // rate with the config's branching coefficients, so oracle horizons are
  // comparable across models.
  if (cfg.jumps_enabled)
    return ScalarMechanism::with_jumps(1.0, cfg.beta_const, cfg.jump_c,
                                       cfg.jump_beta_star);
  return ScalarMechanism::quadratic(1.0, cfg.beta_const);
}

std::string fmt(double x) { return CsvWriter::format(x); }

void stage_eigen(RunState& st, RunManifest& man, const std::string& dir) {
  st.gen = build_generator(st.model);
  st.prop = std::make_shared<Propagator>(*st.gen);
  st.triple = principal_eigentriple(*st.gen, st.model.grid);
  st.flow = std::make_shared<NonlinearFlow>(st.model, *st.prop);
  st.bound = fit_uniform_bound(*st.prop, *st.triple, st.model.grid,
                               {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5});
  CsvWriter csv({"node", "x", "phi0", "psi0"});
  for (int i = 0; i < st.model.grid.n_cells; ++i)
    csv.row({static_cast<double>(i), st.model.grid.node(i), st.triple->phi0[i],
             st.triple->psi0[i]});
  record_file(man, dir, "eigen.csv", csv.text());
  CsvWriter sc({"lambda0", "lambda1", "c", "gamma", "delta"});
  sc.row({st.triple->lambda0, st.triple->lambda1, st.bound->c, st.bound->gamma,
          st.bound->delta});
  record_file(man, dir, "eigen_scalars.csv", sc.text());
}

void stage_flow(RunState& st, RunManifest& man, const std::string& dir) {
  FlowConfig fc = st.cfg.flow;
  if (fc.record_times.empty()) fc.record_times = {0.5, 1.0};
  st.flow_result = st.flow->solve_recorded(st.triple->phi0, fc);
  CsvWriter csv({"t", "node", "u"});
  for (size_t k = 0; k < st.flow_result->times.size(); ++k)
    for (int i = 0; i < st.model.grid.n_cells; ++i)
      csv.row({st.flow_result->times[k], static_cast<double>(i),
               st.flow_result->fields[k][i]});
  record_file(man, dir, "flow.csv", csv.text());
}

void stage_extinct(RunState& st, RunManifest& man, const std::string& dir) {
  st.ext = extinction_v(*st.flow, *st.triple, st.cfg.extinct, st.cfg.flow);
  CsvWriter csv({"node", "x", "phi0", "psi0", "v"});
  for (int i = 0; i < st.model.grid.n_cells; ++i)
    csv.row({static_cast<double>(i), st.model.grid.node(i), st.triple->phi0[i],
             st.triple->psi0[i], st.ext->v[i]});
  record_file(man, dir, "eigen.csv", csv.text());
}

std::string status_name(LimitStatus s) {
  switch (s) {
    case LimitStatus::kFinite: return "FINITE";
    case LimitStatus::kDivergent: return "DIVERGENT";
    default: return "INCONCLUSIVE";
  }
}

void stage_norming(RunState& st, RunManifest& man, const std::string& dir) {
  const Field eta0 = st.cfg.sh_eta0_scale * st.ext->v;
  st.family = build_backward_family(*st.flow, *st.triple, st.ext->v, eta0,
                                    st.cfg.sh, st.cfg.flow);
  st.sh_report = estimate_l0(*st.family, *st.flow, *st.triple);
  CsvWriter csv({"t", "gamma", "L", "h_sup"});
  for (size_t k = 0; k < st.family->eta.size(); ++k)
    csv.row({k * st.family->delta, st.family->gamma[k], st.family->L[k],
             st.family->h_sup[k]});
  record_file(man, dir, "gamma.csv", csv.text());

  const SHReport& r = *st.sh_report;
  std::ostringstream sh;
  sh << "route_a = " << status_name(r.route_a_status) << "\n";
  sh << "l0_route_a = " << fmt(r.l0_route_a) << "\n";
  sh << "route_b = " << status_name(r.route_b_status) << "\n";
  sh << "l0_route_b = " << fmt(r.l0_route_b) << "\n";
  sh << "llogl = "
     << (r.llogl_infinite ? std::string("INFINITE") : fmt(r.llogl_value))
     << "\n";
  sh << "regime = "
     << (r.regime == LlogLRegime::kHolds ? "LLOGL_HOLDS" : "LLOGL_FAILS")
     << "\n";
  record_file(man, dir, "sh_report.txt", sh.str());
}

void stage_oracle(RunState& st, RunManifest& man, const std::string& dir) {
  const ScalarMechanism mech = oracle_mechanism(st.cfg);
  const double v = extinction_root(mech);
  std::vector<double> grid;
  for (double t = 0.0; t <= st.cfg.oracle_horizon + 1e-9; t += 0.5)
    grid.push_back(t);
  st.oracle = sh_constants(mech, st.cfg.oracle_eta0_frac * v, grid);
  CsvWriter csv({"t", "gamma", "L"});
  for (size_t k = 0; k < st.oracle->t.size(); ++k)
    csv.row({st.oracle->t[k], st.oracle->gamma[k], st.oracle->L[k]});
  record_file(man, dir, "oracle.csv", csv.text());
}

void stage_simulate(RunState& st, RunManifest& man, const std::string& dir) {
  SimEngine engine(st.model, *st.triple, *st.prop, st.cfg.sim);
  // Test function for the ratio statistic: phi0 restricted to a window.
  Field f = st.triple->phi0;
  for (int i = 0; i < st.model.grid.n_cells; ++i) {
    const double x = st.model.grid.node(i);
    if (x < st.cfg.ratio_f_lo || x > st.cfg.ratio_f_hi) f[i] = 0.0;
  }
  st.ratio_expected =
      inner_product_m(st.model.grid, f, st.triple->psi0);
  std::vector<double> gammas;
  for (double t : st.cfg.sim.record_times) {
    const int k = static_cast<int>(std::lround(t / st.family->delta));
    if (std::abs(k * st.family->delta - t) > 1e-9 ||
        k >= static_cast<int>(st.family->gamma.size()))
      throw std::runtime_error(
          "simulate: record time " + fmt(t) +
          " is not on the backward family grid (extend sh.horizon?)");
    gammas.push_back(st.family->gamma[k]);
  }
  st.paths = engine.simulate_ensemble(st.cfg.sim, {f}, gammas);
  CsvWriter csv({"path_id", "t", "phi0_mass", "M", "S", "extinct"});
  for (const PathRecord& p : st.paths)
    for (size_t k = 0; k < st.cfg.sim.record_times.size(); ++k)
      csv.row({static_cast<double>(p.path_id), st.cfg.sim.record_times[k],
               p.phi0_mass[k], p.M[k], p.S[k],
               p.extinct ? 1.0 : 0.0});
  record_file(man, dir, "paths.csv", csv.text());
}

void stage_verify(RunState& st, RunManifest& man, const std::string& dir) {
  std::ostringstream diag;
  bool all_pass = true;
  auto line = [&](const std::string& name, bool pass, const std::string& detail) {
    diag << (pass ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
    all_pass = all_pass && pass;
  };

  // Laplace functional at the first record time against the solver.
  const double t0 = st.cfg.sim.record_times.front();
  FlowConfig fc = st.cfg.flow;
  const Field u = st.flow->solve(st.triple->phi0, t0, fc);
  const Field mu = SimEngine(st.model, *st.triple, *st.prop, st.cfg.sim)
                       .initial_masses(st.cfg.sim);
  const double solver_value = u.dot(mu);
  std::vector<double> fx(st.paths.size());
  for (size_t i = 0; i < st.paths.size(); ++i) fx[i] = st.paths[i].phi0_mass[0];
  st.laplace = laplace_check(fx, solver_value, st.cfg.sim.dt);
  line("laplace_check", st.laplace->pass,
       "solver " + fmt(st.laplace->solver_value) + " in CI [" +
           fmt(st.laplace->ci_lo) + ", " + fmt(st.laplace->ci_hi) +
           "] + budget " + fmt(st.laplace->bias_budget));

  const bool l0_finite =
      st.sh_report->route_a_status == LimitStatus::kFinite;
  st.diagnostics = sh_diagnostics(
      st.paths, st.cfg.sim.record_times, st.ext->v, mu, *st.triple,
      st.model.grid, st.sh_report->l0_route_a, l0_finite, 0,
      st.ratio_expected);
  line("extinction_frequency", st.diagnostics->extinct_pass,
       "empirical " + fmt(st.diagnostics->extinct_frac) + " vs exp(-<v,mu>) " +
           fmt(st.diagnostics->extinct_expected) + " (3 SE band " +
           fmt(3.0 * st.diagnostics->extinct_se) + ")");
  if (st.diagnostics->mean_w_applicable)
    line("mean_of_W", st.diagnostics->mean_w_pass,
         "sample " + fmt(st.diagnostics->mean_w) + " vs l0<phi0,mu> " +
             fmt(st.diagnostics->mean_w_expected) + " (3 SE " +
             fmt(3.0 * st.diagnostics->mean_w_se) + ")");
  // The oscillation and ratio statistics only settle on long horizons with
  // heavy initial mass; at arbitrary configurations they are informational.
  // The acceptance suite pins and gates them at its calibrated setup.
  diag << "[INFO] osc_proxy: 90th percentile tail oscillation "
       << fmt(st.diagnostics->osc_p90) << "\n";
  diag << "[INFO] ratio_statistic: 90th percentile error "
       << fmt(st.diagnostics->ratio_p90_err)
       << " toward <f,psi0> = " << fmt(st.diagnostics->ratio_expected) << "\n";

  // Route consistency between the grid family and the scalar oracle.
  const bool oracle_finite = st.oracle->status == LimitStatus::kFinite;
  const bool llogl_finite = !st.sh_report->llogl_infinite;
  const bool grid_conclusive =
      st.sh_report->route_a_status != LimitStatus::kInconclusive;
  bool regimes_ok = true;
  if (grid_conclusive)
    regimes_ok = (st.sh_report->route_a_status == LimitStatus::kFinite) ==
                 llogl_finite;
  if (st.oracle->status != LimitStatus::kInconclusive)
    regimes_ok = regimes_ok && (oracle_finite == llogl_finite);
  line("regime_consistency", regimes_ok,
       std::string("LlogL ") + (llogl_finite ? "HOLDS" : "FAILS") +
           ", oracle " + (oracle_finite ? "finite" : "not-finite") +
           ", family route A " +
           (grid_conclusive ? (l0_finite ? "finite" : "divergent")
                            : "inconclusive"));

  diag << (all_pass ? "ALL CHECKS PASSED\n" : "CHECKS FAILED\n");
  record_file(man, dir, "diagnostics.txt", diag.str());
  if (!all_pass) throw std::runtime_error("verify: one or more checks failed");
}

}  // namespace

std::string RunManifest::text() const {
  std::ostringstream ss;
  ss << "config_hash = " << config_hash << "\n";
  ss << "seed = " << seed << "\n";
  ss << "tool_version = " << tool_version << "\n";
  ss << "started = " << started << "\n";
  ss << "finished = " << finished << "\n";
  for (const auto& s : stages)
    ss << "stage." << s.name << " = "
       << (s.completed ? "completed" : ("failed: " + s.error)) << "\n";
  for (const auto& [name, digest] : files)
    ss << "file." << name << " = " << digest << "\n";
  return ss.str();
}

RunManifest run_pipeline(const RunConfig& cfg,
                         const std::vector<std::string>& stages,
                         const std::string& out_dir, RunState* state_out) {
  fs::create_directories(out_dir);
  std::set<std::string> wanted(stages.begin(), stages.end());
  for (const auto& s : wanted)
    if (!kDeps.count(s)) throw std::invalid_argument("unknown stage: " + s);
  close_deps(wanted);

  RunManifest man;
  man.config_hash = cfg.config_hash();
  man.seed = cfg.sim.seed;
  man.tool_version = kToolVersion;
  man.started = now_iso();

  RunState local;
  RunState& st = state_out ? *state_out : local;
  st.cfg = cfg;
  st.model = cfg.make_model();
  const ValidationReport vr = validate_model(st.model);
  if (!vr.ok) {
    std::string msg = "model validation failed:";
    for (const auto& v : vr.violations) msg += " " + v + ";";
    throw std::runtime_error(msg);
  }

  for (const std::string& name : kStageOrder) {
    if (!wanted.count(name)) continue;
    StageStatus status;
    status.name = name;
    try {
      if (name == "eigen") stage_eigen(st, man, out_dir);
      else if (name == "flow") stage_flow(st, man, out_dir);
      else if (name == "extinct") stage_extinct(st, man, out_dir);
      else if (name == "norming") stage_norming(st, man, out_dir);
      else if (name == "oracle") stage_oracle(st, man, out_dir);
      else if (name == "simulate") stage_simulate(st, man, out_dir);
      else if (name == "verify") stage_verify(st, man, out_dir);
      status.completed = true;
      man.stages.push_back(status);
    } catch (const std::exception& e) {
      status.completed = false;
      status.error = e.what();
      man.stages.push_back(status);
      man.finished = now_iso();
      write_file(out_dir + "/manifest.txt", man.text());
      throw;
    }
  }
  man.finished = now_iso();
  write_file(out_dir + "/manifest.txt", man.text());
  return man;
}

std::string emit_report(const RunManifest& manifest, const std::string& out_dir) {
  if (manifest.stages.empty())
    throw std::invalid_argument("emit_report: empty manifest");
  std::ostringstream ss;
  ss << "== " << manifest.tool_version << " run report ==\n";
  ss << "config " << manifest.config_hash << ", seed " << manifest.seed << "\n\n";

  auto completed = [&](const std::string& n) {
    for (const auto& s : manifest.stages)
      if (s.name == n) return s.completed;
    return false;
  };

  if (completed("eigen")) {
    const std::string sc = read_file(out_dir + "/eigen_scalars.csv");
    std::stringstream lines(sc);
    std::string header, values;
    std::getline(lines, header);
    std::getline(lines, values);
    ss << "[mean semigroup] " << header << " = " << values << "\n";
  }
  if (completed("norming") || completed("oracle")) {
    ss << "\n[growth norming: martingale limit and its normalizer]\n";
    if (completed("norming")) {
      const std::string g = read_file(out_dir + "/gamma.csv");
      const size_t last = g.find_last_of('\n', g.size() - 2);
      ss << "  family tail row (t,gamma,L,h_sup): "
         << g.substr(last + 1) << "";
      const std::string sh = read_file(out_dir + "/sh_report.txt");
      auto value_of = [&sh](const std::string& key) {
        const size_t p = sh.find(key + " = ");
        const size_t e = sh.find('\n', p);
        return sh.substr(p + key.size() + 3, e - p - key.size() - 3);
      };
      const bool holds = value_of("regime") == "LLOGL_HOLDS";
      if (holds) {
        ss << "  LlogL: HOLDS; l0 routes " << value_of("l0_route_a") << " / "
           << value_of("l0_route_b") << " (" << value_of("route_a") << ")\n";
      } else {
        ss << "  LlogL: FAILS; L(t) " << value_of("route_a")
           << "; Seneta-Heyde normalization required\n";
      }
    }
    if (completed("oracle")) {
      const std::string g = read_file(out_dir + "/oracle.csv");
      const size_t last = g.find_last_of('\n', g.size() - 2);
      ss << "  oracle tail row (t,gamma,L): " << g.substr(last + 1);
    }
  }
  if (completed("verify")) {
    ss << "\n[limit-theorem checks]\n";
    ss << read_file(out_dir + "/diagnostics.txt");
  }
  return ss.str();
}

bool all_checks_pass(const RunManifest& manifest, const std::string& out_dir) {
  for (const auto& s : manifest.stages)
    if (!s.completed) return false;
  for (const auto& s : manifest.stages)
    if (s.name == "verify") {
      const std::string d = read_file(out_dir + "/diagnostics.txt");
      return d.find("ALL CHECKS PASSED") != std::string::npos;
    }
  return true;
}

}  // namespace splab
