#include "splab/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "splab/csv.hpp"

namespace splab {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw std::runtime_error("config line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& v, int line) {
  try {
    size_t pos;
    double x = std::stod(v, &pos);
    if (pos != v.size()) fail(line, "trailing characters in number '" + v + "'");
    return x;
  } catch (const std::logic_error&) {
    fail(line, "expected a number, got '" + v + "'");
  }
}

int parse_int(const std::string& v, int line) {
  const double x = parse_double(v, line);
  if (x != std::floor(x)) fail(line, "expected an integer, got '" + v + "'");
  return static_cast<int>(x);
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(line, "expected true/false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& v, int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item, line));
  }
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += CsvWriter::format(xs[i]);
  }
  return s;
}

}  // namespace

ModelSpec RunConfig::make_model() const {
  if (jumps_enabled)
    return ModelSpec::with_jumps(n_cells, alpha_const, beta_const, jump_c,
                                 jump_beta_star);
  return ModelSpec::quadratic(n_cells, alpha_const, beta_const);
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    std::string s = raw;
    const size_t hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (val.empty()) fail(line, "empty value for '" + key + "'");

    if (key == "model.n_cells") {
      cfg.n_cells = parse_int(val, line);
      if (cfg.n_cells < 8) fail(line, "model.n_cells must be >= 8");
    } else if (key == "model.alpha_const") {
      cfg.alpha_const = parse_double(val, line);
    } else if (key == "model.beta_const") {
      cfg.beta_const = parse_double(val, line);
      if (cfg.beta_const <= 0.0) fail(line, "model.beta_const must be > 0");
    } else if (key == "model.jumps.enabled") {
      cfg.jumps_enabled = parse_bool(val, line);
    } else if (key == "model.jumps.c_const") {
      cfg.jump_c = parse_double(val, line);
      if (cfg.jump_c < 0.0) fail(line, "model.jumps.c_const must be >= 0");
    } else if (key == "model.jumps.beta_star") {
      cfg.jump_beta_star = parse_double(val, line);
      if (cfg.jump_beta_star <= 1.0)
        fail(line, "model.jumps.beta_star must be > 1");
    } else if (key == "flow.dt") {
      cfg.flow.dt = parse_double(val, line);
      if (cfg.flow.dt <= 0.0) fail(line, "flow.dt must be > 0");
    } else if (key == "flow.picard_tol") {
      cfg.flow.picard_tol = parse_double(val, line);
      if (cfg.flow.picard_tol <= 0.0) fail(line, "flow.picard_tol must be > 0");
    } else if (key == "flow.max_picard") {
      cfg.flow.max_picard = parse_int(val, line);
      if (cfg.flow.max_picard < 1) fail(line, "flow.max_picard must be >= 1");
    } else if (key == "flow.record_times") {
      cfg.flow.record_times = parse_list(val, line);
    } else if (key == "extinct.s") {
      cfg.extinct.s = parse_double(val, line);
      if (cfg.extinct.s <= 0.0) fail(line, "extinct.s must be > 0");
    } else if (key == "extinct.tol") {
      cfg.extinct.tol = parse_double(val, line);
      if (cfg.extinct.tol <= 0.0) fail(line, "extinct.tol must be > 0");
    } else if (key == "sh.delta") {
      cfg.sh.delta = parse_double(val, line);
      if (cfg.sh.delta <= 0.0) fail(line, "sh.delta must be > 0");
    } else if (key == "sh.horizon") {
      cfg.sh.horizon = parse_double(val, line);
      if (cfg.sh.horizon <= 0.0) fail(line, "sh.horizon must be > 0");
    } else if (key == "sh.k_back") {
      cfg.sh.k_back = parse_int(val, line);
      if (cfg.sh.k_back < 1) fail(line, "sh.k_back must be >= 1");
    } else if (key == "sh.newton_tol") {
      cfg.sh.newton_tol = parse_double(val, line);
    } else if (key == "sh.eta0_scale") {
      cfg.sh_eta0_scale = parse_double(val, line);
      if (cfg.sh_eta0_scale <= 0.0 || cfg.sh_eta0_scale >= 1.0)
        fail(line, "sh.eta0_scale must lie in (0,1)");
    } else if (key == "oracle.horizon") {
      cfg.oracle_horizon = parse_double(val, line);
      if (cfg.oracle_horizon <= 1.0) fail(line, "oracle.horizon must be > 1");
    } else if (key == "oracle.eta0_frac") {
      cfg.oracle_eta0_frac = parse_double(val, line);
      if (cfg.oracle_eta0_frac <= 0.0 || cfg.oracle_eta0_frac >= 1.0)
        fail(line, "oracle.eta0_frac must lie in (0,1)");
    } else if (key == "sim.dt") {
      cfg.sim.dt = parse_double(val, line);
      if (cfg.sim.dt <= 0.0) fail(line, "sim.dt must be > 0");
    } else if (key == "sim.n_paths") {
      cfg.sim.n_paths = parse_int(val, line);
      if (cfg.sim.n_paths < 0) fail(line, "sim.n_paths must be >= 0");
    } else if (key == "sim.seed") {
      cfg.sim.seed = static_cast<std::uint64_t>(parse_double(val, line));
    } else if (key == "sim.eps_cut") {
      cfg.sim.eps_cut = parse_double(val, line);
      if (!(cfg.sim.eps_cut > 0.0 && cfg.sim.eps_cut <= 2.0))
        fail(line, "sim.eps_cut must lie in (0,2]");
    } else if (key == "sim.record_times") {
      cfg.sim.record_times = parse_list(val, line);
      if (cfg.sim.record_times.empty()) fail(line, "sim.record_times empty");
    } else if (key == "sim.mu_scale") {
      cfg.sim.mu_scale = parse_double(val, line);
      if (cfg.sim.mu_scale < 0.0) fail(line, "sim.mu_scale must be >= 0");
    } else if (key == "sim.n_threads") {
      cfg.sim.n_threads = parse_int(val, line);
    } else if (key == "sim.ratio_f_lo") {
      cfg.ratio_f_lo = parse_double(val, line);
    } else if (key == "sim.ratio_f_hi") {
      cfg.ratio_f_hi = parse_double(val, line);
    } else if (key == "label") {
      cfg.label = val;
    } else {
      fail(line, "unknown key '" + key + "'");
    }
  }
  if (cfg.sim.record_times.empty())
    cfg.sim.record_times = {1.0, 6.0, 8.0, 10.0, 12.0};
  if (!(cfg.ratio_f_lo >= 0.0 && cfg.ratio_f_hi <= 1.0 &&
        cfg.ratio_f_lo < cfg.ratio_f_hi))
    throw std::runtime_error("config: sim.ratio_f window must be inside (0,1)");
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  return parse_config(read_file(path));
}

std::string RunConfig::canonical_text() const {
  std::map<std::string, std::string> kv;
  kv["model.n_cells"] = std::to_string(n_cells);
  kv["model.alpha_const"] = CsvWriter::format(alpha_const);
  kv["model.beta_const"] = CsvWriter::format(beta_const);
  kv["model.jumps.enabled"] = jumps_enabled ? "true" : "false";
  kv["model.jumps.c_const"] = CsvWriter::format(jump_c);
  kv["model.jumps.beta_star"] = CsvWriter::format(jump_beta_star);
  kv["flow.dt"] = CsvWriter::format(flow.dt);
  kv["flow.picard_tol"] = CsvWriter::format(flow.picard_tol);
  kv["flow.max_picard"] = std::to_string(flow.max_picard);
  kv["flow.record_times"] = join(flow.record_times);
  kv["extinct.s"] = CsvWriter::format(extinct.s);
  kv["extinct.tol"] = CsvWriter::format(extinct.tol);
  kv["sh.delta"] = CsvWriter::format(sh.delta);
  kv["sh.horizon"] = CsvWriter::format(sh.horizon);
  kv["sh.k_back"] = std::to_string(sh.k_back);
  kv["sh.newton_tol"] = CsvWriter::format(sh.newton_tol);
  kv["sh.eta0_scale"] = CsvWriter::format(sh_eta0_scale);
  kv["oracle.horizon"] = CsvWriter::format(oracle_horizon);
  kv["oracle.eta0_frac"] = CsvWriter::format(oracle_eta0_frac);
  kv["sim.dt"] = CsvWriter::format(sim.dt);
  kv["sim.n_paths"] = std::to_string(sim.n_paths);
  kv["sim.seed"] = std::to_string(sim.seed);
  kv["sim.eps_cut"] = CsvWriter::format(sim.eps_cut);
  kv["sim.record_times"] = join(sim.record_times);
  kv["sim.mu_scale"] = CsvWriter::format(sim.mu_scale);
  kv["sim.ratio_f_lo"] = CsvWriter::format(ratio_f_lo);
  kv["sim.ratio_f_hi"] = CsvWriter::format(ratio_f_hi);
  kv["label"] = label;
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string RunConfig::config_hash() const { return fnv1a_hex(canonical_text()); }

}  // namespace splab
