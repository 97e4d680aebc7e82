#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "splab/backward.hpp"
#include "splab/extinction.hpp"
#include "splab/simulate.hpp"

namespace splab {

/// Full run configuration, parsed from the line-oriented `key = value` format
/// with dotted section keys (documented in the README). Unknown keys, type
/// mismatches and range violations are reported with their line number.
struct RunConfig {
  // model.*
  int n_cells{200};
  double alpha_const{6.0};
  double beta_const{1.0};
  bool jumps_enabled{false};
  double jump_c{1.0};
  double jump_beta_star{3.0};

  // flow.*
  FlowConfig flow;

  // extinct.*
  ExtinctionConfig extinct;

  // sh.*
  BackwardConfig sh;
  double sh_eta0_scale{0.5};  // anchor = scale * v

  // oracle.*
  double oracle_horizon{200.0};
  double oracle_eta0_frac{0.5};  // eta0 = frac * v_scalar

  // sim.*
  SimConfig sim;
  double ratio_f_lo{0.2}, ratio_f_hi{0.5};

  std::string label{"run"};

  ModelSpec make_model() const;

  /// Canonical `key = value` text with every key present, sorted; two configs
  /// differing only in key order canonicalize identically.
  std::string canonical_text() const;
  std::string config_hash() const;
};

/// Parses the documented format; empty text yields the all-defaults config.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);

}  // namespace splab
