#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splab/field.hpp"
#include "splab/jumps.hpp"

namespace splab {

/// One concrete superprocess instance: Brownian motion with generator
/// (1/2) d^2/dx^2 killed at {0,1}, mass-growth potential alpha, quadratic
/// branching coefficient beta and the parametric jump family.
struct ModelSpec {
  Grid grid{200};
  Field alpha;    // 1/time
  Field beta;     // 1/(mass*time), must be bounded away from 0
  JumpFamily jumps;
  double bound_M{0.0};  // uniform bound on |alpha| + beta + int (r/\r^2) n

  static ModelSpec quadratic(int n_cells, double alpha_const, double beta_const);
  static ModelSpec with_jumps(int n_cells, double alpha_const, double beta_const,
                              double c_const, double beta_star);

  /// sup_x [ |alpha| + beta + int (r /\ r^2) n(x,dr) ].
  double realized_bound() const;
};

struct ValidationReport {
  bool ok{true};
  double realized_bound{0.0};
  std::vector<std::string> violations;
};

ValidationReport validate_model(const ModelSpec& spec);

}  // namespace splab
