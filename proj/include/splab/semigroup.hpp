#pragma once

#include <vector>

#include "splab/field.hpp"
#include "splab/model.hpp"

namespace splab {

/// Dense symmetric discretization of (1/2)Laplacian with Dirichlet killing at
/// the cell faces x=0 and x=1, plus the diagonal potential alpha. The boundary
/// rows use the half-cell flux closure (-3, 1)/h^2.
struct GeneratorMatrix {
  Matrix A;          // n x n, symmetric
  Field alpha;       // diagonal potential kept for diagnostics
  int n{0};

  /// Tridiagonal bands (motion + potential) for O(n) shifted solves.
  Field diag, off;   // off has n-1 entries
};

GeneratorMatrix build_generator(const ModelSpec& spec);

/// Generator with the motion switched off (pure local growth diag(alpha)).
/// Used to compare the grid flow against the spatially homogeneous oracle.
GeneratorMatrix build_local_generator(const ModelSpec& spec);

/// e^{tA} realized through a full symmetric eigendecomposition. Exact to
/// roundoff for every t >= 0 and positivity-preserving up to clamping.
class Propagator {
 public:
  explicit Propagator(const GeneratorMatrix& gen);

  int n() const { return n_; }
  const Field& eigenvalues() const { return evals_; }
  const Matrix& eigenvectors() const { return evecs_; }

  /// e^{tA} f. Negative roundoff dust is clamped to 0 when f >= 0.
  Field apply(double t, const Field& f) const;
  /// Dense e^{tA} (cached per distinct t).
  const Matrix& matrix(double t) const;
  /// Kernel value q(t,x,y) ~ n_cells * e^{tA}[i,j], bilinearly interpolated.
  double kernel(double t, double x, double y, const Grid& g) const;

  /// Reference path: scaling-and-squaring matrix exponential of t*A,
  /// independent of the eigendecomposition. Used as a cross-check.
  Matrix expm_reference(double t) const;

 private:
  int n_{0};
  Matrix A_;
  Field evals_;
  Matrix evecs_;
  mutable std::vector<std::pair<double, Matrix>> cache_;
};

/// (lambda0, phi0, psi0) with ||phi0||_2 = 1 and <phi0,psi0>_m = 1, both
/// strictly positive; lambda1 retained for the spectral-gap estimate.
struct EigenTriple {
  double lambda0{0.0};
  double lambda1{0.0};
  Field phi0;
  Field psi0;
  double residual{0.0};  // ||A phi0 - lambda0 phi0||_inf
  int iterations{0};
};

/// Shift-inverted power iteration with deflation on the tridiagonal bands.
/// Throws if the iteration fails to converge within max_iters.
EigenTriple principal_eigentriple(const GeneratorMatrix& gen, const Grid& g,
                                  double tol = 1e-12, int max_iters = 500);

/// Constants of the uniform kernel estimate
///   |e^{-lambda0 t} q(t,x,y) - phi0(x) psi0(y)| <= c e^{-gamma t} phi0 psi0
/// valid for t >= delta on the fitted sample.
struct UniformBound {
  double c{0.0};
  double gamma{0.0};
  double delta{0.0};
};

UniformBound fit_uniform_bound(const Propagator& prop, const EigenTriple& triple,
                               const Grid& g, const std::vector<double>& t_samples);

/// Max over the (i,j) grid of |e^{-l0 t} q/(phi0 psi0) - 1| at a given t.
double kernel_deviation(const Propagator& prop, const EigenTriple& triple,
                        const Grid& g, double t);

}  // namespace splab
