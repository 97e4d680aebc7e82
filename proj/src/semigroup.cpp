#include "splab/semigroup.hpp"
#include <cstdint>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace splab {
namespace {

// Thomas solve of (T - shift I) x = b for the symmetric tridiagonal T.
Field tridiag_shifted_solve(const Field& diag, const Field& off, double shift,
                            const Field& b) {
  const int n = static_cast<int>(diag.size());
  Field c(n), d(n), x(n);
  double piv = diag[0] - shift;
  c[0] = (n > 1) ? off[0] / piv : 0.0;
  d[0] = b[0] / piv;
  for (int i = 1; i < n; ++i) {
    piv = diag[i] - shift - off[i - 1] * c[i - 1];
    if (i < n - 1) c[i] = off[i] / piv;
    d[i] = (b[i] - off[i - 1] * d[i - 1]) / piv;
  }
  x[n - 1] = d[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

Field tridiag_mul(const Field& diag, const Field& off, const Field& x) {
  const int n = static_cast<int>(diag.size());
  Field y(n);
  for (int i = 0; i < n; ++i) {
    double s = diag[i] * x[i];
    if (i > 0) s += off[i - 1] * x[i - 1];
    if (i < n - 1) s += off[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

// One dominant eigenpair of (shift I - T)^{-1} by power iteration, deflating
// previously found eigenvectors (orthogonal projection, T symmetric).
struct PowerResult {
  double lambda;
  Field vec;
  int iterations;
};

PowerResult shift_invert_power(const Field& diag, const Field& off, double shift,
                               const std::vector<Field>& deflate, double tol,
                               int max_iters) {
  const int n = static_cast<int>(diag.size());
  // Generic deterministic start with components in every symmetry class.
  Field v(n);
  std::uint64_t s = 0x9e3779b97f4a7c15ull;
  for (int i = 0; i < n; ++i) {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    v[i] = 0.5 + static_cast<double>(s >> 11) * 0x1.0p-53;
  }
  for (const Field& d : deflate) v -= d.dot(v) * d;
  v.normalize();
  double rayleigh = 0.0, prev = 1e300;
  int it = 0;
  for (; it < max_iters; ++it) {
    Field w = tridiag_shifted_solve(diag, off, shift, v);
    // solve gives (T - shift)^{-1} v = -(shift - T)^{-1} v; sign is absorbed
    // by the normalization below.
    for (const Field& d : deflate) w -= d.dot(w) * d;
    w.normalize();
    rayleigh = w.dot(tridiag_mul(diag, off, w));
    if (std::abs(rayleigh - prev) < tol * std::max(1.0, std::abs(rayleigh)) &&
        it > 2)
      break;
    prev = rayleigh;
    v = w;
  }
  if (it >= max_iters)
    throw std::runtime_error(
        "principal_eigentriple: power iteration failed to converge (broken "
        "discretization?)");
  // Rayleigh-quotient polish: cubic convergence takes the eigenvector to
  // machine precision in a couple of shifted inverse iterations.
  for (int polish = 0; polish < 3; ++polish) {
    Field w = tridiag_shifted_solve(diag, off, rayleigh + 1e-11, v);
    for (const Field& d : deflate) w -= d.dot(w) * d;
    if (!w.allFinite()) break;
    w.normalize();
    if (w.dot(v) < 0.0) w = -w;
    v = w;
    rayleigh = v.dot(tridiag_mul(diag, off, v));
  }
  return {rayleigh, v, it};
}

}  // namespace

GeneratorMatrix build_generator(const ModelSpec& spec) {
  const int n = spec.grid.n_cells;
  const double h = spec.grid.h();
  const double k = 0.5 / (h * h);
  GeneratorMatrix gen;
  gen.n = n;
  gen.alpha = spec.alpha;
  gen.A = Matrix::Zero(n, n);
  gen.diag = Field(n);
  gen.off = Field(n - 1);
  for (int i = 0; i < n; ++i) {
    const double d = (i == 0 || i == n - 1) ? -3.0 : -2.0;
    gen.diag[i] = k * d + spec.alpha[i];
    gen.A(i, i) = gen.diag[i];
    if (i < n - 1) {
      gen.off[i] = k;
      gen.A(i, i + 1) = k;
      gen.A(i + 1, i) = k;
    }
  }
  return gen;
}

GeneratorMatrix build_local_generator(const ModelSpec& spec) {
  const int n = spec.grid.n_cells;
  GeneratorMatrix gen;
  gen.n = n;
  gen.alpha = spec.alpha;
  gen.A = Matrix::Zero(n, n);
  gen.diag = spec.alpha;
  gen.off = Field::Zero(n - 1);
  for (int i = 0; i < n; ++i) gen.A(i, i) = spec.alpha[i];
  return gen;
}

Propagator::Propagator(const GeneratorMatrix& gen) : n_(gen.n), A_(gen.A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(gen.A);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("Propagator: eigendecomposition failed");
  evals_ = es.eigenvalues();
  evecs_ = es.eigenvectors();
}

Field Propagator::apply(double t, const Field& f) const {
  if (t < 0.0) throw std::invalid_argument("apply_semigroup: t must be >= 0");
  if (t == 0.0) return f;
  Field coeff = evecs_.transpose() * f;
  coeff.array() *= (evals_.array() * t).exp();
  Field out = evecs_ * coeff;
  if (f.minCoeff() >= 0.0) out = out.cwiseMax(0.0);
  return out;
}

const Matrix& Propagator::matrix(double t) const {
  for (const auto& [tt, m] : cache_)
    if (tt == t) return m;
  Matrix m = evecs_ * (evals_.array() * t).exp().matrix().asDiagonal() *
             evecs_.transpose();
  cache_.emplace_back(t, std::move(m));
  return cache_.back().second;
}

double Propagator::kernel(double t, double x, double y, const Grid& g) const {
  const Matrix& P = matrix(t);
  auto locate = [&g](double z, int& i, double& w) {
    double s = z * g.n_cells - 0.5;
    if (s < 0) s = 0;
    if (s > g.n_cells - 1) s = g.n_cells - 1;
    i = std::min(static_cast<int>(s), g.n_cells - 2);
    w = s - i;
  };
  int i, j;
  double wi, wj;
  locate(x, i, wi);
  locate(y, j, wj);
  const double v =
      (1 - wi) * ((1 - wj) * P(i, j) + wj * P(i, j + 1)) +
      wi * ((1 - wj) * P(i + 1, j) + wj * P(i + 1, j + 1));
  return v * g.n_cells;
}

Matrix Propagator::expm_reference(double t) const {
  Matrix B = t * A_;
  int squarings = 0;
  double norm = B.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.5) {
    B *= 0.5;
    norm *= 0.5;
    ++squarings;
  }
  // [6/6] Pade approximant of exp(B).
  const double c[] = {1.0, 0.5, 0.1136363636363636, 0.01515151515151515,
                      1.262626262626263e-3, 6.313131313131313e-5,
                      1.503126503126503e-6};
  Matrix B2 = B * B;
  Matrix U = c[1] * Matrix::Identity(n_, n_) + c[3] * B2 +
             c[5] * B2 * B2;
  U = B * U;
  Matrix V = c[0] * Matrix::Identity(n_, n_) + c[2] * B2 + c[4] * B2 * B2 +
             c[6] * B2 * B2 * B2;
  Matrix E = (V - U).partialPivLu().solve(V + U);
  for (int s = 0; s < squarings; ++s) E = E * E;
  return E;
}

EigenTriple principal_eigentriple(const GeneratorMatrix& gen, const Grid& g,
                                  double tol, int max_iters) {
  // Shift above the spectrum: Rayleigh quotients are bounded by max alpha.
  const double shift = gen.alpha.maxCoeff() + 1.0;

  PowerResult top = shift_invert_power(gen.diag, gen.off, shift, {}, tol,
                                       max_iters);
  PowerResult second = shift_invert_power(gen.diag, gen.off, shift, {top.vec},
                                          tol, max_iters);

  EigenTriple tr;
  tr.lambda0 = top.lambda;
  tr.lambda1 = second.lambda;
  tr.iterations = top.iterations + second.iterations;

  Field phi = top.vec;
  if (phi.sum() < 0.0) phi = -phi;
  phi = phi.cwiseMax(1e-14);  // Jentzsch positivity, roundoff guard
  phi /= std::sqrt(inner_product_m(g, phi, phi));
  tr.phi0 = phi;

  // The motion is m-symmetric, so the adjoint eigenfunction coincides with
  // phi0 up to the <phi0,psi0>_m = 1 normalization.
  tr.psi0 = phi / inner_product_m(g, phi, phi);

  tr.residual = sup_norm(tridiag_mul(gen.diag, gen.off, tr.phi0) -
                         tr.lambda0 * tr.phi0);
  return tr;
}

double kernel_deviation(const Propagator& prop, const EigenTriple& triple,
                        const Grid& g, double t) {
  const Matrix& P = prop.matrix(t);
  const double scale = std::exp(-triple.lambda0 * t) * g.n_cells;
  double worst = 0.0;
  for (int i = 0; i < g.n_cells; ++i)
    for (int j = 0; j < g.n_cells; ++j) {
      const double prod = triple.phi0[i] * triple.psi0[j];
      const double dev = std::abs(scale * P(i, j) - prod) / prod;
      worst = std::max(worst, dev);
    }
  return worst;
}

UniformBound fit_uniform_bound(const Propagator& prop, const EigenTriple& triple,
                               const Grid& g,
                               const std::vector<double>& t_samples) {
  if (t_samples.empty())
    throw std::invalid_argument("fit_uniform_bound: need at least one t");
  UniformBound ub;
  ub.gamma = triple.lambda0 - triple.lambda1;
  ub.delta = *std::min_element(t_samples.begin(), t_samples.end());
  double c = 0.0;
  for (double t : t_samples) {
    const double dev = kernel_deviation(prop, triple, g, t);
    c = std::max(c, dev * std::exp(ub.gamma * t));
  }
  ub.c = c * 1.02;  // slack so the fitted sample verifies strictly
  return ub;
}

}  // namespace splab
