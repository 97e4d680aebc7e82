#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace splab {

using Field = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Midpoint (cell-centered) grid on (0,1) with Lebesgue reference measure m.
/// Node i sits at x_i = (i + 1/2)/n_cells; every cell has m-measure 1/n_cells.
struct Grid {
  int n_cells{200};

  explicit Grid(int n = 200) : n_cells(n) {
    if (n_cells <= 1) throw std::invalid_argument("Grid: n_cells must be > 1");
  }

  double h() const { return 1.0 / n_cells; }
  double node(int i) const { return (i + 0.5) / n_cells; }
  double cell_weight() const { return 1.0 / n_cells; }

  Field nodes() const {
    Field x(n_cells);
    for (int i = 0; i < n_cells; ++i) x[i] = node(i);
    return x;
  }

  /// Evaluate a nodal field at an arbitrary point of (0,1) by linear
  /// interpolation between cell centers (constant extrapolation past the
  /// first/last center).
  double interpolate(const Field& f, double x) const {
    check(f);
    const double s = x * n_cells - 0.5;
    if (s <= 0.0) return f[0];
    if (s >= n_cells - 1) return f[n_cells - 1];
    const int i = static_cast<int>(s);
    const double w = s - i;
    return (1.0 - w) * f[i] + w * f[i + 1];
  }

  void check(const Field& f) const {
    if (f.size() != n_cells)
      throw std::invalid_argument("Field length " + std::to_string(f.size()) +
                                  " does not match grid with " +
                                  std::to_string(n_cells) + " cells");
    if (!f.allFinite()) throw std::invalid_argument("Field has non-finite entries");
  }
};

/// Discrete L^2(E, m) inner product: sum_i f_i g_i / n_cells.
inline double inner_product_m(const Grid& g, const Field& f, const Field& h) {
  g.check(f);
  g.check(h);
  return f.dot(h) / g.n_cells;
}

inline double sup_norm(const Field& f) { return f.cwiseAbs().maxCoeff(); }

inline Field constant_field(const Grid& g, double value) {
  return Field::Constant(g.n_cells, value);
}

}  // namespace splab
