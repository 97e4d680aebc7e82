#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace splab {

/// Adaptive Gauss-Kronrod (G7/K15) quadrature on a finite interval.
/// Subdivides until the embedded error estimate meets
/// abs_tol + rel_tol*|integral| on every panel.
double integrate_gk(const std::function<double(double)>& f, double a, double b,
                    double rel_tol = 1e-12, double abs_tol = 1e-15,
                    int max_depth = 60);

}  // namespace splab
