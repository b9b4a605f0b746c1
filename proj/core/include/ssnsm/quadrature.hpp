#pragma once

#include <functional>

namespace ssnsm {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
  bool converged = false;
};

/// Globally adaptive 7/15-point Gauss-Kronrod quadrature on a finite
/// interval. The interval with the largest error estimate is bisected until
/// the summed estimate falls below max(abs_tol, rel_tol * |value|).
QuadratureResult integrate_gk15(const std::function<double(double)>& f, double lo, double hi,
                                double abs_tol, double rel_tol, int max_intervals = 256);

/// Same rule on [lo, +inf) through the map u = lo + scale * x / (1 - x).
QuadratureResult integrate_gk15_upper(const std::function<double(double)>& f, double lo,
                                      double scale, double abs_tol, double rel_tol,
                                      int max_intervals = 256);

}  // namespace ssnsm
