#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ssnsm {

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct BfgsOptions {
  /// Stop when ||grad||_inf <= grad_tol.
  double grad_tol = 1e-6;
  /// Or when an accepted step changes f by at most f_rel_tol * (1 + |f|).
  double f_rel_tol = 1e-10;
  int max_iterations = 500;
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_halvings = 40;
  /// Largest trial step (inf-norm) while B is still the identity.
  double max_initial_step = 1.0;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  /// Final Hessian approximation B (not its inverse).
  Eigen::MatrixXd hessian_approx;
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
  /// Objective after every accepted step, starting with the initial value.
  std::vector<double> trace;
};

/// Quasi-Newton minimization with a Hessian approximation B: solve
/// B p = -grad, backtrack on the Armijo condition, then update B from the
/// step s and gradient change d (skipped when d's <= 1e-12 |d||s|).
BfgsResult bfgs_minimize(const ObjectiveFn& f, const GradientFn& grad, Eigen::VectorXd x0,
                         const BfgsOptions& opts = {});

/// Central differences with step 1e-6 * max(1, |x_j|).
Eigen::VectorXd central_difference_gradient(const ObjectiveFn& f, const Eigen::VectorXd& x,
                                            double rel_step = 1e-6);

}  // namespace ssnsm
