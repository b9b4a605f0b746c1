#include "ssnsm/bfgs.hpp"

#include <cmath>

namespace ssnsm {

Eigen::VectorXd central_difference_gradient(const ObjectiveFn& f, const Eigen::VectorXd& x,
                                            double rel_step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x(j)));
    xp(j) = x(j) + h;
    const double fp = f(xp);
    xp(j) = x(j) - h;
    const double fm = f(xp);
    xp(j) = x(j);
    g(j) = (fp - fm) / (2.0 * h);
  }
  return g;
}

BfgsResult bfgs_minimize(const ObjectiveFn& f, const GradientFn& grad, Eigen::VectorXd x0,
                         const BfgsOptions& opts) {
  const Eigen::Index dim = x0.size();
  BfgsResult out;
  out.x = std::move(x0);
  out.value = f(out.x);
  out.gradient = grad(out.x);
  out.hessian_approx = Eigen::MatrixXd::Identity(dim, dim);
  out.trace.push_back(out.value);

  bool reset_used = false;
  // True while B is the (unscaled) identity; the first update then rescales
  // it by d'd / d's before applying the BFGS correction.
  bool fresh = true;
  for (int it = 0; it < opts.max_iterations; ++it) {
    out.iterations = it;
    if (!out.gradient.allFinite() || !std::isfinite(out.value)) {
      out.diagnostic = "non-finite objective or gradient";
      return out;
    }
    if (out.gradient.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      out.converged = true;
      return out;
    }

    Eigen::LLT<Eigen::MatrixXd> chol(out.hessian_approx);
    if (chol.info() != Eigen::Success) {
      out.hessian_approx.setIdentity();
      chol.compute(out.hessian_approx);
      fresh = true;
    }
    Eigen::VectorXd dir = chol.solve(-out.gradient);
    double slope = out.gradient.dot(dir);
    if (!(slope < 0.0)) {
      out.hessian_approx.setIdentity();
      dir = -out.gradient;
      slope = out.gradient.dot(dir);
      fresh = true;
    }
    if (fresh) {
      // Steepest descent has no scale information; cap the trial step.
      const double len = dir.lpNorm<Eigen::Infinity>();
      if (len > opts.max_initial_step) {
        dir *= opts.max_initial_step / len;
        slope = out.gradient.dot(dir);
      }
    }

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = out.value;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      x_new = out.x + step * dir;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= out.value + opts.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= opts.shrink;
    }
    if (!accepted) {
      if (!reset_used) {
        reset_used = true;
        out.hessian_approx.setIdentity();
        fresh = true;
        continue;
      }
      out.diagnostic = "line search failed to find a decrease after resetting B";
      return out;
    }

    const Eigen::VectorXd g_new = grad(x_new);
    const Eigen::VectorXd s = x_new - out.x;
    const Eigen::VectorXd d = g_new - out.gradient;
    const double df = out.value - f_new;
    out.x = x_new;
    out.value = f_new;
    out.gradient = g_new;
    out.trace.push_back(f_new);
    out.iterations = it + 1;

    const double ds = d.dot(s);
    if (ds > 1e-12 * d.norm() * s.norm()) {
      if (fresh) {
        out.hessian_approx *= d.squaredNorm() / ds;
        fresh = false;
      }
      const Eigen::VectorXd bs = out.hessian_approx * s;
      out.hessian_approx += d * d.transpose() / ds - bs * bs.transpose() / s.dot(bs);
      out.hessian_approx = 0.5 * (out.hessian_approx + out.hessian_approx.transpose()).eval();
    }

    if (df <= opts.f_rel_tol * (1.0 + std::abs(out.value))) {
      out.converged = true;
      return out;
    }
  }
  out.diagnostic = "iteration limit reached";
  return out;
}

}  // namespace ssnsm
