#include "ssnsm/aft_fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssnsm/comparators.hpp"
#include "ssnsm/distributions.hpp"

namespace ssnsm {

double corrected_intercept(const StructuralParams& theta, const LatentDistribution& q) {
  return theta.b0 + sn_mean_shift(theta.slant) * q.mean_scale();
}

namespace {

std::vector<double> residual_vector(const StructuralParams& theta, const SurvivalDataset& data) {
  const Eigen::VectorXd e = structural_residuals(theta, data);
  return {e.data(), e.data() + e.size()};
}

}  // namespace

namespace {

FittedModel fit_from(const SurvivalDataset& data, StructuralParams theta,
                     std::optional<LatentDistribution> q0, const FitOptions& opts) {
  if (!theta.finite() || theta.beta.size() != data.num_covariates())
    throw std::invalid_argument("fit_ssnsm: invalid initial theta");
  theta.slant = clamp_slant(theta.slant);
  FittedModel model;

  CnmOptions cnm_opts = opts.cnm;
  std::vector<double> e = residual_vector(theta, data);
  if (!cnm_opts.bounds) cnm_opts.bounds = ScaleBounds::from_residuals(e, data.deltas, cnm_opts.lower_rel, cnm_opts.upper_rel);
  LatentDistribution q = q0 ? *q0 : default_initial_distribution(*cnm_opts.bounds);

  CnmResult cnm = cnm_fit(e, data.deltas, theta.slant, q, cnm_opts);
  q = cnm.q;
  model.loglik_trace.push_back(cnm.loglik_trace.front());
  model.loglik_trace.push_back(cnm.loglik);
  double cycle_start = cnm.loglik;

  bool outer_done = false;
  int outer = 0;
  std::string diagnostic;
  while (outer < opts.max_outer) {
    ++outer;
    const StructuralFit step = bfgs_minimize(theta, q, data, opts.structural);
    // BFGS only accepts descent steps, so this never lowers the likelihood.
    if (step.theta.finite() && -step.negloglik >= model.loglik_trace.back()) theta = step.theta;
    model.loglik_trace.push_back(-profile_negloglik(theta, q, data));
    if (!step.converged && !step.diagnostic.empty()) diagnostic = "theta-step: " + step.diagnostic;

    e = residual_vector(theta, data);
    cnm = cnm_fit(e, data.deltas, theta.slant, q, cnm_opts);
    q = cnm.q;
    model.loglik_trace.push_back(cnm.loglik);

    if (cnm.loglik - cycle_start < opts.outer_tol) {
      outer_done = true;
      break;
    }
    cycle_start = cnm.loglik;
  }

  model.theta = theta;
  model.q = q;
  model.scale_bounds = *cnm_opts.bounds;
  model.beta0_corrected = corrected_intercept(theta, q);
  model.loglik = cnm.loglik;
  model.outer_iterations = outer;
  model.converged = outer_done && cnm.converged && theta.finite();
  if (!outer_done) {
    model.diagnostic = "outer iteration limit reached";
  } else if (!cnm.converged) {
    model.diagnostic = "final Q-step did not certify optimality (max D = " +
                       std::to_string(cnm.max_derivative) + ")";
  } else if (!model.converged) {
    model.diagnostic = diagnostic;
  }
  return model;
}

FittedModel fit_from_normal(const SurvivalDataset& data, const FitOptions& opts) {
  const EstimatorResult normal = fit_normal_mle(data);
  return fit_from(data, {normal.beta0, normal.beta, 0.0}, opts.initial_q, opts);
}

// Starts at the skew-normal MLE, which is itself an SSNSM point (Q a point
// mass at its scale), so the fit cannot end below the skew-normal likelihood.
FittedModel fit_from_sn(const SurvivalDataset& data, const FitOptions& opts) {
  const EstimatorResult sn = fit_sn_mle(data);
  const StructuralParams theta{sn.extra.at("b0"), sn.beta, sn.extra.at("slant")};
  if (opts.initial_q) return fit_from(data, theta, opts.initial_q, opts);
  double sigma = sn.extra.at("sigma");
  if (!opts.cnm.bounds) {
    // Keep the same bounds a normal start would use, so both starts search
    // the same family.
    const EstimatorResult normal = fit_normal_mle(data);
    const std::vector<double> e = residual_vector({normal.beta0, normal.beta, 0.0}, data);
    FitOptions o = opts;
    o.cnm.bounds = ScaleBounds::from_residuals(e, data.deltas, opts.cnm.lower_rel, opts.cnm.upper_rel);
    sigma = std::clamp(sigma, o.cnm.bounds->lower, o.cnm.bounds->upper);
    return fit_from(data, theta, LatentDistribution::point_mass(sigma), o);
  }
  sigma = std::clamp(sigma, opts.cnm.bounds->lower, opts.cnm.bounds->upper);
  return fit_from(data, theta, LatentDistribution::point_mass(sigma), opts);
}

}  // namespace

FittedModel fit_ssnsm(const SurvivalDataset& data, const FitOptions& opts) {
  data.validate();
  if (opts.initial_theta) return fit_from(data, *opts.initial_theta, opts.initial_q, opts);

  // Fit on log times centered at their median so the optimizer path, and
  // hence where it stops on flat ridges, does not depend on the time origin.
  const double center = data.median_log_time();
  const SurvivalDataset centered = data.with_log_time_shift(-center);

  FittedModel best;
  switch (opts.init) {
    case FitOptions::Init::normal_mle: best = fit_from_normal(centered, opts); break;
    case FitOptions::Init::sn_mle: best = fit_from_sn(centered, opts); break;
    case FitOptions::Init::multistart: {
      FittedModel a = fit_from_normal(centered, opts);
      FittedModel b = fit_from_sn(centered, opts);
      best = (std::isfinite(b.loglik) && (!std::isfinite(a.loglik) || b.loglik > a.loglik)) ? b : a;
      break;
    }
  }
  best.theta.b0 += center;
  best.beta0_corrected += center;
  return best;
}

double predict_log_time(const FittedModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.theta.beta.size())
    throw std::invalid_argument("predict_log_time: covariate dimension mismatch");
  return model.beta0_corrected + x.dot(model.theta.beta);
}

double conditional_survival(const FittedModel& model, const Eigen::VectorXd& x, double t) {
  if (!(t > 0.0)) throw std::domain_error("conditional_survival: t must be positive");
  if (x.size() != model.theta.beta.size())
    throw std::invalid_argument("conditional_survival: covariate dimension mismatch");
  const double e = std::log(t) - model.theta.b0 - x.dot(model.theta.beta);
  double s = 0.0;
  for (std::size_t k = 0; k < model.q.size(); ++k)
    s += model.q.weights[k] * sn_survival(e, {0.0, model.q.support[k], model.theta.slant});
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace ssnsm
