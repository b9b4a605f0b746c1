#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssnsm/dataset.hpp"
#include "ssnsm/npmle.hpp"
#include "ssnsm/structural_opt.hpp"

namespace ssnsm {

/// Fitted semiparametric skew-normal scale-mixture AFT model. Immutable
/// once returned.
struct FittedModel {
  StructuralParams theta;
  LatentDistribution q;
  /// Scale range searched by the Q-step.
  ScaleBounds scale_bounds;
  double beta0_corrected = 0.0;
  double loglik = 0.0;
  std::vector<double> loglik_trace;
  bool converged = false;
  int outer_iterations = 0;
  /// Why the fit stopped when converged is false.
  std::string diagnostic;
};

/// b0 + sn_mean_shift(slant) * sum_k alpha_k sigma_k.
double corrected_intercept(const StructuralParams& theta, const LatentDistribution& q);

struct FitOptions {
  double outer_tol = 1e-6;
  int max_outer = 100;
  CnmOptions cnm;
  StructuralOptions structural;

  enum class Init { multistart, normal_mle, sn_mle };
  /// Starting point when no explicit start is given. normal_mle starts from
  /// the normal MLE with slant 0 and the default two-point Q; sn_mle starts
  /// from the skew-normal MLE with Q a point mass at its scale; multistart
  /// runs both and keeps the higher log-likelihood.
  Init init = Init::multistart;
  std::optional<StructuralParams> initial_theta;
  std::optional<LatentDistribution> initial_q;
};

/// Alternates the Q-step (CNM with theta fixed) and the theta-step (BFGS
/// with Q fixed), starting and ending with a Q-step, until a full cycle
/// raises the log-likelihood by less than outer_tol. Never throws on
/// non-convergence; invalid data throws std::invalid_argument.
FittedModel fit_ssnsm(const SurvivalDataset& data, const FitOptions& opts = {});

/// beta0_corrected + x' beta.
double predict_log_time(const FittedModel& model, const Eigen::VectorXd& x);

/// sum_k alpha_k S_SN(log t - b0 - x' beta; 0, sigma_k, slant).
double conditional_survival(const FittedModel& model, const Eigen::VectorXd& x, double t);

}  // namespace ssnsm
