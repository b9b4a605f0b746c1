#pragma once

#include <map>
#include <string>

#include <Eigen/Dense>

#include "ssnsm/dataset.hpp"

namespace ssnsm {

/// Common result shape for the baseline estimators. `extra` carries
/// method-specific values (sigma, slant, loglik, iteration counts).
struct EstimatorResult {
  double beta0 = 0.0;
  Eigen::VectorXd beta;
  std::map<std::string, double> extra;
  bool converged = false;

  /// [beta0, beta...].
  Eigen::VectorXd coefficients() const;
};

/// Least squares of log y on [1, x], ignoring censoring. Returns [beta0, beta].
Eigen::VectorXd ols_log_time(const SurvivalDataset& data);

/// Censored-normal log-likelihood at (beta0, beta, sigma).
double normal_loglik(const SurvivalDataset& data, double beta0, const Eigen::VectorXd& beta,
                     double sigma);

/// Parametric AFT with normal errors (maximum likelihood).
EstimatorResult fit_normal_mle(const SurvivalDataset& data);

/// Parametric AFT with skew-normal errors; the reported intercept is the
/// mean-corrected b0 + sqrt(2/pi) slant/sqrt(1+slant^2) sigma.
EstimatorResult fit_sn_mle(const SurvivalDataset& data);

/// Induced-smoothed Gehan estimating function
/// U(beta) = sum_i sum_j delta_i (x_i - x_j) Phi((e_j - e_i) / r_ij),
/// r_ij = sqrt(|x_i - x_j|^2 / n).
Eigen::VectorXd gehan_smoothed_score(const Eigen::VectorXd& beta, const SurvivalDataset& data);

/// Root of the smoothed Gehan function by damped Newton; intercept from the
/// mean of the Kaplan-Meier residual distribution.
EstimatorResult fit_gehan_smoothed(const SurvivalDataset& data);

/// Buckley-James least squares iterated from the Gehan estimate.
EstimatorResult fit_gee_bj(const SurvivalDataset& data);

}  // namespace ssnsm
