#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssnsm/bfgs.hpp"
#include "ssnsm/dataset.hpp"
#include "ssnsm/npmle.hpp"

namespace ssnsm {

/// theta = (b0, beta, slant): location of the error distribution, slope
/// vector and skew-normal slant.
struct StructuralParams {
  double b0 = 0.0;
  Eigen::VectorXd beta;
  double slant = 0.0;

  Eigen::Index dim() const { return beta.size() + 2; }
  /// Packed as [b0, beta..., slant].
  Eigen::VectorXd to_vector() const;
  static StructuralParams from_vector(const Eigen::VectorXd& v);
  bool finite() const;
};

/// Slant estimates are restricted to [-kMaxAbsSlant, kMaxAbsSlant]. Beyond
/// this the skew-normal is a half-normal to within 1e-6 in delta, and
/// unrestricted fits can drift toward the half-normal frontier without end.
inline constexpr double kMaxAbsSlant = 1e3;

inline double clamp_slant(double slant) {
  return slant > kMaxAbsSlant ? kMaxAbsSlant : (slant < -kMaxAbsSlant ? -kMaxAbsSlant : slant);
}

/// e_i = log y_i - b0 - x_i' beta.
Eigen::VectorXd structural_residuals(const StructuralParams& theta, const SurvivalDataset& data);

/// -l(theta, Q) for the censored skew-normal scale mixture with Q fixed.
double profile_negloglik(const StructuralParams& theta, const LatentDistribution& q,
                         const SurvivalDataset& data);

/// Central-difference gradient of profile_negloglik (packed order).
Eigen::VectorXd profile_gradient(const StructuralParams& theta, const LatentDistribution& q,
                                 const SurvivalDataset& data);

/// -l(theta, Q) and its analytic gradient (packed order). Terms whose
/// contribution sits at the survival floor have zero derivative, matching the
/// floored objective.
double profile_negloglik_gradient(const StructuralParams& theta, const LatentDistribution& q,
                                  const SurvivalDataset& data, Eigen::VectorXd& gradient);

struct StructuralOptions {
  /// Gradient tolerance; non-positive means 1e-6 * n.
  double grad_tol = 0.0;
  double f_rel_tol = 1e-10;
  int max_iterations = 500;
  /// Use the analytic gradient in the theta-step; otherwise central differences.
  bool analytic_gradient = true;
};

struct StructuralFit {
  StructuralParams theta;
  double negloglik = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
  std::vector<double> trace;
  Eigen::MatrixXd hessian_approx;
};

/// Theta-step: minimize profile_negloglik over theta with Q held fixed.
StructuralFit bfgs_minimize(const StructuralParams& initial, const LatentDistribution& q,
                            const SurvivalDataset& data, const StructuralOptions& opts = {});

}  // namespace ssnsm
