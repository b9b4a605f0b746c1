#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "ssnsm/dataset.hpp"
#include "ssnsm/estimators.hpp"
#include "ssnsm/kaplan_meier.hpp"

namespace ssnsm {

inline constexpr double kCensorFloor = 0.05;

struct BrierInputs {
  const SurvivalDataset* data = nullptr;
  SurvivalPredictor predictor;
  /// Kaplan-Meier of the censoring distribution, fitted on (y, 1 - delta).
  KaplanMeierCurve censor_km;
  double g_floor = kCensorFloor;
};

BrierInputs make_brier_inputs(const SurvivalDataset& data, SurvivalPredictor predictor);

/// IPCW Brier score at t_star with strict inequalities on y_i versus t_star
/// and censoring weights floored at g_floor. Throws std::domain_error for
/// t_star <= 0.
double brier_score(const BrierInputs& inputs, double t_star);

/// (1/t_max) * integral of BS(t) over [0, t_max], trapezoid on a uniform
/// grid of `grid_points` nodes starting at t = 0 where BS(0) = 0.
double integrated_brier(const BrierInputs& inputs, double t_max, int grid_points = 200);

/// Coefficient vector from a dataset; should throw or return non-finite
/// values on failure.
using CoefficientFitter = std::function<Eigen::VectorXd(const SurvivalDataset&)>;

struct BootstrapResult {
  Eigen::VectorXd se;
  int successes = 0;
  int failures = 0;
  /// More than 20% of refits failed.
  bool flagged = false;
};

/// Case-resampling bootstrap. Replicate b draws its rows from a stream
/// derived from (seed, b), so results do not depend on worker count.
BootstrapResult bootstrap_se(const SurvivalDataset& data, const CoefficientFitter& fitter,
                             int replicates = 500, std::uint64_t seed = 1, unsigned workers = 0);

}  // namespace ssnsm
