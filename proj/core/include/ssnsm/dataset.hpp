#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ssnsm {

/// Right-censored observations (y_i, delta_i, x_i). delta_i = 1 marks an
/// observed failure; the covariate matrix is n x p and carries no intercept
/// column.
struct SurvivalDataset {
  std::vector<double> times;
  std::vector<std::uint8_t> deltas;
  Eigen::MatrixXd covariates;

  SurvivalDataset() = default;
  SurvivalDataset(std::vector<double> t, std::vector<std::uint8_t> d, Eigen::MatrixXd x);

  std::size_t size() const { return times.size(); }
  Eigen::Index num_covariates() const { return covariates.cols(); }
  std::size_t num_events() const;

  /// log y_i, computed once at construction.
  const Eigen::VectorXd& log_times() const { return log_times_; }

  /// Throws std::invalid_argument when the dataset cannot be fitted:
  /// non-positive times, no events, n <= p + 2, or mismatched sizes.
  void validate() const;

  /// Rows picked by index (bootstrap resamples, subsets).
  SurvivalDataset subset(std::span<const std::size_t> rows) const;

  /// Same data with every log time shifted by `shift` (times scaled by e^shift).
  SurvivalDataset with_log_time_shift(double shift) const;

  /// Median of the log times (upper median for even n).
  double median_log_time() const;

 private:
  Eigen::VectorXd log_times_;
};

}  // namespace ssnsm
