#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ssnsm {

/// Product-limit step function. `times` are the distinct event times in
/// increasing order, `survival[j]` the value just after times[j] and
/// `at_risk[j]` the risk-set size just before it.
struct KaplanMeierCurve {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<std::size_t> at_risk;

  /// Right-continuous evaluation; 1 before the first step.
  double operator()(double t) const;
  /// Left limit S(t-).
  double left_limit(double t) const;
};

/// Kaplan-Meier estimate; ties put events before censorings.
KaplanMeierCurve km_fit(std::span<const double> times, std::span<const std::uint8_t> deltas);

/// Probability masses of a residual distribution estimated by Kaplan-Meier.
/// When the largest value is censored its leftover mass is placed on it, so
/// the masses always sum to one.
struct ResidualDistribution {
  std::vector<double> values;
  std::vector<double> masses;

  double mean() const;
  /// E[e | e > threshold]; returns `threshold` when no mass lies above it.
  double conditional_mean_above(double threshold) const;
  /// P(e > t).
  double survival(double t) const;
};

ResidualDistribution km_residual_distribution(std::span<const double> residuals,
                                              std::span<const std::uint8_t> deltas);

}  // namespace ssnsm
