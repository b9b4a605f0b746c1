#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ssnsm/dataset.hpp"
#include "ssnsm/estimators.hpp"
#include "ssnsm/rng.hpp"

namespace ssnsm {

struct ErrorFamily {
  enum class Kind { normal_std, student_t, gumbel, skew_t };
  Kind kind = Kind::normal_std;
  double df = 0.0;
  double location = 0.0;
  double scale = 1.0;
  double slant = 0.0;
  bool standardized = true;

  static ErrorFamily normal() { return {}; }
  static ErrorFamily student_t(double df) { return {Kind::student_t, df, 0.0, 1.0, 0.0, true}; }
  static ErrorFamily gumbel(double loc, double scale) {
    return {Kind::gumbel, 0.0, loc, scale, 0.0, true};
  }
  static ErrorFamily skew_t(double loc, double scale, double slant, double df) {
    return {Kind::skew_t, df, loc, scale, slant, true};
  }

  /// Throws std::invalid_argument for df <= 2 or a non-positive scale.
  void validate() const;
  std::string label() const;
  /// One draw from the raw (unstandardized) law.
  double sample_raw(Rng& rng) const;
  /// One draw, standardized when `standardized` is set.
  double sample(Rng& rng) const;
};

/// Analytic mean and standard deviation of the raw family.
std::pair<double, double> standardization_constants(const ErrorFamily& e);

struct ScenarioSpec {
  int n = 400;
  ErrorFamily error;
  double tau = 4.0;
  Eigen::Vector3d true_beta{2.0, 1.0, -1.0};
  int replications = 200;
  std::uint64_t seed = 20240101;

  void validate() const;
};

/// Dataset plus the latent quantities kept for auditing.
struct SimulatedReplicate {
  SurvivalDataset data;
  Eigen::VectorXd log_event_times;
  Eigen::VectorXd errors;
};

/// log T = b0 + b1 X1 + b2 X2 + eps, X1 ~ N(0,1), X2 ~ Bernoulli(0.5),
/// log C ~ U(0, tau). The observation with the largest eps is always
/// observed (delta = 1, y = T). Deterministic in (spec.seed, rep_index).
SimulatedReplicate simulate_replicate(const ScenarioSpec& spec, std::uint64_t rep_index);
SurvivalDataset generate_replicate(const ScenarioSpec& spec, std::uint64_t rep_index);

/// Uncensored test sample of size m on an independent stream.
SimulatedReplicate simulate_test_set(const ScenarioSpec& spec, std::uint64_t rep_index, int m);

struct CoefficientSummary {
  double mse = 0.0;
  double bias = 0.0;
};

/// MSE and bias per coefficient over the given estimates.
std::vector<CoefficientSummary> summarize_estimates(const Eigen::VectorXd& truth,
                                                    const std::vector<Eigen::VectorXd>& estimates);

struct MethodScenarioResult {
  Method method = Method::normal;
  std::vector<CoefficientSummary> coefficients;
  int successes = 0;
  /// Replicates where the fit threw or returned non-finite coefficients.
  int failures = 0;
  /// Replicates kept in the summary but flagged as not converged.
  int nonconverged = 0;
  /// Per replicate; empty when the fit failed.
  std::vector<std::optional<MethodFit>> fits;
};

struct ScenarioResult {
  ScenarioSpec spec;
  std::vector<MethodScenarioResult> methods;
  double mean_censoring = 0.0;
};

ScenarioResult run_scenario(const ScenarioSpec& spec, const std::vector<Method>& methods,
                            unsigned workers = 0, const FitOptions& ssnsm_opts = {});

struct DistributionSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  /// Tukey whiskers: extreme values within 1.5 IQR of the box.
  double whisker_low = 0.0;
  double whisker_high = 0.0;
};

/// Type-7 quantiles; throws on empty input.
DistributionSummary summarize_distribution(std::vector<double> values);

struct MethodPredictionResult {
  Method method = Method::normal;
  /// RMSEP per replicate, NaN when the fit failed.
  std::vector<double> rmsep;
  int failures = 0;
  DistributionSummary summary;
};

struct PredictionResult {
  ScenarioSpec spec;
  int train_n = 250;
  int test_m = 1000;
  std::vector<MethodPredictionResult> methods;
};

/// Fits each method on a training replicate of size train_n and scores it on
/// an independent uncensored test set of size test_m.
PredictionResult run_prediction_study(int train_n, int test_m, const ScenarioSpec& spec,
                                      const std::vector<Method>& methods, unsigned workers = 0,
                                      const FitOptions& ssnsm_opts = {});

struct ScenarioPreset {
  std::string name;
  ScenarioSpec spec;
  /// Set for prediction-study presets.
  bool prediction = false;
};

/// Named presets: sim1/n{200,400}/tau{1.5,4}/{normal,t3,gumbel,skewt},
/// sim2/tau{1.5,4}/{family}, sim3/n{200,400}/tau{1.5,4}/lambda{-1,-4,-10,-50}.
const std::vector<ScenarioPreset>& scenario_presets();
/// Throws std::invalid_argument for an unknown name.
const ScenarioPreset& find_preset(const std::string& name);

}  // namespace ssnsm
