#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ssnsm/aft_fit.hpp"
#include "ssnsm/comparators.hpp"
#include "ssnsm/dataset.hpp"
#include "ssnsm/kaplan_meier.hpp"

namespace ssnsm {

enum class Method { normal, sn, gehan, gee, ssnsm };

inline constexpr Method kAllMethods[] = {Method::normal, Method::sn, Method::gehan, Method::gee,
                                         Method::ssnsm};

std::string_view method_name(Method m);
/// Accepts the lower-case names above; throws std::invalid_argument otherwise.
Method parse_method(std::string_view name);
/// Comma-separated list; "all" selects every method.
std::vector<Method> parse_methods(std::string_view list);

/// S(t | x) for a fitted model.
using SurvivalPredictor = std::function<double(const Eigen::VectorXd& x, double t)>;

struct MethodFit {
  Method method = Method::normal;
  EstimatorResult result;
  /// Present for Method::ssnsm.
  std::optional<FittedModel> model;
  /// Residual distribution used by the rank-based predictors.
  std::optional<ResidualDistribution> residuals;

  double predict_log_time(const Eigen::VectorXd& x) const;
  /// Conditional survival at t > 0.
  double survival(const Eigen::VectorXd& x, double t) const;
  SurvivalPredictor predictor() const;
};

MethodFit fit_method(Method m, const SurvivalDataset& data, const FitOptions& ssnsm_opts = {});

}  // namespace ssnsm
