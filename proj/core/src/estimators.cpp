#include "ssnsm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssnsm/distributions.hpp"

namespace ssnsm {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::normal: return "normal";
    case Method::sn: return "sn";
    case Method::gehan: return "gehan";
    case Method::gee: return "gee";
    case Method::ssnsm: return "ssnsm";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods)
    if (method_name(m) == name) return m;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

std::vector<Method> parse_methods(std::string_view list) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    std::string_view item = list.substr(start, comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item == "all") {
      out.assign(std::begin(kAllMethods), std::end(kAllMethods));
    } else if (!item.empty()) {
      const Method m = parse_method(item);
      if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    start = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("no methods selected");
  return out;
}

double MethodFit::predict_log_time(const Eigen::VectorXd& x) const {
  if (model) return ssnsm::predict_log_time(*model, x);
  if (x.size() != result.beta.size())
    throw std::invalid_argument("predict_log_time: covariate dimension mismatch");
  return result.beta0 + x.dot(result.beta);
}

double MethodFit::survival(const Eigen::VectorXd& x, double t) const {
  if (!(t > 0.0)) throw std::domain_error("survival: t must be positive");
  if (model) return conditional_survival(*model, x, t);
  if (x.size() != result.beta.size())
    throw std::invalid_argument("survival: covariate dimension mismatch");
  const double lt = std::log(t) - x.dot(result.beta);
  switch (method) {
    case Method::normal:
      return norm_sf((lt - result.beta0) / result.extra.at("sigma"));
    case Method::sn:
      return sn_survival(lt - result.extra.at("b0"),
                         {0.0, result.extra.at("sigma"), result.extra.at("slant")});
    case Method::gehan:
    case Method::gee:
      if (!residuals) throw std::logic_error("survival: missing residual distribution");
      return residuals->survival(lt);
    case Method::ssnsm:
      break;
  }
  throw std::logic_error("survival: model not available");
}

SurvivalPredictor MethodFit::predictor() const {
  return [self = *this](const Eigen::VectorXd& x, double t) { return self.survival(x, t); };
}

MethodFit fit_method(Method m, const SurvivalDataset& data, const FitOptions& ssnsm_opts) {
  MethodFit fit;
  fit.method = m;
  switch (m) {
    case Method::normal:
      fit.result = fit_normal_mle(data);
      break;
    case Method::sn:
      fit.result = fit_sn_mle(data);
      break;
    case Method::gehan:
    case Method::gee: {
      fit.result = m == Method::gehan ? fit_gehan_smoothed(data) : fit_gee_bj(data);
      // Survival from the KM law of log y - x' beta (intercept included).
      const Eigen::VectorXd e = data.log_times() - data.covariates * fit.result.beta;
      const std::vector<double> r(e.data(), e.data() + e.size());
      fit.residuals = km_residual_distribution(r, data.deltas);
      break;
    }
    case Method::ssnsm: {
      FittedModel model = fit_ssnsm(data, ssnsm_opts);
      fit.result.beta0 = model.beta0_corrected;
      fit.result.beta = model.theta.beta;
      fit.result.converged = model.converged;
      fit.result.extra["b0"] = model.theta.b0;
      fit.result.extra["slant"] = model.theta.slant;
      fit.result.extra["loglik"] = model.loglik;
      fit.result.extra["support_size"] = static_cast<double>(model.q.size());
      fit.result.extra["outer_iterations"] = model.outer_iterations;
      fit.model = std::move(model);
      break;
    }
  }
  return fit;
}

}  // namespace ssnsm
