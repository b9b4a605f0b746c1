#include "ssnsm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ssnsm/parallel.hpp"

namespace ssnsm {

namespace {

enum Stream : std::uint64_t { kCovariates = 0, kErrors = 1, kCensoring = 2, kTestCovariates = 3,
                              kTestErrors = 4 };

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

void ErrorFamily::validate() const {
  if ((kind == Kind::student_t || kind == Kind::skew_t) && !(df > 2.0))
    throw std::invalid_argument("ErrorFamily: df must exceed 2");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("ErrorFamily: scale must be positive");
  if (!std::isfinite(location) || !std::isfinite(slant))
    throw std::invalid_argument("ErrorFamily: non-finite parameter");
}

std::string ErrorFamily::label() const {
  switch (kind) {
    case Kind::normal_std: return "N(0,1)";
    case Kind::student_t: return "t(" + format_number(df) + ")";
    case Kind::gumbel: return "Gumbel(" + format_number(location) + "," + format_number(scale) + ")";
    case Kind::skew_t:
      return "skew-t(" + format_number(location) + "," + format_number(scale) + "," +
             format_number(slant) + "," + format_number(df) + ")";
  }
  return "?";
}

double ErrorFamily::sample_raw(Rng& rng) const {
  switch (kind) {
    case Kind::normal_std:
      return rng.normal();
    case Kind::student_t: {
      const double z = rng.normal();
      return z / std::sqrt(rng.chi_squared(df) / df);
    }
    case Kind::gumbel:
      return location - scale * std::log(-std::log(rng.uniform()));
    case Kind::skew_t: {
      const double delta = slant / std::sqrt(1.0 + slant * slant);
      const double z0 = rng.normal();
      const double z1 = rng.normal();
      const double sn = delta * std::abs(z0) + std::sqrt(1.0 - delta * delta) * z1;
      return location + scale * sn / std::sqrt(rng.chi_squared(df) / df);
    }
  }
  return 0.0;
}

double ErrorFamily::sample(Rng& rng) const {
  const double raw = sample_raw(rng);
  if (!standardized) return raw;
  const auto [mean, sd] = standardization_constants(*this);
  return (raw - mean) / sd;
}

std::pair<double, double> standardization_constants(const ErrorFamily& e) {
  e.validate();
  using std::numbers::pi;
  switch (e.kind) {
    case ErrorFamily::Kind::normal_std:
      return {0.0, 1.0};
    case ErrorFamily::Kind::student_t:
      return {0.0, std::sqrt(e.df / (e.df - 2.0))};
    case ErrorFamily::Kind::gumbel:
      return {e.location + e.scale * std::numbers::egamma, e.scale * pi / std::sqrt(6.0)};
    case ErrorFamily::Kind::skew_t: {
      const double nu = e.df;
      const double delta = e.slant / std::sqrt(1.0 + e.slant * e.slant);
      const double b =
          std::sqrt(nu / pi) * std::exp(std::lgamma(0.5 * (nu - 1.0)) - std::lgamma(0.5 * nu));
      const double shift = e.scale * delta * b;
      const double var = e.scale * e.scale * nu / (nu - 2.0) - shift * shift;
      return {e.location + shift, std::sqrt(var)};
    }
  }
  return {0.0, 1.0};
}

void ScenarioSpec::validate() const {
  if (n < 50) throw std::invalid_argument("ScenarioSpec: n must be at least 50");
  if (!(tau > 0.0)) throw std::invalid_argument("ScenarioSpec: tau must be positive");
  if (replications < 1) throw std::invalid_argument("ScenarioSpec: replications must be positive");
  error.validate();
}

namespace {

void draw_covariates(Rng& rng, int n, Eigen::MatrixXd& x) {
  x.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
}

Eigen::VectorXd draw_errors(const ErrorFamily& family, Rng& rng, int n) {
  const auto [mean, sd] = standardization_constants(family);
  Eigen::VectorXd eps(n);
  for (int i = 0; i < n; ++i) {
    const double raw = family.sample_raw(rng);
    eps(i) = family.standardized ? (raw - mean) / sd : raw;
  }
  return eps;
}

}  // namespace

SimulatedReplicate simulate_replicate(const ScenarioSpec& spec, std::uint64_t rep_index) {
  spec.validate();
  const int n = spec.n;
  Rng cov_rng(derive_seed(spec.seed, rep_index, kCovariates));
  Rng err_rng(derive_seed(spec.seed, rep_index, kErrors));
  Rng cen_rng(derive_seed(spec.seed, rep_index, kCensoring));

  Eigen::MatrixXd x;
  draw_covariates(cov_rng, n, x);
  SimulatedReplicate out;
  out.errors = draw_errors(spec.error, err_rng, n);
  out.log_event_times =
      (spec.true_beta(0) + (x * spec.true_beta.tail<2>()).array()).matrix() + out.errors;

  std::vector<double> y(static_cast<std::size_t>(n));
  std::vector<std::uint8_t> d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double log_c = cen_rng.uniform(0.0, spec.tau);
    const double log_t = out.log_event_times(i);
    const bool event = log_t <= log_c;
    y[static_cast<std::size_t>(i)] = std::exp(event ? log_t : log_c);
    d[static_cast<std::size_t>(i)] = event ? 1 : 0;
  }
  Eigen::Index imax = 0;
  out.errors.maxCoeff(&imax);
  y[static_cast<std::size_t>(imax)] = std::exp(out.log_event_times(imax));
  d[static_cast<std::size_t>(imax)] = 1;

  out.data = SurvivalDataset(std::move(y), std::move(d), std::move(x));
  return out;
}

SurvivalDataset generate_replicate(const ScenarioSpec& spec, std::uint64_t rep_index) {
  return simulate_replicate(spec, rep_index).data;
}

SimulatedReplicate simulate_test_set(const ScenarioSpec& spec, std::uint64_t rep_index, int m) {
  spec.error.validate();
  if (m < 1) throw std::invalid_argument("simulate_test_set: m must be positive");
  Rng cov_rng(derive_seed(spec.seed, rep_index, kTestCovariates));
  Rng err_rng(derive_seed(spec.seed, rep_index, kTestErrors));
  Eigen::MatrixXd x;
  draw_covariates(cov_rng, m, x);
  SimulatedReplicate out;
  out.errors = draw_errors(spec.error, err_rng, m);
  out.log_event_times =
      (spec.true_beta(0) + (x * spec.true_beta.tail<2>()).array()).matrix() + out.errors;
  std::vector<double> y(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) y[static_cast<std::size_t>(i)] = std::exp(out.log_event_times(i));
  out.data = SurvivalDataset(std::move(y), std::vector<std::uint8_t>(static_cast<std::size_t>(m), 1),
                             std::move(x));
  return out;
}

std::vector<CoefficientSummary> summarize_estimates(const Eigen::VectorXd& truth,
                                                    const std::vector<Eigen::VectorXd>& estimates) {
  std::vector<CoefficientSummary> out(static_cast<std::size_t>(truth.size()));
  if (estimates.empty()) {
    for (auto& c : out) c = {std::numeric_limits<double>::quiet_NaN(),
                             std::numeric_limits<double>::quiet_NaN()};
    return out;
  }
  const double r = static_cast<double>(estimates.size());
  for (const auto& est : estimates) {
    if (est.size() != truth.size())
      throw std::invalid_argument("summarize_estimates: dimension mismatch");
    for (Eigen::Index k = 0; k < truth.size(); ++k) {
      const double err = est(k) - truth(k);
      out[static_cast<std::size_t>(k)].mse += err * err / r;
      out[static_cast<std::size_t>(k)].bias += err / r;
    }
  }
  return out;
}

namespace {

bool usable(const MethodFit& fit) {
  return std::isfinite(fit.result.beta0) && fit.result.beta.allFinite();
}

std::optional<MethodFit> try_fit(Method m, const SurvivalDataset& data, const FitOptions& opts) {
  try {
    MethodFit fit = fit_method(m, data, opts);
    if (usable(fit)) return fit;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec, const std::vector<Method>& methods,
                            unsigned workers, const FitOptions& ssnsm_opts) {
  spec.validate();
  if (methods.empty()) throw std::invalid_argument("run_scenario: no methods");
  const auto reps = static_cast<std::size_t>(spec.replications);
  ScenarioResult out;
  out.spec = spec;
  for (Method m : methods) {
    MethodScenarioResult r;
    r.method = m;
    r.fits.resize(reps);
    out.methods.push_back(std::move(r));
  }
  std::vector<double> censoring(reps);
  parallel_for(reps, workers, [&](std::size_t rep) {
    const SurvivalDataset data = generate_replicate(spec, rep);
    censoring[rep] = 1.0 - static_cast<double>(data.num_events()) / static_cast<double>(data.size());
    for (auto& mr : out.methods) mr.fits[rep] = try_fit(mr.method, data, ssnsm_opts);
  });

  for (auto& mr : out.methods) {
    std::vector<Eigen::VectorXd> estimates;
    for (const auto& fit : mr.fits) {
      if (!fit) {
        ++mr.failures;
        continue;
      }
      ++mr.successes;
      if (!fit->result.converged) ++mr.nonconverged;
      estimates.push_back(fit->result.coefficients());
    }
    mr.coefficients = summarize_estimates(spec.true_beta, estimates);
  }
  double total = 0.0;
  for (double c : censoring) total += c;
  out.mean_censoring = total / static_cast<double>(reps);
  return out;
}

DistributionSummary summarize_distribution(std::vector<double> values) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) throw std::invalid_argument("summarize_distribution: no finite values");
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  DistributionSummary s;
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  const double iqr = s.q3 - s.q1;
  s.whisker_low = *std::lower_bound(values.begin(), values.end(), s.q1 - 1.5 * iqr);
  s.whisker_high = *(std::upper_bound(values.begin(), values.end(), s.q3 + 1.5 * iqr) - 1);
  return s;
}

PredictionResult run_prediction_study(int train_n, int test_m, const ScenarioSpec& spec,
                                      const std::vector<Method>& methods, unsigned workers,
                                      const FitOptions& ssnsm_opts) {
  ScenarioSpec train = spec;
  train.n = train_n;
  train.validate();
  if (methods.empty()) throw std::invalid_argument("run_prediction_study: no methods");
  const auto reps = static_cast<std::size_t>(spec.replications);
  PredictionResult out;
  out.spec = train;
  out.train_n = train_n;
  out.test_m = test_m;
  for (Method m : methods) {
    MethodPredictionResult r;
    r.method = m;
    r.rmsep.assign(reps, std::numeric_limits<double>::quiet_NaN());
    out.methods.push_back(std::move(r));
  }
  parallel_for(reps, workers, [&](std::size_t rep) {
    const SurvivalDataset data = generate_replicate(train, rep);
    const SimulatedReplicate test = simulate_test_set(train, rep, test_m);
    for (auto& mr : out.methods) {
      const auto fit = try_fit(mr.method, data, ssnsm_opts);
      if (!fit) continue;
      const Eigen::VectorXd pred =
          (fit->result.beta0 + (test.data.covariates * fit->result.beta).array()).matrix();
      mr.rmsep[rep] = std::sqrt((test.log_event_times - pred).squaredNorm() / test_m);
    }
  });
  for (auto& mr : out.methods) {
    mr.failures = static_cast<int>(
        std::count_if(mr.rmsep.begin(), mr.rmsep.end(), [](double v) { return std::isnan(v); }));
    if (mr.failures < static_cast<int>(reps)) mr.summary = summarize_distribution(mr.rmsep);
  }
  return out;
}

const std::vector<ScenarioPreset>& scenario_presets() {
  static const std::vector<ScenarioPreset> presets = [] {
    std::vector<ScenarioPreset> v;
    const std::pair<const char*, ErrorFamily> families[] = {
        {"normal", ErrorFamily::normal()},
        {"t3", ErrorFamily::student_t(3.0)},
        {"gumbel", ErrorFamily::gumbel(0.0, 5.0)},
        {"skewt", ErrorFamily::skew_t(0.0, 1.0, -15.0, 3.0)},
    };
    const std::pair<const char*, double> taus[] = {{"tau1.5", 1.5}, {"tau4", 4.0}};
    for (int n : {200, 400})
      for (const auto& [tname, tau] : taus)
        for (const auto& [fname, fam] : families) {
          ScenarioSpec s;
          s.n = n;
          s.tau = tau;
          s.error = fam;
          v.push_back({"sim1/n" + std::to_string(n) + "/" + tname + "/" + fname, s, false});
        }
    for (const auto& [tname, tau] : taus)
      for (const auto& [fname, fam] : families) {
        ScenarioSpec s;
        s.n = 250;
        s.tau = tau;
        s.error = fam;
        v.push_back({std::string("sim2/") + tname + "/" + fname, s, true});
      }
    for (int n : {200, 400})
      for (const auto& [tname, tau] : taus)
        for (double lambda : {-1.0, -4.0, -10.0, -50.0}) {
          ScenarioSpec s;
          s.n = n;
          s.tau = tau;
          s.error = ErrorFamily::skew_t(0.0, 1.0, lambda, 3.0);
          v.push_back({"sim3/n" + std::to_string(n) + "/" + tname + "/lambda" +
                           std::to_string(static_cast<int>(lambda)),
                       s, false});
        }
    return v;
  }();
  return presets;
}

const ScenarioPreset& find_preset(const std::string& name) {
  for (const auto& p : scenario_presets())
    if (p.name == name) return p;
  throw std::invalid_argument("unknown scenario preset '" + name + "'");
}

}  // namespace ssnsm
