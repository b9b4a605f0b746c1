#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ssnsm/comparators.hpp"
#include "ssnsm/evaluation.hpp"
#include "ssnsm/simulation.hpp"

using namespace ssnsm;

namespace {

SurvivalDataset six_rows() {
  Eigen::MatrixXd x(6, 1);
  x << 0, 1, 0, 1, 0, 1;
  return SurvivalDataset({1, 2, 3, 4, 5, 6}, {1, 0, 1, 0, 1, 1}, x);
}

}  // namespace

TEST_CASE("Brier score by hand") {
  const SurvivalDataset d = six_rows();
  const auto in = make_brier_inputs(d, [](const Eigen::VectorXd&, double) { return 0.5; });
  // Censoring KM: 4/5 after t = 2, 8/15 after t = 4.
  CHECK(in.censor_km(3.0) == doctest::Approx(0.8));
  CHECK(in.censor_km(4.5) == doctest::Approx(8.0 / 15.0));
  // Events before 3.5 at y = 1 (G = 1) and y = 3 (G = 0.8); three rows
  // beyond 3.5 weighted by 1/G(3.5) = 1/0.8; y = 2 is censored before 3.5.
  const double expected = (0.25 / 1.0 + 0.25 / 0.8 + 3.0 * 0.25 / 0.8) / 6.0;
  CHECK(brier_score(in, 3.5) == doctest::Approx(expected));
  // An observation exactly at t* contributes nothing.
  const double at3 = (0.25 / 1.0 + 3.0 * 0.25 / 0.8) / 6.0;
  CHECK(brier_score(in, 3.0) == doctest::Approx(at3));
  CHECK_THROWS_AS(brier_score(in, 0.0), std::domain_error);
}

TEST_CASE("censoring weights are floored") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 1);
  const SurvivalDataset d({1, 2, 3, 4}, {0, 0, 0, 1}, x);
  auto in = make_brier_inputs(d, [](const Eigen::VectorXd&, double) { return 0.0; });
  CHECK(in.censor_km(3.5) == doctest::Approx(0.25));
  in.g_floor = 0.5;
  // Only y = 4 is beyond t* = 3.5: (1 - 0)^2 / max(0.25, 0.5) / 4.
  CHECK(brier_score(in, 3.5) == doctest::Approx(0.5));
}

TEST_CASE("perfect and uninformative predictors") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(5, 1);
  const SurvivalDataset d({1, 2, 3, 4, 5}, {1, 1, 1, 1, 1}, x);
  // Each row's own step function, known exactly on uncensored data.
  std::vector<double> y = d.times;
  auto oracle = [](const Eigen::VectorXd&, double) { return 0.0; };
  const auto in = make_brier_inputs(d, oracle);
  CHECK(brier_score(in, 2.5) == doctest::Approx(3.0 / 5.0));
  const auto half = make_brier_inputs(d, [](const Eigen::VectorXd&, double) { return 0.5; });
  for (double t : {0.5, 1.5, 3.2, 4.9}) CHECK(brier_score(half, t) == doctest::Approx(0.25));
}

TEST_CASE("integrated Brier score is the trapezoid of the curve") {
  const SurvivalDataset d = six_rows();
  const auto in = make_brier_inputs(d, [](const Eigen::VectorXd& x, double t) {
    return std::exp(-t / (3.0 + x(0)));
  });
  const int grid = 50;
  const double t_max = 5.5;
  double manual = 0.0;
  double prev = 0.0;
  for (int k = 1; k < grid; ++k) {
    const double bs = brier_score(in, t_max * k / (grid - 1));
    manual += 0.5 * (prev + bs) * t_max / (grid - 1);
    prev = bs;
  }
  CHECK(integrated_brier(in, t_max, grid) == doctest::Approx(manual / t_max).epsilon(1e-12));
  CHECK_THROWS_AS(integrated_brier(in, -1.0), std::domain_error);
  CHECK_THROWS_AS(integrated_brier(in, 1.0, 1), std::invalid_argument);
}

TEST_CASE("bootstrap SE of OLS slopes agrees with the analytic SE") {
  ScenarioSpec spec;
  spec.n = 400;
  spec.tau = 100.0;
  SurvivalDataset d = generate_replicate(spec, 0);
  d.deltas.assign(d.size(), 1);
  d = SurvivalDataset(d.times, d.deltas, d.covariates);
  const auto n = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd z(n, 3);
  z << Eigen::VectorXd::Ones(n), d.covariates;
  const Eigen::VectorXd b = ols_log_time(d);
  const double s2 = (d.log_times() - z * b).squaredNorm() / static_cast<double>(n - 3);
  const Eigen::VectorXd analytic = (s2 * (z.transpose() * z).inverse()).diagonal().array().sqrt();
  const auto boot = bootstrap_se(d, ols_log_time, 400, 5, 2);
  CHECK(boot.successes == 400);
  CHECK_FALSE(boot.flagged);
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(boot.se(j) == doctest::Approx(analytic(j)).epsilon(0.15));
}

TEST_CASE("bootstrap is reproducible and independent of worker count") {
  ScenarioSpec spec;
  spec.n = 100;
  const SurvivalDataset d = generate_replicate(spec, 1);
  const auto a = bootstrap_se(d, ols_log_time, 50, 77, 1);
  const auto b = bootstrap_se(d, ols_log_time, 50, 77, 3);
  CHECK(a.se == b.se);
  CHECK(bootstrap_se(d, ols_log_time, 50, 78, 1).se != a.se);
}

TEST_CASE("failed refits are skipped and tallied") {
  ScenarioSpec spec;
  spec.n = 100;
  const SurvivalDataset d = generate_replicate(spec, 2);
  const double cut = d.times[0];
  auto flaky = [cut](const SurvivalDataset& s) -> Eigen::VectorXd {
    // Fails whenever the first resampled row lies below the cut.
    if (s.times[0] < cut) throw std::runtime_error("refit failed");
    return ols_log_time(s);
  };
  const auto r = bootstrap_se(d, flaky, 100, 3, 1);
  CHECK(r.successes + r.failures == 100);
  CHECK(r.failures > 0);
  CHECK(r.flagged == (r.failures > 20));
  auto nan_fit = [](const SurvivalDataset&) -> Eigen::VectorXd {
    return Eigen::VectorXd::Constant(3, std::nan(""));
  };
  const auto all_fail = bootstrap_se(d, nan_fit, 10, 3, 1);
  CHECK(all_fail.failures == 10);
  CHECK(all_fail.flagged);
}
