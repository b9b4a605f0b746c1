#include <benchmark/benchmark.h>

#include "ssnsm/aft_fit.hpp"
#include "ssnsm/comparators.hpp"
#include "ssnsm/distributions.hpp"
#include "ssnsm/npmle.hpp"
#include "ssnsm/simulation.hpp"

using namespace ssnsm;

namespace {

SurvivalDataset scenario_data(int n) {
  ScenarioSpec spec;
  spec.n = n;
  spec.error = ErrorFamily::skew_t(0.0, 1.0, -15.0, 3.0);
  return generate_replicate(spec, 0);
}

void BM_OwenT(benchmark::State& state) {
  double h = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(owen_t(h, 0.7));
    h = h < 5.0 ? h + 0.01 : 0.1;
  }
}
BENCHMARK(BM_OwenT);

void BM_LogSurvivalNegativeSlant(benchmark::State& state) {
  double z = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sn_std_log_survival(z, -8.0));
    z = z < 4.0 ? z + 0.013 : -3.0;
  }
}
BENCHMARK(BM_LogSurvivalNegativeSlant);

void BM_CnmFit(benchmark::State& state) {
  const SurvivalDataset d = scenario_data(static_cast<int>(state.range(0)));
  const auto ols = ols_log_time(d);
  const Eigen::VectorXd r = d.log_times() - d.covariates * ols.tail(2) -
                            Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d.size()), ols(0));
  const std::vector<double> e(r.data(), r.data() + r.size());
  const auto q0 = default_initial_distribution(ScaleBounds::from_residuals(e, d.deltas));
  for (auto _ : state) benchmark::DoNotOptimize(cnm_fit(e, d.deltas, -2.0, q0));
}
BENCHMARK(BM_CnmFit)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_FitSsnsm(benchmark::State& state) {
  const SurvivalDataset d = scenario_data(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_ssnsm(d));
}
BENCHMARK(BM_FitSsnsm)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Comparator(benchmark::State& state) {
  const SurvivalDataset d = scenario_data(400);
  const auto which = state.range(0);
  for (auto _ : state) {
    switch (which) {
      case 0: benchmark::DoNotOptimize(fit_normal_mle(d)); break;
      case 1: benchmark::DoNotOptimize(fit_sn_mle(d)); break;
      case 2: benchmark::DoNotOptimize(fit_gehan_smoothed(d)); break;
      default: benchmark::DoNotOptimize(fit_gee_bj(d)); break;
    }
  }
}
BENCHMARK(BM_Comparator)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace
