#include "ssnsm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ssnsm/parallel.hpp"
#include "ssnsm/rng.hpp"

namespace ssnsm {

BrierInputs make_brier_inputs(const SurvivalDataset& data, SurvivalPredictor predictor) {
  std::vector<std::uint8_t> censored(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) censored[i] = data.deltas[i] ? 0 : 1;
  BrierInputs in;
  in.data = &data;
  in.predictor = std::move(predictor);
  in.censor_km = km_fit(data.times, censored);
  return in;
}

double brier_score(const BrierInputs& inputs, double t_star) {
  if (!(t_star > 0.0)) throw std::domain_error("brier_score: t_star must be positive");
  if (!inputs.data || !inputs.predictor) throw std::invalid_argument("brier_score: incomplete inputs");
  const SurvivalDataset& data = *inputs.data;
  const double g_star = std::max(inputs.censor_km(t_star), inputs.g_floor);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double y = data.times[i];
    if (y == t_star) continue;
    const Eigen::VectorXd x = data.covariates.row(static_cast<Eigen::Index>(i)).transpose();
    const double s = inputs.predictor(x, t_star);
    if (y < t_star) {
      if (data.deltas[i]) total += s * s / std::max(inputs.censor_km(y), inputs.g_floor);
    } else {
      total += (1.0 - s) * (1.0 - s) / g_star;
    }
  }
  return total / static_cast<double>(data.size());
}

double integrated_brier(const BrierInputs& inputs, double t_max, int grid_points) {
  if (!(t_max > 0.0)) throw std::domain_error("integrated_brier: t_max must be positive");
  if (grid_points < 2) throw std::invalid_argument("integrated_brier: need at least 2 grid points");
  const double h = t_max / (grid_points - 1);
  double prev = 0.0;
  double area = 0.0;
  for (int k = 1; k < grid_points; ++k) {
    const double bs = brier_score(inputs, h * k);
    area += 0.5 * h * (prev + bs);
    prev = bs;
  }
  return area / t_max;
}

BootstrapResult bootstrap_se(const SurvivalDataset& data, const CoefficientFitter& fitter,
                             int replicates, std::uint64_t seed, unsigned workers) {
  if (replicates < 2) throw std::invalid_argument("bootstrap_se: need at least 2 replicates");
  const std::size_t n = data.size();
  std::vector<std::optional<Eigen::VectorXd>> draws(static_cast<std::size_t>(replicates));
  parallel_for(draws.size(), workers, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b, 0));
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = rng.index(n);
    try {
      Eigen::VectorXd est = fitter(data.subset(rows));
      if (est.allFinite()) draws[b] = std::move(est);
    } catch (const std::exception&) {
    }
  });

  BootstrapResult out;
  std::vector<Eigen::VectorXd> ok;
  for (auto& d : draws) {
    if (d) ok.push_back(std::move(*d));
  }
  out.successes = static_cast<int>(ok.size());
  out.failures = replicates - out.successes;
  out.flagged = out.failures > 0.2 * replicates;
  if (ok.size() < 2) {
    out.se = Eigen::VectorXd();
    out.flagged = true;
    return out;
  }
  const Eigen::Index p = ok.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (const auto& v : ok) mean += v;
  mean /= static_cast<double>(ok.size());
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(p);
  for (const auto& v : ok) ss += (v - mean).array().square().matrix();
  out.se = (ss / static_cast<double>(ok.size() - 1)).array().sqrt().matrix();
  return out;
}

}  // namespace ssnsm
