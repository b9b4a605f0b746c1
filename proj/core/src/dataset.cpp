#include "ssnsm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ssnsm {

SurvivalDataset::SurvivalDataset(std::vector<double> t, std::vector<std::uint8_t> d,
                                 Eigen::MatrixXd x)
    : times(std::move(t)), deltas(std::move(d)), covariates(std::move(x)) {
  if (times.size() != deltas.size() || static_cast<Eigen::Index>(times.size()) != covariates.rows())
    throw std::invalid_argument("SurvivalDataset: times, deltas and covariates differ in length");
  log_times_.resize(static_cast<Eigen::Index>(times.size()));
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0) || !std::isfinite(times[i]))
      throw std::invalid_argument("SurvivalDataset: time at row " + std::to_string(i) +
                                  " is not a positive finite number");
    if (deltas[i] > 1)
      throw std::invalid_argument("SurvivalDataset: status at row " + std::to_string(i) +
                                  " is not 0 or 1");
    log_times_(static_cast<Eigen::Index>(i)) = std::log(times[i]);
  }
}

std::size_t SurvivalDataset::num_events() const {
  std::size_t events = 0;
  for (auto d : deltas) events += d;
  return events;
}

void SurvivalDataset::validate() const {
  const auto n = static_cast<Eigen::Index>(size());
  if (n != covariates.rows() || deltas.size() != times.size())
    throw std::invalid_argument("SurvivalDataset: inconsistent dimensions");
  if (num_events() == 0) throw std::invalid_argument("SurvivalDataset: no observed events");
  if (n <= covariates.cols() + 2)
    throw std::invalid_argument("SurvivalDataset: need n > p + 2 observations");
  if (!covariates.allFinite()) throw std::invalid_argument("SurvivalDataset: non-finite covariate");
}

SurvivalDataset SurvivalDataset::subset(std::span<const std::size_t> rows) const {
  std::vector<double> t;
  std::vector<std::uint8_t> d;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), covariates.cols());
  t.reserve(rows.size());
  d.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = rows[k];
    if (i >= size()) throw std::out_of_range("SurvivalDataset::subset: row index out of range");
    t.push_back(times[i]);
    d.push_back(deltas[i]);
    x.row(static_cast<Eigen::Index>(k)) = covariates.row(static_cast<Eigen::Index>(i));
  }
  return SurvivalDataset(std::move(t), std::move(d), std::move(x));
}

SurvivalDataset SurvivalDataset::with_log_time_shift(double shift) const {
  std::vector<double> t(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) t[i] = std::exp(log_times_(static_cast<Eigen::Index>(i)) + shift);
  return SurvivalDataset(std::move(t), deltas, covariates);
}

double SurvivalDataset::median_log_time() const {
  if (log_times_.size() == 0) throw std::invalid_argument("median_log_time: empty dataset");
  std::vector<double> lt(log_times_.data(), log_times_.data() + log_times_.size());
  const auto mid = lt.begin() + static_cast<std::ptrdiff_t>(lt.size() / 2);
  std::nth_element(lt.begin(), mid, lt.end());
  return *mid;
}

}  // namespace ssnsm
