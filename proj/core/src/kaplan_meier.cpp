#include "ssnsm/kaplan_meier.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ssnsm {
namespace {

std::vector<std::size_t> sorted_order(std::span<const double> t, std::span<const std::uint8_t> d) {
  std::vector<std::size_t> idx(t.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (t[a] != t[b]) return t[a] < t[b];
    return d[a] > d[b];
  });
  return idx;
}

}  // namespace

double KaplanMeierCurve::operator()(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

double KaplanMeierCurve::left_limit(double t) const {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

KaplanMeierCurve km_fit(std::span<const double> times, std::span<const std::uint8_t> deltas) {
  if (times.empty()) throw std::invalid_argument("km_fit: empty input");
  if (times.size() != deltas.size()) throw std::invalid_argument("km_fit: length mismatch");
  const auto idx = sorted_order(times, deltas);
  KaplanMeierCurve curve;
  double s = 1.0;
  std::size_t at_risk = times.size();
  for (std::size_t k = 0; k < idx.size();) {
    const double t = times[idx[k]];
    std::size_t events = 0;
    std::size_t removed = 0;
    while (k < idx.size() && times[idx[k]] == t) {
      events += deltas[idx[k]] ? 1 : 0;
      ++removed;
      ++k;
    }
    if (events > 0) {
      s *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
      curve.times.push_back(t);
      curve.survival.push_back(s);
      curve.at_risk.push_back(at_risk);
    }
    at_risk -= removed;
  }
  return curve;
}

double ResidualDistribution::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) m += values[k] * masses[k];
  return m;
}

double ResidualDistribution::conditional_mean_above(double threshold) const {
  double num = 0.0;
  double den = 0.0;
  for (auto it = std::upper_bound(values.begin(), values.end(), threshold); it != values.end(); ++it) {
    const auto k = static_cast<std::size_t>(it - values.begin());
    num += values[k] * masses[k];
    den += masses[k];
  }
  return den > 0.0 ? num / den : threshold;
}

double ResidualDistribution::survival(double t) const {
  double s = 0.0;
  for (auto it = std::upper_bound(values.begin(), values.end(), t); it != values.end(); ++it)
    s += masses[static_cast<std::size_t>(it - values.begin())];
  return s;
}

ResidualDistribution km_residual_distribution(std::span<const double> residuals,
                                              std::span<const std::uint8_t> deltas) {
  const KaplanMeierCurve km = km_fit(residuals, deltas);
  ResidualDistribution out;
  double prev = 1.0;
  for (std::size_t j = 0; j < km.times.size(); ++j) {
    out.values.push_back(km.times[j]);
    out.masses.push_back(prev - km.survival[j]);
    prev = km.survival[j];
  }
  if (prev > 0.0) {
    const double largest = *std::max_element(residuals.begin(), residuals.end());
    if (!out.values.empty() && out.values.back() == largest) {
      out.masses.back() += prev;
    } else {
      out.values.push_back(largest);
      out.masses.push_back(prev);
    }
  }
  return out;
}

}  // namespace ssnsm
