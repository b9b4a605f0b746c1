#include "ssnsm/npmle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/QR>

#include "ssnsm/distributions.hpp"
#include "ssnsm/nnls.hpp"

namespace ssnsm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPruneWeight = 0.0;

double log_sum_exp_row(const Eigen::MatrixXd& log_entries, Eigen::Index i,
                       std::span<const double> log_weights) {
  double mx = kNegInf;
  for (Eigen::Index k = 0; k < log_entries.cols(); ++k) {
    const double v = log_weights[static_cast<std::size_t>(k)] + log_entries(i, k);
    mx = std::max(mx, v);
  }
  if (mx == kNegInf) return mx;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < log_entries.cols(); ++k)
    acc += std::exp(log_weights[static_cast<std::size_t>(k)] + log_entries(i, k) - mx);
  return mx + std::log(acc);
}

std::vector<double> log_of(std::span<const double> w) {
  std::vector<double> out(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) out[k] = w[k] > 0.0 ? std::log(w[k]) : kNegInf;
  return out;
}

void check_weights(const CensoredComponentMatrix& m, std::span<const double> weights) {
  if (static_cast<Eigen::Index>(weights.size()) != m.cols())
    throw std::invalid_argument("mixture weights do not match the component matrix width");
}

// Golden-section maximization of f over [lo, hi] in log-scale coordinates.
template <class F>
std::pair<double, double> golden_max(const F& d, double lo, double hi, double rel_tol) {
  constexpr double inv_phi = 0.618033988749894848204586834366;
  double a = std::log(lo);
  double b = std::log(hi);
  double c = b - inv_phi * (b - a);
  double e = a + inv_phi * (b - a);
  double fc = d(std::exp(c));
  double fe = d(std::exp(e));
  while (b - a > rel_tol) {
    if (fc >= fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - inv_phi * (b - a);
      fc = d(std::exp(c));
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + inv_phi * (b - a);
      fe = d(std::exp(e));
    }
  }
  return fc >= fe ? std::pair{std::exp(c), fc} : std::pair{std::exp(e), fe};
}

// Sorted support with adjacent points closer than `tol` merged (weighted
// average location, summed weight) and non-positive weights dropped.
LatentDistribution tidy(LatentDistribution q, double tol) {
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return q.support[a] < q.support[b]; });
  LatentDistribution out;
  for (auto k : order) {
    const double s = q.support[k];
    const double w = q.weights[k];
    if (!(w > kPruneWeight)) continue;
    if (!out.support.empty() && s - out.support.back() < tol) {
      const double wsum = out.weights.back() + w;
      out.support.back() = (out.support.back() * out.weights.back() + s * w) / wsum;
      out.weights.back() = wsum;
    } else {
      out.support.push_back(s);
      out.weights.push_back(w);
    }
  }
  const double total = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
  for (auto& w : out.weights) w /= total;
  return out;
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

LatentDistribution LatentDistribution::point_mass(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("point_mass: scale must be positive");
  return {{sigma}, {1.0}};
}

double LatentDistribution::mean_scale() const {
  double m = 0.0;
  for (std::size_t k = 0; k < support.size(); ++k) m += weights[k] * support[k];
  return m;
}

void LatentDistribution::validate(double min_support) const {
  if (support.empty()) throw std::invalid_argument("LatentDistribution: empty support");
  if (support.size() != weights.size())
    throw std::invalid_argument("LatentDistribution: support and weights differ in length");
  double total = 0.0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (!(support[k] > 0.0) || !std::isfinite(support[k]) || support[k] < min_support)
      throw std::invalid_argument("LatentDistribution: support point below the scale floor");
    if (!(weights[k] > 0.0)) throw std::invalid_argument("LatentDistribution: non-positive weight");
    if (k > 0 && !(support[k] > support[k - 1]))
      throw std::invalid_argument("LatentDistribution: support not strictly increasing");
    total += weights[k];
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw std::invalid_argument("LatentDistribution: weights do not sum to one");
}

ScaleBounds ScaleBounds::from_residuals(std::span<const double> residuals,
                                        std::span<const std::uint8_t> deltas,
                                        double lower_rel, double upper_rel) {
  if (!(lower_rel > 0.0) || !(upper_rel > lower_rel))
    throw std::invalid_argument("ScaleBounds: need 0 < lower_rel < upper_rel");
  std::vector<double> events;
  for (std::size_t i = 0; i < residuals.size(); ++i)
    if (deltas[i]) events.push_back(residuals[i]);
  if (events.size() < 2) events.assign(residuals.begin(), residuals.end());
  double s = sample_sd(events);
  if (!(s > 1e-12)) {
    // Degenerate spread (e.g. identical residuals): fall back to the RMS.
    double ss = 0.0;
    for (double r : events) ss += r * r;
    s = events.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(events.size()));
    if (!(s > 1e-12)) s = 1.0;
  }
  return {lower_rel * s, upper_rel * s, s};
}

double component_log_entry(double residual, bool event, double sigma, double slant) {
  const double z = residual / sigma;
  return event ? sn_std_logpdf(z, slant) - std::log(sigma) : sn_std_log_survival(z, slant);
}

CensoredComponentMatrix component_matrix(std::span<const double> residuals,
                                         std::span<const std::uint8_t> deltas, double slant,
                                         std::span<const double> support) {
  if (residuals.size() != deltas.size())
    throw std::invalid_argument("component_matrix: residuals and deltas differ in length");
  if (support.empty()) throw std::invalid_argument("component_matrix: empty support");
  for (double s : support)
    if (!(s > 0.0)) throw std::invalid_argument("component_matrix: support must be positive");
  const auto n = static_cast<Eigen::Index>(residuals.size());
  const auto k = static_cast<Eigen::Index>(support.size());
  CensoredComponentMatrix m{Eigen::MatrixXd(n, k)};
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      m.log_entries(i, j) = component_log_entry(residuals[static_cast<std::size_t>(i)],
                                                deltas[static_cast<std::size_t>(i)] != 0,
                                                support[static_cast<std::size_t>(j)], slant);
  return m;
}

Eigen::VectorXd mixture_log_density(const CensoredComponentMatrix& matrix,
                                    std::span<const double> weights) {
  check_weights(matrix, weights);
  const auto lw = log_of(weights);
  Eigen::VectorXd out(matrix.rows());
  for (Eigen::Index i = 0; i < matrix.rows(); ++i)
    out(i) = std::max(log_sum_exp_row(matrix.log_entries, i, lw), std::log(kSurvivalFloor));
  return out;
}

double mixture_loglik(const CensoredComponentMatrix& matrix, std::span<const double> weights) {
  return mixture_log_density(matrix, weights).sum();
}

DirectionalDerivative::DirectionalDerivative(std::span<const double> residuals,
                                             std::span<const std::uint8_t> deltas, double slant,
                                             Eigen::VectorXd log_mixture)
    : residuals_(residuals), deltas_(deltas), slant_(slant), log_mixture_(std::move(log_mixture)) {}

double DirectionalDerivative::operator()(double sigma) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < residuals_.size(); ++i)
    acc += std::exp(component_log_entry(residuals_[i], deltas_[i] != 0, sigma, slant_) -
                    log_mixture_(static_cast<Eigen::Index>(i)));
  return acc - static_cast<double>(residuals_.size());
}

double directional_derivative(double sigma_star, const CensoredComponentMatrix& matrix,
                              std::span<const double> weights, std::span<const double> residuals,
                              std::span<const std::uint8_t> deltas, double slant,
                              double min_scale) {
  if (!(sigma_star > 0.0) || sigma_star < min_scale)
    throw std::domain_error("directional_derivative: scale below the admissible floor");
  if (static_cast<Eigen::Index>(residuals.size()) != matrix.rows())
    throw std::invalid_argument("directional_derivative: residuals do not match the matrix");
  return DirectionalDerivative(residuals, deltas, slant, mixture_log_density(matrix, weights))(
      sigma_star);
}

std::vector<double> nnls_weight_update(const CensoredComponentMatrix& matrix,
                                       std::span<const double> current_weights) {
  check_weights(matrix, current_weights);
  const Eigen::Index n = matrix.rows();
  const Eigen::Index k = matrix.cols();
  if (k == 0) throw std::invalid_argument("nnls_weight_update: no support points");
  if (k == 1) return {1.0};

  const Eigen::VectorXd log_g = mixture_log_density(matrix, current_weights);
  const double base = log_g.sum();

  const double nd = static_cast<double>(n);
  Eigen::MatrixXd a(n + 1, k);
  Eigen::VectorXd b(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) = std::exp(matrix.log_entries(i, j) - log_g(i));
    b(i) = 2.0;
  }
  a.row(n).setConstant(nd);
  b(n) = nd;

  const NnlsResult sol = nnls(a, b);
  const double total = sol.x.sum();
  std::vector<double> current(current_weights.begin(), current_weights.end());

  // EM step from the current weights: w_j <- w_j * mean_i a_ij. Monotone and
  // immune to the conditioning of rows where one component dominates by many
  // orders of magnitude, which is where the NNLS step can stall.
  auto em_step = [&] {
    std::vector<double> w(current.size());
    for (Eigen::Index j = 0; j < k; ++j)
      w[static_cast<std::size_t>(j)] = current[static_cast<std::size_t>(j)] * a.col(j).head(n).mean();
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= sum;
    return w;
  };
  const double stall_gain = 1e-10 * nd;

  if (total > 0.0 && sol.x.allFinite()) {
    std::vector<double> target(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) target[static_cast<std::size_t>(j)] = sol.x(j) / total;
    std::vector<double> trial(target.size());
    double step = 1.0;
    for (int halving = 0; halving < 50; ++halving) {
      for (std::size_t j = 0; j < trial.size(); ++j)
        trial[j] = (1.0 - step) * current[j] + step * target[j];
      const double value = mixture_loglik(matrix, trial);
      if (value >= base) {
        if (value - base > stall_gain) return trial;
        break;
      }
      step *= 0.5;
    }
  }
  const std::vector<double> em = em_step();
  return mixture_loglik(matrix, em) >= base ? em : current;
}

namespace {

// Projected Newton on the simplex for a fixed support. Used when the NNLS and
// EM steps stop making progress but the support derivatives still exceed the
// tolerance, typically because two support points are nearly collinear.
std::vector<double> newton_polish(const CensoredComponentMatrix& matrix, std::vector<double> w,
                                  double tol) {
  const Eigen::Index n = matrix.rows();
  const Eigen::Index k = matrix.cols();
  double value = mixture_loglik(matrix, w);
  for (int iter = 0; iter < 30; ++iter) {
    const Eigen::VectorXd log_g = mixture_log_density(matrix, w);
    const Eigen::MatrixXd a =
        (matrix.log_entries.colwise() - log_g).array().exp().matrix();
    const Eigen::VectorXd d = a.colwise().sum().transpose().array() - static_cast<double>(n);

    std::vector<Eigen::Index> free;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (w[ju] > 0.0 || d(j) > 0.0) {
        free.push_back(j);
        worst = std::max(worst, std::abs(d(j)));
      }
    }
    if (worst <= tol || free.size() < 2) break;

    const auto f = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(f + 1, f + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(f + 1);
    for (Eigen::Index r = 0; r < f; ++r) {
      for (Eigen::Index c = 0; c < f; ++c) kkt(r, c) = a.col(free[r]).dot(a.col(free[c]));
      kkt(r, f) = kkt(f, r) = 1.0;
      rhs(r) = d(free[r]);
    }
    const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    if (!sol.allFinite()) break;

    double step = 1.0;
    for (Eigen::Index r = 0; r < f; ++r) {
      const double dir = sol(r);
      const double wr = w[static_cast<std::size_t>(free[r])];
      if (dir < 0.0) step = std::min(step, -wr / dir);
    }
    bool improved = false;
    std::vector<double> trial = w;
    for (int halving = 0; halving < 40 && step > 0.0; ++halving) {
      trial = w;
      for (Eigen::Index r = 0; r < f; ++r) {
        auto& x = trial[static_cast<std::size_t>(free[r])];
        x = std::max(0.0, x + step * sol(r));
      }
      const double sum = std::accumulate(trial.begin(), trial.end(), 0.0);
      for (auto& x : trial) x /= sum;
      const double v = mixture_loglik(matrix, trial);
      if (v > value) {
        value = v;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    w = std::move(trial);
  }
  return w;
}

// Tries to replace one pair of adjacent support points within merge_ratio of
// each other by a single point at its best location. CNM never moves
// support points, so a pair straddling the optimum can stay split while
// both points satisfy the certificate. Returns true and updates q if a
// merge raised the log-likelihood.
bool try_merge(std::span<const double> residuals, std::span<const std::uint8_t> deltas, double slant,
               LatentDistribution& q, double& loglik, double tol, double merge_tol) {
  constexpr double merge_ratio = 1.1;
  for (std::size_t k = 0; k + 1 < q.size(); ++k) {
    if (q.support[k + 1] > merge_ratio * q.support[k]) continue;
    LatentDistribution trial;
    for (std::size_t j = 0; j < q.size(); ++j) {
      if (j == k + 1) continue;
      trial.support.push_back(q.support[j]);
      trial.weights.push_back(j == k ? q.weights[k] + q.weights[k + 1] : q.weights[j]);
    }
    auto value_at = [&](double sigma) {
      trial.support[k] = sigma;
      return mixture_loglik(component_matrix(residuals, deltas, slant, trial.support), trial.weights);
    };
    trial.support[k] = golden_max(value_at, q.support[k], q.support[k + 1], 1e-8).first;
    CensoredComponentMatrix m = component_matrix(residuals, deltas, slant, trial.support);
    trial.weights = nnls_weight_update(m, trial.weights);
    trial.weights = newton_polish(m, trial.weights, tol);
    trial = tidy(std::move(trial), merge_tol);
    const double value =
        mixture_loglik(component_matrix(residuals, deltas, slant, trial.support), trial.weights);
    if (value > loglik) {
      q = std::move(trial);
      loglik = value;
      return true;
    }
  }
  return false;
}

}  // namespace

LatentDistribution default_initial_distribution(const ScaleBounds& bounds) {
  return {{0.5 * bounds.reference, 1.5 * bounds.reference}, {0.5, 0.5}};
}

std::vector<double> geometric_grid(const ScaleBounds& bounds, int points) {
  if (points < 2) throw std::invalid_argument("geometric_grid: need at least two points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double llo = std::log(bounds.lower);
  const double lhi = std::log(bounds.upper);
  for (int j = 0; j < points; ++j)
    grid[static_cast<std::size_t>(j)] = std::exp(llo + (lhi - llo) * j / (points - 1));
  grid.front() = bounds.lower;
  grid.back() = bounds.upper;
  return grid;
}

CnmResult cnm_fit(std::span<const double> residuals, std::span<const std::uint8_t> deltas,
                  double slant, const LatentDistribution& initial_q, const CnmOptions& opts) {
  if (residuals.size() != deltas.size())
    throw std::invalid_argument("cnm_fit: residuals and deltas differ in length");
  if (residuals.size() < 2) throw std::invalid_argument("cnm_fit: need at least two observations");
  if (std::none_of(deltas.begin(), deltas.end(), [](auto d) { return d != 0; }))
    throw std::invalid_argument("cnm_fit: no observed events");

  const double n = static_cast<double>(residuals.size());
  CnmResult out;
  out.bounds = opts.bounds ? *opts.bounds : ScaleBounds::from_residuals(residuals, deltas, opts.lower_rel, opts.upper_rel);
  const double grad_tol = opts.grad_tol > 0.0 ? opts.grad_tol : 1e-6 * n;
  const double merge_tol = opts.merge_rel_tol * out.bounds.reference;
  const auto grid = geometric_grid(out.bounds, opts.grid_points);

  LatentDistribution q = initial_q;
  for (auto& s : q.support) s = std::clamp(s, out.bounds.lower, out.bounds.upper);
  q = tidy(std::move(q), merge_tol);
  if (q.size() == 0) q = default_initial_distribution(out.bounds);

  CensoredComponentMatrix m = component_matrix(residuals, deltas, slant, q.support);
  double loglik = mixture_loglik(m, q.weights);
  out.loglik_trace.push_back(loglik);

  // Grid components do not change within a call: store exp(log entry - row
  // max) once so each scan is a matrix-vector product.
  const CensoredComponentMatrix grid_m = component_matrix(residuals, deltas, slant, grid);
  const Eigen::VectorXd grid_rowmax = grid_m.log_entries.rowwise().maxCoeff();
  const Eigen::MatrixXd grid_scaled =
      (grid_m.log_entries.colwise() - grid_rowmax).array().exp().matrix();

  std::vector<double> values(grid.size());
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    out.iterations = iter;
    Eigen::VectorXd log_mix = mixture_log_density(m, q.weights);
    const Eigen::VectorXd row_w = (grid_rowmax - log_mix).array().exp().matrix();
    const DirectionalDerivative deriv(residuals, deltas, slant, std::move(log_mix));

    // Step 1: local maximizers of D_Q over the grid, refined.
    const Eigen::VectorXd scan = grid_scaled.transpose() * row_w;
    for (std::size_t j = 0; j < grid.size(); ++j)
      values[j] = scan(static_cast<Eigen::Index>(j)) - n;
    std::vector<std::pair<double, double>> maxima;
    const std::size_t last = grid.size() - 1;
    if (values[0] > values[1]) maxima.emplace_back(grid[0], values[0]);
    for (std::size_t j = 1; j < last; ++j) {
      if (values[j] >= values[j - 1] && values[j] > values[j + 1])
        maxima.push_back(golden_max(deriv, grid[j - 1], grid[j + 1], opts.refine_rel_tol));
    }
    if (values[last] > values[last - 1]) maxima.emplace_back(grid[last], values[last]);

    double max_d = *std::max_element(values.begin(), values.end());
    for (const auto& [s, d] : maxima) max_d = std::max(max_d, d);
    double max_support = 0.0;
    for (double s : q.support) max_support = std::max(max_support, std::abs(deriv(s)));
    out.max_derivative = max_d;
    out.max_abs_support_derivative = max_support;
    if (max_d <= grad_tol && max_support <= grad_tol) {
      if (try_merge(residuals, deltas, slant, q, loglik, 0.1 * grad_tol, merge_tol)) {
        m = component_matrix(residuals, deltas, slant, q.support);
        out.loglik_trace.push_back(loglik);
        continue;
      }
      out.converged = true;
      break;
    }

    LatentDistribution extended = q;
    for (const auto& [s, d] : maxima) {
      if (d > 0.0) {
        extended.support.push_back(s);
        extended.weights.push_back(0.0);
      }
    }
    // Step 2: NNLS weights on the extended support.
    const CensoredComponentMatrix mext =
        component_matrix(residuals, deltas, slant, extended.support);
    extended.weights = nnls_weight_update(mext, extended.weights);

    // Step 3: drop zero-weight points, merge near-duplicates.
    LatentDistribution next = tidy(std::move(extended), merge_tol);
    CensoredComponentMatrix mnext = component_matrix(residuals, deltas, slant, next.support);
    double next_loglik = mixture_loglik(mnext, next.weights);
    bool stalled = next_loglik - loglik <= 1e-13 * n && next.support == q.support;
    if (stalled) {
      next.weights = newton_polish(mnext, next.weights, 0.1 * grad_tol);
      next = tidy(std::move(next), merge_tol);
      mnext = component_matrix(residuals, deltas, slant, next.support);
      const double polished = mixture_loglik(mnext, next.weights);
      stalled = polished <= next_loglik;
      next_loglik = std::max(next_loglik, polished);
    }
    q = std::move(next);
    m = std::move(mnext);
    loglik = next_loglik;
    out.loglik_trace.push_back(next_loglik);
    out.iterations = iter + 1;
    if (stalled) break;
  }
  out.q = std::move(q);
  out.loglik = mixture_loglik(m, out.q.weights);
  return out;
}

}  // namespace ssnsm
