#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ssnsm {

/// Discrete latent distribution Q over skew-normal scales: support points
/// sigma_1 < ... < sigma_K with positive weights summing to one.
struct LatentDistribution {
  std::vector<double> support;
  std::vector<double> weights;

  static LatentDistribution point_mass(double sigma);

  std::size_t size() const { return support.size(); }
  /// int sigma dQ(sigma).
  double mean_scale() const;
  /// Throws std::invalid_argument when an invariant fails.
  void validate(double min_support = 0.0) const;
};

/// Scale search interval [lower, upper] for the NPMLE, both proportional to
/// a reference spread of the residuals.
struct ScaleBounds {
  double lower = 0.0;
  double upper = 0.0;
  double reference = 0.0;

  /// lower = lower_rel * s, upper = upper_rel * s, with s the SD of the
  /// uncensored residuals.
  static ScaleBounds from_residuals(std::span<const double> residuals,
                                    std::span<const std::uint8_t> deltas,
                                    double lower_rel = 0.05, double upper_rel = 10.0);
};

/// log of f(e_i; sigma_k)^delta_i S(e_i; sigma_k)^(1 - delta_i) for every
/// observation i and support point k. Entries are kept on the log scale so
/// rows whose components all underflow still compare correctly.
struct CensoredComponentMatrix {
  Eigen::MatrixXd log_entries;

  Eigen::Index rows() const { return log_entries.rows(); }
  Eigen::Index cols() const { return log_entries.cols(); }
  Eigen::MatrixXd entries() const { return log_entries.array().exp().matrix(); }
};

/// log f(e; 0, sigma, slant) for events, log S(e; 0, sigma, slant) otherwise.
double component_log_entry(double residual, bool event, double sigma, double slant);

CensoredComponentMatrix component_matrix(std::span<const double> residuals,
                                         std::span<const std::uint8_t> deltas, double slant,
                                         std::span<const double> support);

/// log sum_k alpha_k entries[i][k] per row.
Eigen::VectorXd mixture_log_density(const CensoredComponentMatrix& matrix,
                                    std::span<const double> weights);

/// sum_i log sum_k alpha_k entries[i][k].
double mixture_loglik(const CensoredComponentMatrix& matrix, std::span<const double> weights);

/// Gateaux derivative of the mixture log-likelihood from Q toward a point
/// mass at sigma_star. Throws std::domain_error when sigma_star < min_scale.
double directional_derivative(double sigma_star, const CensoredComponentMatrix& matrix,
                              std::span<const double> weights, std::span<const double> residuals,
                              std::span<const std::uint8_t> deltas, double slant,
                              double min_scale = 0.0);

/// D_Q(sigma) evaluator that caches the current mixture densities.
class DirectionalDerivative {
 public:
  DirectionalDerivative(std::span<const double> residuals, std::span<const std::uint8_t> deltas,
                        double slant, Eigen::VectorXd log_mixture);
  double operator()(double sigma) const;

 private:
  std::span<const double> residuals_;
  std::span<const std::uint8_t> deltas_;
  double slant_;
  Eigen::VectorXd log_mixture_;
};

/// One CNM weight step: solve the stacked NNLS system
/// [J; n 1^T] alpha ~ [2; n], renormalize, then backtrack toward the current
/// weights until the log-likelihood does not decrease.
std::vector<double> nnls_weight_update(const CensoredComponentMatrix& matrix,
                                       std::span<const double> current_weights);

struct CnmOptions {
  int grid_points = 200;
  /// Directional-derivative tolerance; non-positive means 1e-6 * n.
  double grad_tol = 0.0;
  int max_iterations = 500;
  double refine_rel_tol = 1e-6;
  /// Points closer than merge_rel_tol * bounds.reference are merged.
  double merge_rel_tol = 1e-4;
  /// Bounds relative to the residual SD, used when `bounds` is unset.
  double lower_rel = 0.05;
  double upper_rel = 10.0;
  std::optional<ScaleBounds> bounds;
};

struct CnmResult {
  LatentDistribution q;
  ScaleBounds bounds;
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;
  double max_derivative = 0.0;
  double max_abs_support_derivative = 0.0;
  std::vector<double> loglik_trace;
};

/// Two-point start {0.5 s, 1.5 s} with equal weights.
LatentDistribution default_initial_distribution(const ScaleBounds& bounds);

/// Constrained Newton method for the NPMLE of Q with residuals and slant
/// held fixed.
CnmResult cnm_fit(std::span<const double> residuals, std::span<const std::uint8_t> deltas,
                  double slant, const LatentDistribution& initial_q, const CnmOptions& opts = {});

/// Geometric grid of `points` scales spanning the bounds.
std::vector<double> geometric_grid(const ScaleBounds& bounds, int points);

}  // namespace ssnsm
