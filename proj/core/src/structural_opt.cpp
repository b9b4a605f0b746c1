#include "ssnsm/structural_opt.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "ssnsm/distributions.hpp"

namespace ssnsm {

Eigen::VectorXd StructuralParams::to_vector() const {
  Eigen::VectorXd v(dim());
  v(0) = b0;
  v.segment(1, beta.size()) = beta;
  v(dim() - 1) = slant;
  return v;
}

StructuralParams StructuralParams::from_vector(const Eigen::VectorXd& v) {
  if (v.size() < 2) throw std::invalid_argument("StructuralParams: vector too short");
  return {v(0), v.segment(1, v.size() - 2), v(v.size() - 1)};
}

bool StructuralParams::finite() const {
  return std::isfinite(b0) && std::isfinite(slant) && beta.allFinite();
}

Eigen::VectorXd structural_residuals(const StructuralParams& theta, const SurvivalDataset& data) {
  if (theta.beta.size() != data.num_covariates())
    throw std::invalid_argument("structural_residuals: slope dimension mismatch");
  return (data.log_times() - data.covariates * theta.beta).array() - theta.b0;
}

double profile_negloglik(const StructuralParams& theta, const LatentDistribution& q,
                         const SurvivalDataset& data) {
  const Eigen::VectorXd e = structural_residuals(theta, data);
  const std::size_t k = q.size();
  std::vector<double> log_w(k);
  std::vector<double> log_sigma(k);
  for (std::size_t j = 0; j < k; ++j) {
    log_w[j] = std::log(q.weights[j]);
    log_sigma[j] = std::log(q.support[j]);
  }
  const double floor = std::log(kSurvivalFloor);
  std::vector<double> terms(k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const bool event = data.deltas[static_cast<std::size_t>(i)] != 0;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const double z = e(i) / q.support[j];
      const double le = event ? sn_std_logpdf(z, theta.slant) - log_sigma[j]
                              : sn_std_log_survival(z, theta.slant);
      terms[j] = log_w[j] + le;
      mx = std::max(mx, terms[j]);
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += std::exp(terms[j] - mx);
    total += std::max(mx + std::log(acc), floor);
  }
  return -total;
}

Eigen::VectorXd profile_gradient(const StructuralParams& theta, const LatentDistribution& q,
                                 const SurvivalDataset& data) {
  auto f = [&](const Eigen::VectorXd& v) {
    return profile_negloglik(StructuralParams::from_vector(v), q, data);
  };
  return central_difference_gradient(f, theta.to_vector());
}

double profile_negloglik_gradient(const StructuralParams& theta, const LatentDistribution& q,
                                  const SurvivalDataset& data, Eigen::VectorXd& gradient) {
  const Eigen::VectorXd e = structural_residuals(theta, data);
  const std::size_t k = q.size();
  const double lambda = theta.slant;
  const double log_floor = std::log(kSurvivalFloor);
  const double inv_pi_norm = 1.0 / (std::numbers::pi * (1.0 + lambda * lambda));
  std::vector<double> log_w(k), log_sigma(k), terms(k), d_e(k), d_lambda(k);
  for (std::size_t j = 0; j < k; ++j) {
    log_w[j] = std::log(q.weights[j]);
    log_sigma[j] = std::log(q.support[j]);
  }
  double total = 0.0;
  double g_e_sum = 0.0;
  Eigen::VectorXd g_beta = Eigen::VectorXd::Zero(theta.beta.size());
  double g_lambda = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const bool event = data.deltas[static_cast<std::size_t>(i)] != 0;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const double sigma = q.support[j];
      const double z = e(i) / sigma;
      double le;
      if (event) {
        const double log_cdf = norm_log_cdf(lambda * z);
        le = std::numbers::ln2 + norm_log_pdf(z) - log_sigma[j] + log_cdf;
        // Inverse Mills ratio phi(lz)/Phi(lz).
        const double mills = std::exp(norm_log_pdf(lambda * z) - log_cdf);
        d_e[j] = (-z + lambda * mills) / sigma;
        d_lambda[j] = z * mills;
      } else {
        le = sn_std_log_survival(z, lambda);
        if (le <= log_floor) {
          d_e[j] = 0.0;
          d_lambda[j] = 0.0;
        } else {
          const double log_dens = std::numbers::ln2 + norm_log_pdf(z) + norm_log_cdf(lambda * z);
          d_e[j] = -std::exp(log_dens - le) / sigma;
          // dS/dlambda = exp(-z^2 (1 + lambda^2) / 2) / (pi (1 + lambda^2)).
          d_lambda[j] = std::exp(-0.5 * z * z * (1.0 + lambda * lambda) - le) * inv_pi_norm;
        }
      }
      terms[j] = log_w[j] + le;
      mx = std::max(mx, terms[j]);
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += std::exp(terms[j] - mx);
    const double li = mx + std::log(acc);
    if (li <= log_floor) {
      total += log_floor;
      continue;
    }
    total += li;
    double de = 0.0;
    double dl = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double r = std::exp(terms[j] - li);
      de += r * d_e[j];
      dl += r * d_lambda[j];
    }
    // e = log y - b0 - x'beta.
    g_e_sum += de;
    g_beta.noalias() += de * data.covariates.row(i).transpose();
    g_lambda += dl;
  }
  gradient.resize(theta.dim());
  gradient(0) = g_e_sum;
  gradient.segment(1, theta.beta.size()) = g_beta;
  gradient(theta.dim() - 1) = -g_lambda;
  return -total;
}

StructuralFit bfgs_minimize(const StructuralParams& initial, const LatentDistribution& q,
                            const SurvivalDataset& data, const StructuralOptions& opts) {
  if (!initial.finite()) throw std::invalid_argument("bfgs_minimize: non-finite initial theta");
  const Eigen::Index slant_index = initial.dim() - 1;
  auto restricted = [slant_index](const Eigen::VectorXd& v) {
    StructuralParams t = StructuralParams::from_vector(v);
    t.slant = clamp_slant(v(slant_index));
    return t;
  };
  auto f = [&](const Eigen::VectorXd& v) { return profile_negloglik(restricted(v), q, data); };
  auto g = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    if (!opts.analytic_gradient) return central_difference_gradient(f, v);
    Eigen::VectorXd out;
    profile_negloglik_gradient(restricted(v), q, data, out);
    if (std::abs(v(slant_index)) >= kMaxAbsSlant) out(slant_index) = 0.0;
    return out;
  };
  StructuralParams start = initial;
  start.slant = clamp_slant(start.slant);
  BfgsOptions bo;
  bo.grad_tol = opts.grad_tol > 0.0 ? opts.grad_tol : 1e-6 * static_cast<double>(data.size());
  bo.f_rel_tol = opts.f_rel_tol;
  bo.max_iterations = opts.max_iterations;
  BfgsResult r = bfgs_minimize(f, g, start.to_vector(), bo);

  StructuralFit out;
  out.theta = restricted(r.x);
  out.negloglik = r.value;
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.diagnostic = std::move(r.diagnostic);
  out.trace = std::move(r.trace);
  out.hessian_approx = std::move(r.hessian_approx);
  return out;
}

}  // namespace ssnsm
