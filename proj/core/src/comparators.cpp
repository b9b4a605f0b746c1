#include "ssnsm/comparators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ssnsm/bfgs.hpp"
#include "ssnsm/distributions.hpp"
#include "ssnsm/kaplan_meier.hpp"
#include "ssnsm/npmle.hpp"
#include "ssnsm/structural_opt.hpp"

namespace ssnsm {
namespace {

Eigen::MatrixXd design_with_intercept(const SurvivalDataset& data) {
  Eigen::MatrixXd z(data.covariates.rows(), data.covariates.cols() + 1);
  z.col(0).setOnes();
  z.rightCols(data.covariates.cols()) = data.covariates;
  return z;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double km_intercept(const SurvivalDataset& data, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd e = data.log_times() - data.covariates * beta;
  const auto r = to_std(e);
  return km_residual_distribution(r, data.deltas).mean();
}

}  // namespace

Eigen::VectorXd EstimatorResult::coefficients() const {
  Eigen::VectorXd c(beta.size() + 1);
  c(0) = beta0;
  c.tail(beta.size()) = beta;
  return c;
}

Eigen::VectorXd ols_log_time(const SurvivalDataset& data) {
  const Eigen::MatrixXd z = design_with_intercept(data);
  return z.colPivHouseholderQr().solve(data.log_times());
}

double normal_loglik(const SurvivalDataset& data, double beta0, const Eigen::VectorXd& beta,
                     double sigma) {
  const Eigen::VectorXd e = (data.log_times() - data.covariates * beta).array() - beta0;
  const double log_sigma = std::log(sigma);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const double z = e(i) / sigma;
    ll += data.deltas[static_cast<std::size_t>(i)] ? norm_log_pdf(z) - log_sigma : norm_log_sf(z);
  }
  return ll;
}

EstimatorResult fit_normal_mle(const SurvivalDataset& data) {
  data.validate();
  const Eigen::Index p = data.num_covariates();
  const Eigen::MatrixXd z = design_with_intercept(data);
  const Eigen::VectorXd& ly = data.log_times();

  // Parameters: [beta0, beta..., log sigma].
  auto negll = [&](const Eigen::VectorXd& v) {
    return -normal_loglik(data, v(0), v.segment(1, p), std::exp(v(p + 1)));
  };
  auto grad = [&](const Eigen::VectorXd& v) {
    const double sigma = std::exp(v(p + 1));
    const Eigen::VectorXd e = ly - z * v.head(p + 1);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p + 2);
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      const double zi = e(i) / sigma;
      double d_mu = 0.0;
      double d_ls = 0.0;
      if (data.deltas[static_cast<std::size_t>(i)]) {
        d_mu = zi / sigma;
        d_ls = zi * zi - 1.0;
      } else {
        const double mills = std::exp(norm_log_pdf(zi) - norm_log_sf(zi));
        d_mu = mills / sigma;
        d_ls = mills * zi;
      }
      g.head(p + 1) -= d_mu * z.row(i).transpose();
      g(p + 1) -= d_ls;
    }
    return g;
  };

  const Eigen::VectorXd start_coef = ols_log_time(data);
  const double rss = (ly - z * start_coef).squaredNorm();
  Eigen::VectorXd v0(p + 2);
  v0.head(p + 1) = start_coef;
  v0(p + 1) = 0.5 * std::log(std::max(rss / static_cast<double>(data.size()), 1e-12));

  BfgsOptions opts;
  opts.grad_tol = 1e-9 * static_cast<double>(data.size());
  opts.f_rel_tol = 1e-15;
  const BfgsResult r = bfgs_minimize(negll, grad, v0, opts);

  EstimatorResult out;
  out.beta0 = r.x(0);
  out.beta = r.x.segment(1, p);
  out.extra["sigma"] = std::exp(r.x(p + 1));
  out.extra["loglik"] = -r.value;
  out.extra["iterations"] = r.iterations;
  out.converged = r.converged && r.x.allFinite();
  return out;
}

EstimatorResult fit_sn_mle(const SurvivalDataset& raw) {
  raw.validate();
  // Fit on median-centered log times; the slant ridge is flat enough that
  // where BFGS stops otherwise depends on the time origin.
  const double center = raw.median_log_time();
  const SurvivalDataset data = raw.with_log_time_shift(-center);
  const Eigen::Index p = data.num_covariates();
  const EstimatorResult normal = fit_normal_mle(data);
  const double sigma_n = normal.extra.at("sigma");

  // Parameters: [b0, beta..., slant, log sigma].
  auto negll = [&](const Eigen::VectorXd& v) {
    const StructuralParams theta{v(0), v.segment(1, p), clamp_slant(v(p + 1))};
    return profile_negloglik(theta, LatentDistribution::point_mass(std::exp(v(p + 2))), data);
  };
  auto grad = [&](const Eigen::VectorXd& v) { return central_difference_gradient(negll, v); };

  BfgsOptions opts;
  opts.grad_tol = 1e-8 * static_cast<double>(data.size());

  BfgsResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (double slant0 : {0.0, -3.0, 3.0}) {
    // Match the normal fit's mean and variance at the starting slant.
    const double delta = slant0 / std::sqrt(1.0 + slant0 * slant0);
    const double sigma0 = sigma_n / std::sqrt(1.0 - 2.0 * delta * delta / M_PI);
    Eigen::VectorXd v0(p + 3);
    v0(0) = normal.beta0 - sn_mean_shift(slant0) * sigma0;
    v0.segment(1, p) = normal.beta;
    v0(p + 1) = slant0;
    v0(p + 2) = std::log(sigma0);
    BfgsResult r = bfgs_minimize(negll, grad, v0, opts);
    if (std::isfinite(r.value) && r.value < best.value) best = std::move(r);
  }

  EstimatorResult out;
  Eigen::VectorXd v = best.x;
  v(p + 1) = clamp_slant(v(p + 1));
  const double sigma = std::exp(v(p + 2));
  out.beta0 = center + v(0) + sn_mean_shift(v(p + 1)) * sigma;
  out.beta = v.segment(1, p);
  out.extra["b0"] = center + v(0);
  out.extra["slant"] = v(p + 1);
  out.extra["sigma"] = sigma;
  out.extra["loglik"] = -best.value;
  out.extra["iterations"] = best.iterations;
  out.converged = best.x.allFinite() && (best.converged || best.diagnostic.rfind("line search", 0) == 0);
  return out;
}

Eigen::VectorXd gehan_smoothed_score(const Eigen::VectorXd& beta, const SurvivalDataset& data) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index p = data.num_covariates();
  if (beta.size() != p) throw std::invalid_argument("gehan_smoothed_score: dimension mismatch");
  const Eigen::VectorXd e = data.log_times() - data.covariates * beta;
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd dx(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!data.deltas[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      dx = data.covariates.row(i) - data.covariates.row(j);
      const double q = dx.squaredNorm();
      if (q == 0.0) continue;
      u += dx * norm_cdf((e(j) - e(i)) / std::sqrt(q * inv_n));
    }
  }
  return u;
}

namespace {

// Smoothed Gehan score and its Jacobian dU/dbeta.
void gehan_score_and_jacobian(const Eigen::VectorXd& beta, const SurvivalDataset& data,
                              Eigen::VectorXd& u, Eigen::MatrixXd& jac) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index p = data.num_covariates();
  const Eigen::VectorXd e = data.log_times() - data.covariates * beta;
  const double inv_n = 1.0 / static_cast<double>(n);
  u = Eigen::VectorXd::Zero(p);
  jac = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd dx(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!data.deltas[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      dx = data.covariates.row(i) - data.covariates.row(j);
      const double q = dx.squaredNorm();
      if (q == 0.0) continue;
      const double r = std::sqrt(q * inv_n);
      const double arg = (e(j) - e(i)) / r;
      u += dx * norm_cdf(arg);
      jac.noalias() += (norm_pdf(arg) / r) * dx * dx.transpose();
    }
  }
}

}  // namespace

EstimatorResult fit_gehan_smoothed(const SurvivalDataset& data) {
  data.validate();
  const Eigen::Index p = data.num_covariates();
  if (p < 1) throw std::invalid_argument("fit_gehan_smoothed: need at least one covariate");
  const double n = static_cast<double>(data.size());
  const double tol = 1e-10 * n * n;

  Eigen::VectorXd beta = ols_log_time(data).tail(p);
  Eigen::VectorXd u;
  Eigen::MatrixXd jac;
  gehan_score_and_jacobian(beta, data, u, jac);
  bool converged = false;
  int iterations = 0;
  for (; iterations < 200; ++iterations) {
    if (u.lpNorm<Eigen::Infinity>() <= tol) {
      converged = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(jac);
    Eigen::VectorXd step;
    const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                          ldlt.rcond() < 1e-12;
    if (!singular) {
      step = -ldlt.solve(u);
    } else {
      // U is the gradient of a convex loss; fall back to steepest descent on it.
      step = -u / std::max(1.0, jac.diagonal().maxCoeff());
    }
    const double norm0 = u.norm();
    double scale = 1.0;
    bool improved = false;
    Eigen::VectorXd u_try;
    Eigen::MatrixXd jac_try;
    for (int h = 0; h < 40; ++h) {
      const Eigen::VectorXd trial = beta + scale * step;
      gehan_score_and_jacobian(trial, data, u_try, jac_try);
      if (u_try.norm() < norm0) {
        beta = trial;
        u = u_try;
        jac = jac_try;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      converged = u.lpNorm<Eigen::Infinity>() <= 1e-4 * n * n;
      break;
    }
    if ((scale * step).lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + beta.lpNorm<Eigen::Infinity>())) {
      converged = true;
      break;
    }
  }

  EstimatorResult out;
  out.beta = beta;
  out.beta0 = km_intercept(data, beta);
  out.extra["score_inf_norm"] = u.lpNorm<Eigen::Infinity>();
  out.extra["iterations"] = iterations;
  out.converged = converged && beta.allFinite();
  return out;
}

EstimatorResult fit_gee_bj(const SurvivalDataset& data) {
  data.validate();
  const Eigen::Index p = data.num_covariates();
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::VectorXd& ly = data.log_times();
  const Eigen::RowVectorXd xbar = data.covariates.colwise().mean();
  const Eigen::MatrixXd xc = data.covariates.rowwise() - xbar;
  const auto solver = (xc.transpose() * xc).ldlt();

  const EstimatorResult gehan = fit_gehan_smoothed(data);
  Eigen::VectorXd b = gehan.beta;

  auto impute = [&](const Eigen::VectorXd& coef) {
    const Eigen::VectorXd xb = data.covariates * coef;
    const Eigen::VectorXd e = ly - xb;
    const auto r = to_std(e);
    const ResidualDistribution dist = km_residual_distribution(r, data.deltas);
    Eigen::VectorXd y_hat(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      y_hat(i) = data.deltas[static_cast<std::size_t>(i)]
                     ? ly(i)
                     : xb(i) + dist.conditional_mean_above(e(i));
    }
    return y_hat;
  };

  std::vector<Eigen::VectorXd> history{b};
  bool converged = false;
  int cycle = 0;
  int iterations = 0;
  for (; iterations < 200; ++iterations) {
    const Eigen::VectorXd y_hat = impute(b);
    const Eigen::VectorXd rhs = xc.transpose() * (y_hat.array() - y_hat.mean()).matrix();
    const Eigen::VectorXd next = solver.solve(rhs);
    const double change = (next - b).lpNorm<Eigen::Infinity>();
    b = next;
    if (change < 1e-6) {
      converged = true;
      break;
    }
    // A return to an iterate 2-4 steps back is a limit cycle; average it.
    for (int len = 2; len <= 4 && cycle == 0; ++len) {
      if (static_cast<int>(history.size()) >= len &&
          (history[history.size() - static_cast<std::size_t>(len)] - b).lpNorm<Eigen::Infinity>() < 1e-6) {
        cycle = len;
      }
    }
    if (cycle > 0) {
      Eigen::VectorXd avg = Eigen::VectorXd::Zero(p);
      for (int k = 0; k < cycle; ++k) avg += history[history.size() - 1 - static_cast<std::size_t>(k)];
      b = avg / cycle;
      break;
    }
    history.push_back(b);
  }

  const Eigen::VectorXd y_hat = impute(b);
  EstimatorResult out;
  out.beta = b;
  out.beta0 = (y_hat - data.covariates * b).mean();
  out.extra["iterations"] = iterations;
  // A detected cycle ends the iteration with its average; cycle_length flags it.
  out.extra["cycle_length"] = cycle;
  out.converged = (converged || cycle > 0) && b.allFinite();
  return out;
}

}  // namespace ssnsm
