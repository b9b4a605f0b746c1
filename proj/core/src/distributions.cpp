#include "ssnsm/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "ssnsm/quadrature.hpp"

namespace ssnsm {
namespace {

constexpr double kLogTwo = std::numbers::ln2;
constexpr double kLogSqrtTwoPi = 0.918938533204672741780329736406;
constexpr double kInvSqrtTwo = 0.707106781186547524400844362105;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Below this argument log Phi switches from erfc to the asymptotic series.
constexpr double kLogCdfAsymptoticBelow = -30.0;

// Integral part of T(h, a) for 0 < a <= 1, h >= 0. Beyond x = 9/h the
// integrand is below exp(-40) of its value at 0, so the range is cut there
// and a fixed 20-point Gauss-Legendre rule is accurate to ~1e-13 relative.
double owen_t_unit(double h, double a) {
  const double half_h2 = 0.5 * h * h;
  if (half_h2 > 745.0) return 0.0;
  using Rule = boost::math::quadrature::gauss<double, 20>;
  static const auto& nodes = Rule::abscissa();
  static const auto& weights = Rule::weights();
  const double hi = h * a > 9.0 ? 9.0 / h : a;
  const double c = 0.5 * hi;
  auto f = [half_h2](double x) {
    const double q = 1.0 + x * x;
    return std::exp(-half_h2 * q) / q;
  };
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double d = c * nodes[i];
    sum += weights[i] * (f(c + d) + f(c - d));
  }
  return sum * c / kTwoPi;
}

// log S for slant -a < 0 and z > 0 by direct integration of the density:
// S = 2 int_z^inf phi(t) Q(a t) dt, with phi(z) Q(a z) factored out.
double log_survival_negative_slant_tail(double z, double a) {
  const double log_q_az = norm_log_sf(a * z);
  const double mills = std::exp(norm_log_pdf(a * z) - log_q_az);
  const double scale = 1.0 / (z + a * mills);
  auto integrand = [z, a, log_q_az](double u) {
    return std::exp(-z * u - 0.5 * u * u + norm_log_sf(a * (z + u)) - log_q_az);
  };
  const auto r = integrate_gk15_upper(integrand, 0.0, scale, 1e-300, 1e-12);
  if (!(r.value > 0.0)) return -std::numeric_limits<double>::infinity();
  return kLogTwo + norm_log_pdf(z) + log_q_az + std::log(r.value);
}

// Unfloored log S(z; slant) for the standardized skew-normal.
double raw_log_survival(double z, double slant) {
  if (slant == 0.0) return norm_log_sf(z);
  if (slant > 0.0) {
    const double s = norm_sf(z) + 2.0 * owen_t(z, slant);
    return std::log(std::min(s, 1.0));
  }
  const double a = -slant;
  if (z <= 0.0) {
    const double s = norm_sf(z) - 2.0 * owen_t(z, a);
    return std::log(std::clamp(s, 0.0, 1.0));
  }
  // Right tail under negative slant: the Owen-T form cancels, so fall back
  // to direct integration once the surviving mass is small next to the
  // terms being subtracted.
  double s = 0.0;
  double guard = 0.0;
  if (a > 1.0) {
    const double qz = norm_sf(z);
    const double qaz = norm_sf(a * z);
    s = 2.0 * owen_t_unit(a * z, 1.0 / a) - qaz * (1.0 - 2.0 * qz);
    guard = qaz;
  } else {
    const double qz = norm_sf(z);
    s = qz - 2.0 * owen_t_unit(z, a);
    guard = qz;
  }
  if (s > 1e-4 * guard && s > kSurvivalFloor) return std::log(s);
  return log_survival_negative_slant_tail(z, a);
}

}  // namespace

void SkewNormalParams::validate() const {
  if (!std::isfinite(location) || !std::isfinite(slant))
    throw std::invalid_argument("skew-normal location and slant must be finite");
  if (!std::isfinite(scale) || !(scale > 0.0))
    throw std::invalid_argument("skew-normal scale must be positive and finite");
}

double norm_pdf(double z) { return std::exp(norm_log_pdf(z)); }

double norm_log_pdf(double z) { return -0.5 * z * z - kLogSqrtTwoPi; }

double norm_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrtTwo); }

double norm_sf(double z) { return 0.5 * std::erfc(z * kInvSqrtTwo); }

double norm_log_cdf(double z) {
  if (z > 5.0) return std::log1p(-norm_sf(z));
  if (z > kLogCdfAsymptoticBelow) return std::log(norm_cdf(z));
  const double r = 1.0 / (z * z);
  const double series = 1.0 - r * (1.0 - r * (3.0 - r * (15.0 - 105.0 * r)));
  return norm_log_pdf(z) - std::log(-z) + std::log(series);
}

double norm_log_sf(double z) { return norm_log_cdf(-z); }

double owen_t(double h, double a) {
  if (!std::isfinite(h) || !std::isfinite(a)) throw std::domain_error("owen_t: non-finite input");
  if (a == 0.0) return 0.0;
  if (a < 0.0) return -owen_t(h, -a);
  h = std::abs(h);
  if (a <= 1.0) return owen_t_unit(h, a);
  // T(h, a) = Q(h)/2 + Q(ah)/2 - Q(h) Q(ah) - T(ah, 1/a) for h >= 0, a > 0.
  const double qh = norm_sf(h);
  const double qah = norm_sf(a * h);
  return 0.5 * qh + 0.5 * qah - qh * qah - owen_t_unit(a * h, 1.0 / a);
}

double sn_std_logpdf(double z, double slant) {
  return kLogTwo + norm_log_pdf(z) + norm_log_cdf(slant * z);
}

double sn_std_log_survival(double z, double slant) {
  return std::max(raw_log_survival(z, slant), std::log(kSurvivalFloor));
}

double sn_logpdf(double e, const SkewNormalParams& p) {
  p.validate();
  if (!std::isfinite(e)) throw std::domain_error("sn_logpdf: non-finite argument");
  return sn_std_logpdf((e - p.location) / p.scale, p.slant) - std::log(p.scale);
}

double sn_pdf(double e, const SkewNormalParams& p) { return std::exp(sn_logpdf(e, p)); }

double sn_log_survival(double e, const SkewNormalParams& p) {
  p.validate();
  if (std::isnan(e)) throw std::domain_error("sn_log_survival: NaN argument");
  if (e == -std::numeric_limits<double>::infinity()) return 0.0;
  if (e == std::numeric_limits<double>::infinity()) return std::log(kSurvivalFloor);
  return sn_std_log_survival((e - p.location) / p.scale, p.slant);
}

double sn_survival(double e, const SkewNormalParams& p) {
  p.validate();
  if (std::isnan(e)) throw std::domain_error("sn_survival: NaN argument");
  if (e == -std::numeric_limits<double>::infinity()) return 1.0;
  if (e == std::numeric_limits<double>::infinity()) return 0.0;
  const double z = (e - p.location) / p.scale;
  return std::clamp(std::exp(raw_log_survival(z, p.slant)), 0.0, 1.0);
}

double sn_mean_shift(double slant) {
  if (!std::isfinite(slant)) {
    if (std::isnan(slant)) throw std::domain_error("sn_mean_shift: NaN slant");
    return std::copysign(std::sqrt(2.0 / std::numbers::pi), slant);
  }
  return std::sqrt(2.0 / std::numbers::pi) * slant / std::sqrt(1.0 + slant * slant);
}

}  // namespace ssnsm
