#pragma once

namespace ssnsm {

/// Azzalini skew-normal SN(location, scale, slant). Units of location and
/// scale are those of the residual (log time).
struct SkewNormalParams {
  double location = 0.0;
  double scale = 1.0;
  double slant = 0.0;

  /// Throws std::invalid_argument unless scale > 0 and everything is finite.
  void validate() const;
};

inline constexpr double kSurvivalFloor = 1e-300;

// Standard normal helpers. The tail functions keep relative accuracy far into
// the tails (erfc based).
double norm_pdf(double z);
double norm_log_pdf(double z);
double norm_cdf(double z);
double norm_sf(double z);
double norm_log_cdf(double z);
double norm_log_sf(double z);

/// Owen's T(h, a) = 1/(2 pi) * int_0^a exp(-h^2 (1 + x^2) / 2) / (1 + x^2) dx.
/// Throws std::domain_error for non-finite input.
double owen_t(double h, double a);

double sn_logpdf(double e, const SkewNormalParams& p);
double sn_pdf(double e, const SkewNormalParams& p);

/// log S(e) for the skew-normal, finite down to log(kSurvivalFloor).
double sn_log_survival(double e, const SkewNormalParams& p);

/// S(e) = 1 - Phi(z) + 2 T(z, slant), z = (e - location) / scale, clamped to [0, 1].
double sn_survival(double e, const SkewNormalParams& p);

/// Mean of SN(0, 1, slant): sqrt(2/pi) * slant / sqrt(1 + slant^2).
double sn_mean_shift(double slant);

// Standardized-scale versions used by the likelihood kernels; they skip
// parameter validation.
double sn_std_logpdf(double z, double slant);
double sn_std_log_survival(double z, double slant);

}  // namespace ssnsm
