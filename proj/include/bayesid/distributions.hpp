#pragma once

#include <cstdint>
#include <random>

namespace bayesid {

// Every chain owns one of these; nothing in the library touches a global RNG.
using Rng = std::mt19937_64;

/// Parameters of a general-truncated-normal: a normal with parent mean `mu`
/// and parent precision `tau`, restricted to [a, b] and renormalised.
/// Bounds may be infinite (a = 0, b = +inf gives the one-sided truncated normal).
struct GtnParams {
  double mu = 0.0;
  double tau = 1.0;
  double a = -1.0;
  double b = 1.0;

  /// Throws std::invalid_argument unless tau > 0, a < b and mu, tau are finite.
  void validate() const;
};

enum class GammaKind {
  // density ∝ x^(shape-1) exp(-rate x)
  GammaRate,
  // density ∝ x^(-shape-1) exp(-scale / x)
  InverseGammaScale,
};

struct GammaParams {
  double shape = 1.0;
  double rate_or_scale = 1.0;
  GammaKind kind = GammaKind::GammaRate;

  void validate() const;
};

/// Φ(x) = ½ erfc(-x/√2). std::erfc is accurate to a few ulp, so the absolute
/// error is far below 1e-12 over the whole real line; saturates to 0/1.
double std_normal_cdf(double x);

/// Standard normal quantile Φ⁻¹(p) for p in (0, 1).
double std_normal_quantile(double p);

/// Φ(hi) - Φ(lo) for lo <= hi, evaluated in whichever tail keeps relative precision.
double std_normal_mass(double lo, double hi);

/// Density of GTN(mu, 1/tau, a, b) at x. Zero outside [a, b].
/// Throws std::domain_error when the normaliser underflows (< 1e-300).
double gtn_pdf(double x, const GtnParams& p);

/// Draw from GTN(mu, 1/tau, a, b). Inverse-CDF on the truncated interval,
/// switching to exponential / uniform rejection once the whole interval sits
/// more than 5 standard deviations into one tail. Never returns a value
/// outside [a, b].
double sample_gtn(const GtnParams& p, Rng& rng);

/// Draw from the Gamma distribution with the given shape and *rate*.
double sample_gamma(const GammaParams& p, Rng& rng);

/// Draw from the inverse-Gamma with the given shape and *scale*, computed as
/// the reciprocal of a Gamma(shape, rate = scale) draw.
double sample_inverse_gamma(const GammaParams& p, Rng& rng);

double sample_normal(double mean, double precision, Rng& rng);

// Standard uniform on [0, 1).
double sample_uniform(Rng& rng);

}  // namespace bayesid
