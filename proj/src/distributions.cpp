#include "bayesid/distributions.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bayesid {

namespace {

constexpr double kTailSwitch = 5.0;
constexpr double kMinNormaliser = 1e-300;

// U(0,1) with 0 excluded, so quantiles and logs stay finite.
double open_uniform(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  do {
    u = unif(rng);
  } while (u <= 0.0);
  return u;
}

// Standard normal restricted to [lo, hi] with lo > 0 far in the upper tail.
// Uniform proposal for short intervals, translated-exponential otherwise.
double sample_upper_tail(double lo, double hi, Rng& rng) {
  if (lo * (hi - lo) < 1.0) {
    std::uniform_real_distribution<double> prop(lo, hi);
    for (;;) {
      const double z = prop(rng);
      if (std::log(open_uniform(rng)) <= 0.5 * (lo * lo - z * z)) {
        return z;
      }
    }
  }
  const double rate = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
  for (;;) {
    const double z = lo - std::log(open_uniform(rng)) / rate;
    if (z > hi) {
      continue;
    }
    const double d = z - rate;
    if (std::log(open_uniform(rng)) <= -0.5 * d * d) {
      return z;
    }
  }
}

// Inverse-CDF on [lo, hi]; callers pass intervals with lo <= 0 where Φ(lo)
// carries full relative precision.
double sample_inverse_cdf(double lo, double hi, Rng& rng) {
  const double plo = std_normal_cdf(lo);
  const double phi = std_normal_cdf(hi);
  const double u = plo + open_uniform(rng) * (phi - plo);
  if (u <= 0.0) {
    return lo;
  }
  if (u >= 1.0) {
    return hi;
  }
  return std::clamp(std_normal_quantile(u), lo, hi);
}

}  // namespace

void GtnParams::validate() const {
  if (!std::isfinite(mu) || !std::isfinite(tau) || !(tau > 0.0)) {
    throw std::invalid_argument("GTN: need finite mu and tau > 0 (mu=" + std::to_string(mu) +
                                ", tau=" + std::to_string(tau) + ")");
  }
  if (std::isnan(a) || std::isnan(b) || !(a < b)) {
    throw std::invalid_argument("GTN: need a < b (a=" + std::to_string(a) +
                                ", b=" + std::to_string(b) + ")");
  }
}

void GammaParams::validate() const {
  if (!(shape > 0.0) || !(rate_or_scale > 0.0) || !std::isfinite(shape) ||
      !std::isfinite(rate_or_scale)) {
    throw std::invalid_argument("gamma: shape and rate/scale must be finite and positive (shape=" +
                                std::to_string(shape) +
                                ", rate/scale=" + std::to_string(rate_or_scale) + ")");
  }
}

double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal quantile: p must lie in (0, 1)");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double std_normal_mass(double lo, double hi) {
  if (lo >= 0.0) {
    return std_normal_cdf(-lo) - std_normal_cdf(-hi);
  }
  return std_normal_cdf(hi) - std_normal_cdf(lo);
}

double gtn_pdf(double x, const GtnParams& p) {
  p.validate();
  const double sd_inv = std::sqrt(p.tau);
  const double z_norm = std_normal_mass((p.a - p.mu) * sd_inv, (p.b - p.mu) * sd_inv);
  if (!(z_norm >= kMinNormaliser)) {
    throw std::domain_error("GTN: normaliser underflow; [a, b] lies too far in one tail");
  }
  if (x < p.a || x > p.b) {
    return 0.0;
  }
  const double z = (x - p.mu) * sd_inv;
  return sd_inv * std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * z_norm);
}

double sample_gtn(const GtnParams& p, Rng& rng) {
  p.validate();
  const double sd_inv = std::sqrt(p.tau);
  const double lo = (p.a - p.mu) * sd_inv;
  const double hi = (p.b - p.mu) * sd_inv;

  double z = 0.0;
  if (lo > kTailSwitch) {
    z = sample_upper_tail(lo, hi, rng);
  } else if (hi < -kTailSwitch) {
    z = -sample_upper_tail(-hi, -lo, rng);
  } else if (lo >= 0.0) {
    z = -sample_inverse_cdf(-hi, -lo, rng);
  } else {
    z = sample_inverse_cdf(lo, hi, rng);
  }
  return std::clamp(p.mu + z / sd_inv, p.a, p.b);
}

double sample_gamma(const GammaParams& p, Rng& rng) {
  p.validate();
  std::gamma_distribution<double> dist(p.shape, 1.0 / p.rate_or_scale);
  return dist(rng);
}

double sample_inverse_gamma(const GammaParams& p, Rng& rng) {
  p.validate();
  std::gamma_distribution<double> dist(p.shape, 1.0 / p.rate_or_scale);
  return 1.0 / dist(rng);
}

double sample_normal(double mean, double precision, Rng& rng) {
  if (!(precision > 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("normal: need finite mean and positive precision");
  }
  std::normal_distribution<double> dist(0.0, 1.0);
  return mean + dist(rng) / std::sqrt(precision);
}

double sample_uniform(Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace bayesid
