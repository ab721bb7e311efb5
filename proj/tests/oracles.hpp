#pragma once

// Independent reference implementations used only by the tests. Nothing here
// calls into the residual cache or the rank-1 update paths of the library.

#include "bayesid/matrix.hpp"
#include "bayesid/model_core.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using bayesid::Index;
using bayesid::Matrix;

// Adaptive Gauss-Kronrod quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-14) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, rel_tol);
}

// Φ by quadrature of the standard normal density on [-40, x].
inline double normal_cdf_by_quadrature(double x) {
  const auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
  if (x <= 0.0) return integrate(phi, -40.0, x);
  return 0.5 + integrate(phi, 0.0, x);
}

// GTN normaliser and moments by quadrature. The exponent is shifted by the
// squared distance from mu to [a, b] so far-tail intervals do not underflow.
struct GtnMoments {
  double mass = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

inline GtnMoments gtn_moments(double mu, double tau, double a, double b) {
  const double d0 = mu < a ? a - mu : (mu > b ? mu - b : 0.0);
  const auto f = [&](double x) {
    return std::exp(-0.5 * tau * ((x - mu) * (x - mu) - d0 * d0));
  };
  const double z = integrate(f, a, b);
  const double m = integrate([&](double x) { return x * f(x); }, a, b) / z;
  const double v = integrate([&](double x) { return (x - m) * (x - m) * f(x); }, a, b) / z;
  return {z * std::exp(-0.5 * tau * d0 * d0) * std::sqrt(tau / (2.0 * std::numbers::pi)), m,
          std::sqrt(v)};
}

// Inverse-CDF GTN sampler that inverts Φ by bisection on std::erfc.
inline double inverse_cdf_by_bisection(double u) {
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::numbers::sqrt2) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double reference_gtn_draw(double mu, double tau, double a, double b, std::mt19937& rng) {
  const double s = std::sqrt(tau);
  double lo = (a - mu) * s, hi = (b - mu) * s;
  // Work in the lower tail where Φ keeps relative precision.
  double sign = 1.0;
  if (lo > 0.0) {
    sign = -1.0;
    std::swap(lo, hi);
    lo = -lo;
    hi = -hi;
  }
  const double plo = 0.5 * std::erfc(-lo / std::numbers::sqrt2);
  const double phi = 0.5 * std::erfc(-hi / std::numbers::sqrt2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double z = inverse_cdf_by_bisection(plo + unif(rng) * (phi - plo));
  return mu + sign * z / s;
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> x, std::vector<double> y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

// Asymptotic two-sample KS critical value at significance alpha.
inline double ks_critical(double alpha, std::size_t n, std::size_t m) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c * std::sqrt(static_cast<double>(n + m) / static_cast<double>(n * m));
}

// Per-entry Gaussian log-likelihood with explicit triple loop for XY.
inline double naive_log_likelihood(const Matrix& A, const Matrix& X, const Matrix& Y,
                                   double sigma2) {
  double total = 0.0;
  for (Index m = 0; m < A.rows(); ++m) {
    for (Index n = 0; n < A.cols(); ++n) {
      double pred = 0.0;
      for (Index k = 0; k < X.cols(); ++k) pred += X(m, k) * Y(k, n);
      const double r = A(m, n) - pred;
      total += -0.5 * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * r * r / sigma2;
    }
  }
  return total;
}

inline Matrix x_from_state(const Matrix& A, const bayesid::StateVector& r) {
  Matrix X = Matrix::Zero(A.rows(), A.cols());
  for (Index n = 0; n < A.cols(); ++n) {
    if (r.selected(n)) X.col(n) = A.col(n);
  }
  return X;
}

// y_kl posterior rebuilt from A, X, Y without the residual cache.
inline bayesid::GtnParams naive_ykl_posterior(const Matrix& A, const Matrix& X, const Matrix& Y,
                                              double sigma2, double mu_kl, double tau_kl,
                                              double a, double b, Index k, Index l) {
  double sq = 0.0, cross = 0.0;
  for (Index i = 0; i < A.rows(); ++i) {
    double others = 0.0;
    for (Index j = 0; j < X.cols(); ++j) {
      if (j != k) others += X(i, j) * Y(j, l);
    }
    sq += X(i, k) * X(i, k);
    cross += X(i, k) * (A(i, l) - others);
  }
  const double tau_post = sq / sigma2 + tau_kl;
  return {(cross / sigma2 + tau_kl * mu_kl) / tau_post, tau_post, a, b};
}

inline double naive_swap_log_odds(const Matrix& A, const Matrix& Y, bayesid::StateVector r,
                                  double sigma2, Index j, Index i) {
  const double before = naive_log_likelihood(A, x_from_state(A, r), Y, sigma2);
  r.set(j, false);
  r.set(i, true);
  const double after = naive_log_likelihood(A, x_from_state(A, r), Y, sigma2);
  return after - before;
}

inline double naive_flip_log_odds(const Matrix& A, const Matrix& Y, bayesid::StateVector r,
                                  double sigma2, Index j) {
  r.set(j, false);
  const double off = naive_log_likelihood(A, x_from_state(A, r), Y, sigma2);
  r.set(j, true);
  const double on = naive_log_likelihood(A, x_from_state(A, r), Y, sigma2);
  return off - on;
}

inline double naive_mse(const Matrix& A, const Matrix& B) {
  double s = 0.0;
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j) s += (A(i, j) - B(i, j)) * (A(i, j) - B(i, j));
  return s / static_cast<double>(A.rows() * A.cols());
}

inline Matrix naive_product(const Matrix& P, const Matrix& Q) {
  Matrix out = Matrix::Zero(P.rows(), Q.cols());
  for (Index i = 0; i < P.rows(); ++i)
    for (Index j = 0; j < Q.cols(); ++j)
      for (Index k = 0; k < P.cols(); ++k) out(i, j) += P(i, k) * Q(k, j);
  return out;
}

// |x - ref| <= tol * max(1, |ref|)
inline bool close_rel(double x, double ref, double tol) {
  return std::abs(x - ref) <= tol * std::max(1.0, std::abs(ref));
}

// Random instance helpers for property tests.
inline Matrix random_matrix(Index rows, Index cols, std::mt19937& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

inline Matrix random_box_matrix(Index rows, Index cols, double a, double b, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(a, b);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline bayesid::StateVector random_state(Index n, std::mt19937& rng) {
  std::bernoulli_distribution coin(0.5);
  bayesid::StateVector r(n);
  for (Index j = 0; j < n; ++j) r.set(j, coin(rng));
  if (r.count() == 0) r.set(0, true);
  if (r.count() == n) r.set(n - 1, false);
  return r;
}

}  // namespace oracle
