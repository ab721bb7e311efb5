#include "bayesid/model_core.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bayesid {

namespace {

void check_column(const SamplerState& state, Index n, const char* what) {
  if (n < 0 || n >= state.cols()) {
    throw std::out_of_range(std::string(what) + ": column index " + std::to_string(n) +
                            " outside [0, " + std::to_string(state.cols()) + ")");
  }
}

// Change in Σ residual² when the residual becomes R + sign * A[:,j] Y[j,:].
double rank1_sse_delta(const SamplerState& state, Index j, double sign) {
  const Matrix& A = state.A();
  const Matrix& R = state.residual;
  double delta = 0.0;
  for (Index m = 0; m < A.rows(); ++m) {
    const double amj = sign * A(m, j);
    if (amj == 0.0) {
      continue;
    }
    for (Index n = 0; n < A.cols(); ++n) {
      const double d = amj * state.Y(j, n);
      delta += d * (2.0 * R(m, n) + d);
    }
  }
  return delta;
}

// residual += sign * A[:,j] Y[j,:]
void apply_rank1(SamplerState& state, Index j, double sign) {
  state.residual.noalias() += sign * state.A().col(j) * state.Y.row(j);
}

void select_column(SamplerState& state, Index j) {
  state.r.set(j, true);
  state.X.col(j) = state.A().col(j);
  apply_rank1(state, j, -1.0);
}

void deselect_column(SamplerState& state, Index j) {
  state.r.set(j, false);
  state.X.col(j).setZero();
  apply_rank1(state, j, +1.0);
}

}  // namespace

void HyperParams::validate() const {
  if (!(a < b)) {
    throw std::invalid_argument("hyperparameters: need a < b");
  }
  if (!(alpha_sigma > 0.0) || !(beta_sigma > 0.0)) {
    throw std::invalid_argument("hyperparameters: alpha_sigma and beta_sigma must be positive");
  }
  if (!(tau_init > 0.0) || !(tau_mu > 0.0) || !(alpha_t > 0.0) || !(beta_t > 0.0)) {
    throw std::invalid_argument("hyperparameters: tau_init, tau_mu, alpha_t, beta_t must be positive");
  }
  if (!std::isfinite(mu_init) || !std::isfinite(mu_mu)) {
    throw std::invalid_argument("hyperparameters: mu_init and mu_mu must be finite");
  }
  if (nu < 1) {
    throw std::invalid_argument("hyperparameters: critical steps nu must be >= 1");
  }
}

ObservedMatrix::ObservedMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 2) {
    throw std::invalid_argument("observed matrix must have M >= 1 rows and N >= 2 columns");
  }
  if (!data_.allFinite()) {
    throw std::invalid_argument("observed matrix contains non-finite entries");
  }
  col_sq_norms_ = data_.colwise().squaredNorm().transpose();
}

StateVector StateVector::from_basis(Index n, const std::vector<Index>& basis) {
  StateVector r(n);
  for (Index j : basis) {
    if (j < 0 || j >= n) {
      throw std::out_of_range("basis index " + std::to_string(j) + " out of range");
    }
    if (r.selected(j)) {
      throw std::invalid_argument("duplicate basis index " + std::to_string(j));
    }
    r.set(j, true);
  }
  return r;
}

void StateVector::set(Index n, bool value) {
  auto& bit = bits_.at(static_cast<std::size_t>(n));
  if ((bit != 0) != value) {
    count_ += value ? 1 : -1;
    bit = value ? 1 : 0;
  }
}

std::vector<Index> StateVector::basis() const {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(count_));
  for (Index n = 0; n < size(); ++n) {
    if (selected(n)) out.push_back(n);
  }
  return out;
}

std::vector<Index> StateVector::interpolated() const {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(size() - count_));
  for (Index n = 0; n < size(); ++n) {
    if (!selected(n)) out.push_back(n);
  }
  return out;
}

SamplerState make_state(std::shared_ptr<const ObservedMatrix> observed, const HyperParams& h,
                        StateVector r, Matrix Y, double sigma2, std::uint64_t seed) {
  h.validate();
  if (!observed) {
    throw std::invalid_argument("make_state: null observed matrix");
  }
  const Index n = observed->cols();
  if (r.size() != n) {
    throw std::invalid_argument("make_state: state vector length must equal N");
  }
  if (r.count() < 1) {
    throw std::invalid_argument("make_state: at least one basis column is required");
  }
  if (Y.rows() != n || Y.cols() != n) {
    throw std::invalid_argument("make_state: Y must be N x N");
  }
  if ((Y.array() < h.a).any() || (Y.array() > h.b).any()) {
    throw std::invalid_argument("make_state: Y entries must lie in [a, b]");
  }
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw std::invalid_argument("make_state: sigma2 must be positive and finite");
  }

  SamplerState s;
  s.observed = std::move(observed);
  s.r = std::move(r);
  s.Y = std::move(Y);
  s.sigma2 = sigma2;
  s.mu = Matrix::Constant(n, n, h.mu_init);
  s.tau = Matrix::Constant(n, n, h.tau_init);
  s.rng.seed(seed);
  rebuild_x(s);
  return s;
}

SamplerState initialize_state(std::shared_ptr<const ObservedMatrix> observed,
                              const HyperParams& h, Index initial_k, std::uint64_t seed) {
  h.validate();
  if (!observed) {
    throw std::invalid_argument("initialize_state: null observed matrix");
  }
  const Index n = observed->cols();
  if (initial_k < 1 || initial_k > n) {
    throw std::invalid_argument("initialize_state: initial K must lie in [1, N]");
  }

  Rng rng(seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(static_cast<std::size_t>(initial_k));
  StateVector r = StateVector::from_basis(n, order);

  const GtnParams prior{h.mu_init, h.tau_init, h.a, h.b};
  Matrix Y(n, n);
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      Y(k, l) = sample_gtn(prior, rng);
    }
  }
  const double sigma2 =
      sample_inverse_gamma({h.alpha_sigma, h.beta_sigma, GammaKind::InverseGammaScale}, rng);

  SamplerState s = make_state(std::move(observed), h, std::move(r), std::move(Y), sigma2, seed);
  s.rng = rng;
  return s;
}

double log_likelihood(const Matrix& A, const Matrix& X, const Matrix& Y, double sigma2) {
  if (X.rows() != A.rows() || Y.cols() != A.cols() || X.cols() != Y.rows()) {
    throw std::invalid_argument("log_likelihood: nonconforming shapes");
  }
  if (!(sigma2 > 0.0)) {
    throw std::invalid_argument("log_likelihood: sigma2 must be positive");
  }
  const double sse = (A - X * Y).squaredNorm();
  const double mn = static_cast<double>(A.size());
  return -0.5 * mn * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * sse / sigma2;
}

void rebuild_x(SamplerState& state) {
  const Matrix& A = state.A();
  state.X.setZero(A.rows(), A.cols());
  for (Index j = 0; j < A.cols(); ++j) {
    if (state.r.selected(j)) {
      state.X.col(j) = A.col(j);
    }
  }
  state.residual = A;
  state.residual.noalias() -= state.X * state.Y;
}

GtnParams ykl_posterior_params(const SamplerState& state, const HyperParams& h, Index k, Index l) {
  check_column(state, k, "ykl_posterior_params");
  check_column(state, l, "ykl_posterior_params");
  const Matrix& X = state.X;
  const double ykl = state.Y(k, l);
  double sq = 0.0;
  double cross = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    const double xik = X(i, k);
    sq += xik * xik;
    // a_il - Σ_{j≠k} x_ij y_jl = residual_il + x_ik y_kl
    cross += xik * (state.residual(i, l) + xik * ykl);
  }
  const double tau_kl = state.tau(k, l);
  const double tau_post = sq / state.sigma2 + tau_kl;
  assert(tau_post > 0.0);
  const double mu_post = (cross / state.sigma2 + tau_kl * state.mu(k, l)) / tau_post;
  return {mu_post, tau_post, h.a, h.b};
}

GammaParams sigma2_posterior_params(const SamplerState& state, const HyperParams& h) {
  const double mn = static_cast<double>(state.residual.size());
  return {0.5 * mn + h.alpha_sigma, 0.5 * state.residual.squaredNorm() + h.beta_sigma,
          GammaKind::InverseGammaScale};
}

NormalParams mukl_posterior_params(const SamplerState& state, const HyperParams& h, Index k,
                                   Index l) {
  const double tau_kl = state.tau(k, l);
  const double precision = tau_kl + h.tau_mu;
  return {(tau_kl * state.Y(k, l) + h.tau_mu * h.mu_mu) / precision, precision};
}

GammaParams taukl_posterior_params(const SamplerState& state, const HyperParams& h, Index k,
                                   Index l) {
  const double dev = state.Y(k, l) - state.mu(k, l);
  return {h.alpha_t + 0.5, h.beta_t + 0.5 * dev * dev, GammaKind::GammaRate};
}

void sample_ykl(SamplerState& state, const HyperParams& h, Index k, Index l) {
  const GtnParams post = ykl_posterior_params(state, h, k, l);
  const double fresh = sample_gtn(post, state.rng);
  const double delta = fresh - state.Y(k, l);
  state.Y(k, l) = fresh;
  if (state.r.selected(k) && delta != 0.0) {
    state.residual.col(l).noalias() -= delta * state.X.col(k);
  }
}

void sample_sigma2(SamplerState& state, const HyperParams& h) {
  state.sigma2 = sample_inverse_gamma(sigma2_posterior_params(state, h), state.rng);
}

void sample_mukl(SamplerState& state, const HyperParams& h, Index k, Index l) {
  const NormalParams post = mukl_posterior_params(state, h, k, l);
  state.mu(k, l) = sample_normal(post.mean, post.precision, state.rng);
}

void sample_taukl(SamplerState& state, const HyperParams& h, Index k, Index l) {
  state.tau(k, l) = sample_gamma(taukl_posterior_params(state, h, k, l), state.rng);
}

void sweep_y(SamplerState& state, const HyperParams& h) {
  const Index n = state.cols();
  const bool hierarchical = h.flavor == Flavor::GBTN;
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      sample_ykl(state, h, k, l);
      if (hierarchical) {
        sample_mukl(state, h, k, l);
        sample_taukl(state, h, k, l);
      }
    }
  }
}

double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double swap_log_odds(const SamplerState& state, Index j, Index i) {
  check_column(state, j, "swap_log_odds");
  check_column(state, i, "swap_log_odds");
  if (!state.r.selected(j) || state.r.selected(i)) {
    throw std::invalid_argument("swap: need j in J and i in I");
  }
  // Swapped residual is R + A_j Y_j - A_i Y_i.
  const Matrix& A = state.A();
  const Matrix& R = state.residual;
  double delta = 0.0;
  for (Index m = 0; m < A.rows(); ++m) {
    const double amj = A(m, j);
    const double ami = A(m, i);
    for (Index n = 0; n < A.cols(); ++n) {
      const double d = amj * state.Y(j, n) - ami * state.Y(i, n);
      delta += d * (2.0 * R(m, n) + d);
    }
  }
  return -0.5 * delta / state.sigma2;
}

double flip_log_odds(const SamplerState& state, Index j) {
  check_column(state, j, "flip_log_odds");
  if (state.r.selected(j)) {
    // r_j=1 is current; r_j=0 adds A_j Y_j back into the residual.
    return -0.5 * rank1_sse_delta(state, j, +1.0) / state.sigma2;
  }
  // r_j=0 is current; r_j=1 subtracts A_j Y_j.
  return 0.5 * rank1_sse_delta(state, j, -1.0) / state.sigma2;
}

MoveOutcome swap_move(SamplerState& state, const HyperParams& /*h*/, Index j, Index i) {
  MoveOutcome out;
  out.log_odds = swap_log_odds(state, j, i);
  out.probability = logistic(out.log_odds);
  if (sample_uniform(state.rng) < out.probability) {
    deselect_column(state, j);
    select_column(state, i);
    out.changed = true;
  }
  return out;
}

MoveOutcome flip_move(SamplerState& state, const HyperParams& /*h*/, Index j) {
  MoveOutcome out;
  out.log_odds = flip_log_odds(state, j);
  out.probability = logistic(out.log_odds);
  const bool want_selected = !(sample_uniform(state.rng) < out.probability);
  if (want_selected == state.r.selected(j)) {
    return out;
  }
  if (!want_selected && state.r.count() == 1) {
    out.blocked_empty_basis = true;
    return out;
  }
  if (want_selected) {
    select_column(state, j);
  } else {
    deselect_column(state, j);
  }
  out.changed = true;
  return out;
}

MoveOutcome random_swap_move(SamplerState& state, const HyperParams& h) {
  const std::vector<Index> basis = state.r.basis();
  const std::vector<Index> rest = state.r.interpolated();
  if (rest.empty()) {
    return {};
  }
  std::uniform_int_distribution<std::size_t> pick_j(0, basis.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_i(0, rest.size() - 1);
  const Index j = basis[pick_j(state.rng)];
  const Index i = rest[pick_i(state.rng)];
  return swap_move(state, h, j, i);
}

}  // namespace bayesid
