#pragma once

#include "bayesid/distributions.hpp"
#include "bayesid/matrix.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace bayesid {

enum class Flavor {
  GBT,   // fixed GTN prior parameters per entry
  GBTN,  // per-entry (mu, tau) with a normal-gamma hyperprior
};

/// Model hyperparameters. Defaults are the weak priors used for every
/// experiment: a=-1, b=1, alpha_sigma=0.1, beta_sigma=1, mu_kl=0, tau_kl=1,
/// mu_mu=0, tau_mu=0.1, alpha_t=beta_t=1, nu=5.
struct HyperParams {
  double a = -1.0;
  double b = 1.0;
  double alpha_sigma = 0.1;
  double beta_sigma = 1.0;
  // Initial (GBT: fixed) parent mean and precision of every y_kl prior.
  double mu_init = 0.0;
  double tau_init = 1.0;
  // GBTN hyperprior: mu_kl ~ N(mu_mu, 1/tau_mu), tau_kl ~ Gamma(alpha_t, beta_t).
  double mu_mu = 0.0;
  double tau_mu = 0.1;
  double alpha_t = 1.0;
  double beta_t = 1.0;
  // Critical steps: Y sweeps after each ARD state-vector pass.
  int nu = 5;
  Flavor flavor = Flavor::GBT;
  bool ard = false;

  void validate() const;
};

/// The data matrix A after preprocessing. Immutable once built and shared
/// read-only between chains.
class ObservedMatrix {
 public:
  /// Throws std::invalid_argument on non-finite entries or M < 1, N < 2.
  explicit ObservedMatrix(Matrix data);

  const Matrix& data() const { return data_; }
  Index rows() const { return data_.rows(); }
  Index cols() const { return data_.cols(); }
  double column_sq_norm(Index n) const { return col_sq_norms_[n]; }

 private:
  Matrix data_;
  Vector col_sq_norms_;
};

/// Binary state vector r: r_n = 1 marks column n as a basis column (J),
/// r_n = 0 as interpolated (I).
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(Index n) : bits_(static_cast<std::size_t>(n), 0) {}
  /// Builds r from the basis index set J. Throws on out-of-range or duplicate indices.
  static StateVector from_basis(Index n, const std::vector<Index>& basis);

  Index size() const { return static_cast<Index>(bits_.size()); }
  bool selected(Index n) const { return bits_[static_cast<std::size_t>(n)] != 0; }
  void set(Index n, bool value);
  // |J|
  Index count() const { return count_; }

  std::vector<Index> basis() const;
  std::vector<Index> interpolated() const;

  bool operator==(const StateVector&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
  Index count_ = 0;
};

/// Full mutable Gibbs state of one chain.
///
/// Invariants maintained by every operation in this header:
///  - X[:, J] == A[:, J] and X[:, I] == 0;
///  - residual == A - X Y (to rounding; rebuild_x recomputes it exactly);
///  - a <= Y(k, l) <= b for all entries;
///  - r.count() >= 1.
struct SamplerState {
  std::shared_ptr<const ObservedMatrix> observed;
  Matrix X;
  Matrix Y;
  StateVector r;
  double sigma2 = 1.0;
  Matrix mu;
  Matrix tau;
  Matrix residual;
  Rng rng;

  const Matrix& A() const { return observed->data(); }
  Index rows() const { return observed->rows(); }
  Index cols() const { return observed->cols(); }
};

/// Builds a state from explicit values (used by tests and resumable runs).
/// mu/tau are filled with h.mu_init / h.tau_init; X and residual are derived.
SamplerState make_state(std::shared_ptr<const ObservedMatrix> observed, const HyperParams& h,
                        StateVector r, Matrix Y, double sigma2, std::uint64_t seed);

/// Random initial state: `initial_k` basis columns placed uniformly at random,
/// Y drawn from the GTN prior, sigma2 from its inverse-Gamma prior.
SamplerState initialize_state(std::shared_ptr<const ObservedMatrix> observed,
                              const HyperParams& h, Index initial_k, std::uint64_t seed);

/// Σ_{m,n} log N(a_mn | (XY)_mn, sigma2).
double log_likelihood(const Matrix& A, const Matrix& X, const Matrix& Y, double sigma2);

/// Reset X from r (X[:,J] = A[:,J], X[:,I] = 0) and recompute the residual from scratch.
void rebuild_x(SamplerState& state);

// Conditional posteriors ---------------------------------------------------

/// GTN posterior of y_kl given everything else.
GtnParams ykl_posterior_params(const SamplerState& state, const HyperParams& h, Index k, Index l);

/// Inverse-Gamma (shape, scale) posterior of sigma2.
GammaParams sigma2_posterior_params(const SamplerState& state, const HyperParams& h);

struct NormalParams {
  double mean = 0.0;
  double precision = 1.0;
};

/// Normal posterior of mu_kl (GBTN).
NormalParams mukl_posterior_params(const SamplerState& state, const HyperParams& h, Index k,
                                   Index l);

/// Gamma (shape, rate) posterior of tau_kl (GBTN).
GammaParams taukl_posterior_params(const SamplerState& state, const HyperParams& h, Index k,
                                   Index l);

void sample_ykl(SamplerState& state, const HyperParams& h, Index k, Index l);
void sample_sigma2(SamplerState& state, const HyperParams& h);
void sample_mukl(SamplerState& state, const HyperParams& h, Index k, Index l);
void sample_taukl(SamplerState& state, const HyperParams& h, Index k, Index l);

/// One full row-major pass over Y (k outer, l inner), including the GBTN
/// mu/tau updates after each y_kl.
void sweep_y(SamplerState& state, const HyperParams& h);

// State-vector moves -------------------------------------------------------

/// Numerically stable 1 / (1 + exp(-x)).
double logistic(double x);

/// log o for exchanging basis column j (in J) with interpolated column i (in I):
/// log p(A | r_j=0, r_i=1) - log p(A | r_j=1, r_i=0) at fixed Y, sigma2.
double swap_log_odds(const SamplerState& state, Index j, Index i);

/// log o for r_j: log p(A | r_j=0, r_-j) - log p(A | r_j=1, r_-j) at fixed Y, sigma2.
double flip_log_odds(const SamplerState& state, Index j);

struct MoveOutcome {
  double log_odds = 0.0;
  // Swap: probability of exchanging. Flip: probability of r_j = 0.
  double probability = 0.0;
  // Whether r changed.
  bool changed = false;
  // Flip only: the draw chose r_j = 0 but j was the last basis column.
  bool blocked_empty_basis = false;
};

/// Gibbs update of the pair (r_j, r_i) under a uniform move prior.
/// Throws std::invalid_argument unless r_j = 1 and r_i = 0.
MoveOutcome swap_move(SamplerState& state, const HyperParams& h, Index j, Index i);

/// Gibbs update of r_j with p(r_j=0) = p(r_j=1) = 1/2. A draw that would
/// leave J empty is rejected.
MoveOutcome flip_move(SamplerState& state, const HyperParams& h, Index j);

/// Picks j uniformly from J and i uniformly from I, then applies swap_move.
/// Returns an unchanged outcome when I is empty (K = N).
MoveOutcome random_swap_move(SamplerState& state, const HyperParams& h);

}  // namespace bayesid
