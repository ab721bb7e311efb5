#pragma once

#include "bayesid/model_core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bayesid {

struct RunConfig {
  int max_iterations = 1000;
  int burn_in = 100;
  int thinning = 5;
  std::uint64_t seed = 0;
  // Windowed relative change of the running-mean MSE below which the chain
  // counts as converged.
  double convergence_tol = 1e-2;
  int convergence_window = 10;
  // Stop at the first iteration check_convergence() fires. Off by default so
  // the burn-in / thinning schedule always runs to max_iterations.
  bool stop_on_convergence = false;
  // Number of basis columns K. Required without ARD; under ARD 0 means ceil(N/2).
  int rank = 0;
  // ARD state-vector pass order: ascending j, or a fresh random permutation per pass.
  bool shuffle_flip_order = false;
  // y_kl entries whose per-iteration samples are kept for autocorrelation.
  int monitored_entries = 100;

  void validate() const;
};

struct TraceRecord {
  int iteration = 0;
  double mse = 0.0;
  int k_selected = 0;
  double sigma2 = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

/// Per-iteration samples of a fixed subset of y_kl entries.
struct MonitoredChains {
  std::vector<std::pair<Index, Index>> entries;
  // samples[e][t]: value of entries[e] after iteration t + 1.
  std::vector<std::vector<double>> samples;
};

struct RunResult {
  SamplerState state;
  std::vector<TraceRecord> trace;
  // Mean MSE over the post-burn-in, thinned records.
  double averaged_mse = 0.0;
  // First iteration at which check_convergence() held, if any.
  std::optional<int> converged_at;
  MonitoredChains chains;
};

/// Raised when the chain produces a non-finite MSE. The message carries a
/// dump of the offending state.
class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs one Gibbs chain.
///
/// Without ARD each iteration is: one swap move on (r_j, r_i), X refresh,
/// sigma2 draw, one Y sweep. With ARD: a flip pass over every r_j, X refresh,
/// sigma2 draw, then h.nu Y sweeps. A TraceRecord is appended after every
/// iteration.
RunResult run(std::shared_ptr<const ObservedMatrix> observed, const HyperParams& h,
              const RunConfig& cfg);

/// True when the mean MSE of the last `convergence_window` records differs
/// from the mean of the window before it by less than `convergence_tol`,
/// relative to the earlier window. Needs 2 * window records.
bool check_convergence(std::span<const TraceRecord> trace, const RunConfig& cfg);

/// Records kept for reporting: iteration > burn_in, every `thinning`-th one
/// starting at burn_in + 1.
std::vector<TraceRecord> thinned_post_burn_in(std::span<const TraceRecord> trace,
                                              const RunConfig& cfg);

/// All records with iteration > burn_in.
std::vector<TraceRecord> post_burn_in(std::span<const TraceRecord> trace, int burn_in);

/// Mean MSE of the thinned post-burn-in records. Throws when there are none.
double averaged_loss(std::span<const TraceRecord> trace, const RunConfig& cfg);

/// Reconstruction MSE of the state: ||A - X Y||² / (M N).
double state_mse(const SamplerState& state);

}  // namespace bayesid
