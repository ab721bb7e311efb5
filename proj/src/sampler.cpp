#include "bayesid/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bayesid {

namespace {

// Keeps the monitored-entry choice off the chain's own RNG stream.
constexpr std::uint64_t kMonitorSeedSalt = 0x9e3779b97f4a7c15ULL;

MonitoredChains choose_monitored(Index n, int count, std::uint64_t seed) {
  MonitoredChains chains;
  const Index total = n * n;
  const Index wanted = std::min<Index>(count, total);
  if (wanted <= 0) {
    return chains;
  }
  std::vector<Index> flat(static_cast<std::size_t>(total));
  std::iota(flat.begin(), flat.end(), Index{0});
  Rng rng(seed ^ kMonitorSeedSalt);
  std::shuffle(flat.begin(), flat.end(), rng);
  flat.resize(static_cast<std::size_t>(wanted));
  std::sort(flat.begin(), flat.end());
  for (Index f : flat) {
    chains.entries.emplace_back(f / n, f % n);
  }
  chains.samples.resize(chains.entries.size());
  return chains;
}

std::string dump_state(const SamplerState& s, int iteration) {
  std::ostringstream os;
  os << "non-finite MSE at iteration " << iteration << ": sigma2=" << s.sigma2
     << " K=" << s.r.count() << " max|Y|=" << s.Y.cwiseAbs().maxCoeff()
     << " residual_finite=" << (s.residual.allFinite() ? "yes" : "no")
     << " mu_finite=" << (s.mu.allFinite() ? "yes" : "no")
     << " tau_finite=" << (s.tau.allFinite() ? "yes" : "no") << " basis=[";
  const auto basis = s.r.basis();
  for (std::size_t p = 0; p < basis.size(); ++p) {
    os << (p ? "," : "") << basis[p];
  }
  os << "]";
  return os.str();
}

void flip_pass(SamplerState& state, const HyperParams& h, bool shuffle) {
  const Index n = state.cols();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  if (shuffle) {
    std::shuffle(order.begin(), order.end(), state.rng);
  }
  for (Index j : order) {
    flip_move(state, h, j);
  }
}

}  // namespace

void RunConfig::validate() const {
  if (max_iterations < 1) {
    throw std::invalid_argument("run config: max_iterations must be >= 1");
  }
  if (burn_in < 0 || burn_in >= max_iterations) {
    throw std::invalid_argument("run config: need 0 <= burn_in < max_iterations");
  }
  if (thinning < 1) {
    throw std::invalid_argument("run config: thinning must be >= 1");
  }
  if (!(convergence_tol > 0.0) || convergence_window < 1) {
    throw std::invalid_argument("run config: convergence tol and window must be positive");
  }
  if (rank < 0) {
    throw std::invalid_argument("run config: rank must be non-negative");
  }
  if (monitored_entries < 0) {
    throw std::invalid_argument("run config: monitored_entries must be non-negative");
  }
}

double state_mse(const SamplerState& state) {
  return state.residual.squaredNorm() / static_cast<double>(state.residual.size());
}

RunResult run(std::shared_ptr<const ObservedMatrix> observed, const HyperParams& h,
              const RunConfig& cfg) {
  h.validate();
  cfg.validate();
  if (!observed) {
    throw std::invalid_argument("run: null observed matrix");
  }
  const Index n = observed->cols();
  Index initial_k = cfg.rank;
  if (!h.ard) {
    if (initial_k < 1 || initial_k > n) {
      throw std::invalid_argument("run: fixed-rank sampling needs 1 <= K <= N");
    }
  } else if (initial_k == 0) {
    initial_k = (n + 1) / 2;
  } else if (initial_k > n) {
    throw std::invalid_argument("run: initial K exceeds N");
  }

  RunResult result{initialize_state(std::move(observed), h, initial_k, cfg.seed), {}, 0.0,
                   std::nullopt, choose_monitored(n, cfg.monitored_entries, cfg.seed)};
  SamplerState& state = result.state;
  for (auto& s : result.chains.samples) {
    s.reserve(static_cast<std::size_t>(cfg.max_iterations));
  }
  result.trace.reserve(static_cast<std::size_t>(cfg.max_iterations));

  for (int t = 1; t <= cfg.max_iterations; ++t) {
    if (h.ard) {
      flip_pass(state, h, cfg.shuffle_flip_order);
    } else {
      random_swap_move(state, h);
    }
    // The moves keep X and the residual current incrementally; the refresh
    // here clears accumulated rounding from the rank-1 corrections.
    rebuild_x(state);
    if (!std::isfinite(state_mse(state))) {
      throw SamplerError(dump_state(state, t));
    }
    sample_sigma2(state, h);
    const int sweeps = h.ard ? h.nu : 1;
    for (int s = 0; s < sweeps; ++s) {
      sweep_y(state, h);
    }

    const double mse = state_mse(state);
    if (!std::isfinite(mse)) {
      throw SamplerError(dump_state(state, t));
    }
    result.trace.push_back({t, mse, static_cast<int>(state.r.count()), state.sigma2});
    for (std::size_t e = 0; e < result.chains.entries.size(); ++e) {
      const auto [k, l] = result.chains.entries[e];
      result.chains.samples[e].push_back(state.Y(k, l));
    }

    if (!result.converged_at && check_convergence(result.trace, cfg)) {
      result.converged_at = t;
      if (cfg.stop_on_convergence) {
        break;
      }
    }
  }

  const auto kept = thinned_post_burn_in(result.trace, cfg);
  if (!kept.empty()) {
    result.averaged_mse = averaged_loss(result.trace, cfg);
  } else {
    // Early stop inside the burn-in: report the last loss.
    result.averaged_mse = result.trace.back().mse;
  }
  return result;
}

bool check_convergence(std::span<const TraceRecord> trace, const RunConfig& cfg) {
  const auto w = static_cast<std::size_t>(cfg.convergence_window);
  if (trace.size() < 2 * w) {
    return false;
  }
  auto window_mean = [&](std::size_t end) {
    double sum = 0.0;
    for (std::size_t t = end - w; t < end; ++t) {
      sum += trace[t].mse;
    }
    return sum / static_cast<double>(w);
  };
  const double current = window_mean(trace.size());
  const double previous = window_mean(trace.size() - w);
  if (previous == 0.0) {
    return current == 0.0;
  }
  return std::abs(current - previous) / std::abs(previous) < cfg.convergence_tol;
}

std::vector<TraceRecord> thinned_post_burn_in(std::span<const TraceRecord> trace,
                                              const RunConfig& cfg) {
  std::vector<TraceRecord> out;
  for (const auto& rec : trace) {
    if (rec.iteration > cfg.burn_in && (rec.iteration - cfg.burn_in - 1) % cfg.thinning == 0) {
      out.push_back(rec);
    }
  }
  return out;
}

std::vector<TraceRecord> post_burn_in(std::span<const TraceRecord> trace, int burn_in) {
  std::vector<TraceRecord> out;
  for (const auto& rec : trace) {
    if (rec.iteration > burn_in) {
      out.push_back(rec);
    }
  }
  return out;
}

double averaged_loss(std::span<const TraceRecord> trace, const RunConfig& cfg) {
  const auto kept = thinned_post_burn_in(trace, cfg);
  if (kept.empty()) {
    throw std::invalid_argument("averaged_loss: no post-burn-in records");
  }
  double sum = 0.0;
  for (const auto& rec : kept) {
    sum += rec.mse;
  }
  return sum / static_cast<double>(kept.size());
}

}  // namespace bayesid
