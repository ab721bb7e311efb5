#pragma once

#include "bayesid/sampler.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace bayesid {

/// Normalised empirical autocorrelation ρ(0..max_lag) with the biased 1/n
/// estimator: ρ(τ) = Σ_{t<n-τ} (x_t - x̄)(x_{t+τ} - x̄) / Σ_t (x_t - x̄)².
/// Throws std::invalid_argument when the chain is not longer than max_lag
/// or has zero variance.
std::vector<double> autocorrelation(std::span<const double> chain, int max_lag);

/// Pointwise mean of the autocorrelation curves of several chains.
/// Zero-variance chains are skipped; throws if none remain.
std::vector<double> averaged_autocorrelation(const std::vector<std::vector<double>>& chains,
                                             int max_lag);

struct RankSummary {
  int mode = 0;  // smallest K among ties
  double mean = 0.0;
  std::map<int, int> histogram;
};

/// Throws std::invalid_argument on an empty slice.
RankSummary rank_trace_summary(std::span<const TraceRecord> trace);

// Column contract of trace.csv; downstream plotting relies on these names.
inline constexpr const char* kTraceHeader = "iteration,mse,k_selected,sigma2";

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceRecord> trace);
std::vector<TraceRecord> read_trace_csv(const std::filesystem::path& path);

/// ykl_chains.csv: header "iteration,y_<k>_<l>,..." then one row per
/// iteration (0-based k, l).
void write_ykl_chains_csv(const std::filesystem::path& path, const MonitoredChains& chains);
MonitoredChains read_ykl_chains_csv(const std::filesystem::path& path);

/// Writes trace.csv and ykl_chains.csv into `dir` (created if missing).
void export_traces(std::span<const TraceRecord> trace, const MonitoredChains& chains,
                   const std::filesystem::path& dir);

}  // namespace bayesid
