#include "bayesid/diagnostics.hpp"

#include "bayesid/csv_util.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>

namespace bayesid {

std::vector<double> autocorrelation(std::span<const double> chain, int max_lag) {
  if (max_lag < 0) {
    throw std::invalid_argument("autocorrelation: max_lag must be non-negative");
  }
  const std::size_t n = chain.size();
  if (n <= static_cast<std::size_t>(max_lag)) {
    throw std::invalid_argument("autocorrelation: chain length must exceed max_lag");
  }
  const auto [lo, hi] = std::minmax_element(chain.begin(), chain.end());
  if (*lo == *hi) {
    throw std::invalid_argument("autocorrelation: zero-variance chain");
  }
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(n);

  std::vector<double> centred(n);
  double denom = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    centred[t] = chain[t] - mean;
    denom += centred[t] * centred[t];
  }
  if (!(denom > 0.0)) {
    throw std::invalid_argument("autocorrelation: zero-variance chain");
  }
  std::vector<double> rho(static_cast<std::size_t>(max_lag) + 1);
  rho[0] = 1.0;
  for (std::size_t lag = 1; lag < rho.size(); ++lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) {
      acc += centred[t] * centred[t + lag];
    }
    rho[lag] = acc / denom;
  }
  return rho;
}

std::vector<double> averaged_autocorrelation(const std::vector<std::vector<double>>& chains,
                                             int max_lag) {
  std::vector<double> sum(static_cast<std::size_t>(max_lag) + 1, 0.0);
  int used = 0;
  for (const auto& chain : chains) {
    std::vector<double> rho;
    try {
      rho = autocorrelation(chain, max_lag);
    } catch (const std::invalid_argument&) {
      // e.g. an entry pinned at a bound for the whole chain
      continue;
    }
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += rho[i];
    ++used;
  }
  if (used == 0) {
    throw std::invalid_argument("averaged_autocorrelation: no chain with positive variance");
  }
  for (double& v : sum) v /= used;
  return sum;
}

RankSummary rank_trace_summary(std::span<const TraceRecord> trace) {
  if (trace.empty()) {
    throw std::invalid_argument("rank_trace_summary: empty post-burn-in trace");
  }
  RankSummary s;
  double total = 0.0;
  for (const auto& rec : trace) {
    ++s.histogram[rec.k_selected];
    total += rec.k_selected;
  }
  s.mean = total / static_cast<double>(trace.size());
  int best = -1;
  for (const auto& [k, count] : s.histogram) {
    if (count > best) {
      best = count;
      s.mode = k;
    }
  }
  return s;
}

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceRecord> trace) {
  std::ostringstream os;
  os << kTraceHeader << '\n';
  for (const auto& rec : trace) {
    os << rec.iteration << ',' << format_double(rec.mse) << ',' << rec.k_selected << ','
       << format_double(rec.sigma2) << '\n';
  }
  write_text_file(path, os.str());
}

std::vector<TraceRecord> read_trace_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": empty trace file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) {
    throw std::runtime_error(path.string() + ": unexpected trace header '" + line + "'");
  }
  std::vector<TraceRecord> trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_line(line, ',');
    double it = 0.0, k = 0.0;
    TraceRecord rec;
    if (f.size() != 4 || !parse_double(f[0], it) || !parse_double(f[1], rec.mse) ||
        !parse_double(f[2], k) || !parse_double(f[3], rec.sigma2)) {
      throw std::runtime_error(path.string() + ": malformed trace row at line " +
                               std::to_string(line_no));
    }
    rec.iteration = static_cast<int>(it);
    rec.k_selected = static_cast<int>(k);
    trace.push_back(rec);
  }
  return trace;
}

void write_ykl_chains_csv(const std::filesystem::path& path, const MonitoredChains& chains) {
  std::ostringstream os;
  os << "iteration";
  for (const auto& [k, l] : chains.entries) {
    os << ",y_" << k << '_' << l;
  }
  os << '\n';
  const std::size_t len = chains.samples.empty() ? 0 : chains.samples.front().size();
  for (std::size_t t = 0; t < len; ++t) {
    os << (t + 1);
    for (const auto& s : chains.samples) {
      os << ',' << format_double(s.at(t));
    }
    os << '\n';
  }
  write_text_file(path, os.str());
}

MonitoredChains read_ykl_chains_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": empty chain file");
  }
  MonitoredChains chains;
  const auto header = split_line(line, ',');
  for (std::size_t c = 1; c < header.size(); ++c) {
    long long k = 0, l = 0;
    const std::string& h = header[c];
    const auto sep = h.find('_', 2);
    if (h.rfind("y_", 0) != 0 || sep == std::string::npos ||
        std::from_chars(h.data() + 2, h.data() + sep, k).ec != std::errc() ||
        std::from_chars(h.data() + sep + 1, h.data() + h.size(), l).ec != std::errc()) {
      throw std::runtime_error(path.string() + ": bad chain column '" + h + "'");
    }
    chains.entries.emplace_back(static_cast<Index>(k), static_cast<Index>(l));
  }
  chains.samples.resize(chains.entries.size());
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_line(line, ',');
    if (f.size() != header.size()) {
      throw std::runtime_error(path.string() + ": ragged chain row");
    }
    for (std::size_t c = 1; c < f.size(); ++c) {
      double v = 0.0;
      if (!parse_double(f[c], v)) {
        throw std::runtime_error(path.string() + ": bad chain value '" + f[c] + "'");
      }
      chains.samples[c - 1].push_back(v);
    }
  }
  return chains;
}

void export_traces(std::span<const TraceRecord> trace, const MonitoredChains& chains,
                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + dir.string() +
                             "': " + ec.message());
  }
  write_trace_csv(dir / "trace.csv", trace);
  write_ykl_chains_csv(dir / "ykl_chains.csv", chains);
}

}  // namespace bayesid
