#include "bayesid/dataio.hpp"

#include "bayesid/csv_util.hpp"
#include "bayesid/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bayesid {

namespace {

using Mask = decltype(RawMatrix::missing);

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void apply_cap(Matrix& x, const Mask& missing, double cap) {
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (!missing(i, j)) x(i, j) = std::min(x(i, j), cap);
    }
  }
}

void apply_exp(Matrix& x, const Mask& missing) {
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (missing(i, j)) continue;
      x(i, j) = std::exp(x(i, j));
      if (!std::isfinite(x(i, j))) {
        throw std::domain_error("preprocess: exp overflow at row " + std::to_string(i + 1) +
                                ", column " + std::to_string(j + 1) +
                                "; cap before undoing the log transform");
      }
    }
  }
}

// Population mean / variance over observed cells of the block, then rescale them.
void standardize_block(Matrix& x, const Mask& missing, Index col_begin, Index col_end,
                       const std::string& where) {
  double sum = 0.0;
  double count = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = col_begin; j < col_end; ++j) {
      if (!missing(i, j)) {
        sum += x(i, j);
        count += 1.0;
      }
    }
  }
  if (count == 0.0) {
    throw std::domain_error("preprocess: no observed entries to standardise in " + where);
  }
  const double mean = sum / count;
  double ss = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = col_begin; j < col_end; ++j) {
      if (!missing(i, j)) ss += (x(i, j) - mean) * (x(i, j) - mean);
    }
  }
  const double sd = std::sqrt(ss / count);
  if (!(sd > 0.0)) {
    throw std::domain_error("preprocess: zero variance in " + where + "; cannot standardise");
  }
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = col_begin; j < col_end; ++j) {
      if (!missing(i, j)) x(i, j) = (x(i, j) - mean) / sd;
    }
  }
}

}  // namespace

RawMatrix parse_matrix(std::string_view text, const LoadOptions& opts) {
  const char delim = opts.format == TableFormat::Tsv ? '\t' : ',';
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<bool>> missing;
  std::size_t width = 0;
  std::size_t line_no = 0;
  bool header_pending = opts.has_header;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) {
      if (pos > text.size()) break;
      continue;
    }
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = split_line(line, delim);
    if (rows.empty()) {
      width = fields.size();
    } else if (fields.size() != width) {
      throw ParseError("ragged row at line " + std::to_string(line_no) + ": expected " +
                           std::to_string(width) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no, std::min(fields.size(), width) + 1);
    }
    std::vector<double> values(fields.size(), 0.0);
    std::vector<bool> miss(fields.size(), false);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto cell = trim(fields[c]);
      if (cell.empty() || (!opts.missing_sentinel.empty() && cell == opts.missing_sentinel)) {
        miss[c] = true;
        continue;
      }
      double v = 0.0;
      if (!parse_double(cell, v) || !std::isfinite(v)) {
        throw ParseError("unparseable number '" + std::string(cell) + "' at line " +
                             std::to_string(line_no) + ", column " + std::to_string(c + 1),
                         line_no, c + 1);
      }
      values[c] = v;
    }
    rows.push_back(std::move(values));
    missing.push_back(std::move(miss));
    if (pos > text.size()) break;
  }
  if (rows.empty()) {
    throw ParseError("no data rows", line_no, 0);
  }

  RawMatrix raw;
  raw.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  raw.missing.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      raw.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
      raw.missing(static_cast<Index>(i), static_cast<Index>(j)) = missing[i][j];
    }
  }
  return raw;
}

RawMatrix load_matrix(const std::filesystem::path& path, const LoadOptions& opts) {
  const std::string text = read_text_file(path);
  try {
    return parse_matrix(text, opts);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line(), e.column());
  }
}

void PreprocessConfig::validate() const {
  if (column_duplication_factor < 1) {
    throw std::invalid_argument("preprocess: column duplication factor must be >= 1");
  }
  if (cap_value && !std::isfinite(*cap_value)) {
    throw std::invalid_argument("preprocess: cap value must be finite");
  }
}

PreprocessResult preprocess(const RawMatrix& raw, const PreprocessConfig& cfg) {
  cfg.validate();
  if (raw.values.rows() != raw.missing.rows() || raw.values.cols() != raw.missing.cols()) {
    throw std::invalid_argument("preprocess: value / missing-mask shape mismatch");
  }
  Matrix x = raw.values;
  Mask missing = raw.missing;
  nlohmann::json stages = nlohmann::json::array();

  auto cap = [&] {
    if (cfg.cap_value) {
      apply_cap(x, missing, *cfg.cap_value);
      stages.push_back({{"stage", "cap"}, {"value", *cfg.cap_value}});
    }
  };
  auto exp = [&] {
    if (cfg.undo_log) {
      apply_exp(x, missing);
      stages.push_back({{"stage", "undo_log"}});
    }
  };
  auto fill = [&] {
    const Index filled = missing.count();
    for (Index i = 0; i < x.rows(); ++i) {
      for (Index j = 0; j < x.cols(); ++j) {
        if (missing(i, j)) x(i, j) = 0.0;
      }
    }
    missing.setConstant(false);
    stages.push_back({{"stage", "fill_missing"}, {"value", 0.0}, {"cells", filled}});
  };

  if (cfg.exp_before_cap) {
    exp();
    cap();
  } else {
    cap();
    exp();
  }
  if (cfg.fill_before_standardize) {
    fill();
  }
  if (cfg.standardize) {
    if (cfg.standardize_per_column) {
      for (Index j = 0; j < x.cols(); ++j) {
        standardize_block(x, missing, j, j + 1, "column " + std::to_string(j + 1));
      }
    } else {
      standardize_block(x, missing, 0, x.cols(), "matrix");
    }
    stages.push_back({{"stage", "standardize"},
                      {"scope", cfg.standardize_per_column ? "column" : "global"},
                      {"variance", "population"}});
  }
  if (!cfg.fill_before_standardize) {
    fill();
  }
  if (cfg.column_duplication_factor > 1) {
    x = x.replicate(1, cfg.column_duplication_factor).eval();
    stages.push_back({{"stage", "duplicate_columns"}, {"factor", cfg.column_duplication_factor}});
  }

  PreprocessResult out;
  out.manifest = {{"input_shape", {raw.values.rows(), raw.values.cols()}},
                  {"output_shape", {x.rows(), x.cols()}},
                  {"stages", stages}};
  out.data = std::move(x);
  return out;
}

void SyntheticSpec::validate() const {
  if (m < 1 || n < 2) {
    throw std::invalid_argument("synth: need m >= 1 and n >= 2");
  }
  if (k_star < 1 || k_star > n || k_star > m) {
    throw std::invalid_argument("synth: rank " + std::to_string(k_star) +
                                " must lie in [1, min(m, n)] = [1, " +
                                std::to_string(std::min(m, n)) + "]");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw std::invalid_argument("synth: noise sigma must be finite and non-negative");
  }
}

SyntheticMatrix synth_lowrank(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  const Index k = spec.k_star;

  Matrix c0(spec.m, k);
  for (Index i = 0; i < spec.m; ++i) {
    for (Index j = 0; j < k; ++j) c0(i, j) = gauss(rng);
  }
  Matrix w_rest(k, spec.n - k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < spec.n - k; ++j) w_rest(i, j) = weight(rng);
  }

  // Column c of the unpermuted [C0 | C0 W'] lands at position perm[c].
  std::vector<Index> perm(static_cast<std::size_t>(spec.n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);

  SyntheticMatrix out;
  out.basis.assign(perm.begin(), perm.begin() + k);
  std::sort(out.basis.begin(), out.basis.end());
  // generating column c (< k) -> row of W in ascending-basis order
  std::vector<Index> row_of(static_cast<std::size_t>(k));
  for (Index c = 0; c < k; ++c) {
    const auto it = std::find(out.basis.begin(), out.basis.end(), perm[static_cast<std::size_t>(c)]);
    row_of[static_cast<std::size_t>(c)] = static_cast<Index>(it - out.basis.begin());
  }

  out.A.resize(spec.m, spec.n);
  out.W.setZero(k, spec.n);
  for (Index c = 0; c < spec.n; ++c) {
    const Index dest = perm[static_cast<std::size_t>(c)];
    if (c < k) {
      out.A.col(dest) = c0.col(c);
      out.W(row_of[static_cast<std::size_t>(c)], dest) = 1.0;
    } else {
      out.A.col(dest) = c0 * w_rest.col(c - k);
      for (Index g = 0; g < k; ++g) {
        out.W(row_of[static_cast<std::size_t>(g)], dest) = w_rest(g, c - k);
      }
    }
  }
  if (spec.noise_sigma > 0.0) {
    for (Index i = 0; i < spec.m; ++i) {
      for (Index j = 0; j < spec.n; ++j) out.A(i, j) += spec.noise_sigma * gauss(rng);
    }
  }
  return out;
}

}  // namespace bayesid
