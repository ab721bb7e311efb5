#pragma once

#include "bayesid/matrix.hpp"
#include "bayesid/model_core.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bayesid {

enum class TableFormat { Csv, Tsv };

/// Matrix as read from disk, before preprocessing. Missing cells hold 0 in
/// `values` and are flagged in `missing`.
struct RawMatrix {
  Matrix values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> missing;

  Index missing_count() const { return missing.count(); }
};

struct LoadOptions {
  TableFormat format = TableFormat::Csv;
  bool has_header = false;
  // Cells equal to this text (after trimming) count as missing, in addition to empty cells.
  std::string missing_sentinel;
};

/// Parse/shape error carrying the 1-based line and column of the offending cell.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

RawMatrix parse_matrix(std::string_view text, const LoadOptions& opts = {});
RawMatrix load_matrix(const std::filesystem::path& path, const LoadOptions& opts = {});

struct PreprocessConfig {
  std::optional<double> cap_value = 100.0;
  bool undo_log = false;
  bool standardize = false;
  // Standardise each column separately instead of the matrix as a whole.
  bool standardize_per_column = false;
  // Default order is cap, then exp; set to exponentiate first.
  bool exp_before_cap = false;
  // Default fills missing cells after standardising (so they land on the mean).
  bool fill_before_standardize = false;
  int column_duplication_factor = 1;

  void validate() const;
};

struct PreprocessResult {
  Matrix data;
  // Every applied stage and its parameters, in order.
  nlohmann::json manifest;
};

/// Cap -> exp -> standardise -> fill missing with 0 -> tile columns (stage
/// order adjustable through the config). Missing cells always end as 0
/// because the likelihood has no masking. Throws std::domain_error when
/// standardising a constant matrix (or column).
PreprocessResult preprocess(const RawMatrix& raw, const PreprocessConfig& cfg);

struct SyntheticSpec {
  Index m = 30;
  Index n = 20;
  Index k_star = 8;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticMatrix {
  Matrix A;
  // Ascending indices of the generating columns.
  std::vector<Index> basis;
  // k_star x n interpolation weights with W[:, basis] = I and |W| <= 1.
  Matrix W;
};

/// A = [C0 | C0 W'] with columns randomly permuted, plus N(0, noise²) noise.
/// C0 is standard normal, W' uniform on [-1, 1].
SyntheticMatrix synth_lowrank(const SyntheticSpec& spec);

}  // namespace bayesid
