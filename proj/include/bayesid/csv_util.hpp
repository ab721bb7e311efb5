#pragma once

#include "bayesid/matrix.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bayesid {

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// Parses a full field as a double; returns false on trailing garbage or empty input.
bool parse_double(std::string_view text, double& out);

std::vector<std::string> split_line(std::string_view line, char delimiter);

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// Writes `text` to `path`, throwing std::runtime_error if the file cannot be opened.
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace bayesid
