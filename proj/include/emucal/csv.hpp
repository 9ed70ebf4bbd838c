#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace emucal::csv {

/// Parsed comma-separated table with a single header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Eigen::Index column(const std::string& name) const;  // throws ParseError
};

/// Shortest decimal text that round-trips a double exactly.
std::string format_double(double v);
double parse_double(const std::string& text);  // throws ParseError

Table read(const std::filesystem::path& path);
Table parse(const std::string& text);

std::string join(const std::vector<std::string>& fields);

/// Header plus one row per matrix row, optionally prefixed by a label column.
std::string format_matrix(const Eigen::MatrixXd& m, const std::vector<std::string>& header,
                          const std::vector<std::string>& row_labels = {});

/// Numeric block of a table (all columns from first_column on).
Eigen::MatrixXd to_matrix(const Table& table, Eigen::Index first_column = 0);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace emucal::csv
