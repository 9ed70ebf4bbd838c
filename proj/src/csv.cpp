#include "emucal/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "emucal/errors.hpp"

namespace emucal::csv {

Eigen::Index Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<Eigen::Index>(i);
  throw ParseError("missing column '" + name + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf, end);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError("not a number: '" + text + "'");
  return v;
}

Table parse(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != table.header.size())
        throw ParseError("row has " + std::to_string(fields.size()) + " fields, header has " +
                         std::to_string(table.header.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw ParseError("empty table");
  return table;
}

Table read(const std::filesystem::path& path) { return parse(read_text(path)); }

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

std::string format_matrix(const Eigen::MatrixXd& m, const std::vector<std::string>& header,
                          const std::vector<std::string>& row_labels) {
  std::string out = join(header) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (!row_labels.empty()) out += row_labels.at(i) + ",";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Eigen::MatrixXd to_matrix(const Table& table, Eigen::Index first_column) {
  const auto cols = static_cast<Eigen::Index>(table.header.size()) - first_column;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(table.rows.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = parse_double(table.rows[i][first_column + j]);
  return m;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace emucal::csv
