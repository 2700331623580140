#include "dpdhsic/csv.hpp"

#include <fstream>
#include <ostream>
#include <vector>

#include "str_format.hpp"

namespace dpdhsic {

using detail::format_double;
using detail::parse_double;
using detail::split_fields;
using detail::trim;

void write_dataset_csv(const Dataset& dataset, std::ostream& out) {
  const int d = dataset.d();
  bool first = true;
  for (int j = 0; j < d; ++j) {
    const int p = static_cast<int>(dataset.group(j).cols());
    for (int k = 0; k < p; ++k) {
      if (!first) out << ',';
      out << 'g' << j << '_' << k;
      first = false;
    }
  }
  out << '\n';
  const int n = dataset.n();
  for (int i = 0; i < n; ++i) {
    first = true;
    for (int j = 0; j < d; ++j) {
      const Matrix& g = dataset.group(j);
      for (int k = 0; k < g.cols(); ++k) {
        if (!first) out << ',';
        out << format_double(g(i, k));
        first = false;
      }
    }
    out << '\n';
  }
}

void write_dataset_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_dataset_csv(dataset, out);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty input, expected header", 1);
  const auto header = split_fields(line);
  if (header.empty() || trim(header[0]).empty())
    throw ParseError("empty header", 1);

  // Header must be g0_0..g0_{p0-1}, g1_0, ... in order.
  std::vector<int> group_cols;  // p_j per group
  int cur_group = -1;
  for (size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    int j = -1, k = -1;
    if (name.size() >= 4 && name[0] == 'g') {
      size_t us = name.find('_');
      if (us != std::string::npos && us > 1 && us + 1 < name.size()) {
        try {
          size_t pos1 = 0, pos2 = 0;
          j = std::stoi(name.substr(1, us - 1), &pos1);
          k = std::stoi(name.substr(us + 1), &pos2);
          if (pos1 != us - 1 || pos2 != name.size() - us - 1) j = -1;
        } catch (const std::exception&) {
          j = -1;
        }
      }
    }
    if (j < 0 || k < 0)
      throw ParseError("bad header field '" + name + "', expected g<j>_<k>", 1);
    if (j == cur_group + 1 && k == 0) {
      group_cols.push_back(1);
      ++cur_group;
    } else if (j == cur_group && k == group_cols.back()) {
      ++group_cols.back();
    } else {
      throw ParseError("header field '" + name + "' out of order", 1);
    }
  }
  if (group_cols.size() < 2)
    throw ParseError("need at least 2 groups in header", 1);

  const int total_cols = static_cast<int>(header.size());
  std::vector<std::vector<double>> rows;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    // Skip a trailing blank line.
    if (trim(line).empty()) {
      std::string rest;
      if (std::getline(in, rest) && !trim(rest).empty())
        throw ParseError("blank line inside data", line_number);
      break;
    }
    const auto fields = split_fields(line);
    if (static_cast<int>(fields.size()) != total_cols)
      throw ParseError("expected " + std::to_string(total_cols) + " fields, got " +
                           std::to_string(fields.size()),
                       line_number);
    std::vector<double> row(fields.size());
    for (size_t c = 0; c < fields.size(); ++c)
      row[c] = parse_double(trim(fields[c]), line_number);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data rows", line_number);

  const int n = static_cast<int>(rows.size());
  std::vector<Matrix> groups;
  int col0 = 0;
  for (int p : group_cols) {
    Matrix g(n, p);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < p; ++k) g(i, k) = rows[static_cast<size_t>(i)][static_cast<size_t>(col0 + k)];
    groups.push_back(std::move(g));
    col0 += p;
  }
  return Dataset(std::move(groups));
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_dataset_csv(in);
}

}  // namespace dpdhsic
