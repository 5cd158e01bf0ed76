#include "dwreg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace dwreg {

std::size_t Dataset::find(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    throw DataError("dataset has no column named '" + name + "'");
  }
  return static_cast<std::size_t>(it - names.begin());
}

const std::vector<double>& Dataset::column(const std::string& name) const {
  return columns[find(name)];
}

ColumnKind Dataset::kind(const std::string& name) const {
  return kinds[find(name)];
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col,
                  const std::string& name) {
  const auto where = [&] {
    return "row " + std::to_string(row) + ", column '" + name + "' (#" +
           std::to_string(col + 1) + ")";
  };
  if (cell.empty()) {
    throw DataError("empty cell at " + where());
  }
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw DataError("non-numeric cell '" + cell + "' at " + where());
  }
  if (!std::isfinite(v)) {
    throw DataError("non-finite value '" + cell + "' at " + where());
  }
  return v;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

Dataset read_csv(std::istream& in, const CsvOptions& opts) {
  std::string line;
  std::vector<std::string> header;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    header = split_line(line);
    break;
  }
  if (header.empty()) {
    throw DataError("csv input has no header row");
  }

  std::size_t y_col = header.size();
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == opts.response) y_col = j;
  }
  const bool has_y = y_col != header.size();
  if (!has_y && opts.require_response) {
    throw DataError("csv input has no response column '" + opts.response +
                    "'");
  }

  Dataset data;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j == y_col) continue;
    if (header[j].empty()) {
      throw DataError("csv header has an empty column name (#" +
                      std::to_string(j + 1) + ")");
    }
    data.names.push_back(header[j]);
  }
  data.columns.resize(data.names.size());

  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    ++row;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    }
    std::size_t k = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const double v = parse_cell(cells[j], row, j, header[j]);
      if (j == y_col) {
        if (v < 0.0 || v != std::floor(v) || v > 9.007199254740992e15) {
          throw DataError("response must be a non-negative integer, got '" +
                          cells[j] + "' at row " + std::to_string(row));
        }
        data.y.push_back(static_cast<std::int64_t>(v));
      } else {
        data.columns[k++].push_back(v);
      }
    }
  }
  if (!has_y) data.y.assign(row, 0);
  if (row == 0) {
    throw DataError("csv input has no data rows");
  }

  data.kinds.resize(data.names.size(), ColumnKind::continuous);
  for (std::size_t j = 0; j < data.names.size(); ++j) {
    if (contains(opts.force_continuous, data.names[j])) continue;
    const bool forced = contains(opts.force_dummy, data.names[j]);
    const auto& col = data.columns[j];
    const bool binary = std::all_of(col.begin(), col.end(), [](double v) {
      return v == 0.0 || v == 1.0;
    });
    if (forced && !binary) {
      throw DataError("column '" + data.names[j] +
                      "' is forced dummy but has values outside {0, 1}");
    }
    if (binary) data.kinds[j] = ColumnKind::dummy;
  }
  return data;
}

Dataset read_csv_file(const std::string& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open '" + path + "' for reading");
  }
  try {
    return read_csv(in, opts);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_csv(std::ostream& out, const Dataset& data,
               const std::vector<std::string>& comment_lines) {
  out.precision(17);
  for (const auto& c : comment_lines) out << "# " << c << "\n";
  out << "y";
  for (const auto& name : data.names) out << "," << name;
  out << "\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << data.y[i];
    for (const auto& col : data.columns) out << "," << col[i];
    out << "\n";
  }
}

}  // namespace dwreg
