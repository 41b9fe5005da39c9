#include "msp/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "msp/errors.hpp"

namespace msp {

namespace {

std::vector<std::string> split_line(const std::string& line,
                                    const std::string& path) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  require_data(!quoted, path + ": unterminated quote");
  out.push_back(field);
  return out;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

int CsvTable::require_column(const std::string& name) const {
  const int c = column(name);
  require_data(c >= 0, "missing column: " + name);
  return c;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  require_data(in.good(), "cannot open " + path);
  CsvTable t;
  std::string line;
  require_data(static_cast<bool>(std::getline(in, line)),
               path + ": empty file");
  t.header = split_line(line, path);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split_line(line, path);
    require_data(row.size() == t.header.size(),
                 path + ": row width does not match header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  require_data(out.good(), "cannot write " + path);
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    out << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    require_internal(row.size() == table.header.size(),
                     "csv row width mismatch on write");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& cell, const std::string& context) {
  require_data(!cell.empty() && cell != "NA" && cell != "nan",
               context + ": missing value");
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    throw DataError(context + ": not a number: " + cell);
  }
  require_data(pos == cell.size(), context + ": trailing junk in: " + cell);
  return v;
}

}  // namespace msp
