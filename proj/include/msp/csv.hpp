#pragma once

#include <string>
#include <vector>

namespace msp {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  int require_column(const std::string& name) const;  // DataError when absent
};

// Comma-separated with a header row.  Double-quoted fields are understood
// on input; output never needs quoting for the tables we emit.
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

// Shortest round-trip formatting for doubles; report files must replay
// byte-identically, so all numeric output funnels through here.
std::string format_double(double v);

double parse_double(const std::string& cell, const std::string& context);

}  // namespace msp
