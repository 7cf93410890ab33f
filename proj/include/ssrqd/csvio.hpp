#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ssrqd::csv {

// Shortest decimal string that round-trips the double (std::to_chars), so
// output is locale-independent and byte-stable across platforms and runs.
std::string format(double x);
std::string format(std::int64_t x);

// Fixed-precision variant for presentation tables.
std::string format_fixed(double x, int decimals);

std::vector<std::string> split_line(const std::string& line);

double parse_double(const std::string& token, const std::string& what);

// Observation series for the monitoring commands.  Accepted headers:
//   x            one value per row
//   v1,v2        paired rows, monitored as x = v1 - v2
// Rows where x is exactly zero are recorded in zero_rows (1-based data row
// numbers); what to do about them is the caller's tie-policy decision.
struct SeriesData {
  std::vector<double> values;
  std::vector<std::int64_t> zero_rows;
  int columns = 1;
};

SeriesData read_series_csv(std::istream& in);

}  // namespace ssrqd::csv
