#include "ssrqd/csvio.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <stdexcept>
#include <system_error>

namespace ssrqd::csv {

std::string format(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc{}) {
    throw std::runtime_error("csv::format: to_chars failed");
  }
  return std::string(buf, res.ptr);
}

std::string format(std::int64_t x) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double x, int decimals) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::fixed,
                    decimals);
  if (res.ec != std::errc{}) {
    throw std::runtime_error("csv::format_fixed: to_chars failed");
  }
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  // Trim surrounding whitespace and a trailing CR from Windows line endings.
  for (std::string& f : fields) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ' || f.back() == '\t')) {
      f.pop_back();
    }
    std::size_t lead = 0;
    while (lead < f.size() && (f[lead] == ' ' || f[lead] == '\t')) ++lead;
    f.erase(0, lead);
  }
  return fields;
}

double parse_double(const std::string& token, const std::string& what) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw std::invalid_argument("cannot parse " + what + " from '" + token +
                                "'");
  }
  return value;
}

SeriesData read_series_csv(std::istream& in) {
  SeriesData data;
  std::string line;
  bool header_done = false;
  std::int64_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    const std::vector<std::string> fields = split_line(line);
    if (!header_done) {
      if (fields.size() == 1 && fields[0] == "x") {
        data.columns = 1;
      } else if (fields.size() == 2 && fields[0] == "v1" && fields[1] == "v2") {
        data.columns = 2;
      } else {
        throw std::invalid_argument(
            "series CSV: header must be 'x' or 'v1,v2'");
      }
      header_done = true;
      continue;
    }
    ++row;
    if (static_cast<int>(fields.size()) != data.columns) {
      throw std::invalid_argument("series CSV: row " + std::to_string(row) +
                                  " has wrong field count");
    }
    double x;
    if (data.columns == 1) {
      x = parse_double(fields[0], "observation");
    } else {
      x = parse_double(fields[0], "v1") - parse_double(fields[1], "v2");
    }
    if (!std::isfinite(x)) {
      throw std::invalid_argument("series CSV: non-finite value at row " +
                                  std::to_string(row));
    }
    if (x == 0.0) data.zero_rows.push_back(row);
    data.values.push_back(x);
  }
  if (!header_done) {
    throw std::invalid_argument("series CSV: missing header");
  }
  return data;
}

}  // namespace ssrqd::csv
