#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "postsel/cli.hpp"

namespace postsel::cli {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string line_error(std::size_t line, const std::string& msg) {
  return "line " + std::to_string(line) + ": " + msg;
}

double parse_number(std::string_view s, std::size_t line, const char* column) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw UsageError(line_error(line, "cannot parse '" + std::string(s) + "' in column " + column +
                                          " as a finite number"));
  }
  return v;
}

}  // namespace

InputData parse_input_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::size_t y_col = 0, mu_col = 0;
  bool has_mu = false;
  InputData data;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (lineno == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (trim(view).empty()) continue;
    const auto fields = split_fields(view);
    if (header.empty()) {
      bool has_y = false;
      for (std::size_t j = 0; j < fields.size(); ++j) {
        header.emplace_back(fields[j]);
        if (fields[j] == "y") {
          if (has_y) throw UsageError(line_error(lineno, "duplicate column 'y'"));
          has_y = true;
          y_col = j;
        } else if (fields[j] == "mu") {
          has_mu = true;
          mu_col = j;
        }
      }
      if (!has_y) throw UsageError(line_error(lineno, "header has no column named 'y'"));
      if (has_mu) data.mu.emplace();
      continue;
    }
    if (fields.size() != header.size()) {
      throw UsageError(line_error(lineno, "expected " + std::to_string(header.size()) +
                                              " fields, found " + std::to_string(fields.size())));
    }
    data.y.push_back(parse_number(fields[y_col], lineno, "y"));
    if (has_mu) data.mu->push_back(parse_number(fields[mu_col], lineno, "mu"));
  }
  if (header.empty()) throw UsageError(line_error(std::max<std::size_t>(lineno, 1), "missing header row"));
  if (data.y.empty()) throw UsageError(line_error(lineno + 1, "no data rows"));
  return data;
}

InputData read_input_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open input file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_input_csv(ss.str());
}

std::string format_double(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

void CsvWriter::header(const std::vector<std::string>& cols) {
  for (const auto& c : cols) cell(c);
  end_row();
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (!first_) out_ << ',';
  out_ << s;
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::cell(double x) { return cell(format_double(x)); }
CsvWriter& CsvWriter::cell(std::size_t x) { return cell(std::to_string(x)); }
CsvWriter& CsvWriter::cell(long long x) { return cell(std::to_string(x)); }

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

}  // namespace postsel::cli
