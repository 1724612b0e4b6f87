#pragma once

// Command-line front end: CSV input and output, flat key=value configs, run
// manifests and the `postsel` subcommands.

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "postsel/errors.hpp"

namespace postsel::cli {

/// Bad invocation or unreadable input; exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

enum ExitCode : int { kOk = 0, kUsage = 2, kStatistical = 3, kInternal = 4 };

struct InputData {
  std::vector<double> y;
  /// Present when the file has a `mu` column.
  std::optional<std::vector<double>> mu;
};

/// Reads a CSV with a header row and a numeric `y` column. Other columns are
/// ignored except `mu`. Errors carry the 1-based line number.
InputData read_input_csv(const std::string& path);
InputData parse_input_csv(const std::string& text);

/// Shortest decimal that parses back to the same double; NaN prints as NA.
std::string format_double(double x);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void header(const std::vector<std::string>& cols);
  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(double x);
  CsvWriter& cell(std::size_t x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(bool b) { return cell(std::size_t{b ? 1u : 0u}); }
  void end_row();

 private:
  std::ostream& out_;
  bool first_ = true;
};

/// Flat key=value configuration. '#' starts a comment.
using Config = std::map<std::string, std::string>;

/// Throws UsageError naming the first key not in `allowed`, a duplicate key
/// or a line without '='.
Config parse_config(const std::string& text, const std::set<std::string>& allowed);
Config read_config(const std::string& path, const std::set<std::string>& allowed);

/// Typed lookups; a malformed value raises UsageError naming the key.
double config_double(const Config& c, const std::string& key, double fallback);
std::size_t config_size(const Config& c, const std::string& key, std::size_t fallback);
bool config_bool(const Config& c, const std::string& key, bool fallback);
std::string config_string(const Config& c, const std::string& key, const std::string& fallback);
std::vector<std::string> split_list(const std::string& s);

/// Entry point of the `postsel` tool. Returns the process exit code.
int run(int argc, char** argv);
/// Same, with explicit arguments (no program name) and output streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace postsel::cli
