#pragma once

#include <optional>
#include <string>
#include <vector>

#include <boost/regex.hpp>

namespace colog {

// One parsed log entry. `message` is the free-text part that carries the
// sentiment; header fields are kept for reporting only.
struct LogRecord {
  long line_no = 0;  // 0-based source line index, strictly increasing per file
  std::optional<std::string> timestamp;
  std::optional<std::string> host;
  std::optional<std::string> service;
  std::string message;
  std::optional<int> label;  // 0 anomaly, 1 normal
  bool header_only = false;  // no human-readable message after stripping
};

// Regex header splitter standing in for a learned NER parser. Patterns use
// named capture groups; `message` is the only required group.
class HeaderPattern {
public:
  // Throws ConfigError on an invalid expression or a missing `message` group.
  explicit HeaderPattern(const std::string& expression);

  // Named built-ins: "syslog", "kernel", "generic".
  static HeaderPattern named(const std::string& name);
  static bool is_builtin(const std::string& name);

  // Unmatched lines fall back to a record whose whole line is the message.
  LogRecord split(const std::string& raw_line, long line_no) const;

  const std::string& expression() const { return expression_; }

private:
  std::string expression_;
  boost::regex regex_;
  bool has_timestamp_ = false;
  bool has_host_ = false;
  bool has_service_ = false;
};

// Reads a file as lines, replacing invalid UTF-8 bytes with U+FFFD. Keeps
// empty lines (callers skip them) so line numbers track the source file.
// Throws DataError if the file cannot be opened.
std::vector<std::string> read_lines_lossy(const std::string& path);

// Applies the pattern to every non-empty line of `path`.
std::vector<LogRecord> split_file(const std::string& path, const HeaderPattern& pattern);

}  // namespace colog
