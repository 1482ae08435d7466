#include "colog/log_ingest.hpp"

#include <fstream>

#include "colog/errors.hpp"

namespace colog {

namespace {

const char* builtin_expression(const std::string& name) {
  // timestamp/host/service are optional extras; `message` is mandatory.
  if (name == "syslog")
    return R"(^(?<timestamp>[A-Z][a-z]{2}\s+\d+\s+\d{2}:\d{2}:\d{2})\s+(?<host>\S+)\s+(?<service>[^:\s\[\]]+)(?:\[\d+\])?:\s*(?<message>.*)$)";
  if (name == "kernel")
    return R"(^(?:\[\s*(?<timestamp>\d+\.\d+)\s*\]\s*)?(?:(?<service>[A-Za-z0-9_.-]+):\s+)?(?<message>.*)$)";
  if (name == "generic") return R"(^(?<message>.*)$)";
  return nullptr;
}

std::string trim_copy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// True when no whitespace-separated token is a plain alphabetic word, i.e.
// the message is addresses, hex dumps or bare ids rather than readable text.
bool looks_header_only(const std::string& message) {
  std::size_t start = 0;
  while (start < message.size()) {
    while (start < message.size() && std::isspace(static_cast<unsigned char>(message[start])))
      ++start;
    std::size_t end = start;
    bool all_alpha = true;
    while (end < message.size() && !std::isspace(static_cast<unsigned char>(message[end]))) {
      if (!std::isalpha(static_cast<unsigned char>(message[end]))) all_alpha = false;
      ++end;
    }
    if (all_alpha && end - start >= 2) return false;
    start = end;
  }
  return true;
}

}  // namespace

HeaderPattern::HeaderPattern(const std::string& expression) : expression_(expression) {
  try {
    regex_.assign(expression, boost::regex::perl);
  } catch (const boost::regex_error& e) {
    throw ConfigError("invalid header pattern: " + std::string(e.what()));
  }
  const auto probe = [&](const char* name) {
    // mark_count does not expose names; probe by formatting a dummy match.
    return expression.find("(?<" + std::string(name) + ">") != std::string::npos;
  };
  if (!probe("message"))
    throw ConfigError("header pattern needs a named capture group (?<message>...)");
  has_timestamp_ = probe("timestamp");
  has_host_ = probe("host");
  has_service_ = probe("service");
}

HeaderPattern HeaderPattern::named(const std::string& name) {
  const char* expr = builtin_expression(name);
  if (!expr) throw ConfigError("unknown header pattern `" + name + "` (syslog|kernel|generic)");
  return HeaderPattern(expr);
}

bool HeaderPattern::is_builtin(const std::string& name) {
  return builtin_expression(name) != nullptr;
}

LogRecord HeaderPattern::split(const std::string& raw_line, long line_no) const {
  LogRecord rec;
  rec.line_no = line_no;
  boost::smatch m;
  if (boost::regex_match(raw_line, m, regex_)) {
    rec.message = trim_copy(m["message"].str());
    if (has_timestamp_ && m["timestamp"].matched) rec.timestamp = m["timestamp"].str();
    if (has_host_ && m["host"].matched) rec.host = m["host"].str();
    if (has_service_ && m["service"].matched) rec.service = m["service"].str();
  } else {
    rec.message = trim_copy(raw_line);
  }
  rec.header_only = looks_header_only(rec.message);
  return rec;
}

std::vector<std::string> read_lines_lossy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open log file: " + path);
  std::vector<std::string> lines;
  std::string raw;
  while (std::getline(in, raw)) {
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    // Validate UTF-8; replace offending bytes with U+FFFD.
    std::string clean;
    clean.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
      const unsigned char c = raw[i];
      std::size_t len = 0;
      if (c < 0x80)
        len = 1;
      else if ((c >> 5) == 0x6)
        len = 2;
      else if ((c >> 4) == 0xE)
        len = 3;
      else if ((c >> 3) == 0x1E)
        len = 4;
      bool ok = len > 0 && i + len <= raw.size();
      for (std::size_t j = 1; ok && j < len; ++j)
        ok = (static_cast<unsigned char>(raw[i + j]) >> 6) == 0x2;
      if (ok) {
        clean.append(raw, i, len);
        i += len;
      } else {
        clean.append("\xEF\xBF\xBD");
        ++i;
      }
    }
    lines.push_back(std::move(clean));
  }
  return lines;
}

std::vector<LogRecord> split_file(const std::string& path, const HeaderPattern& pattern) {
  const auto lines = read_lines_lossy(path);
  std::vector<LogRecord> records;
  records.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim_copy(lines[i]).empty()) continue;  // blank lines yield no record
    records.push_back(pattern.split(lines[i], static_cast<long>(i)));
  }
  return records;
}

}  // namespace colog
