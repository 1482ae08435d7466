#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace colog {

// Flat `key = value` config with `#` comments. One file drives all pipeline
// stages; keys are namespaced by stage prefix ("train.lr"). Unknown keys are
// rejected against a schema so typos fail loudly instead of being ignored.
class Config {
public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated list of doubles, e.g. "0.6,0.2,0.2".
  std::vector<double> get_doubles(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  // Every key must either be in `exact` or start with one of `prefixes`.
  void reject_unknown_keys(const std::set<std::string>& exact,
                           const std::vector<std::string>& prefixes) const;

  const std::map<std::string, std::string>& values() const { return values_; }

private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace colog
