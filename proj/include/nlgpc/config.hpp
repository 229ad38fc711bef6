#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "nlgpc/errors.hpp"
#include "nlgpc/linalg.hpp"

namespace nlgpc {

/// Line-oriented `key = value` file: one pair per line, '#' starts a
/// comment, blank lines ignored. Keys must be unique. Every key must be
/// consumed by a getter before finish() or the file is rejected.
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::string get_string(const std::string& key, const std::string& fallback);
  /// Comma-separated doubles; must have exactly `count` entries when given.
  Vec get_vec(const std::string& key, const Vec& fallback, std::size_t count);

  /// Throws ConfigError listing any keys no getter asked for.
  void finish() const;

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;

  const std::string* lookup(const std::string& key);
};

}  // namespace nlgpc
