#include "nlgpc/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace nlgpc {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: empty key at line " + std::to_string(lineno));
    if (!cfg.values_.emplace(key, value).second)
      throw ConfigError("config: duplicate key " + key);
  }
  return cfg;
}

const std::string* Config::lookup(const std::string& key) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

double Config::get_double(const std::string& key, double fallback) {
  const std::string* v = lookup(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double out = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " is not a number: " + *v);
  }
}

int Config::get_int(const std::string& key, int fallback) {
  const std::string* v = lookup(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const int out = std::stoi(*v, &used);
    if (used != v->size()) throw std::invalid_argument("");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " is not an integer: " + *v);
  }
}

bool Config::get_bool(const std::string& key, bool fallback) {
  const std::string* v = lookup(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "off") return false;
  throw ConfigError("config: " + key + " is not a boolean: " + *v);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) {
  const std::string* v = lookup(key);
  return v ? *v : fallback;
}

Vec Config::get_vec(const std::string& key, const Vec& fallback, std::size_t count) {
  const std::string* v = lookup(key);
  if (!v) return fallback;
  Vec out;
  std::stringstream ss(*v);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(trim(cell)));
    } catch (const std::exception&) {
      throw ConfigError("config: " + key + " has a non-numeric entry: " + cell);
    }
  }
  if (out.size() != count)
    throw ConfigError("config: " + key + " must have exactly " + std::to_string(count) +
                      " comma-separated entries");
  return out;
}

void Config::finish() const {
  std::string unknown;
  for (const auto& [key, value] : values_)
    if (consumed_.count(key) == 0) unknown += (unknown.empty() ? "" : ", ") + key;
  if (!unknown.empty()) throw ConfigError("config: unknown keys: " + unknown);
}

}  // namespace nlgpc
