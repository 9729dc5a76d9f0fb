#pragma once

#include <cstddef>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace eoam {

// Plain-text config format: one "key = value" per line, '#' starts a comment.
// Values are scalars or whitespace-separated lists. Units are SI unless the
// key name carries an explicit unit suffix (e.g. _kmh, _deg), converted on
// load by the consuming module.

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        line_number(line) {}
  std::size_t line_number;
};

class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text, const std::string& filename = "<string>") {
    Config cfg;
    cfg.name_ = filename;
    std::istringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError(filename, lineno, "expected 'key = value', got '" + trimmed + "'");
      std::string key = trim(trimmed.substr(0, eq));
      std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) throw ConfigError(filename, lineno, "empty key");
      if (cfg.values_.count(key))
        throw ConfigError(filename, lineno, "duplicate key '" + key + "'");
      cfg.values_[key] = value;
      cfg.lines_[key] = lineno;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  double get_double(const std::string& key) const {
    const std::string& raw = fetch(key);
    try {
      std::size_t pos = 0;
      double v = std::stod(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(name_, line_of(key), "key '" + key + "': not a number: '" + raw + "'");
    }
  }

  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& raw = fetch(key);
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw ConfigError(name_, line_of(key), "key '" + key + "': not a bool: '" + raw + "'");
  }

  std::string get_string(const std::string& key, const std::string& fallback = "") const {
    return has(key) ? fetch(key) : fallback;
  }

  std::vector<double> get_list(const std::string& key) const {
    const std::string& raw = fetch(key);
    std::istringstream ss(raw);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t pos = 0;
        out.push_back(std::stod(tok, &pos));
        if (pos != tok.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ConfigError(name_, line_of(key), "key '" + key + "': bad list element '" + tok + "'");
      }
    }
    if (out.empty()) throw ConfigError(name_, line_of(key), "key '" + key + "': empty list");
    return out;
  }

  const std::string& filename() const { return name_; }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  const std::string& fetch(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw ConfigError(name_, 0, "missing required key '" + key + "'");
    return it->second;
  }

  std::size_t line_of(const std::string& key) const {
    auto it = lines_.find(key);
    return it == lines_.end() ? 0 : it->second;
  }

  std::string name_;
  std::map<std::string, std::string> values_;
  std::map<std::string, std::size_t> lines_;
};

}  // namespace eoam
