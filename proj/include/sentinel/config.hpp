#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sentinel/detector.hpp"
#include "sentinel/gateway.hpp"

namespace sentinel {

/// Flat `key = value` text configuration. Blank lines and lines starting with
/// '#' are ignored. Lists are comma-separated.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::int64_t> get_int_list(const std::string& key,
                                         const std::vector<std::int64_t>& fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  /// Sorted `key=value` lines; parse(to_text()) reproduces the config.
  std::string to_text() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Accepts "inf", "+inf" and "-inf" besides ordinary numbers.
double parse_double(const std::string& text);
std::string format_double(double value);

/// Reads variant, N, tau, epsilon and temperature keys.
DetectorConfig detector_config_from(const KeyValueConfig& cfg);

}  // namespace sentinel
