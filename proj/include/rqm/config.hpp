#pragma once

// Flat sectioned plain-text experiment configuration.
//
//   # comment
//   [noise]
//   uniform = 2.0 3.0 1.0     # lo hi weight, repeatable
//   atom = 2.5 0.5            # location weight, repeatable
//   [sim]
//   seed = 42
//
// Keys are addressed as section.key. Numbers are parsed with
// std::from_chars, so the current locale never matters. Unknown keys are
// rejected with the offending line.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rqm/noise.hpp"

namespace rqm::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Entry {
  std::vector<std::string> values;  // one per occurrence; repeatable keys may have several
  int line = 0;                     // 0 for command-line overrides
};

class ExperimentConfig {
 public:
  static ExperimentConfig parse(std::string_view text, const std::string& source = "config");
  static ExperimentConfig load(const std::string& path);

  /// Applies "section.key=value". Replaces every earlier occurrence.
  void override_with(std::string_view assignment);

  [[nodiscard]] bool has(const std::string& key) const { return entries_.contains(key); }
  [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double get_double(const std::string& key, double fallback) const;
  [[nodiscard]] std::optional<double> get_optional_double(const std::string& key) const;
  [[nodiscard]] std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
  [[nodiscard]] std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

  /// Builds the noise model from every [noise] atom/uniform line.
  [[nodiscard]] noise::NoiseModel noise_model() const;

  [[nodiscard]] const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  void set(const std::string& key, std::string value, int line, bool replace);
  [[nodiscard]] std::string where(const std::string& key) const;
  [[nodiscard]] const std::string& single(const std::string& key) const;

  std::string source_;
  std::map<std::string, Entry> entries_;
};

/// Every key the parser accepts.
const std::vector<std::string>& known_keys();

double parse_double(std::string_view token);
std::uint64_t parse_uint(std::string_view token);
std::vector<std::string_view> split_ws(std::string_view text);

}  // namespace rqm::config
