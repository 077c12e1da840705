#pragma once

// Plain-text report serialization. Numbers always carry 17 significant
// digits and never depend on the locale.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rqm/engine.hpp"

namespace rqm::report {

std::string format_double(double v);

/// Ordered key=value record, one pair per line.
class KeyValue {
 public:
  void add(const std::string& key, double v) { lines_.emplace_back(key, format_double(v)); }
  void add(const std::string& key, std::uint64_t v) { lines_.emplace_back(key, std::to_string(v)); }
  void add(const std::string& key, int v) { lines_.emplace_back(key, std::to_string(v)); }
  void add(const std::string& key, bool v) { lines_.emplace_back(key, v ? "true" : "false"); }
  void add(const std::string& key, const char* v) { lines_.emplace_back(key, v); }
  void add(const std::string& key, const std::string& v) { lines_.emplace_back(key, v); }
  void add(const std::string& key, const std::vector<double>& v);

  [[nodiscard]] std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

/// Comma-separated table with a header row.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  Csv& row(const std::vector<std::string>& cells);

  [[nodiscard]] std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::size_t width_;
  std::string text_;
};

/// bin_left,bin_right,count,frequency; guards appear as the first and last rows.
Csv occupation_csv(const engine::OccupationMeasure& m);

/// step,x,epsilon; the epsilon on row k drove the move into x_k.
Csv trajectory_csv(const engine::Trajectory& t);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace rqm::report
