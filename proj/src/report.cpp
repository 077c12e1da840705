#include "rqm/report.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <stdexcept>

namespace rqm::report {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

void KeyValue::add(const std::string& key, const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ' ';
    s += format_double(v[i]);
  }
  lines_.emplace_back(key, s);
}

std::string KeyValue::str() const {
  std::string out;
  for (const auto& [k, v] : lines_) out += k + "=" + v + "\n";
  return out;
}

void KeyValue::write(const std::filesystem::path& path) const { write_text(path, str()); }

Csv::Csv(std::vector<std::string> header) : width_(header.size()) { row(header); }

Csv& Csv::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::logic_error("Csv: row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
  return *this;
}

std::string Csv::str() const { return text_; }

void Csv::write(const std::filesystem::path& path) const { write_text(path, text_); }

Csv occupation_csv(const engine::OccupationMeasure& m) {
  Csv csv({"bin_left", "bin_right", "count", "frequency"});
  const double total = static_cast<double>(m.total());
  auto freq = [&](std::uint64_t c) { return format_double(total > 0 ? static_cast<double>(c) / total : 0.0); };
  csv.row({"-inf", "0", std::to_string(m.underflow()), freq(m.underflow())});
  for (std::size_t k = 0; k < m.bins(); ++k) {
    csv.row({format_double(m.edges()[k]), format_double(m.edges()[k + 1]), std::to_string(m.counts()[k]),
             freq(m.counts()[k])});
  }
  csv.row({"1", "inf", std::to_string(m.overflow()), freq(m.overflow())});
  return csv;
}

Csv trajectory_csv(const engine::Trajectory& t) {
  Csv csv({"step", "x", "epsilon"});
  for (std::size_t k = 0; k < t.x.size(); ++k) {
    csv.row({std::to_string(k), format_double(t.x[k]), k == 0 ? std::string() : format_double(t.epsilon[k - 1])});
  }
  return csv;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace rqm::report
