#include "rqm/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace rqm::config {

namespace {

const std::vector<std::string> kRepeatable{"noise.atom", "noise.uniform"};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_repeatable(const std::string& key) {
  return std::find(kRepeatable.begin(), kRepeatable.end(), key) != kRepeatable.end();
}

bool is_known(const std::string& key) {
  const auto& keys = known_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "noise.atom",          "noise.uniform",

      "sim.seed",            "sim.steps",           "sim.replicates",      "sim.burn_in",
      "sim.bins",            "sim.initial_states",  "sim.threads",         "sim.write_trajectory",
      "sim.trajectory_steps",

      "orbit.theta_min",     "orbit.theta_max",     "orbit.samples",       "orbit.period",

      "kernel.x",            "kernel.y_points",     "kernel.steps",        "kernel.resolution",
      "kernel.tolerance",    "kernel.margin",

      "minorize.period",     "minorize.theta0",     "minorize.j_lo",       "minorize.j_hi",
      "minorize.grid",       "minorize.resolution", "minorize.max_period",

      "stability.initial_states",

      "extinction.x0",       "extinction.replicates", "extinction.steps",  "extinction.threshold",
      "extinction.verdict_fraction",

      "cyclicity.j_lo",      "cyclicity.j_hi",      "cyclicity.steps",     "cyclicity.d_max",
      "cyclicity.x0",

      "kolmogorov.theta0",   "kolmogorov.eta",      "kolmogorov.tv_threshold",

      "output.dir",
  };
  return keys;
}

double parse_double(std::string_view token) {
  double v = 0.0;
  const auto* end = token.data() + token.size();
  const auto res = std::from_chars(token.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ConfigError("not a number: '" + std::string(token) + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view token) {
  std::uint64_t v = 0;
  const auto* end = token.data() + token.size();
  const auto res = std::from_chars(token.data(), end, v);
  if (res.ec == std::errc{} && res.ptr == end) return v;
  // Accept integral scientific literals such as 1e6.
  const double d = parse_double(token);
  if (d < 0.0 || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
    throw ConfigError("not a nonnegative integer: '" + std::string(token) + "'");
  }
  return static_cast<std::uint64_t>(d);
}

std::vector<std::string_view> split_ws(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == ',')) ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\t' && text[j] != ',') ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text, const std::string& source) {
  ExperimentConfig cfg;
  cfg.source_ = source;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError(where + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!is_known(key)) throw ConfigError(where + "unknown key '" + key + "'");
    if (cfg.entries_.contains(key) && !is_repeatable(key)) {
      throw ConfigError(where + "duplicate key '" + key + "'");
    }
    cfg.set(key, value, line_no, false);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void ExperimentConfig::override_with(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override must be key=value: '" + std::string(assignment) + "'");
  const std::string key(trim(assignment.substr(0, eq)));
  if (!is_known(key)) throw ConfigError("override: unknown key '" + key + "'");
  set(key, std::string(trim(assignment.substr(eq + 1))), 0, true);
}

void ExperimentConfig::set(const std::string& key, std::string value, int line, bool replace) {
  auto& e = entries_[key];
  if (replace) e.values.clear();
  e.values.push_back(std::move(value));
  e.line = line;
}

std::string ExperimentConfig::where(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.line == 0) return "override " + key + ": ";
  return source_ + ":" + std::to_string(it->second.line) + ": ";
}

const std::string& ExperimentConfig::single(const std::string& key) const {
  return entries_.at(key).values.back();
}

std::string ExperimentConfig::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? single(key) : fallback;
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  try {
    return parse_double(single(key));
  } catch (const ConfigError& e) {
    throw ConfigError(where(key) + e.what());
  }
}

std::optional<double> ExperimentConfig::get_optional_double(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return get_double(key, 0.0);
}

std::uint64_t ExperimentConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  try {
    return parse_uint(single(key));
  } catch (const ConfigError& e) {
    throw ConfigError(where(key) + e.what());
  }
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = single(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(where(key) + "not a boolean: '" + v + "'");
}

std::vector<double> ExperimentConfig::get_doubles(const std::string& key, std::vector<double> fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  try {
    for (auto tok : split_ws(single(key))) out.push_back(parse_double(tok));
  } catch (const ConfigError& e) {
    throw ConfigError(where(key) + e.what());
  }
  if (out.empty()) throw ConfigError(where(key) + "empty list");
  return out;
}

noise::NoiseModel ExperimentConfig::noise_model() const {
  std::vector<noise::Atom> atoms;
  std::vector<noise::UniformPiece> pieces;
  auto numbers = [&](const std::string& key, const std::string& value, std::size_t expected) {
    std::vector<double> v;
    try {
      for (auto tok : split_ws(value)) v.push_back(parse_double(tok));
    } catch (const ConfigError& e) {
      throw ConfigError(where(key) + e.what());
    }
    if (v.size() != expected) {
      throw ConfigError(where(key) + key + " expects " + std::to_string(expected) + " numbers");
    }
    return v;
  };
  if (const auto it = entries_.find("noise.atom"); it != entries_.end()) {
    for (const auto& value : it->second.values) {
      const auto v = numbers("noise.atom", value, 2);
      atoms.push_back({v[0], v[1]});
    }
  }
  if (const auto it = entries_.find("noise.uniform"); it != entries_.end()) {
    for (const auto& value : it->second.values) {
      const auto v = numbers("noise.uniform", value, 3);
      pieces.push_back({v[0], v[1], v[2]});
    }
  }
  if (atoms.empty() && pieces.empty()) throw ConfigError("config: [noise] section defines no components");
  try {
    return noise::NoiseModel(std::move(atoms), std::move(pieces));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: invalid noise model: ") + e.what());
  }
}

}  // namespace rqm::config
