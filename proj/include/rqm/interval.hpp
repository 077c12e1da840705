#pragma once

#include <stdexcept>
#include <string>

namespace rqm {

/// Open interval (lo, hi) on the real line.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] constexpr double length() const { return hi - lo; }
  [[nodiscard]] constexpr double midpoint() const { return 0.5 * (lo + hi); }
  [[nodiscard]] constexpr bool contains(double x) const { return lo < x && x < hi; }
  [[nodiscard]] constexpr bool contains_closed(double x) const { return lo <= x && x <= hi; }

  friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

// Nondegenerate subinterval of the state space (0,1).
inline void require_state_interval(const Interval& j, const char* what) {
  if (!(j.lo >= 0.0 && j.hi <= 1.0 && j.lo < j.hi)) {
    throw std::invalid_argument(std::string(what) + ": interval must satisfy 0 <= lo < hi <= 1");
  }
}

}  // namespace rqm
