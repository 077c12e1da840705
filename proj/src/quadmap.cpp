#include "rqm/quadmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rqm::quadmap {

namespace {

constexpr double kBoundaryGuard = 1e-8;
constexpr double kCycleDetectTol = 1e-8;
constexpr int kMaxDetectedPeriod = 64;

struct PowerEval {
  double value;       // F^m(x)
  double derivative;  // d/dx F^m(x)
};

PowerEval eval_power(double theta, double x, int m) {
  double d = 1.0;
  for (int i = 0; i < m; ++i) {
    d *= derivative(theta, x);
    x = step(theta, x);
  }
  return {x, d};
}

double power(double theta, double x, int m) {
  for (int i = 0; i < m; ++i) x = step(theta, x);
  return x;
}

bool inside_open_unit(double x) { return x > 0.0 && x < 1.0 && std::isfinite(x); }

// Smallest p <= max_p with |F^p x - x| < tol, if any.
std::optional<int> minimal_period(double theta, double x, int max_p, double tol) {
  double y = x;
  for (int p = 1; p <= max_p; ++p) {
    y = step(theta, y);
    if (std::abs(y - x) < tol) return p;
  }
  return std::nullopt;
}

std::optional<double> newton_refine(double theta, double x, int m, const OrbitSearchOptions& opt) {
  for (int it = 0; it < opt.newton_max_iter; ++it) {
    const PowerEval e = eval_power(theta, x, m);
    const double g = e.value - x;
    const double dg = e.derivative - 1.0;
    if (dg == 0.0 || !std::isfinite(dg)) return std::nullopt;
    const double dx = g / dg;
    x -= dx;
    if (!inside_open_unit(x)) return std::nullopt;
    if (std::abs(dx) < opt.newton_tol) return x;
  }
  return std::nullopt;
}

PeriodicOrbit build_orbit(double theta, double x, int m) {
  PeriodicOrbit orbit;
  orbit.theta = theta;
  orbit.period = m;
  orbit.points.reserve(static_cast<std::size_t>(m));
  double lambda = 1.0;
  for (int i = 0; i < m; ++i) {
    orbit.points.push_back(x);
    lambda *= derivative(theta, x);
    x = step(theta, x);
  }
  std::sort(orbit.points.begin(), orbit.points.end());
  orbit.multiplier = lambda;
  return orbit;
}

std::vector<double> default_seeds(std::size_t n) {
  std::vector<double> seeds(n);
  for (std::size_t i = 0; i < n; ++i) {
    seeds[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  }
  return seeds;
}

}  // namespace

void require_theta(double theta) {
  if (!(theta > 0.0 && theta <= kThetaMax)) {
    throw std::domain_error("theta must lie in (0,4], got " + std::to_string(theta));
  }
}

void require_state(double x) {
  if (!(x > 0.0 && x < 1.0)) {
    throw std::domain_error("state must lie in (0,1), got " + std::to_string(x));
  }
}

double apply(double theta, double x) {
  require_theta(theta);
  require_state(x);
  return step(theta, x);
}

double compose_apply(std::span<const double> thetas, double x) {
  if (thetas.empty()) throw std::invalid_argument("compose_apply: empty parameter sequence");
  for (double theta : thetas) {
    if (!(theta > 0.0 && theta < kThetaMax)) {
      throw std::domain_error("compose_apply: theta must lie in (0,4)");
    }
    x = apply(theta, x);
  }
  return x;
}

std::vector<double> iterate(double theta, double x0, std::size_t n) {
  require_theta(theta);
  require_state(x0);
  std::vector<double> orbit;
  orbit.reserve(n + 1);
  orbit.push_back(x0);
  double x = x0;
  for (std::size_t i = 0; i < n; ++i) {
    x = apply(theta, x);
    orbit.push_back(x);
  }
  return orbit;
}

std::optional<double> fixed_point(double theta) {
  require_theta(theta);
  if (theta <= 1.0) return std::nullopt;
  return 1.0 - 1.0 / theta;
}

bool PeriodicOrbit::attractive() const { return std::abs(multiplier) < 1.0; }

OrbitSearchResult search_periodic_orbit(double theta, int m, const OrbitSearchOptions& options) {
  require_theta(theta);
  if (m < 1) throw std::invalid_argument("search_periodic_orbit: period must be >= 1");

  const std::vector<double> seeds =
      options.seeds.empty() ? default_seeds(options.n_seeds) : options.seeds;

  OrbitSearchResult result;
  for (double seed : seeds) {
    if (!inside_open_unit(seed)) continue;
    double x = seed;
    for (std::size_t i = 0; i < options.warmup_steps && inside_open_unit(x); ++i) {
      x = step(theta, x);
    }
    if (!inside_open_unit(x)) continue;

    if (!result.observed_period) {
      const auto p = minimal_period(theta, x, std::max(kMaxDetectedPeriod, 2 * m), kCycleDetectTol);
      if (p && std::abs(eval_power(theta, x, *p).derivative) < 1.0) result.observed_period = p;
    }

    const auto refined = newton_refine(theta, x, m, options);
    if (!refined) continue;
    const double xr = *refined;
    if (xr < kBoundaryGuard || xr > 1.0 - kBoundaryGuard) continue;

    bool proper_divisor_cycle = false;
    for (int d = 1; d < m && !proper_divisor_cycle; ++d) {
      if (m % d == 0 && std::abs(power(theta, xr, d) - xr) < options.divisor_tol) {
        proper_divisor_cycle = true;
      }
    }
    if (proper_divisor_cycle) continue;

    PeriodicOrbit orbit = build_orbit(theta, xr, m);
    if (!orbit.attractive()) continue;
    result.orbit = std::move(orbit);
    result.status = OrbitSearchStatus::found;
    result.observed_period = m;
    return result;
  }

  result.status = (result.observed_period && *result.observed_period != m)
                      ? OrbitSearchStatus::other_period
                      : OrbitSearchStatus::not_converged;
  return result;
}

std::optional<PeriodicOrbit> find_periodic_orbit(double theta, int m, const OrbitSearchOptions& options) {
  return search_periodic_orbit(theta, m, options).orbit;
}

double check_transversality(const PeriodicOrbit& orbit) {
  if (!orbit.attractive()) {
    throw std::invalid_argument("check_transversality: orbit is not attractive");
  }
  return orbit.multiplier - 1.0;
}

QTable q_of_theta(const Interval& theta_range, int m, std::size_t n_samples, double fd_step,
                  double derivative_floor) {
  if (n_samples == 0) throw std::invalid_argument("q_of_theta: need at least one sample");
  if (!(theta_range.lo <= theta_range.hi)) throw std::invalid_argument("q_of_theta: empty range");

  QTable table;
  table.period = m;
  table.samples.reserve(n_samples);
  const double span = theta_range.hi - theta_range.lo;
  for (std::size_t i = 0; i < n_samples; ++i) {
    QSample s;
    s.theta = n_samples == 1 ? theta_range.lo
                             : theta_range.lo + span * static_cast<double>(i) /
                                                    static_cast<double>(n_samples - 1);
    if (const auto orbit = find_periodic_orbit(s.theta, m)) {
      s.q = orbit->q();
      const auto up = find_periodic_orbit(s.theta + fd_step, m);
      const auto down = find_periodic_orbit(s.theta - fd_step, m);
      if (up && down) s.dq = (up->q() - down->q()) / (2.0 * fd_step);
    } else {
      ++table.holes;
    }
    table.samples.push_back(s);
  }

  int dir = 0;
  bool monotone = true;
  std::optional<double> prev;
  for (const auto& s : table.samples) {
    if (!s.q) continue;
    if (prev) {
      const double diff = *s.q - *prev;
      const int sgn = diff > 0.0 ? 1 : (diff < 0.0 ? -1 : 0);
      if (sgn == 0 || (dir != 0 && sgn != dir)) monotone = false;
      dir = sgn;
    }
    prev = s.q;
  }
  table.strictly_monotone = monotone;

  int dsign = 0;
  bool sign_constant = true;
  bool nonvanishing = true;
  bool any_dq = false;
  for (const auto& s : table.samples) {
    if (!s.dq) continue;
    any_dq = true;
    if (std::abs(*s.dq) <= derivative_floor) nonvanishing = false;
    const int sgn = *s.dq > 0.0 ? 1 : -1;
    if (dsign != 0 && sgn != dsign) sign_constant = false;
    dsign = sgn;
  }
  table.derivative_sign_constant = any_dq && sign_constant;
  table.derivative_nonvanishing = any_dq && nonvanishing;
  return table;
}

std::optional<double> q_inverse(double u, const Interval& theta_range, int m) {
  double lo = theta_range.lo;
  double hi = theta_range.hi;
  const auto olo = find_periodic_orbit(lo, m);
  const auto ohi = find_periodic_orbit(hi, m);
  if (!olo || !ohi) return std::nullopt;
  double flo = olo->q() - u;
  const double fhi = ohi->q() - u;
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) return std::nullopt;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto orbit = find_periodic_orbit(mid, m);
    if (!orbit) return std::nullopt;
    const double fmid = orbit->q() - u;
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

InvariantInterval invariant_interval(double mu, double nu) {
  if (!(mu > 1.0 && mu <= nu && nu < kThetaMax)) {
    throw std::domain_error("invariant_interval: requires 1 < mu <= nu < 4");
  }
  const double b = nu / 4.0;
  const double a = std::min(1.0 - 1.0 / mu, step(mu, b));
  return {a, b};
}

LyapunovResult lyapunov_deterministic(double theta, double x0, std::size_t n, std::size_t burn_in) {
  require_theta(theta);
  require_state(x0);
  if (!(n > burn_in)) throw std::invalid_argument("lyapunov_deterministic: need n > burn_in");

  LyapunovResult r;
  double sum = 0.0;
  double x = x0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!inside_open_unit(x)) {
      r.terminated_early = true;
      break;
    }
    if (i >= burn_in) {
      const double d = std::abs(derivative(theta, x));
      if (d == 0.0) {
        ++r.skipped;
      } else {
        sum += std::log(d);
        ++r.terms;
      }
    }
    x = step(theta, x);
  }
  r.exponent = r.terms > 0 ? sum / static_cast<double>(r.terms) : 0.0;
  return r;
}

}  // namespace rqm::quadmap
