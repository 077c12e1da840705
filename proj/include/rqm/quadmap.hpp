#pragma once

// Deterministic core of the quadratic family F_theta(x) = theta * x * (1 - x)
// on the state space (0,1).

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "rqm/interval.hpp"

namespace rqm::quadmap {

inline constexpr double kThetaMax = 4.0;

/// Throws std::domain_error unless 0 < theta <= 4.
void require_theta(double theta);
/// Throws std::domain_error unless 0 < x < 1.
void require_state(double x);

/// theta * x * (1 - x) with domain checks on both arguments.
double apply(double theta, double x);

/// Unchecked evaluation for inner loops whose inputs are already validated.
inline double step(double theta, double x) { return theta * x * (1.0 - x); }

/// A path counts as absorbed once it drops below the normal range. At
/// subnormal magnitudes theta * x rounds back to the same value for most
/// theta, so exact zero would never be reached.
inline bool absorbed(double x) { return x < std::numeric_limits<double>::min(); }

/// d/dx F_theta(x).
inline double derivative(double theta, double x) { return theta * (1.0 - 2.0 * x); }

/// Applies thetas[0] first, then thetas[1], and so on. Every theta must lie
/// strictly inside (0,4).
double compose_apply(std::span<const double> thetas, double x);

/// [x0, F x0, ..., F^n x0].
std::vector<double> iterate(double theta, double x0, std::size_t n);

/// 1 - 1/theta for theta > 1, nothing otherwise.
std::optional<double> fixed_point(double theta);

struct PeriodicOrbit {
  double theta = 0.0;
  int period = 0;
  std::vector<double> points;  // sorted ascending
  double multiplier = 0.0;     // product of F'(x_i) along the cycle

  [[nodiscard]] bool attractive() const;
  /// Largest orbit point.
  [[nodiscard]] double q() const { return points.back(); }
};

struct OrbitSearchOptions {
  std::vector<double> seeds;  // empty: evenly spaced defaults
  std::size_t n_seeds = 16;
  std::size_t warmup_steps = 10000;
  int newton_max_iter = 100;
  double newton_tol = 1e-12;
  double divisor_tol = 1e-9;
};

enum class OrbitSearchStatus {
  found,
  /// Every seed settled on an attracting cycle whose minimal period is not m.
  /// The logistic family has at most one attracting cycle, so this is a
  /// verified absence.
  other_period,
  /// No seed produced a cycle (chaotic or slowly converging parameters).
  not_converged,
};

struct OrbitSearchResult {
  std::optional<PeriodicOrbit> orbit;
  OrbitSearchStatus status = OrbitSearchStatus::not_converged;
  /// Minimal period of the attracting cycle actually seen, when one was seen.
  std::optional<int> observed_period;
};

/// Locates an attracting cycle of minimal period m by long-run iteration from
/// several seeds followed by Newton refinement of F^m(x) - x.
OrbitSearchResult search_periodic_orbit(double theta, int m, const OrbitSearchOptions& options = {});

std::optional<PeriodicOrbit> find_periodic_orbit(double theta, int m,
                                                 const OrbitSearchOptions& options = {});

/// d/dx (F^m x - x) at q(theta), i.e. multiplier - 1. Requires an attractive orbit.
double check_transversality(const PeriodicOrbit& orbit);

struct QSample {
  double theta = 0.0;
  std::optional<double> q;
  std::optional<double> dq;  // centered finite difference
};

struct QTable {
  int period = 0;
  std::vector<QSample> samples;
  std::size_t holes = 0;
  bool strictly_monotone = false;
  bool derivative_sign_constant = false;
  bool derivative_nonvanishing = false;
};

/// Samples q(theta), the largest point of the attracting m-cycle, on a
/// uniform grid over range (endpoints included).
QTable q_of_theta(const Interval& theta_range, int m, std::size_t n_samples,
                  double fd_step = 1e-5, double derivative_floor = 1e-9);

/// Inverts q on [lo, hi] by bisection. Requires q(lo) and q(hi) to bracket u.
std::optional<double> q_inverse(double u, const Interval& theta_range, int m);

/// Invariant interval [min{1 - 1/mu, F_mu(nu/4)}, nu/4] for parameters in [mu, nu].
struct InvariantInterval {
  double a = 0.0;
  double b = 0.0;

  [[nodiscard]] bool contains(double x) const { return a <= x && x <= b; }
};

InvariantInterval invariant_interval(double mu, double nu);

struct LyapunovResult {
  double exponent = 0.0;
  std::size_t terms = 0;
  std::size_t skipped = 0;          // orbit points exactly at the vertex 0.5
  bool terminated_early = false;    // orbit left (0,1)
};

/// Time average of log|F'(x_i)| over i in [burn_in, n).
LyapunovResult lyapunov_deterministic(double theta, double x0, std::size_t n, std::size_t burn_in);

}  // namespace rqm::quadmap
