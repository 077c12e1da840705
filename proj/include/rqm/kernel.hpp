#pragma once

// Transition densities of the chain driven by the absolutely continuous part
// of the noise:
//
//   p(x, y)       = h(y / s(x)) / s(x),              s(x) = x (1 - x)
//   p^(n+1)(x, y) = int p^(n)(x, z) p(z, y) dz
//
// For fixed y the one-step kernel p(z, y) is supported on the explicit set
// R(y) = {z : c s(z) <= y <= d s(z)} of every uniform piece [c, d], so each
// propagation step integrates p^(n)(x, .)/s over at most two z-intervals per
// piece. p^(1) and p^(2) are evaluated in closed form; from p^(3) on, p^(n)
// is carried as a piecewise-linear interpolant on a z-mesh and the products
// with 1/s are integrated exactly cell by cell.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rqm/interval.hpp"
#include "rqm/noise.hpp"
#include "rqm/quadmap.hpp"

namespace rqm::kernel {

/// Absolutely continuous part of Q, possibly with total mass below one.
/// Used directly for lower-bound densities.
struct DensityComponent {
  std::vector<noise::UniformPiece> pieces;

  static DensityComponent of(const noise::NoiseModel& model);
  [[nodiscard]] double mass() const;
  [[nodiscard]] double operator()(double theta) const;
  /// Pointwise scaling of every piece weight.
  [[nodiscard]] DensityComponent scaled(double factor) const;
};

double one_step_density(const DensityComponent& h, double x, double y);
double one_step_density(const noise::NoiseModel& model, double x, double y);

struct QuadratureOptions {
  std::size_t resolution = 4096;  // uniform cells of the base z-grid
  double margin = 1e-6;           // z-grid spans [margin, 1 - margin]
  double tolerance = 1e-6;        // accepted normalization drift
};

/// Thrown when the carried mass drifts beyond the declared tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double drift) : std::runtime_error(what), drift_(drift) {}
  [[nodiscard]] double drift() const { return drift_; }

 private:
  double drift_;
};

/// p^(n)(x, .) as a callable. Construction performs the n - 2 mesh
/// propagations; evaluation is O(pieces * log mesh).
class NStepDensity {
 public:
  NStepDensity(DensityComponent h, double x, int n, const QuadratureOptions& options = {});

  double operator()(double y) const;

  [[nodiscard]] int steps() const { return steps_; }
  [[nodiscard]] double source() const { return x_; }
  /// Mass of p^(n)(x, .) over (0,1) as carried by the scheme.
  [[nodiscard]] double normalization() const { return normalization_; }
  /// mass()^n: the exact total of the density-only chain.
  [[nodiscard]] double expected_mass() const { return expected_mass_; }
  [[nodiscard]] double drift() const { return std::abs(normalization_ - expected_mass_); }
  [[nodiscard]] std::size_t mesh_size() const { return mesh_.size(); }
  /// Points where p^(n)(x, .) may fail to be smooth.
  [[nodiscard]] std::vector<double> breakpoints() const;

 private:
  double closed_form_two_step(double y) const;
  double propagate(double y) const;
  void build_mesh(const QuadratureOptions& options);
  void set_interpolant(std::vector<double> values);

  DensityComponent h_;
  double x_;
  int steps_;
  double normalization_ = 0.0;
  double expected_mass_ = 0.0;
  std::vector<double> mesh_;
  std::vector<double> values_;      // p^(n-1) at mesh nodes (n >= 3)
  std::vector<double> cumulative_;  // int_{mesh_0}^{mesh_i} p^(n-1)(z)/s(z) dz
};

struct DensityRow {
  double x = 0.0;
  int steps = 0;
  std::vector<double> y;
  std::vector<double> values;
  std::size_t resolution = 0;
  double normalization = 0.0;
  double expected_mass = 0.0;
  double drift = 0.0;
  /// Mass not represented by the density-only chain (paths using an atom).
  double singular_mass = 0.0;
};

/// Row of p^(n)(x, y) on y_grid. Throws QuadratureError when the drift
/// exceeds options.tolerance and std::invalid_argument without a density.
DensityRow n_step_density(const noise::NoiseModel& model, double x, std::span<const double> y_grid, int n,
                          const QuadratureOptions& options = {});
DensityRow n_step_density(const DensityComponent& h, double x, std::span<const double> y_grid, int n,
                          const QuadratureOptions& options = {});

struct DensityGrid {
  int steps = 0;
  std::vector<double> x_grid;
  std::vector<double> y_grid;
  std::vector<std::vector<double>> values;  // values[i][j] = p^(n)(x_i, y_j)
  std::size_t resolution = 0;
  double max_drift = 0.0;
};

DensityGrid density_grid(const noise::NoiseModel& model, std::span<const double> x_grid,
                         std::span<const double> y_grid, int n, const QuadratureOptions& options = {},
                         unsigned threads = 1);

/// p(x_{i-1}, x_i) = h(theta0) / s(x_{i-1}) along the cycle, starting from the
/// smallest orbit point. Throws std::invalid_argument when h(theta0) = 0.
std::vector<double> orbit_density_chain(const noise::NoiseModel& model, const quadmap::PeriodicOrbit& orbit);

struct MinorizationCertificate {
  Interval j;
  int m = 0;
  double delta = 0.0;
  double theta0 = 0.0;
  std::optional<double> gamma1;  // q(gamma1) = j.lo
  std::optional<double> gamma2;  // q(gamma2) = j.hi
  std::size_t grid_n = 0;
  std::size_t resolution = 0;
  double grid_min = 0.0;
  double error_allowance = 0.0;
  double lipschitz = 0.0;
  double max_drift = 0.0;

  /// J lies in the image of q over [gamma1, gamma2].
  [[nodiscard]] bool j_in_q_image() const { return gamma1.has_value() && gamma2.has_value(); }
};

struct MinorizationOutcome {
  std::optional<MinorizationCertificate> certificate;
  /// Populated on failure and on success alike.
  double grid_min = 0.0;
  double error_allowance = 0.0;
  std::string diagnostics;
};

struct MinorizationOptions {
  std::size_t grid_n = 32;
  QuadratureOptions quadrature{};
  unsigned threads = 1;
};

/// Evaluates p^(m) on a grid over the closure of J x J and reports
/// delta = grid minimum - (Lipschitz estimate * grid spacing / 2 per axis +
/// normalization drift). Throws std::invalid_argument when the model has no
/// density or theta0 has no attractive m-cycle.
MinorizationOutcome minorization_probe(const noise::NoiseModel& model, double theta0, int m, const Interval& j,
                                       const MinorizationOptions& options = {});

/// Maximal parameter interval around theta0, within bounds, on which an
/// attractive m-cycle persists (edges located by bisection).
Interval hyperbolic_window(double theta0, int m, const Interval& bounds);

struct DefaultCertificateOptions {
  int max_period = 16;
  std::size_t theta_scan = 257;
  double width_fraction = 0.5;  // gamma_i = theta0 -/+ fraction * distance to window edge
  int shrink_attempts = 6;
  MinorizationOptions probe{};
};

/// Builds J from the density interval of the condition report: picks theta0
/// with an attractive m-cycle (smallest |multiplier| on a scan, smallest m
/// first), maps a parameter subinterval through q, then probes.
MinorizationOutcome default_minorization(const noise::NoiseModel& model, const DefaultCertificateOptions& options = {});

struct IrreducibilityResult {
  std::optional<std::size_t> first_step;
  std::size_t paths_in_j = 0;  // at first_step
  std::size_t paths = 0;
  std::size_t absorbed = 0;
};

/// First step n <= n_max at which any of n_paths simulated paths from x lies in J.
IrreducibilityResult irreducibility_probe(const noise::NoiseModel& model, double x, const Interval& j,
                                          std::size_t n_max, std::size_t n_paths, std::uint64_t seed);

}  // namespace rqm::kernel
