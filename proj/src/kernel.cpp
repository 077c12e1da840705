#include "rqm/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "rqm/engine.hpp"

namespace rqm::kernel {

namespace {

double s_of(double z) { return z * (1.0 - z); }

// Smaller root of z (1 - z) = t for 0 <= t <= 1/4, without cancellation.
double left_root(double t) { return 2.0 * t / (1.0 + std::sqrt(std::max(0.0, 1.0 - 4.0 * t))); }

// int_a^b dz / (z (1 - z)) for 0 < a <= b < 1.
double logit_diff(double a, double b) {
  const double u = b - a;
  return std::log1p(u / a) - std::log1p(-u / (1.0 - a));
}

struct Region {
  std::array<Interval, 2> parts{};
  int count = 0;
};

// {z in (0,1) : c s(z) <= y <= d s(z)}.
Region region(double y, double c, double d) {
  Region r;
  const double t_lo = y / d;
  if (!(t_lo < 0.25)) return r;
  const double t_hi = y / c;
  const double a = left_root(t_lo);
  if (t_hi >= 0.25) {
    r.parts[0] = {a, 1.0 - a};
    r.count = 1;
  } else {
    const double b = left_root(t_hi);
    r.parts[0] = {a, b};
    r.parts[1] = {1.0 - b, 1.0 - a};
    r.count = 2;
  }
  return r;
}

void require_density(const DensityComponent& h, const char* what) {
  if (!(h.mass() > 0.0)) {
    throw std::invalid_argument(std::string(what) + ": noise has no absolutely continuous component");
  }
}

}  // namespace

DensityComponent DensityComponent::of(const noise::NoiseModel& model) {
  DensityComponent h;
  for (const auto& p : model.pieces()) {
    if (p.weight > 0.0) h.pieces.push_back(p);
  }
  return h;
}

double DensityComponent::mass() const {
  double m = 0.0;
  for (const auto& p : pieces) m += p.weight;
  return m;
}

double DensityComponent::operator()(double theta) const {
  double v = 0.0;
  for (const auto& p : pieces) {
    if (p.lo <= theta && theta <= p.hi) v += p.height();
  }
  return v;
}

DensityComponent DensityComponent::scaled(double factor) const {
  DensityComponent out = *this;
  for (auto& p : out.pieces) p.weight *= factor;
  return out;
}

double one_step_density(const DensityComponent& h, double x, double y) {
  quadmap::require_state(x);
  if (!(y > 0.0 && y < 1.0)) return 0.0;
  const double s = s_of(x);
  return h(y / s) / s;
}

double one_step_density(const noise::NoiseModel& model, double x, double y) {
  const auto h = DensityComponent::of(model);
  require_density(h, "one_step_density");
  return one_step_density(h, x, y);
}

// ---------------------------------------------------------------------------

NStepDensity::NStepDensity(DensityComponent h, double x, int n, const QuadratureOptions& options)
    : h_(std::move(h)), x_(x), steps_(n) {
  quadmap::require_state(x);
  require_density(h_, "n_step_density");
  if (n < 1) throw std::invalid_argument("n_step_density: need n >= 1");
  if (options.resolution < 2) throw std::invalid_argument("n_step_density: resolution must be >= 2");
  if (!(options.margin > 0.0 && options.margin < 0.25)) {
    throw std::invalid_argument("n_step_density: margin must lie in (0, 1/4)");
  }

  const double mass = h_.mass();
  expected_mass_ = std::pow(mass, n);
  if (n <= 2) {
    // Exact: p^(1)(x, .) keeps all of its mass inside (0,1).
    normalization_ = expected_mass_;
    return;
  }

  build_mesh(options);
  std::vector<double> v(mesh_.size());
  for (std::size_t i = 0; i < mesh_.size(); ++i) v[i] = closed_form_two_step(mesh_[i]);
  set_interpolant(std::move(v));
  for (int k = 3; k < n; ++k) {
    std::vector<double> next(mesh_.size());
    for (std::size_t i = 0; i < mesh_.size(); ++i) next[i] = propagate(mesh_[i]);
    set_interpolant(std::move(next));
  }

  // The y-integral of one kernel step is exact, so the mass of p^(n) equals
  // mass(h) times the integral of the interpolated p^(n-1).
  double trap = 0.0;
  for (std::size_t i = 0; i + 1 < mesh_.size(); ++i) {
    trap += 0.5 * (values_[i] + values_[i + 1]) * (mesh_[i + 1] - mesh_[i]);
  }
  normalization_ = mass * trap;
}

std::vector<double> NStepDensity::breakpoints() const {
  std::vector<double> out;
  const double sx = s_of(x_);
  std::vector<double> box_edges;
  for (const auto& p : h_.pieces) {
    box_edges.push_back(p.lo * sx);
    box_edges.push_back(p.hi * sx);
  }
  if (steps_ == 1) return box_edges;

  std::vector<double> level = box_edges;
  level.push_back(0.5);
  for (const auto& p : h_.pieces) {
    out.push_back(p.lo / 4.0);
    out.push_back(p.hi / 4.0);
  }
  // Kinks of p^(2) and their images one step later.
  for (int depth = 0; depth < 2; ++depth) {
    std::vector<double> next;
    for (double e : level) {
      for (const auto& p : h_.pieces) {
        next.push_back(p.lo * s_of(e));
        next.push_back(p.hi * s_of(e));
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    level = std::move(next);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void NStepDensity::build_mesh(const QuadratureOptions& options) {
  const double lo = options.margin;
  const double hi = 1.0 - options.margin;
  const std::size_t r = options.resolution;
  const double dz = (hi - lo) / static_cast<double>(r);

  std::vector<double> nodes;
  nodes.reserve(r + 1 + 4096);
  for (std::size_t i = 0; i <= r; ++i) nodes.push_back(lo + dz * static_cast<double>(i));
  nodes.back() = hi;

  // The densities behave like sqrt(distance) next to c/4 and d/4 (fold of
  // s at z = 1/2), so the mesh is graded there: spacing dz * sqrt(t / T).
  constexpr double kGradedWidth = 0.02;
  const double h_min = dz * 1e-4;
  std::vector<double> singular;
  for (const auto& p : h_.pieces) {
    singular.push_back(p.lo / 4.0);
    singular.push_back(p.hi / 4.0);
  }
  for (double b : singular) {
    nodes.push_back(b);
    for (double t = h_min; t < kGradedWidth; t += std::max(h_min, std::min(dz, dz * std::sqrt(t / kGradedWidth)))) {
      nodes.push_back(b - t);
      nodes.push_back(b + t);
    }
  }
  for (double b : breakpoints()) nodes.push_back(b);

  std::erase_if(nodes, [&](double z) { return !(z >= lo && z <= hi); });
  std::sort(nodes.begin(), nodes.end());
  mesh_.clear();
  for (double z : nodes) {
    if (mesh_.empty() || z - mesh_.back() > 1e-14) mesh_.push_back(z);
  }
}

void NStepDensity::set_interpolant(std::vector<double> values) {
  values_ = std::move(values);
  cumulative_.assign(mesh_.size(), 0.0);
  for (std::size_t i = 0; i + 1 < mesh_.size(); ++i) {
    const double z = mesh_[i];
    const double w = mesh_[i + 1] - z;
    const double slope = (values_[i + 1] - values_[i]) / w;
    const double l_up = std::log1p(w / z);
    const double l_dn = std::log1p(-w / (1.0 - z));
    cumulative_[i + 1] = cumulative_[i] + values_[i] * (l_up - l_dn) + slope * (-z * l_up - (1.0 - z) * l_dn);
  }
}

double NStepDensity::closed_form_two_step(double y) const {
  if (!(y > 0.0 && y < 1.0)) return 0.0;
  const double sx = s_of(x_);
  double total = 0.0;
  for (const auto& outer : h_.pieces) {
    const Region reg = region(y, outer.lo, outer.hi);
    for (int k = 0; k < reg.count; ++k) {
      for (const auto& inner : h_.pieces) {
        const double a = std::max(reg.parts[k].lo, inner.lo * sx);
        const double b = std::min(reg.parts[k].hi, inner.hi * sx);
        if (a < b) total += outer.height() * inner.height() / sx * logit_diff(a, b);
      }
    }
  }
  return total;
}

double NStepDensity::propagate(double y) const {
  if (!(y > 0.0 && y < 1.0)) return 0.0;
  const double z0 = mesh_.front();
  const double z1 = mesh_.back();
  auto cumulative_at = [&](double t) {
    t = std::clamp(t, z0, z1);
    auto it = std::upper_bound(mesh_.begin(), mesh_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - mesh_.begin());
    i = i == 0 ? 0 : std::min(i - 1, mesh_.size() - 2);
    const double z = mesh_[i];
    const double u = t - z;
    if (u <= 0.0) return cumulative_[i];
    const double slope = (values_[i + 1] - values_[i]) / (mesh_[i + 1] - z);
    const double l_up = std::log1p(u / z);
    const double l_dn = std::log1p(-u / (1.0 - z));
    return cumulative_[i] + values_[i] * (l_up - l_dn) + slope * (-z * l_up - (1.0 - z) * l_dn);
  };

  double total = 0.0;
  for (const auto& p : h_.pieces) {
    const Region reg = region(y, p.lo, p.hi);
    for (int k = 0; k < reg.count; ++k) {
      total += p.height() * (cumulative_at(reg.parts[k].hi) - cumulative_at(reg.parts[k].lo));
    }
  }
  return std::max(total, 0.0);
}

double NStepDensity::operator()(double y) const {
  switch (steps_) {
    case 1: return one_step_density(h_, x_, y);
    case 2: return closed_form_two_step(y);
    default: return propagate(y);
  }
}

// ---------------------------------------------------------------------------

DensityRow n_step_density(const DensityComponent& h, double x, std::span<const double> y_grid, int n,
                          const QuadratureOptions& options) {
  const NStepDensity p(h, x, n, options);
  if (p.drift() > options.tolerance) {
    throw QuadratureError("n_step_density: normalization drift " + std::to_string(p.drift()) +
                              " exceeds tolerance at resolution " + std::to_string(options.resolution),
                          p.drift());
  }
  DensityRow row;
  row.x = x;
  row.steps = n;
  row.y.assign(y_grid.begin(), y_grid.end());
  row.values.reserve(y_grid.size());
  for (double y : y_grid) row.values.push_back(p(y));
  row.resolution = options.resolution;
  row.normalization = p.normalization();
  row.expected_mass = p.expected_mass();
  row.drift = p.drift();
  row.singular_mass = 1.0 - p.expected_mass();
  return row;
}

DensityRow n_step_density(const noise::NoiseModel& model, double x, std::span<const double> y_grid, int n,
                          const QuadratureOptions& options) {
  return n_step_density(DensityComponent::of(model), x, y_grid, n, options);
}

DensityGrid density_grid(const noise::NoiseModel& model, std::span<const double> x_grid,
                         std::span<const double> y_grid, int n, const QuadratureOptions& options,
                         unsigned threads) {
  const auto h = DensityComponent::of(model);
  DensityGrid grid;
  grid.steps = n;
  grid.x_grid.assign(x_grid.begin(), x_grid.end());
  grid.y_grid.assign(y_grid.begin(), y_grid.end());
  grid.resolution = options.resolution;
  std::vector<DensityRow> rows(x_grid.size());
  engine::parallel_for(x_grid.size(), threads,
                       [&](std::size_t i) { rows[i] = n_step_density(h, x_grid[i], y_grid, n, options); });
  for (auto& r : rows) {
    grid.max_drift = std::max(grid.max_drift, r.drift);
    grid.values.push_back(std::move(r.values));
  }
  return grid;
}

std::vector<double> orbit_density_chain(const noise::NoiseModel& model, const quadmap::PeriodicOrbit& orbit) {
  const double h0 = noise::density(model, orbit.theta);
  if (!(h0 > 0.0)) throw std::invalid_argument("orbit parameter outside density support");
  std::vector<double> chain;
  chain.reserve(orbit.points.size());
  double x = orbit.points.front();
  for (int i = 0; i < orbit.period; ++i) {
    chain.push_back(h0 / s_of(x));
    x = quadmap::step(orbit.theta, x);
  }
  return chain;
}

// ---------------------------------------------------------------------------

Interval hyperbolic_window(double theta0, int m, const Interval& bounds) {
  if (!quadmap::find_periodic_orbit(theta0, m)) {
    throw std::invalid_argument("hyperbolic_window: theta0 has no attractive cycle of the requested period");
  }
  auto edge = [&](double outer) {
    if (quadmap::find_periodic_orbit(outer, m)) return outer;
    double in = theta0;
    for (int it = 0; it < 60 && std::abs(outer - in) > 1e-12; ++it) {
      const double mid = 0.5 * (in + outer);
      (quadmap::find_periodic_orbit(mid, m) ? in : outer) = mid;
    }
    return in;
  };
  return {edge(bounds.lo), edge(bounds.hi)};
}

namespace {

Interval q_search_bounds(const noise::NoiseModel& model, double theta0) {
  const auto report = noise::check_conditions(model, 0);
  if (report.density_interval && report.density_interval->c <= theta0 && theta0 <= report.density_interval->d) {
    return {report.density_interval->c, report.density_interval->d};
  }
  return {std::max(1.0 + 1e-9, theta0 - 0.5), std::min(4.0, theta0 + 0.5)};
}

}  // namespace

MinorizationOutcome minorization_probe(const noise::NoiseModel& model, double theta0, int m, const Interval& j,
                                       const MinorizationOptions& options) {
  const auto h = DensityComponent::of(model);
  require_density(h, "minorization_probe");
  require_state_interval(j, "minorization_probe");
  if (!(j.lo > 0.0 && j.hi < 1.0)) throw std::invalid_argument("minorization_probe: J must lie inside (0,1)");
  if (options.grid_n < 2) throw std::invalid_argument("minorization_probe: grid_n must be >= 2");
  if (!quadmap::find_periodic_orbit(theta0, m)) {
    throw std::invalid_argument("minorization_probe: theta0 has no attractive cycle of period m");
  }

  const std::size_t g = options.grid_n;
  const double step = j.length() / static_cast<double>(g - 1);
  std::vector<double> pts(g);
  for (std::size_t i = 0; i < g; ++i) pts[i] = j.lo + step * static_cast<double>(i);
  pts.back() = j.hi;

  MinorizationOutcome out;
  DensityGrid grid;
  try {
    grid = density_grid(model, pts, pts, m, options.quadrature, options.threads);
  } catch (const QuadratureError& e) {
    out.diagnostics = e.what();
    return out;
  }

  double grid_min = std::numeric_limits<double>::infinity();
  double lx = 0.0;
  double ly = 0.0;
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = 0; b < g; ++b) {
      grid_min = std::min(grid_min, grid.values[a][b]);
      if (a + 1 < g) lx = std::max(lx, std::abs(grid.values[a + 1][b] - grid.values[a][b]) / step);
      if (b + 1 < g) ly = std::max(ly, std::abs(grid.values[a][b + 1] - grid.values[a][b]) / step);
    }
  }
  const double allowance = 0.5 * (lx + ly) * step + grid.max_drift;
  out.grid_min = grid_min;
  out.error_allowance = allowance;

  const double delta = grid_min - allowance;
  if (!(delta > 0.0)) {
    out.diagnostics = "grid minimum " + std::to_string(grid_min) + " does not exceed error allowance " +
                      std::to_string(allowance) + " at grid " + std::to_string(g) + "; refine or shrink J";
    return out;
  }

  MinorizationCertificate cert;
  cert.j = j;
  cert.m = m;
  cert.delta = delta;
  cert.theta0 = theta0;
  cert.grid_n = g;
  cert.resolution = options.quadrature.resolution;
  cert.grid_min = grid_min;
  cert.error_allowance = allowance;
  cert.lipschitz = std::max(lx, ly);
  cert.max_drift = grid.max_drift;

  const Interval window = hyperbolic_window(theta0, m, q_search_bounds(model, theta0));
  cert.gamma1 = quadmap::q_inverse(j.lo, window, m);
  cert.gamma2 = quadmap::q_inverse(j.hi, window, m);
  out.certificate = cert;
  out.diagnostics = "certificate issued";
  return out;
}

MinorizationOutcome default_minorization(const noise::NoiseModel& model, const DefaultCertificateOptions& options) {
  const auto report = noise::check_conditions(model, 0);
  MinorizationOutcome out;
  if (!report.density_interval) {
    out.diagnostics = "no certificate constructed: no density interval inside (1,4)";
    return out;
  }
  const double c = report.density_interval->c;
  const double d = report.density_interval->d;
  const std::size_t n = std::max<std::size_t>(options.theta_scan, 3);

  // Attractor period at interior scan points.
  std::vector<double> thetas(n);
  std::vector<int> periods(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    thetas[i] = c + (d - c) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const auto s = quadmap::search_periodic_orbit(thetas[i], 1);
    if (s.status == quadmap::OrbitSearchStatus::found) {
      periods[i] = 1;
    } else if (s.observed_period) {
      periods[i] = *s.observed_period;
    }
  }

  for (int m = 1; m <= options.max_period; ++m) {
    // Longest run of consecutive scan points with an attractive m-cycle.
    std::size_t best_lo = 0;
    std::size_t best_len = 0;
    for (std::size_t i = 0; i < n;) {
      if (periods[i] != m) {
        ++i;
        continue;
      }
      std::size_t k = i;
      while (k < n && periods[k] == m) ++k;
      if (k - i > best_len) {
        best_lo = i;
        best_len = k - i;
      }
      i = k;
    }
    if (best_len == 0) continue;

    double theta0 = thetas[best_lo + best_len / 2];
    if (!quadmap::find_periodic_orbit(theta0, m)) continue;
    const Interval window = hyperbolic_window(theta0, m, {c, d});
    theta0 = window.midpoint();
    if (!quadmap::find_periodic_orbit(theta0, m)) theta0 = thetas[best_lo + best_len / 2];

    double fraction = options.width_fraction;
    for (int attempt = 0; attempt <= options.shrink_attempts; ++attempt, fraction *= 0.5) {
      const double g1 = theta0 - fraction * (theta0 - window.lo);
      const double g2 = theta0 + fraction * (window.hi - theta0);
      const auto o1 = quadmap::find_periodic_orbit(g1, m);
      const auto o2 = quadmap::find_periodic_orbit(g2, m);
      if (!o1 || !o2) continue;
      const Interval j{std::min(o1->q(), o2->q()), std::max(o1->q(), o2->q())};
      if (!(j.lo < j.hi)) continue;
      out = minorization_probe(model, theta0, m, j, options.probe);
      if (out.certificate) return out;
    }
  }
  if (out.diagnostics.empty()) {
    out.diagnostics = "no certificate constructed: no attractive cycle of period <= " +
                      std::to_string(options.max_period) + " found in the density interval";
  }
  return out;
}

IrreducibilityResult irreducibility_probe(const noise::NoiseModel& model, double x, const Interval& j,
                                          std::size_t n_max, std::size_t n_paths, std::uint64_t seed) {
  quadmap::require_state(x);
  require_state_interval(j, "irreducibility_probe");
  constexpr std::uint64_t kProbeBlock = 0x1247ULL << 32;

  IrreducibilityResult r;
  r.paths = n_paths;
  std::vector<Rng> rngs;
  rngs.reserve(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) rngs.emplace_back(StreamKey{seed, kProbeBlock, i});
  std::vector<double> state(n_paths, x);
  std::vector<bool> dead(n_paths, false);

  for (std::size_t step = 1; step <= n_max; ++step) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_paths; ++i) {
      if (dead[i]) continue;
      state[i] = quadmap::step(noise::sample(model, rngs[i]), state[i]);
      if (quadmap::absorbed(state[i])) {
        dead[i] = true;
        ++r.absorbed;
        continue;
      }
      if (j.contains(state[i])) ++hits;
    }
    if (hits > 0) {
      r.first_step = step;
      r.paths_in_j = hits;
      return r;
    }
  }
  return r;
}

}  // namespace rqm::kernel
