#include "rqm/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rqm::noise {

namespace {

constexpr double kWeightTol = 1e-12;
constexpr double kLower = 0.0;
constexpr double kUpper = 4.0;

// Antiderivative of log(t): t log t - t.
double x_log_x_minus_x(double t) { return t * std::log(t) - t; }

// Integral of log(4 - theta) over [a, b], via -(4 - theta)(log(4 - theta) - 1).
double integral_log4m(double a, double b) {
  auto anti = [](double t) {
    const double u = 4.0 - t;
    return -u * (std::log(u) - 1.0);
  };
  return anti(b) - anti(a);
}

}  // namespace

NoiseModel::NoiseModel(std::vector<Atom> atoms, std::vector<UniformPiece> pieces)
    : atoms_(std::move(atoms)), pieces_(std::move(pieces)) {
  double total = 0.0;
  for (const auto& a : atoms_) {
    if (!(a.location > kLower && a.location < kUpper)) {
      throw std::invalid_argument("noise: atom location must lie in (0,4)");
    }
    if (!(a.weight >= 0.0)) throw std::invalid_argument("noise: negative atom weight");
    total += a.weight;
  }
  for (const auto& p : pieces_) {
    if (!(p.lo > kLower && p.lo < p.hi && p.hi < kUpper)) {
      throw std::invalid_argument("noise: uniform piece needs 0 < lo < hi < 4");
    }
    if (!(p.weight >= 0.0)) throw std::invalid_argument("noise: negative piece weight");
    total += p.weight;
  }
  if (std::abs(total - 1.0) > kWeightTol) {
    throw std::invalid_argument("noise: weights must sum to 1");
  }

  cumulative_.reserve(atoms_.size() + pieces_.size());
  double acc = 0.0;
  for (const auto& a : atoms_) cumulative_.push_back(acc += a.weight);
  for (const auto& p : pieces_) cumulative_.push_back(acc += p.weight);
}

NoiseModel NoiseModel::point_mass(double theta) { return NoiseModel({{theta, 1.0}}, {}); }

NoiseModel NoiseModel::uniform(double lo, double hi) { return NoiseModel({}, {{lo, hi, 1.0}}); }

double NoiseModel::ac_mass() const {
  double m = 0.0;
  for (const auto& p : pieces_) m += p.weight;
  return m;
}

double sample(const NoiseModel& model, Rng& rng) {
  const std::size_t n_atoms = model.atoms_.size();
  const std::size_t n = model.cumulative_.size();
  std::size_t k = 0;
  if (n > 1) {
    const double u = rng.uniform() * model.cumulative_.back();
    k = static_cast<std::size_t>(
        std::upper_bound(model.cumulative_.begin(), model.cumulative_.end(), u) -
        model.cumulative_.begin());
    if (k >= n) k = n - 1;
  }
  if (k < n_atoms) return model.atoms_[k].location;
  const auto& p = model.pieces_[k - n_atoms];
  return p.lo + (p.hi - p.lo) * rng.uniform();
}

double density(const NoiseModel& model, double theta) {
  double h = 0.0;
  for (const auto& p : model.pieces()) {
    if (p.lo <= theta && theta <= p.hi) h += p.height();
  }
  return h;
}

double cdf(const NoiseModel& model, double theta) {
  double f = 0.0;
  for (const auto& a : model.atoms()) {
    if (a.location <= theta) f += a.weight;
  }
  for (const auto& p : model.pieces()) {
    if (theta >= p.hi) {
      f += p.weight;
    } else if (theta > p.lo) {
      f += p.weight * (theta - p.lo) / (p.hi - p.lo);
    }
  }
  return std::min(f, 1.0);
}

double e_log(const NoiseModel& model) {
  double e = 0.0;
  for (const auto& a : model.atoms()) e += a.weight * std::log(a.location);
  for (const auto& p : model.pieces()) {
    e += p.weight * (x_log_x_minus_x(p.hi) - x_log_x_minus_x(p.lo)) / (p.hi - p.lo);
  }
  return e;
}

double e_log4m(const NoiseModel& model) {
  double e = 0.0;
  for (const auto& a : model.atoms()) e += a.weight * std::abs(std::log(4.0 - a.location));
  for (const auto& p : model.pieces()) {
    // log(4 - theta) >= 0 for theta <= 3 and < 0 above.
    double integral = 0.0;
    if (p.lo < 3.0) integral += integral_log4m(p.lo, std::min(p.hi, 3.0));
    if (p.hi > 3.0) integral -= integral_log4m(std::max(p.lo, 3.0), p.hi);
    e += p.weight * integral / (p.hi - p.lo);
  }
  return e;
}

SupportBounds support_bounds(const NoiseModel& model) {
  double mu = std::numeric_limits<double>::infinity();
  double nu = -std::numeric_limits<double>::infinity();
  for (const auto& a : model.atoms()) {
    if (a.weight <= 0.0) continue;
    mu = std::min(mu, a.location);
    nu = std::max(nu, a.location);
  }
  for (const auto& p : model.pieces()) {
    if (p.weight <= 0.0) continue;
    mu = std::min(mu, p.lo);
    nu = std::max(nu, p.hi);
  }
  return {mu, nu};
}

ConditionReport check_conditions(const NoiseModel& model, std::size_t scan_resolution) {
  ConditionReport r;
  r.e_log = e_log(model);
  r.e_log4m = e_log4m(model);
  r.support = support_bounds(model);
  r.ac_component = model.has_ac_component();
  r.log_moment_positive = r.e_log > 0.0;
  r.log4m_finite = std::isfinite(r.e_log4m);
  r.moment_condition = r.log_moment_positive && r.log4m_finite;

  // h is constant between consecutive breakpoints; merge positive segments
  // inside (1,4) into maximal runs and keep the longest.
  std::vector<double> breaks{1.0, 4.0};
  for (const auto& p : model.pieces()) {
    if (p.weight <= 0.0) continue;
    for (double t : {p.lo, p.hi}) {
      if (t > 1.0 && t < 4.0) breaks.push_back(t);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  std::optional<DensityInterval> best;
  std::optional<DensityInterval> run;
  auto close_run = [&] {
    if (run && (!best || run->d - run->c > best->d - best->c)) best = run;
    run.reset();
  };
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = breaks[i];
    const double hi = breaks[i + 1];
    const double h = density(model, 0.5 * (lo + hi));
    if (h > 0.0) {
      if (run) {
        run->d = hi;
        run->inf_h = std::min(run->inf_h, h);
      } else {
        run = DensityInterval{lo, hi, h};
      }
    } else {
      close_run();
    }
  }
  close_run();
  r.density_interval = best;
  r.density_condition = best.has_value();

  if (best && scan_resolution > 0) {
    double scanned = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scan_resolution; ++i) {
      const double t = best->c + (best->d - best->c) * (static_cast<double>(i) + 0.5) /
                                     static_cast<double>(scan_resolution);
      scanned = std::min(scanned, density(model, t));
    }
    r.scan_consistent = scanned >= best->inf_h * (1.0 - 1e-12);
  }

  r.hypotheses_hold = r.moment_condition && r.density_condition;
  if (r.hypotheses_hold) {
    r.label = "hypotheses satisfied";
  } else if (!r.log_moment_positive) {
    r.label = "moment condition fails: extinction expected";
  } else if (r.ac_component) {
    r.label = "hypotheses not verified: density not bounded below on a subinterval of (1,4)";
  } else {
    r.label = "hypotheses not verified: no absolutely continuous component";
  }
  return r;
}

}  // namespace rqm::noise
