#include "rqm/diagnostics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rqm/quadmap.hpp"

namespace rqm::diagnostics {

namespace {

constexpr std::uint64_t kPurposeEnsemble = 0;
constexpr std::uint64_t kPurposeNoiseA = 1;
constexpr std::uint64_t kPurposeNoiseB = 2;
constexpr std::uint64_t kPurposeExtinction = 3;
constexpr std::uint64_t kPurposeCyclicity = 4;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

double tv_distance(const engine::OccupationMeasure& mu, const engine::OccupationMeasure& nu) {
  if (mu.edges() != nu.edges()) throw std::invalid_argument("tv_distance: bin edges differ");
  if (mu.total() == 0 || nu.total() == 0) throw std::invalid_argument("tv_distance: empty measure");
  const double tm = static_cast<double>(mu.total());
  const double tn = static_cast<double>(nu.total());
  auto term = [&](std::uint64_t a, std::uint64_t b) {
    return std::abs(static_cast<double>(a) / tm - static_cast<double>(b) / tn);
  };
  double sum = term(mu.underflow(), nu.underflow()) + term(mu.overflow(), nu.overflow());
  for (std::size_t k = 0; k < mu.bins(); ++k) sum += term(mu.counts()[k], nu.counts()[k]);
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

std::uint64_t stream_block(double x0, std::uint64_t purpose) {
  return splitmix64(std::bit_cast<std::uint64_t>(x0) ^ splitmix64(purpose));
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::unstable: return "unstable";
    case Verdict::withheld: return "withheld";
  }
  return "unknown";
}

StabilityReport stability_test(const noise::NoiseModel& model, const std::vector<double>& initial_states,
                               const engine::SimConfig& config) {
  if (initial_states.empty()) throw std::invalid_argument("stability_test: no initial states");
  engine::SimConfig cfg = config;
  cfg.initial_states = initial_states;
  cfg.validate();

  StabilityReport r;
  r.initial_states = initial_states;
  r.n_steps = cfg.n_steps;
  r.n_replicates = cfg.n_replicates;
  r.bins = cfg.bins;
  r.advisory = !noise::check_conditions(model, 0).hypotheses_hold;

  for (double x0 : initial_states) {
    r.measures.push_back(engine::ensemble_occupation(model, x0, cfg, stream_block(x0, kPurposeEnsemble)));
  }
  r.noise_reference_state = *std::min_element(initial_states.begin(), initial_states.end());
  const auto noise_a =
      engine::ensemble_occupation(model, r.noise_reference_state, cfg, stream_block(r.noise_reference_state, kPurposeNoiseA));
  const auto noise_b =
      engine::ensemble_occupation(model, r.noise_reference_state, cfg, stream_block(r.noise_reference_state, kPurposeNoiseB));
  r.noise_tv = tv_distance(noise_a, noise_b);
  r.threshold = 3.0 * r.noise_tv;

  const std::size_t k = initial_states.size();
  r.tv_matrix.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      r.tv_matrix[a][b] = r.tv_matrix[b][a] = tv_distance(r.measures[a], r.measures[b]);
      r.max_cross_tv = std::max(r.max_cross_tv, r.tv_matrix[a][b]);
    }
  }

  for (const auto& m : r.measures) r.absorbed_paths += m.absorbed_paths();
  r.absorbed_paths += noise_a.absorbed_paths() + noise_b.absorbed_paths();
  if (r.absorbed_paths > 0) {
    r.verdict = Verdict::withheld;
  } else {
    r.verdict = r.max_cross_tv <= r.threshold ? Verdict::stable : Verdict::unstable;
  }
  return r;
}

InvariantEstimate invariant_estimate(const noise::NoiseModel& model, const engine::SimConfig& config,
                                     const kernel::MinorizationCertificate& certificate) {
  config.validate();
  InvariantEstimate e;
  e.j = certificate.j;
  e.delta = certificate.delta;
  for (double x0 : config.initial_states) {
    e.occupation += engine::ensemble_occupation(model, x0, config, stream_block(x0, kPurposeEnsemble));
  }

  const double total = static_cast<double>(e.occupation.total());
  double min_density = std::numeric_limits<double>::infinity();
  double allowance_at_min = 0.0;
  std::uint64_t in_j = 0;
  const auto& edges = e.occupation.edges();
  for (std::size_t k = 0; k < e.occupation.bins(); ++k) {
    if (!(edges[k] >= e.j.lo && edges[k + 1] <= e.j.hi)) continue;
    ++e.bins_in_j;
    const std::uint64_t c = e.occupation.counts()[k];
    in_j += c;
    const double width = edges[k + 1] - edges[k];
    const double f = static_cast<double>(c) / total;
    const double dens = f / width;
    if (dens < min_density) {
      min_density = dens;
      allowance_at_min = 3.0 * std::sqrt(std::max(f * (1.0 - f), 1.0 / total) / total) / width;
    }
  }
  e.mass_j = static_cast<double>(in_j) / total;
  e.min_density_j = e.bins_in_j > 0 ? min_density : 0.0;
  e.sampling_allowance = allowance_at_min;
  e.density_floor = e.delta * e.mass_j;
  e.mass_positive = e.mass_j > 0.0;
  e.density_bound_holds = e.bins_in_j > 0 && e.min_density_j >= e.density_floor - e.sampling_allowance;

  const auto sb = noise::support_bounds(model);
  if (sb.mu > 1.0 && sb.nu < 4.0) {
    const auto inv = quadmap::invariant_interval(sb.mu, sb.nu);
    e.j_meets_invariant_interval = e.j.hi > inv.a && e.j.lo < inv.b;
  }
  return e;
}

std::vector<std::size_t> geometric_checkpoints(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t t = 10; t < n; t *= 10) out.push_back(t);
  out.push_back(n);
  return out;
}

ExtinctionReport extinction_test(const noise::NoiseModel& model, double x0, const std::vector<std::size_t>& checkpoints,
                                 std::size_t replicates, double threshold, std::uint64_t seed, unsigned threads) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("extinction_test: threshold must lie in (0,1)");
  if (replicates == 0) throw std::invalid_argument("extinction_test: need at least one replicate");
  ExtinctionReport r;
  r.checkpoints = checkpoints;
  r.threshold = threshold;
  r.replicates = replicates;
  const auto snaps =
      engine::marginal_snapshots(model, x0, checkpoints, replicates, seed, threads, stream_block(x0, kPurposeExtinction));
  const double m = static_cast<double>(replicates);
  for (const auto& row : snaps) {
    const auto below = std::count_if(row.begin(), row.end(), [&](double x) { return x < threshold; });
    const double f = static_cast<double>(below) / m;
    r.fraction_below.push_back(f);
    r.standard_error.push_back(std::sqrt(f * (1.0 - f) / m));
  }
  for (std::size_t k = 0; k + 1 < r.fraction_below.size(); ++k) {
    const double se = std::hypot(r.standard_error[k], r.standard_error[k + 1]);
    if (r.fraction_below[k + 1] < r.fraction_below[k] - 2.0 * se) r.nondecreasing = false;
  }
  return r;
}

CyclicityReport cyclicity_detect(const noise::NoiseModel& model, const Interval& j, std::size_t n, int d_max,
                                 std::uint64_t seed, const CyclicityOptions& options) {
  require_state_interval(j, "cyclicity_detect");
  if (d_max < 1) throw std::invalid_argument("cyclicity_detect: d_max must be >= 1");
  const double x0 = options.x0.value_or(j.midpoint());
  quadmap::require_state(x0);

  const auto dm = static_cast<std::size_t>(d_max);
  std::vector<std::vector<std::uint64_t>> counts(dm + 1);
  for (std::size_t d = 1; d <= dm; ++d) counts[d].assign(d, 0);

  Rng rng(StreamKey{seed, stream_block(x0, kPurposeCyclicity), 0});
  double x = x0;
  for (std::size_t k = 1; k <= options.burn_in + n; ++k) {
    x = quadmap::step(noise::sample(model, rng), x);
    if (quadmap::absorbed(x)) break;
    if (k <= options.burn_in || !j.contains(x)) continue;
    for (std::size_t d = 1; d <= dm; ++d) ++counts[d][k % d];
  }

  CyclicityReport r;
  r.visits = counts[1][0];
  r.reference_frequency = n > 0 ? static_cast<double>(r.visits) / static_cast<double>(n) : 0.0;
  if (r.visits == 0) {
    r.inconclusive = true;
    return r;
  }
  r.concentration.resize(dm);
  double best = 1.0;
  for (std::size_t d = 1; d <= dm; ++d) {
    const double mean = static_cast<double>(r.visits) / static_cast<double>(d);
    const auto mx = *std::max_element(counts[d].begin(), counts[d].end());
    r.concentration[d - 1] = static_cast<double>(mx) / mean;
    if (d >= 2) best = std::max(best, r.concentration[d - 1]);
  }
  std::size_t period = 1;
  if (best >= options.periodic_threshold) {
    for (std::size_t d = 2; d <= dm; ++d) {
      if (r.concentration[d - 1] >= options.tie_fraction * best) {
        period = d;
        break;
      }
    }
  }
  r.period = static_cast<int>(period);
  r.aperiodic = period == 1;
  for (auto c : counts[period]) r.residue_masses.push_back(static_cast<double>(c) / static_cast<double>(n));
  return r;
}

KolmogorovReport kolmogorov_approx(double theta0, double eta, const engine::SimConfig& config) {
  if (!(eta > 0.0)) throw std::domain_error("kolmogorov_approx: eta must be positive");
  if (!(theta0 - eta > 0.0 && theta0 + eta < 4.0)) {
    throw std::domain_error("kolmogorov_approx: [theta0 - eta, theta0 + eta] must lie inside (0,4)");
  }
  config.validate();
  KolmogorovReport r;
  r.theta0 = theta0;
  r.eta = eta;
  const auto perturbed = noise::NoiseModel::uniform(theta0 - eta, theta0 + eta);
  const auto deterministic = noise::NoiseModel::point_mass(theta0);
  engine::SimConfig ref_cfg = config;
  ref_cfg.n_replicates = 1;
  for (double x0 : config.initial_states) {
    r.perturbed += engine::ensemble_occupation(perturbed, x0, config, stream_block(x0, kPurposeEnsemble));
    r.reference += engine::ensemble_occupation(deterministic, x0, ref_cfg, 0);
  }
  r.tv = tv_distance(r.perturbed, r.reference);
  return r;
}

}  // namespace rqm::diagnostics
