#include "rqm/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "rqm/quadmap.hpp"

namespace rqm::engine {

void SimConfig::validate() const {
  if (!(burn_in < n_steps)) throw std::invalid_argument("sim: burn_in must be smaller than n_steps");
  if (n_replicates < 1) throw std::invalid_argument("sim: n_replicates must be >= 1");
  if (bins < 1) throw std::invalid_argument("sim: bins must be >= 1");
  if (initial_states.empty()) throw std::invalid_argument("sim: no initial states");
  for (double x : initial_states) {
    if (!(x > 0.0 && x < 1.0)) throw std::invalid_argument("sim: initial states must lie in (0,1)");
  }
}

Trajectory simulate_trajectory(const noise::NoiseModel& model, double x0, std::size_t n, const StreamKey& key) {
  quadmap::require_state(x0);
  Rng rng(key);
  Trajectory t;
  t.steps = n;
  t.x.reserve(n + 1);
  t.epsilon.reserve(n);
  t.x.push_back(x0);
  double x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    const double eps = noise::sample(model, rng);
    x = quadmap::step(eps, x);
    if (quadmap::absorbed(x)) {
      t.absorbed = true;
      break;
    }
    t.epsilon.push_back(eps);
    t.x.push_back(x);
  }
  return t;
}

Trajectory simulate_trajectory(const noise::NoiseModel& model, double x0, std::size_t n, std::uint64_t seed) {
  return simulate_trajectory(model, x0, n, StreamKey{seed, 0, 0});
}

std::vector<double> uniform_edges(std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("uniform_edges: need at least one bin");
  std::vector<double> edges(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) {
    edges[k] = static_cast<double>(k) / static_cast<double>(bins);
  }
  return edges;
}

OccupationMeasure::OccupationMeasure(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2 || edges_.front() != 0.0 || edges_.back() != 1.0) {
    throw std::invalid_argument("occupation: edges must run from 0 to 1");
  }
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (!(edges_[k] > edges_[k - 1])) throw std::invalid_argument("occupation: edges must increase");
  }
  counts_.assign(edges_.size() - 1, 0);
  uniform_ = edges_ == uniform_edges(counts_.size());
}

OccupationMeasure OccupationMeasure::uniform(std::size_t bins) { return OccupationMeasure(uniform_edges(bins)); }

std::size_t OccupationMeasure::bin_of(double x) const {
  const std::size_t b = counts_.size();
  std::size_t k;
  if (uniform_) {
    const double guess = std::ceil(x * static_cast<double>(b)) - 1.0;
    k = guess <= 0.0 ? 0 : std::min(static_cast<std::size_t>(guess), b - 1);
    while (k > 0 && x <= edges_[k]) --k;
    while (k + 1 < b && x > edges_[k + 1]) ++k;
  } else {
    // first edge >= x closes the bin on the right
    const auto it = std::lower_bound(edges_.begin() + 1, edges_.end(), x);
    k = std::min(static_cast<std::size_t>(it - edges_.begin()) - 1, b - 1);
  }
  return k;
}

void OccupationMeasure::add(double x) {
  ++total_;
  if (!(x > 0.0)) {
    ++underflow_;
  } else if (x >= 1.0) {
    ++overflow_;
  } else {
    ++counts_[bin_of(x)];
  }
}

OccupationMeasure& OccupationMeasure::operator+=(const OccupationMeasure& other) {
  if (counts_.empty() && total_ == 0 && absorbed_paths_ == 0) {
    *this = other;
    return *this;
  }
  if (other.edges_ != edges_) throw std::invalid_argument("occupation: cannot merge different binnings");
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
  total_ += other.total_;
  underflow_ += other.underflow_;
  overflow_ += other.overflow_;
  absorbed_paths_ += other.absorbed_paths_;
  return *this;
}

double OccupationMeasure::frequency(std::size_t bin) const {
  return total_ == 0 ? 0.0 : static_cast<double>(counts_.at(bin)) / static_cast<double>(total_);
}

double OccupationMeasure::mass_within(const Interval& range) const {
  if (total_ == 0) return 0.0;
  std::uint64_t c = 0;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    if (edges_[k] >= range.lo && edges_[k + 1] <= range.hi) c += counts_[k];
  }
  return static_cast<double>(c) / static_cast<double>(total_);
}

std::optional<Interval> OccupationMeasure::occupied_range() const {
  std::optional<std::size_t> first;
  std::size_t last = 0;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    if (counts_[k] == 0) continue;
    if (!first) first = k;
    last = k;
  }
  if (!first) return std::nullopt;
  return Interval{edges_[*first], edges_[last + 1]};
}

OccupationMeasure occupation_measure(const Trajectory& trajectory, const std::vector<double>& bin_edges,
                                     std::size_t burn_in) {
  if (!(burn_in < trajectory.steps)) throw std::invalid_argument("occupation_measure: burn_in >= length");
  OccupationMeasure m(bin_edges);
  const std::size_t have = trajectory.x.size() - 1;  // last recorded step index
  for (std::size_t k = burn_in + 1; k <= std::min(have, trajectory.steps); ++k) m.add(trajectory.x[k]);
  if (trajectory.absorbed) {
    const std::size_t first_missing = std::max(have + 1, burn_in + 1);
    if (trajectory.steps >= first_missing) m.add_underflow(trajectory.steps - first_missing + 1);
    m.mark_absorbed();
  }
  return m;
}

unsigned effective_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(effective_threads(threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            job(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
            return;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

namespace {

OccupationMeasure run_replicate(const noise::NoiseModel& model, double x0, const SimConfig& config,
                                const StreamKey& key) {
  Rng rng(key);
  OccupationMeasure m = OccupationMeasure::uniform(config.bins);
  double x = x0;
  for (std::size_t k = 1; k <= config.n_steps; ++k) {
    x = quadmap::step(noise::sample(model, rng), x);
    if (quadmap::absorbed(x)) {
      const std::size_t first = std::max(k, config.burn_in + 1);
      m.add_underflow(config.n_steps - first + 1);
      m.mark_absorbed();
      break;
    }
    if (k > config.burn_in) m.add(x);
  }
  return m;
}

}  // namespace

OccupationMeasure ensemble_occupation(const noise::NoiseModel& model, double x0, const SimConfig& config,
                                      std::uint64_t block) {
  config.validate();
  quadmap::require_state(x0);
  std::vector<OccupationMeasure> parts(config.n_replicates);
  parallel_for(config.n_replicates, config.threads, [&](std::size_t r) {
    parts[r] = run_replicate(model, x0, config, StreamKey{config.master_seed, block, r});
  });
  OccupationMeasure merged;
  for (const auto& p : parts) merged += p;
  return merged;
}

std::vector<std::vector<double>> marginal_snapshots(const noise::NoiseModel& model, double x0,
                                                    const std::vector<std::size_t>& checkpoints,
                                                    std::size_t n_replicates, std::uint64_t seed,
                                                    unsigned threads, std::uint64_t block) {
  quadmap::require_state(x0);
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw std::invalid_argument("marginal_snapshots: checkpoints must be nondecreasing");
  }
  std::vector<std::vector<double>> out(checkpoints.size(), std::vector<double>(n_replicates, 0.0));
  parallel_for(n_replicates, threads, [&](std::size_t r) {
    Rng rng(StreamKey{seed, block, r});
    double x = x0;
    std::size_t t = 0;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      for (; t < checkpoints[c] && !quadmap::absorbed(x); ++t) x = quadmap::step(noise::sample(model, rng), x);
      out[c][r] = quadmap::absorbed(x) ? 0.0 : x;
    }
  });
  return out;
}

HittingTime hitting_time(const noise::NoiseModel& model, double x0, const Interval& j, const StreamKey& key,
                         std::uint64_t cap) {
  quadmap::require_state(x0);
  require_state_interval(j, "hitting_time");
  if (cap < 1) throw std::invalid_argument("hitting_time: cap must be >= 1");
  Rng rng(key);
  HittingTime h;
  double x = x0;
  for (std::uint64_t n = 1; n <= cap; ++n) {
    x = quadmap::step(noise::sample(model, rng), x);
    if (quadmap::absorbed(x)) {
      h.absorbed = true;
      break;
    }
    if (j.contains(x)) {
      h.steps = n;
      return h;
    }
  }
  h.censored = true;
  return h;
}

std::uint64_t visit_counts(const noise::NoiseModel& model, double x0, const Interval& j, std::uint64_t n,
                           const StreamKey& key) {
  quadmap::require_state(x0);
  require_state_interval(j, "visit_counts");
  Rng rng(key);
  std::uint64_t visits = 0;
  double x = x0;
  for (std::uint64_t k = 1; k <= n; ++k) {
    x = quadmap::step(noise::sample(model, rng), x);
    if (quadmap::absorbed(x)) break;
    if (j.contains(x)) ++visits;
  }
  return visits;
}

}  // namespace rqm::engine
