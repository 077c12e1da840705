#pragma once

// Monte Carlo simulation of X_{k+1} = eps_{k+1} X_k (1 - X_k).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rqm/interval.hpp"
#include "rqm/noise.hpp"
#include "rqm/rng.hpp"

namespace rqm::engine {

inline constexpr std::size_t kDefaultBins = 200;
inline constexpr std::size_t kDefaultBurnIn = 1000;

struct SimConfig {
  std::uint64_t master_seed = 0;
  std::size_t n_steps = 1000000;
  std::size_t n_replicates = 1;
  std::size_t burn_in = kDefaultBurnIn;
  std::vector<double> initial_states{0.5};
  std::size_t bins = kDefaultBins;
  unsigned threads = 0;  // 0: hardware concurrency

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
};

struct Trajectory {
  std::size_t steps = 0;       // requested number of transitions
  std::vector<double> x;       // X_0 .. X_k; shorter than steps + 1 when absorbed
  std::vector<double> epsilon; // epsilon[k] drives the move from x[k] to x[k+1]
  bool absorbed = false;       // path fell below the normal double range
};

Trajectory simulate_trajectory(const noise::NoiseModel& model, double x0, std::size_t n,
                               const StreamKey& key);
Trajectory simulate_trajectory(const noise::NoiseModel& model, double x0, std::size_t n,
                               std::uint64_t seed);

/// Binned Cesaro occupation measure on (0,1).
///
/// Bins are right-closed, (e_k, e_{k+1}]: a value exactly on an interior edge
/// goes to the bin on its left. Values <= 0 land in the underflow guard and
/// values >= 1 in the overflow guard. Merging is a commutative monoid.
class OccupationMeasure {
 public:
  OccupationMeasure() = default;
  /// Edges must start at 0, end at 1 and increase strictly.
  explicit OccupationMeasure(std::vector<double> edges);
  static OccupationMeasure uniform(std::size_t bins);

  void add(double x);
  void add_underflow(std::uint64_t n) {
    underflow_ += n;
    total_ += n;
  }
  void mark_absorbed() { ++absorbed_paths_; }

  OccupationMeasure& operator+=(const OccupationMeasure& other);
  friend OccupationMeasure operator+(OccupationMeasure a, const OccupationMeasure& b) {
    a += b;
    return a;
  }

  [[nodiscard]] std::size_t bin_of(double x) const;
  [[nodiscard]] std::size_t bins() const { return counts_.size(); }
  [[nodiscard]] const std::vector<double>& edges() const { return edges_; }
  [[nodiscard]] const std::vector<std::uint64_t>& counts() const { return counts_; }
  [[nodiscard]] std::uint64_t total() const { return total_; }
  [[nodiscard]] std::uint64_t underflow() const { return underflow_; }
  [[nodiscard]] std::uint64_t overflow() const { return overflow_; }
  [[nodiscard]] std::uint64_t absorbed_paths() const { return absorbed_paths_; }
  [[nodiscard]] double frequency(std::size_t bin) const;
  /// Fraction of the total in bins lying entirely inside [lo, hi].
  [[nodiscard]] double mass_within(const Interval& range) const;
  /// Smallest and largest edge enclosing every nonempty bin.
  [[nodiscard]] std::optional<Interval> occupied_range() const;

  friend bool operator==(const OccupationMeasure&, const OccupationMeasure&) = default;

 private:
  std::vector<double> edges_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
  std::uint64_t underflow_ = 0;
  std::uint64_t overflow_ = 0;
  std::uint64_t absorbed_paths_ = 0;
  bool uniform_ = false;
};

/// Bins X_{burn_in+1} .. X_steps. Steps after absorption count as underflow.
OccupationMeasure occupation_measure(const Trajectory& trajectory, const std::vector<double>& bin_edges,
                                     std::size_t burn_in);

std::vector<double> uniform_edges(std::size_t bins);

/// Runs count independent jobs on up to `threads` workers. Each job writes
/// only its own slot, so results do not depend on scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job);

unsigned effective_threads(unsigned requested);

/// Merged occupation over config.n_replicates replicates started at x0.
/// Replicate r draws from StreamKey{master_seed, block, r}.
OccupationMeasure ensemble_occupation(const noise::NoiseModel& model, double x0, const SimConfig& config,
                                      std::uint64_t block = 0);

/// Values X_t at each checkpoint t for each of n_replicates paths
/// (result[checkpoint][replicate]); absorbed paths report 0.
std::vector<std::vector<double>> marginal_snapshots(const noise::NoiseModel& model, double x0,
                                                    const std::vector<std::size_t>& checkpoints,
                                                    std::size_t n_replicates, std::uint64_t seed,
                                                    unsigned threads, std::uint64_t block = 0);

struct HittingTime {
  std::optional<std::uint64_t> steps;  // first n >= 1 with X_n in J
  bool censored = false;
  bool absorbed = false;
};

HittingTime hitting_time(const noise::NoiseModel& model, double x0, const Interval& j, const StreamKey& key,
                         std::uint64_t cap);

/// Number of 1 <= k <= n with X_k in J (J open).
std::uint64_t visit_counts(const noise::NoiseModel& model, double x0, const Interval& j, std::uint64_t n,
                           const StreamKey& key);

}  // namespace rqm::engine
