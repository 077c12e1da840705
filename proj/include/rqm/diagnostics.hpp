#pragma once

// Statistical verdicts on simulated output.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rqm/engine.hpp"
#include "rqm/kernel.hpp"
#include "rqm/noise.hpp"

namespace rqm::diagnostics {

/// Total variation between two measures on the same binning:
/// 1/2 sum |mu_i/|mu| - nu_i/|nu||, guards included as two extra cells.
/// This is the distance of the binned discretizations, a lower bound on the
/// distance of the underlying measures. Throws on mismatched bins or empty
/// measures.
double tv_distance(const engine::OccupationMeasure& mu, const engine::OccupationMeasure& nu);

/// Stream block used for the ensemble started at x0 for a given purpose;
/// depends only on (x0, purpose), never on the position of x0 in a list.
std::uint64_t stream_block(double x0, std::uint64_t purpose);

enum class Verdict { stable, unstable, withheld };

const char* to_string(Verdict v);

struct StabilityReport {
  std::vector<double> initial_states;
  std::size_t n_steps = 0;
  std::size_t n_replicates = 0;
  std::size_t bins = 0;
  std::vector<std::vector<double>> tv_matrix;  // cross-x0 distances
  double max_cross_tv = 0.0;
  double noise_tv = 0.0;   // two independent same-x0 ensembles
  double noise_reference_state = 0.0;
  double threshold = 0.0;  // 3 * noise_tv
  Verdict verdict = Verdict::withheld;
  bool advisory = false;   // noise model fails the sufficient conditions
  std::uint64_t absorbed_paths = 0;
  std::vector<engine::OccupationMeasure> measures;  // per initial state
};

StabilityReport stability_test(const noise::NoiseModel& model, const std::vector<double>& initial_states,
                               const engine::SimConfig& config);

struct InvariantEstimate {
  engine::OccupationMeasure occupation;
  Interval j;
  double mass_j = 0.0;           // fraction of time in bins inside J
  double min_density_j = 0.0;    // smallest binned density over bins inside J
  std::size_t bins_in_j = 0;
  double delta = 0.0;
  double density_floor = 0.0;    // delta * mass_j
  double sampling_allowance = 0.0;
  bool mass_positive = false;
  bool density_bound_holds = false;
  /// False when J misses the invariant interval of the support (supports in (1,4)).
  bool j_meets_invariant_interval = true;
  [[nodiscard]] bool consistent() const {
    return mass_positive && density_bound_holds && j_meets_invariant_interval;
  }
};

InvariantEstimate invariant_estimate(const noise::NoiseModel& model, const engine::SimConfig& config,
                                     const kernel::MinorizationCertificate& certificate);

struct ExtinctionReport {
  std::vector<std::size_t> checkpoints;
  std::vector<double> fraction_below;
  std::vector<double> standard_error;
  double threshold = 0.0;
  std::size_t replicates = 0;
  bool nondecreasing = true;  // within 2 combined standard errors
  [[nodiscard]] double final_fraction() const { return fraction_below.empty() ? 0.0 : fraction_below.back(); }
};

/// Marginal fraction of replicates with X_t < threshold at each checkpoint t.
ExtinctionReport extinction_test(const noise::NoiseModel& model, double x0, const std::vector<std::size_t>& checkpoints,
                                 std::size_t replicates, double threshold, std::uint64_t seed, unsigned threads = 1);

/// 10, 100, ... up to n (n itself always last).
std::vector<std::size_t> geometric_checkpoints(std::size_t n);

struct CyclicityReport {
  int period = 1;
  bool aperiodic = true;
  bool inconclusive = false;
  std::vector<double> concentration;   // index d - 1: max residue mass / mean residue mass
  std::vector<double> residue_masses;  // per residue class of the estimated period
  double reference_frequency = 0.0;    // visits / n
  std::uint64_t visits = 0;
};

struct CyclicityOptions {
  std::optional<double> x0;       // default: midpoint of J
  std::size_t burn_in = engine::kDefaultBurnIn;
  double periodic_threshold = 1.5;  // concentration needed to call a period
  double tie_fraction = 0.95;       // smallest d within this fraction of the best wins
};

CyclicityReport cyclicity_detect(const noise::NoiseModel& model, const Interval& j, std::size_t n, int d_max,
                                 std::uint64_t seed, const CyclicityOptions& options = {});

struct KolmogorovReport {
  double theta0 = 0.0;
  double eta = 0.0;
  engine::OccupationMeasure perturbed;
  engine::OccupationMeasure reference;
  double tv = 0.0;
};

/// Invariant measure of Uniform[theta0 - eta, theta0 + eta] noise against the
/// long-orbit histogram of F_theta0 from the same initial states.
KolmogorovReport kolmogorov_approx(double theta0, double eta, const engine::SimConfig& config);

}  // namespace rqm::diagnostics
