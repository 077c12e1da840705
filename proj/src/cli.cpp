#include "rqm/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <stdexcept>

#include "rqm/diagnostics.hpp"
#include "rqm/engine.hpp"
#include "rqm/kernel.hpp"
#include "rqm/quadmap.hpp"
#include "rqm/report.hpp"

namespace rqm::cli {

namespace fs = std::filesystem;
using config::ConfigError;
using config::ExperimentConfig;
using report::Csv;
using report::format_double;
using report::KeyValue;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kNegative = 2;

fs::path output_dir(const ExperimentConfig& cfg) {
  fs::path dir = cfg.get_string("output.dir", ".");
  fs::create_directories(dir);
  return dir;
}

unsigned threads(const ExperimentConfig& cfg) { return static_cast<unsigned>(cfg.get_uint("sim.threads", 0)); }

engine::SimConfig sim_config(const ExperimentConfig& cfg, std::vector<double> default_states = {0.5}) {
  engine::SimConfig s;
  s.master_seed = cfg.get_uint("sim.seed", 0);
  s.n_steps = cfg.get_uint("sim.steps", s.n_steps);
  s.n_replicates = cfg.get_uint("sim.replicates", s.n_replicates);
  s.burn_in = cfg.get_uint("sim.burn_in", s.burn_in);
  s.bins = cfg.get_uint("sim.bins", s.bins);
  s.initial_states = cfg.get_doubles("sim.initial_states", std::move(default_states));
  s.threads = threads(cfg);
  s.validate();
  return s;
}

int require_int(const ExperimentConfig& cfg, const std::string& key, std::uint64_t fallback) {
  const auto v = cfg.get_uint(key, fallback);
  if (v < 1 || v > 1024) throw ConfigError(key + " must lie in [1, 1024]");
  return static_cast<int>(v);
}

double required_double(const ExperimentConfig& cfg, const std::string& key) {
  if (!cfg.has(key)) throw ConfigError("missing required key '" + key + "'");
  return cfg.get_double(key, 0.0);
}

Interval required_interval(const ExperimentConfig& cfg, const std::string& section) {
  const Interval j{required_double(cfg, section + ".j_lo"), required_double(cfg, section + ".j_hi")};
  require_state_interval(j, section.c_str());
  return j;
}

void finish(const KeyValue& kv, const fs::path& dir, std::ostream& out) {
  kv.write(dir / "report.txt");
  out << kv.str();
}

// ---------------------------------------------------------------------------

int cmd_check(const ExperimentConfig& cfg, std::ostream& out) {
  const auto model = cfg.noise_model();
  const auto rep = noise::check_conditions(model);
  KeyValue kv;
  kv.add("e_log", rep.e_log);
  kv.add("e_log4m", rep.e_log4m);
  kv.add("support_mu", rep.support.mu);
  kv.add("support_nu", rep.support.nu);
  kv.add("ac_component", rep.ac_component);
  kv.add("density_interval", rep.density_interval.has_value());
  if (rep.density_interval) {
    kv.add("density_c", rep.density_interval->c);
    kv.add("density_d", rep.density_interval->d);
    kv.add("density_inf_h", rep.density_interval->inf_h);
  }
  kv.add("log_moment_positive", rep.log_moment_positive);
  kv.add("log4m_finite", rep.log4m_finite);
  kv.add("moment_condition", rep.moment_condition);
  kv.add("density_condition", rep.density_condition);
  kv.add("scan_consistent", rep.scan_consistent);
  kv.add("hypotheses_hold", rep.hypotheses_hold);
  kv.add("label", rep.label);
  finish(kv, output_dir(cfg), out);
  return rep.hypotheses_hold ? kOk : kNegative;
}

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& out) {
  const auto model = cfg.noise_model();
  const auto sim = sim_config(cfg);
  const auto dir = output_dir(cfg);

  engine::OccupationMeasure total = engine::OccupationMeasure::uniform(sim.bins);
  for (double x0 : sim.initial_states) {
    total += engine::ensemble_occupation(model, x0, sim, diagnostics::stream_block(x0, 0));
  }
  report::occupation_csv(total).write(dir / "occupation.csv");

  KeyValue kv;
  kv.add("initial_states", sim.initial_states);
  kv.add("steps", static_cast<std::uint64_t>(sim.n_steps));
  kv.add("replicates", static_cast<std::uint64_t>(sim.n_replicates));
  kv.add("burn_in", static_cast<std::uint64_t>(sim.burn_in));
  kv.add("bins", static_cast<std::uint64_t>(sim.bins));
  kv.add("total", total.total());
  kv.add("underflow", total.underflow());
  kv.add("overflow", total.overflow());
  kv.add("absorbed_paths", total.absorbed_paths());
  if (const auto r = total.occupied_range()) {
    kv.add("occupied_lo", r->lo);
    kv.add("occupied_hi", r->hi);
  }
  if (cfg.get_bool("sim.write_trajectory", false)) {
    const double x0 = sim.initial_states.front();
    const auto n = cfg.get_uint("sim.trajectory_steps", std::min<std::size_t>(sim.n_steps, 10000));
    // Same stream as replicate 0 of the ensemble from x0.
    const auto traj =
        engine::simulate_trajectory(model, x0, n, StreamKey{sim.master_seed, diagnostics::stream_block(x0, 0), 0});
    report::trajectory_csv(traj).write(dir / "trajectory.csv");
    kv.add("trajectory_steps", static_cast<std::uint64_t>(traj.x.size() - 1));
    kv.add("trajectory_absorbed", traj.absorbed);
  }
  finish(kv, dir, out);
  return kOk;
}

int cmd_orbit(const ExperimentConfig& cfg, std::ostream& out) {
  Interval range;
  if (cfg.has("orbit.theta_min") || cfg.has("orbit.theta_max")) {
    range = {required_double(cfg, "orbit.theta_min"), required_double(cfg, "orbit.theta_max")};
  } else {
    const auto sb = noise::support_bounds(cfg.noise_model());
    range = {sb.mu, sb.nu};
  }
  const int m = require_int(cfg, "orbit.period", 1);
  const auto samples = cfg.get_uint("orbit.samples", 25);
  const auto table = quadmap::q_of_theta(range, m, samples);

  std::vector<std::string> header{"theta", "found", "q", "dq", "multiplier", "transversality"};
  for (int i = 1; i <= m; ++i) header.push_back("point_" + std::to_string(i));
  Csv csv(header);
  for (const auto& s : table.samples) {
    std::vector<std::string> row{format_double(s.theta)};
    const auto orbit = quadmap::find_periodic_orbit(s.theta, m);
    if (orbit) {
      row.insert(row.end(), {"true", format_double(orbit->q()), s.dq ? format_double(*s.dq) : "",
                             format_double(orbit->multiplier), format_double(quadmap::check_transversality(*orbit))});
      for (double p : orbit->points) row.push_back(format_double(p));
    } else {
      row.insert(row.end(), {"false", "", "", "", ""});
      row.resize(header.size());
    }
    csv.row(row);
  }
  const auto dir = output_dir(cfg);
  csv.write(dir / "orbits.csv");

  const bool diffeomorphism =
      table.holes == 0 && table.strictly_monotone && table.derivative_sign_constant && table.derivative_nonvanishing;
  KeyValue kv;
  kv.add("theta_min", range.lo);
  kv.add("theta_max", range.hi);
  kv.add("period", m);
  kv.add("samples", static_cast<std::uint64_t>(table.samples.size()));
  kv.add("holes", static_cast<std::uint64_t>(table.holes));
  kv.add("strictly_monotone", table.strictly_monotone);
  kv.add("derivative_sign_constant", table.derivative_sign_constant);
  kv.add("derivative_nonvanishing", table.derivative_nonvanishing);
  kv.add("q_diffeomorphism", diffeomorphism);
  finish(kv, dir, out);
  return diffeomorphism ? kOk : kNegative;
}

kernel::QuadratureOptions quadrature(const ExperimentConfig& cfg, const std::string& section) {
  kernel::QuadratureOptions q;
  q.resolution = cfg.get_uint(section + ".resolution", q.resolution);
  q.margin = cfg.get_double("kernel.margin", q.margin);
  q.tolerance = cfg.get_double("kernel.tolerance", q.tolerance);
  return q;
}

int cmd_kernel(const ExperimentConfig& cfg, std::ostream& out) {
  const auto model = cfg.noise_model();
  const auto xs = cfg.get_doubles("kernel.x", {0.3, 0.5, 0.7});
  const auto n_y = cfg.get_uint("kernel.y_points", 200);
  if (n_y == 0) throw ConfigError("kernel.y_points must be positive");
  const int n = require_int(cfg, "kernel.steps", 1);
  std::vector<double> ys(n_y);
  for (std::size_t j = 0; j < n_y; ++j) ys[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(n_y);

  const auto grid = kernel::density_grid(model, xs, ys, n, quadrature(cfg, "kernel"), threads(cfg));
  std::vector<std::string> header{"x/y"};
  for (double y : ys) header.push_back(format_double(y));
  Csv csv(header);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<std::string> row{format_double(xs[i])};
    for (double v : grid.values[i]) row.push_back(format_double(v));
    csv.row(row);
  }
  const auto dir = output_dir(cfg);
  csv.write(dir / "density.csv");

  KeyValue kv;
  kv.add("steps", n);
  kv.add("x_points", static_cast<std::uint64_t>(xs.size()));
  kv.add("y_points", static_cast<std::uint64_t>(n_y));
  kv.add("resolution", static_cast<std::uint64_t>(grid.resolution));
  kv.add("max_drift", grid.max_drift);
  finish(kv, dir, out);
  return kOk;
}

int cmd_minorize(const ExperimentConfig& cfg, std::ostream& out) {
  const auto model = cfg.noise_model();
  kernel::MinorizationOptions probe;
  probe.grid_n = cfg.get_uint("minorize.grid", probe.grid_n);
  probe.quadrature = quadrature(cfg, "minorize");
  probe.threads = threads(cfg);

  kernel::MinorizationOutcome outcome;
  if (cfg.has("minorize.theta0") || cfg.has("minorize.j_lo") || cfg.has("minorize.j_hi")) {
    const double theta0 = required_double(cfg, "minorize.theta0");
    const auto j = required_interval(cfg, "minorize");
    outcome = kernel::minorization_probe(model, theta0, require_int(cfg, "minorize.period", 1), j, probe);
  } else {
    kernel::DefaultCertificateOptions opts;
    opts.max_period = require_int(cfg, "minorize.max_period", static_cast<std::uint64_t>(opts.max_period));
    opts.probe = probe;
    outcome = kernel::default_minorization(model, opts);
  }

  const auto dir = output_dir(cfg);
  KeyValue kv;
  kv.add("certified", outcome.certificate.has_value());
  kv.add("grid_min", outcome.grid_min);
  kv.add("error_allowance", outcome.error_allowance);
  if (!outcome.diagnostics.empty()) kv.add("diagnostics", outcome.diagnostics);
  if (const auto& c = outcome.certificate) {
    KeyValue cert;
    cert.add("j_lo", c->j.lo);
    cert.add("j_hi", c->j.hi);
    cert.add("m", c->m);
    cert.add("delta", c->delta);
    cert.add("theta0", c->theta0);
    cert.add("gamma1", c->gamma1 ? format_double(*c->gamma1) : "none");
    cert.add("gamma2", c->gamma2 ? format_double(*c->gamma2) : "none");
    cert.add("resolution", static_cast<std::uint64_t>(c->resolution));
    cert.add("grid_n", static_cast<std::uint64_t>(c->grid_n));
    cert.add("grid_min", c->grid_min);
    cert.add("error_allowance", c->error_allowance);
    cert.add("lipschitz", c->lipschitz);
    cert.add("max_drift", c->max_drift);
    cert.add("j_in_q_image", c->j_in_q_image());
    cert.write(dir / "certificate.txt");
    kv.add("delta", c->delta);
    kv.add("j_lo", c->j.lo);
    kv.add("j_hi", c->j.hi);
    kv.add("m", c->m);
  }
  finish(kv, dir, out);
  return outcome.certificate ? kOk : kNegative;
}

int cmd_stability(const ExperimentConfig& cfg, std::ostream& out) {
  const auto model = cfg.noise_model();
  const auto sim = sim_config(cfg);
  const auto states =
      cfg.get_doubles("stability.initial_states", cfg.get_doubles("sim.initial_states", {0.05, 0.5, 0.95}));
  const auto rep = diagnostics::stability_test(model, states, sim);
  const auto dir = output_dir(cfg);

  std::vector<std::string> header{"x0"};
  for (double x : states) header.push_back(format_double(x));
  Csv tv(header);
  for (std::size_t a = 0; a < states.size(); ++a) {
    std::vector<std::string> row{format_double(states[a])};
    for (double v : rep.tv_matrix[a]) row.push_back(format_double(v));
    tv.row(row);
  }
  tv.write(dir / "tv_matrix.csv");
  for (std::size_t a = 0; a < states.size(); ++a) {
    report::occupation_csv(rep.measures[a]).write(dir / ("occupation_" + std::to_string(a) + ".csv"));
  }

  KeyValue kv;
  kv.add("initial_states", states);
  kv.add("steps", static_cast<std::uint64_t>(rep.n_steps));
  kv.add("replicates", static_cast<std::uint64_t>(rep.n_replicates));
  kv.add("bins", static_cast<std::uint64_t>(rep.bins));
  kv.add("max_cross_tv", rep.max_cross_tv);
  kv.add("noise_tv", rep.noise_tv);
  kv.add("noise_reference_state", rep.noise_reference_state);
  kv.add("threshold", rep.threshold);
  kv.add("absorbed_paths", rep.absorbed_paths);
  kv.add("advisory", rep.advisory);
  const auto sb = noise::support_bounds(model);
  if (sb.mu > 1.0 && sb.nu < 4.0) {
    const auto inv = quadmap::invariant_interval(sb.mu, sb.nu);
    double inside = 0.0;
    std::uint64_t total = 0;
    for (const auto& m : rep.measures) {
      inside += m.mass_within({inv.a, inv.b}) * static_cast<double>(m.total());
      total += m.total();
    }
    kv.add("invariant_interval_a", inv.a);
    kv.add("invariant_interval_b", inv.b);
    kv.add("mass_in_invariant_interval", total > 0 ? inside / static_cast<double>(total) : 0.0);
  }
  kv.add("verdict", diagnostics::to_string(rep.verdict));
  finish(kv, dir, out);
  return rep.verdict == diagnostics::Verdict::stable ? kOk : kNegative;
}

int cmd_extinction(const ExperimentConfig& cfg, std::ostream& out) {
  const auto model = cfg.noise_model();
  const double x0 = cfg.get_double("extinction.x0", 0.5);
  const auto replicates = cfg.get_uint("extinction.replicates", 200);
  const auto steps = cfg.get_uint("extinction.steps", 100000);
  const double threshold = cfg.get_double("extinction.threshold", 1e-3);
  const double verdict_fraction = cfg.get_double("extinction.verdict_fraction", 0.9);
  const auto rep = diagnostics::extinction_test(model, x0, diagnostics::geometric_checkpoints(steps), replicates,
                                                threshold, cfg.get_uint("sim.seed", 0), threads(cfg));
  const auto dir = output_dir(cfg);

  Csv csv({"checkpoint", "fraction_below", "standard_error"});
  for (std::size_t k = 0; k < rep.checkpoints.size(); ++k) {
    csv.row({std::to_string(rep.checkpoints[k]), format_double(rep.fraction_below[k]),
             format_double(rep.standard_error[k])});
  }
  csv.write(dir / "checkpoints.csv");

  const bool extinct = rep.final_fraction() >= verdict_fraction;
  KeyValue kv;
  kv.add("x0", x0);
  kv.add("replicates", static_cast<std::uint64_t>(rep.replicates));
  kv.add("steps", static_cast<std::uint64_t>(steps));
  kv.add("threshold", rep.threshold);
  kv.add("final_fraction", rep.final_fraction());
  kv.add("nondecreasing", rep.nondecreasing);
  kv.add("extinct", extinct);
  finish(kv, dir, out);
  return extinct ? kNegative : kOk;
}

int cmd_cyclicity(const ExperimentConfig& cfg, std::ostream& out) {
  const auto model = cfg.noise_model();
  const auto j = required_interval(cfg, "cyclicity");
  const auto n = cfg.get_uint("cyclicity.steps", 1000000);
  const int d_max = require_int(cfg, "cyclicity.d_max", 8);
  diagnostics::CyclicityOptions opts;
  opts.x0 = cfg.get_optional_double("cyclicity.x0");
  opts.burn_in = cfg.get_uint("sim.burn_in", opts.burn_in);
  const auto rep = diagnostics::cyclicity_detect(model, j, n, d_max, cfg.get_uint("sim.seed", 0), opts);
  const auto dir = output_dir(cfg);

  Csv residues({"residue", "mass"});
  for (std::size_t r = 0; r < rep.residue_masses.size(); ++r) {
    residues.row({std::to_string(r), format_double(rep.residue_masses[r])});
  }
  residues.write(dir / "residues.csv");
  Csv conc({"d", "concentration"});
  for (std::size_t d = 0; d < rep.concentration.size(); ++d) {
    conc.row({std::to_string(d + 1), format_double(rep.concentration[d])});
  }
  conc.write(dir / "concentration.csv");

  KeyValue kv;
  kv.add("j_lo", j.lo);
  kv.add("j_hi", j.hi);
  kv.add("steps", static_cast<std::uint64_t>(n));
  kv.add("visits", rep.visits);
  kv.add("reference_frequency", rep.reference_frequency);
  kv.add("inconclusive", rep.inconclusive);
  kv.add("period", rep.period);
  kv.add("aperiodic", rep.aperiodic);
  finish(kv, dir, out);
  return rep.inconclusive ? kNegative : kOk;
}

int cmd_kolmogorov(const ExperimentConfig& cfg, std::ostream& out) {
  const double theta0 = required_double(cfg, "kolmogorov.theta0");
  const double eta = required_double(cfg, "kolmogorov.eta");
  const double tv_threshold = cfg.get_double("kolmogorov.tv_threshold", 0.1);
  const auto sim = sim_config(cfg);
  const auto rep = diagnostics::kolmogorov_approx(theta0, eta, sim);
  const auto dir = output_dir(cfg);
  report::occupation_csv(rep.perturbed).write(dir / "perturbed.csv");
  report::occupation_csv(rep.reference).write(dir / "reference.csv");

  KeyValue kv;
  kv.add("theta0", theta0);
  kv.add("eta", eta);
  kv.add("steps", static_cast<std::uint64_t>(sim.n_steps));
  kv.add("bins", static_cast<std::uint64_t>(sim.bins));
  kv.add("tv", rep.tv);
  kv.add("tv_threshold", tv_threshold);
  kv.add("within_threshold", rep.tv <= tv_threshold);
  finish(kv, dir, out);
  return rep.tv <= tv_threshold ? kOk : kNegative;
}

using Command = int (*)(const ExperimentConfig&, std::ostream&);

const std::map<std::string, Command>& table() {
  static const std::map<std::string, Command> t{
      {"check", cmd_check},         {"simulate", cmd_simulate},     {"orbit", cmd_orbit},
      {"kernel", cmd_kernel},       {"minorize", cmd_minorize},     {"stability", cmd_stability},
      {"extinction", cmd_extinction}, {"cyclicity", cmd_cyclicity}, {"kolmogorov", cmd_kolmogorov},
  };
  return t;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"check",     "simulate",   "orbit",     "kernel",    "minorize",
                                              "stability", "extinction", "cyclicity", "kolmogorov"};
  return names;
}

int execute(const std::string& subcommand, const ExperimentConfig& cfg, std::ostream& out) {
  const auto it = table().find(subcommand);
  if (it == table().end()) throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
  return it->second(cfg, out);
}

int run(const std::string& subcommand, const std::string& config_path, const std::vector<std::string>& overrides,
        std::ostream& out, std::ostream& err) {
  try {
    auto cfg = ExperimentConfig::load(config_path);
    for (const auto& o : overrides) cfg.override_with(o);
    return execute(subcommand, cfg, out);
  } catch (const kernel::QuadratureError& e) {
    err << "rqm " << subcommand << ": quadrature: " << e.what() << " (drift " << format_double(e.drift()) << ")\n";
  } catch (const std::exception& e) {
    err << "rqm " << subcommand << ": " << e.what() << "\n";
  }
  return kError;
}

}  // namespace rqm::cli
