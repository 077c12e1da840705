#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <locale>
#include <sstream>

#include "rqm/cli.hpp"
#include "rqm/config.hpp"
#include "rqm/report.hpp"

using namespace rqm;
using config::ConfigError;
using config::ExperimentConfig;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rqm_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& text) {
  try {
    (void)ExperimentConfig::parse(text, "t.cfg").noise_model();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

const char* kUniform23 = "[noise]\nuniform = 2.0 3.0 1.0\n[sim]\nseed = 5\nsteps = 20000\nreplicates = 3\n";

}  // namespace

TEST_CASE("parsing") {
  const auto cfg = ExperimentConfig::parse(
      "# comment\n"
      "[noise]\n"
      "atom = 2.0 0.5   # trailing comment\n"
      "uniform = 3.0 3.5 0.25\n"
      "uniform = 3.5 3.6 0.25\n"
      "\n"
      "[sim]\n"
      "steps = 1e6\n"
      "initial_states = 0.05, 0.5 0.95\n"
      "write_trajectory = yes\n");
  const auto m = cfg.noise_model();
  CHECK(m.atoms().size() == 1);
  CHECK(m.pieces().size() == 2);
  CHECK(cfg.get_uint("sim.steps", 0) == 1000000);
  CHECK(cfg.get_doubles("sim.initial_states", {}) == std::vector<double>{0.05, 0.5, 0.95});
  CHECK(cfg.get_bool("sim.write_trajectory", false));
  CHECK(cfg.get_uint("sim.bins", 200) == 200);
  CHECK(cfg.get_double("sim.seed", 1.5) == 1.5);
}

TEST_CASE("parse errors carry the line") {
  CHECK(error_of("[noise]\nuniform = 2 3 1\nbogus = 1\n").find("t.cfg:3") != std::string::npos);
  CHECK(error_of("[noise]\nuniform = 2 3 1\nbogus = 1\n").find("noise.bogus") != std::string::npos);
  CHECK(error_of("uniform = 2 3 1\n").find("t.cfg:1") != std::string::npos);
  CHECK(error_of("[noise\n").find("t.cfg:1") != std::string::npos);
  CHECK(error_of("[noise]\nuniform 2 3 1\n").find("t.cfg:2") != std::string::npos);
  CHECK(error_of("[noise]\nuniform = 2 3\n").find("t.cfg:2") != std::string::npos);
  CHECK(error_of("[noise]\nuniform = 2 x 1\n").find("t.cfg:2") != std::string::npos);
  CHECK(error_of("[noise]\nuniform = 2 3 0.5\n").find("invalid noise model") != std::string::npos);
  CHECK(error_of("[sim]\nseed = 1\n").find("no components") != std::string::npos);
  CHECK(error_of("[noise]\nuniform = 2 3 1\n[sim]\nseed = 1\nseed = 2\n").find("t.cfg:5") != std::string::npos);

  const auto cfg = ExperimentConfig::parse("[noise]\nuniform = 2 3 1\n[sim]\n\nsteps = -4\n", "t.cfg");
  try {
    (void)cfg.get_uint("sim.steps", 0);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("t.cfg:5") != std::string::npos);
  }
  CHECK_THROWS_AS((void)ExperimentConfig::parse("[sim]\nsteps = 1.5\n").get_uint("sim.steps", 0), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/rqm.cfg"), ConfigError);
}

TEST_CASE("overrides take precedence per key") {
  auto cfg = ExperimentConfig::parse(kUniform23);
  cfg.override_with("sim.seed=9");
  CHECK(cfg.get_uint("sim.seed", 0) == 9);
  CHECK(cfg.get_uint("sim.steps", 0) == 20000);
  cfg.override_with("sim.bins = 50");
  CHECK(cfg.get_uint("sim.bins", 0) == 50);
  cfg.override_with("noise.uniform=2.2 2.8 1");
  CHECK(cfg.noise_model().pieces().size() == 1);
  CHECK(cfg.noise_model().pieces()[0].lo == 2.2);
  CHECK_THROWS_AS(cfg.override_with("sim.nope=1"), ConfigError);
  CHECK_THROWS_AS(cfg.override_with("sim.seed"), ConfigError);
}

TEST_CASE("number formatting") {
  CHECK(report::format_double(0.1) == "0.10000000000000001");
  CHECK(report::format_double(0.5) == "0.5");
  CHECK(report::format_double(1e-20) == "9.9999999999999995e-21");
  CHECK(config::parse_double(report::format_double(0.7)) == 0.7);
}

TEST_CASE("check subcommand") {
  const auto dir = scratch_dir("check");
  auto cfg = ExperimentConfig::parse(kUniform23);
  cfg.override_with("output.dir=" + dir.string());
  std::ostringstream out;
  CHECK(cli::execute("check", cfg, out) == 0);
  const auto report = slurp(dir / "report.txt");
  CHECK(report.find("e_log=0.9095425048844") != std::string::npos);
  CHECK(report.find("hypotheses_hold=true") != std::string::npos);

  cfg.override_with("noise.uniform=0.5 1.5 1");
  CHECK(cli::execute("check", cfg, out) == 2);
  CHECK(slurp(dir / "report.txt").find("moment_condition=false") != std::string::npos);
  CHECK_THROWS(cli::execute("bogus", cfg, out));
}

TEST_CASE("run reports errors with status 1") {
  const auto dir = scratch_dir("errors");
  std::ofstream(dir / "bad.cfg") << "[noise]\nuniform = 2 3 1\n[sim]\nfoo = 3\n";
  std::ostringstream out, err;
  CHECK(cli::run("check", (dir / "bad.cfg").string(), {}, out, err) == 1);
  CHECK(err.str().find("bad.cfg:4") != std::string::npos);

  std::ofstream(dir / "k.cfg") << "[noise]\nuniform = 2 3 1\n[kernel]\nsteps = 3\nresolution = 16\ntolerance = 1e-14\n";
  err.str("");
  CHECK(cli::run("kernel", (dir / "k.cfg").string(), {"output.dir=" + (dir / "k").string()}, out, err) == 1);
  CHECK(err.str().find("quadrature") != std::string::npos);

  err.str("");
  CHECK(cli::run("cyclicity", (dir / "k.cfg").string(), {"output.dir=" + (dir / "c").string()}, out, err) == 1);
  CHECK(err.str().find("cyclicity.j_lo") != std::string::npos);
}

TEST_CASE("simulate outputs are reproducible across thread counts") {
  auto cfg = ExperimentConfig::parse(kUniform23);
  cfg.override_with("sim.write_trajectory=true");
  cfg.override_with("sim.trajectory_steps=100");
  std::ostringstream out;
  std::vector<std::string> outputs;
  for (const char* threads : {"1", "2", "3"}) {
    const auto dir = scratch_dir(std::string("sim") + threads);
    auto c = cfg;
    c.override_with(std::string("sim.threads=") + threads);
    c.override_with("output.dir=" + dir.string());
    CHECK(cli::execute("simulate", c, out) == 0);
    outputs.push_back(slurp(dir / "occupation.csv") + slurp(dir / "trajectory.csv") + slurp(dir / "report.txt"));
  }
  CHECK(outputs[0] == outputs[1]);
  CHECK(outputs[0] == outputs[2]);

  const auto occ = slurp(fs::temp_directory_path() / "rqm_cli_test_sim1" / "occupation.csv");
  CHECK(occ.rfind("bin_left,bin_right,count,frequency\n", 0) == 0);
  const auto traj = slurp(fs::temp_directory_path() / "rqm_cli_test_sim1" / "trajectory.csv");
  CHECK(traj.rfind("step,x,epsilon\n0,0.5,\n", 0) == 0);
}

TEST_CASE("output does not depend on the global locale") {
  const auto dir = scratch_dir("locale");
  auto cfg = ExperimentConfig::parse(kUniform23);
  cfg.override_with("output.dir=" + dir.string());
  std::ostringstream out;
  cli::execute("check", cfg, out);
  const auto before = slurp(dir / "report.txt");
  try {
    std::locale::global(std::locale("de_DE.UTF-8"));
  } catch (const std::runtime_error&) {
    // Locale not installed; the C++ paths never consult it anyway.
  }
  const auto again = ExperimentConfig::parse(kUniform23);
  CHECK(again.noise_model().pieces()[0].hi == 3.0);
  cli::execute("check", cfg, out);
  std::locale::global(std::locale::classic());
  CHECK(slurp(dir / "report.txt") == before);
}

TEST_CASE("remaining subcommands produce their files") {
  const auto dir = scratch_dir("all");
  auto cfg = ExperimentConfig::parse(
      "[noise]\nuniform = 2.2 2.8 1\n"
      "[sim]\nseed = 2\nsteps = 20000\nreplicates = 2\nthreads = 1\n"
      "[orbit]\nsamples = 9\n"
      "[kernel]\nsteps = 2\ny_points = 20\nresolution = 512\n"
      "[minorize]\nperiod = 1\ntheta0 = 2.5\nj_lo = 0.5455\nj_hi = 0.6428\ngrid = 8\n"
      "[extinction]\nsteps = 1000\nreplicates = 20\n"
      "[cyclicity]\nj_lo = 0.5455\nj_hi = 0.6428\nsteps = 20000\n"
      "[kolmogorov]\ntheta0 = 2.5\neta = 0.05\ntv_threshold = 1\n");
  cfg.override_with("output.dir=" + dir.string());
  std::ostringstream out;
  CHECK(cli::execute("orbit", cfg, out) == 0);
  CHECK(fs::exists(dir / "orbits.csv"));
  CHECK(cli::execute("kernel", cfg, out) == 0);
  CHECK(slurp(dir / "density.csv").rfind("x/y,0.025000000000000001,", 0) == 0);
  CHECK(cli::execute("minorize", cfg, out) == 0);
  const auto cert = slurp(dir / "certificate.txt");
  for (const char* key : {"j_lo=", "j_hi=", "m=1", "delta=", "theta0=2.5", "gamma1=", "gamma2=", "resolution=",
                          "error_allowance="}) {
    CHECK(cert.find(key) != std::string::npos);
  }
  CHECK(cli::execute("stability", cfg, out) == 0);
  CHECK(fs::exists(dir / "tv_matrix.csv"));
  CHECK(fs::exists(dir / "occupation_2.csv"));
  CHECK(cli::execute("extinction", cfg, out) == 0);
  CHECK(slurp(dir / "checkpoints.csv").rfind("checkpoint,fraction_below,standard_error\n10,0,0\n", 0) == 0);
  CHECK(cli::execute("cyclicity", cfg, out) == 0);
  CHECK(slurp(dir / "report.txt").find("period=1") != std::string::npos);
  CHECK(fs::exists(dir / "residues.csv"));
  CHECK(cli::execute("kolmogorov", cfg, out) == 0);
  CHECK(fs::exists(dir / "perturbed.csv"));
  CHECK(fs::exists(dir / "reference.csv"));

  cfg.override_with("noise.uniform=0.5 1.5 1");
  CHECK(cli::execute("extinction", cfg, out) == 2);
  cfg.override_with("minorize.j_lo=0.2");
  CHECK(cli::execute("minorize", cfg, out) == 2);
}
