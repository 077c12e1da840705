#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rqm/noise.hpp"

using namespace rqm;
using namespace rqm::noise;

namespace {

NoiseModel mixture() { return NoiseModel({{2.0, 0.5}}, {{3.0, 3.5, 0.5}}); }

// Random model: up to two atoms and one to three pieces inside (0.2, 3.95).
NoiseModel random_model(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> loc(0.2, 3.95), w(0.1, 1.0);
  std::uniform_int_distribution<int> n_atoms(0, 2), n_pieces(1, 3);
  std::vector<Atom> atoms(n_atoms(gen));
  std::vector<UniformPiece> pieces(n_pieces(gen));
  double total = 0.0;
  for (auto& a : atoms) total += (a = {loc(gen), w(gen)}).weight;
  for (auto& p : pieces) {
    double a = loc(gen), b = loc(gen);
    if (a > b) std::swap(a, b);
    if (b - a < 0.05) b = std::min(3.99, a + 0.05);
    total += (p = {a, b, w(gen)}).weight;
  }
  for (auto& a : atoms) a.weight /= total;
  for (auto& p : pieces) p.weight /= total;
  // Fix rounding so weights sum to one.
  double s = 0.0;
  for (const auto& a : atoms) s += a.weight;
  for (std::size_t i = 0; i + 1 < pieces.size(); ++i) s += pieces[i].weight;
  pieces.back().weight = 1.0 - s;
  return NoiseModel(atoms, pieces);
}

// Reference expectation: atoms directly, pieces by quadrature.
double expect(const NoiseModel& m, const std::function<double(double)>& f, std::vector<double> cuts = {}) {
  double s = 0.0;
  for (const auto& a : m.atoms()) s += a.weight * f(a.location);
  for (const auto& p : m.pieces()) {
    s += p.height() * oracle::integrate(f, p.lo, p.hi, cuts);
  }
  return s;
}

}  // namespace

TEST_CASE("validation") {
  CHECK_THROWS_AS(NoiseModel({{4.2, 1.0}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel({}, {{2.0, 4.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel({{2.0, 0.5}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel({{2.0, -0.5}, {3.0, 1.5}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel({}, {{3.0, 2.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel({}, {}), std::invalid_argument);
  CHECK_NOTHROW(NoiseModel({{2.0, 0.3}}, {{2.5, 2.9, 0.7}}));
}

TEST_CASE("sampling") {
  Rng rng(1);
  const auto atom = NoiseModel::point_mass(2.5);
  for (int i = 0; i < 100; ++i) CHECK(sample(atom, rng) == 2.5);

  const auto u = NoiseModel::uniform(2.0, 3.0);
  const int n = 1000000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += sample(u, rng);
  CHECK(std::abs(s / n - 2.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));

  const auto mix = mixture();
  const int k = 100000;
  int atoms = 0;
  for (int i = 0; i < k; ++i) {
    const double e = sample(mix, rng);
    if (e == 2.0) ++atoms;
    else CHECK((e >= 3.0 && e <= 3.5));
  }
  CHECK(std::abs(atoms / double(k) - 0.5) < 3.0 * std::sqrt(0.25 / k));
}

TEST_CASE("empirical CDF passes Kolmogorov-Smirnov") {
  const std::vector<NoiseModel> models{NoiseModel::uniform(2.0, 3.0), NoiseModel({}, {{1.0, 2.0, 0.3}, {2.5, 3.9, 0.7}}),
                                       NoiseModel({}, {{1.2, 1.6, 0.5}, {1.4, 3.0, 0.5}})};
  std::uint64_t seed = 100;
  for (const auto& m : models) {
    Rng rng(seed++);
    const std::size_t n = 100000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = sample(m, rng);
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = cdf(m, xs[i]);
      d = std::max({d, std::abs(f - double(i) / n), std::abs(f - double(i + 1) / n)});
    }
    CHECK(d < oracle::kKs99 / std::sqrt(double(n)));
  }
}

TEST_CASE("density") {
  const auto u = NoiseModel::uniform(2.0, 3.0);
  CHECK(density(u, 2.4) == 1.0);
  CHECK(density(u, 3.5) == 0.0);
  CHECK(density(mixture(), 3.2) == 1.0);
  CHECK(density(mixture(), 2.0) == 0.0);
  std::mt19937_64 gen(3);
  for (int i = 0; i < 5; ++i) {
    const auto m = random_model(gen);
    std::vector<double> cuts;
    for (const auto& p : m.pieces()) cuts.insert(cuts.end(), {p.lo, p.hi});
    const double mass = oracle::integrate([&](double t) { return density(m, t); }, 0.0, 4.0, cuts);
    CHECK(mass == doctest::Approx(m.ac_mass()).epsilon(1e-12));
  }
}

TEST_CASE("log moments") {
  const auto u = NoiseModel::uniform(2.0, 3.0);
  CHECK(std::abs(e_log(u) - 0.9095425048844386) < 1e-9);
  CHECK(std::abs(e_log4m(u) - (2.0 * std::log(2.0) - 1.0)) < 1e-9);
  CHECK(std::abs(e_log(NoiseModel::uniform(0.5, 1.5)) - (-0.0452287)) < 1e-7);
  CHECK(e_log(NoiseModel::point_mass(1.0)) == 0.0);
  CHECK(e_log4m(NoiseModel::point_mass(3.0)) == 0.0);
  CHECK(e_log4m(NoiseModel::point_mass(4.0 - std::exp(-1.0))) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("log moments against quadrature on random models") {
  std::mt19937_64 gen(2024);
  for (int i = 0; i < 5; ++i) {
    const auto m = random_model(gen);
    const double el = expect(m, [](double t) { return std::log(t); });
    const double el4 = expect(m, [](double t) { return std::abs(std::log(4.0 - t)); }, {3.0});
    CHECK(std::abs(e_log(m) - el) < 1e-9);
    CHECK(std::abs(e_log4m(m) - el4) < 1e-9);
  }
}

TEST_CASE("support bounds") {
  auto b = support_bounds(NoiseModel::uniform(2.0, 3.0));
  CHECK(b.mu == 2.0);
  CHECK(b.nu == 3.0);
  b = support_bounds(NoiseModel({{1.5, 0.5}}, {{2.0, 3.0, 0.5}}));
  CHECK(b.mu == 1.5);
  CHECK(b.nu == 3.0);
  b = support_bounds(NoiseModel::point_mass(2.5));
  CHECK(b.mu == 2.5);
  CHECK(b.nu == 2.5);
  b = support_bounds(NoiseModel({{1.2, 0.0}, {2.5, 1.0}}, {}));
  CHECK(b.mu == 2.5);
}

TEST_CASE("check_conditions") {
  const auto u = check_conditions(NoiseModel::uniform(2.0, 3.0));
  CHECK(u.e_log == doctest::Approx(0.9095425).epsilon(1e-7));
  CHECK(u.log4m_finite);
  REQUIRE(u.density_interval.has_value());
  CHECK(u.density_interval->c == 2.0);
  CHECK(u.density_interval->d == 3.0);
  CHECK(u.density_interval->inf_h == 1.0);
  CHECK(u.hypotheses_hold);
  CHECK(u.scan_consistent);

  const auto a = check_conditions(NoiseModel::point_mass(2.5));
  CHECK_FALSE(a.ac_component);
  CHECK_FALSE(a.density_interval.has_value());
  CHECK_FALSE(a.hypotheses_hold);

  const auto e = check_conditions(NoiseModel::uniform(0.5, 1.5));
  CHECK(e.e_log < 0.0);
  CHECK_FALSE(e.log_moment_positive);
  CHECK_FALSE(e.hypotheses_hold);

  // Density only below 1: positive drift is impossible there, and no interval qualifies.
  const auto low = check_conditions(NoiseModel({{3.0, 0.8}}, {{0.3, 0.9, 0.2}}));
  CHECK(low.log_moment_positive);
  CHECK_FALSE(low.density_condition);

  // Two runs of positive density; the longer one wins.
  const auto two = check_conditions(NoiseModel({}, {{1.5, 1.7, 0.5}, {2.0, 3.0, 0.5}}));
  REQUIRE(two.density_interval.has_value());
  CHECK(two.density_interval->c == 2.0);
  CHECK(two.density_interval->d == 3.0);
  CHECK(two.density_interval->inf_h == doctest::Approx(0.5));
}

TEST_CASE("moment verdict flips at the root of the closed form") {
  const auto f = [](double c) { return (c + 1.0) * std::log(c + 1.0) - (c > 0 ? c * std::log(c) : 0.0) - 1.0; };
  const double root = oracle::bisect(f, 0.3, 0.8);
  CHECK((root > 0.53 && root < 0.55));
  CHECK(check_conditions(NoiseModel::uniform(root + 1e-6, root + 1.0 + 1e-6)).log_moment_positive);
  CHECK_FALSE(check_conditions(NoiseModel::uniform(root - 1e-6, root + 1.0 - 1e-6)).log_moment_positive);
  for (double c : {0.35, 0.45, 0.53, 0.55, 0.65, 0.75}) {
    CHECK(check_conditions(NoiseModel::uniform(c, c + 1.0)).log_moment_positive == (c > root));
  }
}
