#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rqm/kernel.hpp"

using namespace rqm;
using namespace rqm::kernel;
using noise::NoiseModel;

namespace {

double s_of(double x) { return x * (1.0 - x); }

// Integral over y of a row, split at the row's breakpoints.
double row_mass(const NStepDensity& p, double tol = 1e-11, unsigned depth = 12) {
  return oracle::integrate([&](double y) { return p(y); }, 0.0, 1.0, p.breakpoints(), tol, depth);
}

}  // namespace

TEST_CASE("one-step density") {
  const auto u = NoiseModel::uniform(2.0, 3.0);
  CHECK(one_step_density(u, 0.5, 0.6) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(one_step_density(u, 0.5, 0.9) == 0.0);
  CHECK_THROWS(one_step_density(NoiseModel::point_mass(2.5), 0.5, 0.6));

  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> r(0.001, 0.999);
  const auto mix = NoiseModel({{2.0, 0.4}}, {{1.5, 2.5, 0.3}, {3.0, 3.7, 0.3}});
  for (int i = 0; i < 1000; ++i) {
    const double x = r(gen), y = r(gen);
    CHECK(one_step_density(mix, x, y) == doctest::Approx(one_step_density(mix, 1.0 - x, y)).epsilon(1e-12));
  }
}

TEST_CASE("one-step rows integrate to the density mass") {
  const auto h = DensityComponent::of(NoiseModel::uniform(2.0, 3.0));
  for (double x : {0.3, 0.5, 0.7, 0.05, 0.93}) {
    const NStepDensity p(h, x, 1);
    CHECK(std::abs(row_mass(p) - 1.0) < 1e-12);
  }
  const auto mix = DensityComponent::of(NoiseModel({{2.0, 0.4}}, {{1.5, 2.5, 0.3}, {3.0, 3.7, 0.3}}));
  CHECK(mix.mass() == doctest::Approx(0.6));
  CHECK(std::abs(row_mass(NStepDensity(mix, 0.42, 1)) - 0.6) < 1e-12);
}

TEST_CASE("n = 1 matches the one-step kernel") {
  const auto model = NoiseModel({}, {{2.2, 2.6, 0.5}, {2.9, 3.5, 0.5}});
  const auto h = DensityComponent::of(model);
  for (double x : {0.2, 0.5, 0.77}) {
    const NStepDensity p(h, x, 1);
    for (int k = 1; k < 100; ++k) {
      const double y = k / 100.0;
      CHECK(p(y) == one_step_density(model, x, y));
    }
  }
}

TEST_CASE("two-step closed form against direct quadrature") {
  const auto h = DensityComponent::of(NoiseModel::uniform(2.0, 3.0));
  const double x = 0.3;
  const NStepDensity p2(h, x, 2);
  const double sx = s_of(x);
  for (double y : {0.4, 0.5, 0.55, 0.6, 0.65, 0.7, 0.74}) {
    const double ref = oracle::integrate(
        [&](double z) { return one_step_density(h, x, z) * one_step_density(h, z, y); }, 2.0 * sx, 3.0 * sx,
        {0.5 - 0.5 * std::sqrt(std::max(0.0, 1.0 - 4.0 * y / 2.0)), 0.5 - 0.5 * std::sqrt(std::max(0.0, 1.0 - 4.0 * y / 3.0)),
         0.5 + 0.5 * std::sqrt(std::max(0.0, 1.0 - 4.0 * y / 3.0)), 0.5 + 0.5 * std::sqrt(std::max(0.0, 1.0 - 4.0 * y / 2.0))});
    CHECK(p2(y) == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("multi-step normalization") {
  const auto h = DensityComponent::of(NoiseModel::uniform(2.0, 3.0));
  const QuadratureOptions q{1024, 1e-6, 1e-5};
  for (double x : {0.3, 0.5}) {
    const NStepDensity p2(h, x, 2, q);
    CHECK(std::abs(row_mass(p2, 1e-10, 10) - 1.0) < 1e-7);
    const NStepDensity p3(h, x, 3, q);
    CHECK(p3.drift() < 1e-5);
    CHECK(std::abs(row_mass(p3, 1e-9, 8) - p3.normalization()) < 1e-7);
  }
  const auto row = n_step_density(NoiseModel::uniform(2.0, 3.0), 0.5, std::vector<double>{0.5, 0.6}, 4, q);
  CHECK(row.drift < 1e-5);
  CHECK(row.singular_mass == 0.0);
}

TEST_CASE("Chapman-Kolmogorov") {
  const auto model = NoiseModel::uniform(2.0, 3.0);
  const auto h = DensityComponent::of(model);
  const QuadratureOptions q{2048, 1e-6, 1e-5};
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> ys(0.38, 0.74);
  double worst = 0.0;
  for (double x : {0.2, 0.45, 0.6, 0.85}) {
    const NStepDensity p3(h, x, 3, q);
    const double sx = s_of(x);
    for (int k = 0; k < 4; ++k) {
      const double y = ys(gen);
      // p3(x,y) = int p1(x,z) p2(z,y) dz, factorized the other way round.
      const double ref = oracle::integrate([&](double z) { return one_step_density(h, x, z) * NStepDensity(h, z, 2)(y); },
                                           2.0 * sx, 3.0 * sx, {}, 1e-9, 6);
      worst = std::max(worst, std::abs(p3(y) - ref));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("pointwise lower bounds propagate") {
  const auto model = NoiseModel({}, {{2.0, 2.5, 0.6}, {2.5, 3.2, 0.4}});
  const auto h = DensityComponent::of(model);
  DensityComponent lower{{{2.1, 2.4, 0.3}, {2.6, 3.0, 0.2}}};
  for (int n : {1, 2, 3}) {
    const NStepDensity p(h, 0.4, n, {512, 1e-6, 1e-3});
    const NStepDensity pl(lower, 0.4, n, {512, 1e-6, 1e-3});
    for (int k = 1; k < 200; ++k) CHECK(pl(k / 200.0) <= p(k / 200.0) + 1e-12);
  }
  CHECK(h.scaled(0.5).mass() == doctest::Approx(0.5));
}

TEST_CASE("quadrature failures are reported") {
  const auto model = NoiseModel::uniform(2.0, 3.0);
  const QuadratureOptions coarse{16, 1e-6, 1e-12};
  try {
    (void)n_step_density(model, 0.5, std::vector<double>{0.6}, 3, coarse);
    FAIL("expected QuadratureError");
  } catch (const QuadratureError& e) {
    CHECK(e.drift() > 1e-12);
  }
  CHECK_THROWS_AS(n_step_density(NoiseModel::point_mass(2.5), 0.5, std::vector<double>{0.6}, 2), std::invalid_argument);
  CHECK_THROWS(NStepDensity(DensityComponent::of(model), 0.5, 0));
}

TEST_CASE("grids are thread independent") {
  const auto model = NoiseModel::uniform(2.5, 3.1);
  const std::vector<double> xs{0.2, 0.4, 0.6, 0.8};
  std::vector<double> ys;
  for (int k = 1; k < 50; ++k) ys.push_back(k / 50.0);
  const QuadratureOptions q{512, 1e-6, 1e-3};
  const auto a = density_grid(model, xs, ys, 3, q, 1);
  const auto b = density_grid(model, xs, ys, 3, q, 3);
  CHECK(a.values == b.values);
  CHECK(a.max_drift == b.max_drift);
  CHECK(a.values.size() == 4);
  CHECK(a.values[0].size() == ys.size());
}

TEST_CASE("orbit density chain") {
  const auto fixed = orbit_density_chain(NoiseModel::uniform(2.0, 3.0), *quadmap::find_periodic_orbit(2.5, 1));
  REQUIRE(fixed.size() == 1);
  CHECK(fixed[0] == doctest::Approx(1.0 / 0.24).epsilon(1e-12));

  const auto orbit = *quadmap::find_periodic_orbit(3.2, 2);
  const auto two = orbit_density_chain(NoiseModel::uniform(3.0, 3.4), orbit);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == doctest::Approx(2.5 / s_of(orbit.points[0])).epsilon(1e-12));
  CHECK(two[1] == doctest::Approx(2.5 / s_of(orbit.points[1])).epsilon(1e-12));
  for (double v : two) CHECK(v > 0.0);

  CHECK_THROWS(orbit_density_chain(NoiseModel::uniform(2.0, 2.4), orbit));
}

TEST_CASE("minorization, period 1") {
  const auto model = NoiseModel::uniform(2.2, 2.8);
  const auto out = minorization_probe(model, 2.5, 1, {0.5455, 0.6428});
  REQUIRE(out.certificate.has_value());
  const auto& c = *out.certificate;
  CHECK(c.delta > 0.0);
  CHECK(c.grid_min >= 4.0 / 0.6 - 1e-9);
  CHECK(c.delta <= c.grid_min);
  CHECK(c.j_in_q_image());
  CHECK(*c.gamma1 == doctest::Approx(1.0 / (1.0 - 0.5455)).epsilon(1e-9));
  CHECK(*c.gamma2 == doctest::Approx(1.0 / (1.0 - 0.6428)).epsilon(1e-9));

  // J reaching far outside the reachable set leaves holes in the density.
  const auto wide = minorization_probe(model, 2.5, 1, {0.3, 0.7});
  CHECK_FALSE(wide.certificate.has_value());
  CHECK_FALSE(wide.diagnostics.empty());

  CHECK_THROWS_AS(minorization_probe(NoiseModel::point_mass(2.5), 2.5, 1, {0.55, 0.65}), std::invalid_argument);
}

TEST_CASE("minorization, period 2") {
  const auto model = NoiseModel::uniform(3.05, 3.35);
  const auto q1 = quadmap::find_periodic_orbit(3.17, 2)->q();
  const auto q2 = quadmap::find_periodic_orbit(3.23, 2)->q();
  MinorizationOptions opts;
  opts.quadrature.resolution = 2048;
  const auto out = minorization_probe(model, 3.2, 2, {q1, q2}, opts);
  REQUIRE(out.certificate.has_value());
  CHECK(out.certificate->delta > 0.0);
  CHECK(out.certificate->m == 2);
}

TEST_CASE("default certificate construction") {
  const auto a = default_minorization(NoiseModel::uniform(2.2, 2.8));
  REQUIRE(a.certificate.has_value());
  CHECK(a.certificate->m == 1);
  CHECK(a.certificate->delta > 0.0);
  const auto b = default_minorization(NoiseModel::uniform(3.1, 3.3));
  REQUIRE(b.certificate.has_value());
  CHECK(b.certificate->m == 2);
  CHECK(b.certificate->delta > 0.0);
}

TEST_CASE("hyperbolic window") {
  const auto w = hyperbolic_window(2.5, 1, {1.0, 4.0});
  CHECK(w.lo == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(w.hi == doctest::Approx(3.0).epsilon(1e-4));
  const auto w2 = hyperbolic_window(3.2, 2, {2.5, 3.8});
  CHECK(w2.lo == doctest::Approx(3.0).epsilon(1e-4));
  CHECK(w2.hi == doctest::Approx(1.0 + std::sqrt(6.0)).epsilon(1e-4));
}

TEST_CASE("irreducibility probe") {
  const Interval j{0.5455, 0.6428};
  const auto r = irreducibility_probe(NoiseModel::uniform(2.2, 2.8), 0.05, j, 100, 1000, 4);
  REQUIRE(r.first_step.has_value());
  CHECK(*r.first_step <= 30);
  CHECK(r.paths_in_j > 0);

  const auto in = irreducibility_probe(NoiseModel::uniform(2.2, 2.8), 0.6, j, 100, 10, 4);
  CHECK(*in.first_step == 1);

  // theta <= 1.5 keeps x(1-x) theta below 0.375 forever.
  const auto e = irreducibility_probe(NoiseModel::uniform(0.5, 1.5), 0.3, {0.5, 0.6}, 10000, 100, 4);
  CHECK_FALSE(e.first_step.has_value());
}
