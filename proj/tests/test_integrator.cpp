#include <doctest.h>

#include <cmath>

#include "les/integrator.hpp"
#include "les/operators.hpp"
#include "support.hpp"

using namespace les;
using testing::random_solenoidal;

namespace {

StaggeredVelocity with_mean_flow(StaggeredVelocity v, double mu, double mv) {
  for (double& x : v.u.values()) x += mu;
  for (double& x : v.v.values()) x += mv;
  return v;
}

}  // namespace

TEST_CASE("zero field is a fixed point") {
  const Grid g = Grid::periodic_square(16);
  SimConfig cfg;
  cfg.dt = 1e-2;
  const auto out = rk4_step(StaggeredVelocity(g), cfg, 0.0);
  CHECK(out.max_abs() == 0.0);
}

TEST_CASE("inviscid unforced run conserves energy and momentum") {
  const Grid g = Grid::periodic_square(64);
  const auto ic = with_mean_flow(random_solenoidal(g, 11), 0.3, -0.2);
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.n_steps = 100;
  cfg.nu = 0.0;
  cfg.snapshot_stride = 100;
  const auto rec = simulate(ic, cfg);
  REQUIRE_FALSE(rec.blew_up);
  REQUIRE(rec.diagnostics.size() == 101);
  const auto& d0 = rec.diagnostics.front();
  for (const auto& d : rec.diagnostics) {
    CHECK(std::abs(d.energy - d0.energy) <= 1e-6 * d0.energy);
    CHECK(std::abs(d.px - d0.px) <= 1e-10 * std::abs(d0.px));
    CHECK(std::abs(d.py - d0.py) <= 1e-10 * std::abs(d0.py));
    CHECK(d.closure_energy == 0.0);
  }
  CHECK(relative_divergence(rec.snapshots.back()) <= 1e-8);
}

TEST_CASE("viscous unforced energy never increases") {
  const Grid g = Grid::periodic_square(32);
  SimConfig cfg;
  cfg.dt = 5e-3;
  cfg.n_steps = 60;
  cfg.nu = 1e-2;
  const auto rec = simulate(random_solenoidal(g, 12), cfg);
  REQUIRE_FALSE(rec.blew_up);
  for (std::size_t k = 1; k < rec.diagnostics.size(); ++k)
    CHECK(rec.diagnostics[k].energy <= rec.diagnostics[k - 1].energy);
}

TEST_CASE("simulate records snapshots at the stride and is deterministic") {
  const Grid g = Grid::periodic_square(16);
  SimConfig cfg;
  cfg.dt = 1e-2;
  cfg.n_steps = 7;
  cfg.snapshot_stride = 3;
  cfg.closure = ClosureModel::smagorinsky(0.15);
  const auto ic = random_solenoidal(g, 13);
  const auto a = simulate(ic, cfg);
  const auto b = simulate(ic, cfg);
  REQUIRE(a.snapshots.size() == 3);
  CHECK(a.times == std::vector<double>{0.0, 3 * cfg.dt, 6 * cfg.dt});
  CHECK(testing::bit_equal(a.snapshots[0], ic));
  CHECK(a.steps_completed == 7);
  CHECK(a.diagnostics.size() == 8);
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) CHECK(testing::bit_equal(a.snapshots[k], b.snapshots[k]));
  for (const auto& d : a.diagnostics) CHECK(d.closure_energy <= 0.0);

  cfg.n_steps = 0;
  const auto only_ic = simulate(ic, cfg);
  CHECK(only_ic.snapshots.size() == 1);
  CHECK(only_ic.diagnostics.size() == 1);
  CHECK(testing::bit_equal(only_ic.snapshots[0], ic));
}

TEST_CASE("NC closure follows the plain solver path") {
  const Grid g = Grid::periodic_square(16);
  SimConfig cfg;
  cfg.dt = 1e-2;
  cfg.n_steps = 5;
  cfg.snapshot_stride = 5;
  const auto ic = random_solenoidal(g, 14);
  const auto rec = simulate(ic, cfg);
  const PoissonSolver solver(g);
  StaggeredVelocity v = ic;
  for (int s = 0; s < 5; ++s) {
    const Rate r = projected_rate(solver, v, cfg, s * cfg.dt);
    CHECK(r.closure.max_abs() == 0.0);
    v = rk4_step(solver, v, cfg, s * cfg.dt);
  }
  CHECK(testing::bit_equal(v, rec.snapshots.back()));
}

TEST_CASE("Kolmogorov drag is evaluated at every stage") {
  // For a y-dependent u with v = 0 convection and pressure vanish, so each
  // u-face obeys du/dt = f(y) - 0.1 u. Compare with scalar RK4 of that ODE.
  const Grid g = Grid::periodic_square(16);
  SimConfig cfg;
  cfg.dt = 0.5;
  cfg.nu = 0.0;
  cfg.forcing = ForcingSpec::kolmogorov();
  const auto ic = testing::sample(g, [](double, double y) { return std::cos(y); }, [](double, double) { return 0.0; });
  const auto out = rk4_step(ic, cfg, 0.0);
  const auto fz = forcing(StaggeredVelocity(g), cfg.forcing, 0.0);
  const double h = cfg.dt;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double f = fz.u[k];
    const auto rhs = [&](double u) { return f - 0.1 * u; };
    const double u0 = ic.u[k];
    const double k1 = rhs(u0), k2 = rhs(u0 + 0.5 * h * k1), k3 = rhs(u0 + 0.5 * h * k2), k4 = rhs(u0 + h * k3);
    const double expected = u0 + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    CHECK(std::abs(out.u[k] - expected) <= 1e-13);
    CHECK(std::abs(out.v[k]) <= 1e-13);
  }
}

TEST_CASE("blow-up is recorded, not thrown") {
  const Grid g = Grid::periodic_square(16);
  SimConfig cfg;
  cfg.dt = 0.5;
  cfg.n_steps = 200;
  cfg.nu = 0.0;
  const auto ic = scaled(random_solenoidal(g, 15), 50.0);
  CHECK_THROWS_AS(
      [&] {
        StaggeredVelocity v = ic;
        for (int s = 0; s < 200; ++s) v = rk4_step(v, cfg, s * cfg.dt);
      }(),
      Error);
  TrajectoryRecord rec;
  CHECK_NOTHROW(rec = simulate(ic, cfg));
  CHECK(rec.blew_up);
  CHECK(rec.steps_completed < cfg.n_steps);
  CHECK(rec.blowup_time == doctest::Approx((rec.steps_completed + 1) * cfg.dt));
  for (const auto& s : rec.snapshots) CHECK(s.all_finite());
}

TEST_CASE("configuration and input validation") {
  const Grid g = Grid::periodic_square(8);
  SimConfig cfg;
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.dt = 1e-3;
  cfg.snapshot_stride = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.snapshot_stride = 1;
  const auto divergent = testing::random_velocity(g, 3);
  try {
    rk4_step(divergent, cfg, 0.0);
    FAIL("expected InvalidArgument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
}
