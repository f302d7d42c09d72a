#include <doctest.h>

#include <cmath>
#include <numbers>

#include "les/operators.hpp"
#include "les/projection.hpp"
#include "support.hpp"

using namespace les;
using testing::max_abs;
using testing::random_lattice;
using testing::random_velocity;

TEST_CASE("zero right-hand side gives zero pressure") {
  const Grid g = Grid::periodic_square(8);
  const PoissonSolver s(g);
  CHECK(max_abs(s.solve_pressure(Lattice(8, 8, Stagger::kCenter)).p) == 0.0);
}

TEST_CASE("pressure solve residual and zero mean") {
  for (int n : {8, 16, 32}) {
    const Grid g = Grid::periodic_square(n);
    const PoissonSolver s(g);
    const Lattice rhs = divergence(random_velocity(g, 31 + n));
    const PressureField p = s.solve_pressure(rhs);
    const Lattice lp = divergence(gradient(p));
    double res = 0.0;
    for (std::size_t k = 0; k < rhs.size(); ++k) res = std::max(res, std::abs(lp[k] - rhs[k]));
    CHECK(res <= 1e-10 * max_abs(rhs));
    CHECK(std::abs(sum(p.p)) <= 1e-12 * max_abs(p.p) * g.size());
  }
}

TEST_CASE("incompatible right-hand side is rejected") {
  const Grid g = Grid::periodic_square(8);
  const PoissonSolver s(g);
  Lattice rhs(8, 8, Stagger::kCenter, 1.0);
  try {
    s.solve_pressure(rhs);
    FAIL("expected IncompatibleRHS");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIncompatibleRhs);
  }
}

TEST_CASE("single Fourier mode is divided by the discrete symbol") {
  const Grid g = Grid::periodic_square(8);
  const PoissonSolver s(g);
  Lattice rhs(8, 8, Stagger::kCenter);
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 8; ++i) rhs(i, j) = std::cos(g.x_center(i));
  const double h = g.hx();
  const double lambda1 = (2.0 - 2.0 * std::cos(h)) / (h * h);  // by hand for kx = 1
  const PressureField p = s.solve_pressure(rhs);
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 8; ++i) CHECK(p.p(i, j) == doctest::Approx(-rhs(i, j) / lambda1).epsilon(1e-12));
}

TEST_CASE("projector properties on random fields") {
  for (int n : {8, 16, 32}) {
    const Grid g = Grid::periodic_square(n);
    const PoissonSolver s(g);
    for (int trial = 0; trial < 100; ++trial) {
      const auto m = random_velocity(g, 1000 * n + trial);
      const auto pm = s.project(m);
      // divergence annihilation (per-volume scaling does not matter)
      CHECK(max_abs(divergence(pm)) <= 1e-10 * m.max_abs() / g.hx());
      // idempotence
      const auto ppm = s.project(pm);
      CHECK(testing::max_abs_diff(ppm, pm) <= 1e-12 * pm.max_abs());
      // momentum sums unchanged
      CHECK(std::abs(sum(pm.u) - sum(m.u)) <= 1e-10 * n * n * m.max_abs());
      CHECK(std::abs(sum(pm.v) - sum(m.v)) <= 1e-10 * n * n * m.max_abs());
      // nullspace
      const Lattice p = random_lattice(n, n, Stagger::kCenter, 7 * trial + n);
      const auto gp = gradient(g, p);
      CHECK(s.project(gp).max_abs() <= 1e-10 * gp.max_abs());
      // symmetry
      const auto b = random_velocity(g, 99 + trial);
      CHECK(std::abs(dot(s.project(m), b) - dot(m, s.project_transpose(b))) <=
            1e-12 * norm2(m) * norm2(b));
    }
  }
}

TEST_CASE("projection leaves a divergence-free field unchanged and commutes with shifts") {
  const Grid g = Grid::periodic_square(16);
  const PoissonSolver s(g);
  const auto w = s.project(random_velocity(g, 5));
  CHECK(testing::max_abs_diff(s.project(w), w) <= 1e-12 * w.max_abs());
  const auto m = random_velocity(g, 6);
  CHECK(testing::max_abs_diff(s.project(shifted(m, 4, 7)), shifted(s.project(m), 4, 7)) <=
        1e-13 * m.max_abs());
}
