#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

#include "les/grid.hpp"
#include "les/projection.hpp"
#include "les/rng.hpp"

namespace testing {

inline les::Lattice random_lattice(int nx, int ny, les::Stagger s, std::uint64_t seed) {
  les::CounterRng rng(seed);
  les::Lattice l(nx, ny, s);
  for (double& x : l.values()) x = rng.uniform(-1.0, 1.0);
  return l;
}

inline les::StaggeredVelocity random_velocity(const les::Grid& g, std::uint64_t seed) {
  les::StaggeredVelocity v(g);
  v.u = random_lattice(g.nx, g.ny, les::Stagger::kEastFace, seed);
  v.v = random_lattice(g.nx, g.ny, les::Stagger::kNorthFace, les::derive_seed(seed, 1));
  return v;
}

inline les::StaggeredVelocity random_solenoidal(const les::Grid& g, std::uint64_t seed) {
  return les::PoissonSolver(g).project(random_velocity(g, seed));
}

/// Samples (fu, fv) at the u- and v-face positions.
inline les::StaggeredVelocity sample(const les::Grid& g, const std::function<double(double, double)>& fu,
                                     const std::function<double(double, double)>& fv) {
  les::StaggeredVelocity v(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      v.u(i, j) = fu(g.x_face(i), g.y_center(j));
      v.v(i, j) = fv(g.x_center(i), g.y_face(j));
    }
  }
  return v;
}

inline double max_abs(const les::Lattice& l) {
  double m = 0.0;
  for (double x : l.values()) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs_diff(const les::StaggeredVelocity& a, const les::StaggeredVelocity& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    m = std::max(m, std::abs(a.u[k] - b.u[k]));
    m = std::max(m, std::abs(a.v[k] - b.v[k]));
  }
  return m;
}

inline bool bit_equal(const les::StaggeredVelocity& a, const les::StaggeredVelocity& b) {
  return a.u.values() == b.u.values() && a.v.values() == b.v.values();
}

}  // namespace testing
