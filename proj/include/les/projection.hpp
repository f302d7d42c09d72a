#pragma once

#include <memory>
#include <vector>

#include "les/fft.hpp"
#include "les/grid.hpp"

namespace les {

/// Solves L p = r on the periodic grid, L = divergence(gradient(.)), using the
/// exact discrete symbol of L in Fourier space. The constant mode is the
/// nullspace of L; solutions are returned with mean(p) = 0.
///
/// Immutable after construction and safe to share between threads.
class PoissonSolver {
 public:
  explicit PoissonSolver(const Grid& grid);

  const Grid& grid() const { return grid_; }

  /// Symbol of L for integer wavenumber indices (kx, ky); always <= 0.
  double symbol(int kx, int ky) const;

  /// Throws IncompatibleRHS unless |sum(rhs)| <= 1e-8 * sum(|rhs|).
  PressureField solve_pressure(const Lattice& rhs) const;

  /// Solve without the compatibility check; the mean of rhs is discarded.
  Lattice solve(const Lattice& rhs) const;

  /// P m = m - G L^{-1} M m. Scale invariant, so it applies equally to
  /// volume-weighted tendencies and per-volume rates.
  StaggeredVelocity project(const StaggeredVelocity& m) const;

  /// P^T. With G = -M^T the projector is symmetric, so this is project().
  StaggeredVelocity project_transpose(const StaggeredVelocity& m) const { return project(m); }

 private:
  Grid grid_;
  std::shared_ptr<const RealFft2d> fft_;
  std::vector<double> inverse_symbol_;  // ny rows of nx/2+1; zero mode = 0
};

}  // namespace les
