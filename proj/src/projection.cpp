#include "les/projection.hpp"

#include <cmath>
#include <numbers>

#include "les/operators.hpp"

namespace les {

PoissonSolver::PoissonSolver(const Grid& grid)
    : grid_(grid), fft_(std::make_shared<RealFft2d>(grid.nx, grid.ny)) {
  const int nxh = grid.nx / 2 + 1;
  inverse_symbol_.assign(static_cast<std::size_t>(nxh) * grid.ny, 0.0);
  for (int ky = 0; ky < grid.ny; ++ky) {
    for (int kx = 0; kx < nxh; ++kx) {
      if (kx == 0 && ky == 0) continue;
      inverse_symbol_[static_cast<std::size_t>(ky) * nxh + kx] = 1.0 / symbol(kx, ky);
    }
  }
}

double PoissonSolver::symbol(int kx, int ky) const {
  const double tx = 2.0 * std::numbers::pi * kx / grid_.nx;
  const double ty = 2.0 * std::numbers::pi * ky / grid_.ny;
  const double hx = grid_.hx();
  const double hy = grid_.hy();
  return -((2.0 - 2.0 * std::cos(tx)) / (hx * hx) + (2.0 - 2.0 * std::cos(ty)) / (hy * hy));
}

Lattice PoissonSolver::solve(const Lattice& rhs) const {
  require(rhs.nx() == grid_.nx && rhs.ny() == grid_.ny, ErrorCode::kDimensionMismatch,
          "PoissonSolver: rhs does not match grid");
  auto spec = fft_->forward(rhs);
  const double norm = 1.0 / static_cast<double>(grid_.size());
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= inverse_symbol_[k] * norm;
  Lattice p(grid_.nx, grid_.ny, Stagger::kCenter);
  fft_->inverse(spec, p);
  return p;
}

PressureField PoissonSolver::solve_pressure(const Lattice& rhs) const {
  double total = 0.0;
  double abs_total = 0.0;
  for (double x : rhs.values()) {
    total += x;
    abs_total += std::abs(x);
  }
  require(std::abs(total) <= 1e-8 * abs_total, ErrorCode::kIncompatibleRhs,
          "solve_pressure: right-hand side has nonzero mean (" + std::to_string(total) + ")");
  PressureField out(grid_);
  out.p = solve(rhs);
  return out;
}

StaggeredVelocity PoissonSolver::project(const StaggeredVelocity& m) const {
  require(m.grid == grid_, ErrorCode::kDimensionMismatch, "project: grid mismatch");
  const Lattice p = solve(divergence(m));
  StaggeredVelocity out = m;
  axpy(-1.0, gradient(grid_, p), out);
  return out;
}

}  // namespace les
