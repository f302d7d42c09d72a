#pragma once

#include <cstdint>
#include <utility>

#include "les/grid.hpp"

namespace les {

// Structure-preserving second-order operators on the staggered grid.
//
// convection(), diffusion() and forcing() return tendencies per unit volume
// (du/dt contributions). rhs_m() multiplies their sum by the cell volume and
// so carries units of momentum-rate times volume.

enum class ForcingKind : std::uint8_t { kNone = 0, kKolmogorov = 1 };

/// Body force. Kolmogorov flow: f = [sin(4y), 0] - 0.1 u.
struct ForcingSpec {
  ForcingKind kind = ForcingKind::kNone;

  static constexpr int kKolmogorovWavenumber = 4;
  static constexpr double kKolmogorovDrag = 0.1;

  static ForcingSpec none() { return {}; }
  static ForcingSpec kolmogorov() { return {ForcingKind::kKolmogorov}; }
};

/// (u(i,j) - u(i-1,j))/hx + (v(i,j) - v(i,j-1))/hy at cell centres.
Lattice divergence(const StaggeredVelocity& vel);

/// Face gradient of a centred scalar; equals minus the adjoint of divergence().
StaggeredVelocity gradient(const Grid& grid, const Lattice& p);
inline StaggeredVelocity gradient(const PressureField& p) { return gradient(p.grid, p.p); }

/// Divergence-form convection C(u)u with two-point averaged face fluxes.
StaggeredVelocity convection(const StaggeredVelocity& vel);

/// Vector-Jacobian product of convection(): d/du <adj, convection(u)>.
StaggeredVelocity convection_vjp(const StaggeredVelocity& vel, const StaggeredVelocity& adj);

/// Five-point Laplacian of each component, times nu.
StaggeredVelocity diffusion(const StaggeredVelocity& vel, double nu);

/// Forward differences of each component scaled by 1/h, stacked as
/// (dx u, dy u, dx v, dy v). diffusion(w, 1) = -Q^T Q w.
struct ForwardDifferences {
  Lattice dxu, dyu, dxv, dyv;
  double squared_norm() const;
};
ForwardDifferences forward_differences(const StaggeredVelocity& vel);

StaggeredVelocity forcing(const StaggeredVelocity& vel, const ForcingSpec& f, double t);

/// -C(u)u + nu*lap(u) + f(u), per unit volume.
StaggeredVelocity tendency(const StaggeredVelocity& vel, double nu, const ForcingSpec& f, double t);

/// Adjoint of the linearisation of tendency() around vel, applied to adj.
StaggeredVelocity tendency_vjp(const StaggeredVelocity& vel, double nu, const ForcingSpec& f,
                               const StaggeredVelocity& adj);

/// m_h(u) = -C_h(u)u + nu D_h u + Omega_h f_h with Omega_h = cell_volume.
StaggeredVelocity rhs_m(const StaggeredVelocity& vel, double nu, const ForcingSpec& f, double t);

struct Momentum {
  double px = 0.0;
  double py = 0.0;
};

Momentum momentum(const StaggeredVelocity& vel);
double kinetic_energy(const StaggeredVelocity& vel);

/// Vorticity at cell corners (i+1/2, j+1/2).
Lattice vorticity(const StaggeredVelocity& vel);

/// Corner vorticity averaged to cell centres (output files only).
Lattice vorticity_at_centers(const StaggeredVelocity& vel);

}  // namespace les
