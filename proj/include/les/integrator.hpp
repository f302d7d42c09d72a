#pragma once

#include <vector>

#include "les/closures.hpp"
#include "les/grid.hpp"
#include "les/operators.hpp"
#include "les/projection.hpp"

namespace les {

struct SimConfig {
  double dt = 1e-3;
  int n_steps = 0;
  double nu = 1e-3;
  ForcingSpec forcing;
  int snapshot_stride = 1;
  ClosureModel closure;
  double blowup_threshold = 1e6;

  /// Throws InvalidArgument unless dt > 0, n_steps >= 0 and snapshot_stride >= 1.
  void validate() const;
};

/// Right-hand side of du/dt = P(a(u) + c(u)) together with the closure term
/// it contains.
struct Rate {
  StaggeredVelocity du_dt;
  StaggeredVelocity closure;
};

/// Evaluates the projected tendency. The closure sees the stage velocity and
/// the resolved tendency a(u) at that velocity.
Rate projected_rate(const PoissonSolver& solver, const StaggeredVelocity& vel, const SimConfig& cfg,
                    double t);

/// Classical RK4 step with every stage tendency projected. Throws BlowUp if
/// the result is non-finite or exceeds cfg.blowup_threshold in max norm.
StaggeredVelocity rk4_step(const PoissonSolver& solver, const StaggeredVelocity& vel,
                           const SimConfig& cfg, double t);
/// As above; also rejects input with max|div| * h > 1e-8 * max|vel| (InvalidArgument).
StaggeredVelocity rk4_step(const StaggeredVelocity& vel, const SimConfig& cfg, double t);

struct StepDiagnostics {
  double t = 0.0;
  double energy = 0.0;
  double px = 0.0;
  double py = 0.0;
  double closure_energy = 0.0;  // Omega <u, c(u)> at time t
};

struct TrajectoryRecord {
  Grid grid;
  double dt = 0.0;
  int snapshot_stride = 1;
  std::vector<double> times;
  std::vector<StaggeredVelocity> snapshots;
  std::vector<StepDiagnostics> diagnostics;  // one entry per state reached, t = 0 included
  int steps_completed = 0;
  bool blew_up = false;
  double blowup_time = 0.0;
};

/// Runs cfg.n_steps steps from ic. Snapshots are taken at step 0 and every
/// snapshot_stride steps. A blow-up ends the run and is recorded, not thrown.
TrajectoryRecord simulate(const StaggeredVelocity& ic, const SimConfig& cfg);
TrajectoryRecord simulate(const PoissonSolver& solver, const StaggeredVelocity& ic,
                          const SimConfig& cfg);

/// max|div(u)| * min(hx, hy) relative to max|u| (0 for the zero field).
double relative_divergence(const StaggeredVelocity& vel);

}  // namespace les
