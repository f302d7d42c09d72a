#include "les/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace les {

void SimConfig::validate() const {
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::kInvalidArgument, "SimConfig: dt must be > 0");
  require(n_steps >= 0, ErrorCode::kInvalidArgument, "SimConfig: n_steps must be >= 0");
  require(snapshot_stride >= 1, ErrorCode::kInvalidArgument,
          "SimConfig: snapshot_stride must be >= 1");
  require(nu >= 0.0, ErrorCode::kInvalidArgument, "SimConfig: nu must be >= 0");
  closure.validate();
}

Rate projected_rate(const PoissonSolver& solver, const StaggeredVelocity& vel, const SimConfig& cfg,
                    double t) {
  StaggeredVelocity a = tendency(vel, cfg.nu, cfg.forcing, t);
  Rate r;
  if (cfg.closure.kind == ClosureKind::kNone) {
    r.closure = StaggeredVelocity(vel.grid);
  } else {
    r.closure = apply_closure(cfg.closure, vel, a);
    axpy(1.0, r.closure, a);
  }
  r.du_dt = solver.project(a);
  return r;
}

namespace {

StaggeredVelocity step_impl(const PoissonSolver& solver, const StaggeredVelocity& u,
                            const SimConfig& cfg, double t, StaggeredVelocity* first_closure) {
  const double dt = cfg.dt;
  Rate r1 = projected_rate(solver, u, cfg, t);
  if (first_closure) *first_closure = std::move(r1.closure);
  StaggeredVelocity stage = u;
  axpy(0.5 * dt, r1.du_dt, stage);
  const Rate r2 = projected_rate(solver, stage, cfg, t + 0.5 * dt);
  stage = u;
  axpy(0.5 * dt, r2.du_dt, stage);
  const Rate r3 = projected_rate(solver, stage, cfg, t + 0.5 * dt);
  stage = u;
  axpy(dt, r3.du_dt, stage);
  const Rate r4 = projected_rate(solver, stage, cfg, t + dt);

  StaggeredVelocity out = u;
  axpy(dt / 6.0, r1.du_dt, out);
  axpy(dt / 3.0, r2.du_dt, out);
  axpy(dt / 3.0, r3.du_dt, out);
  axpy(dt / 6.0, r4.du_dt, out);
  return out;
}

bool blown_up(const StaggeredVelocity& v, double threshold) {
  return !v.all_finite() || v.max_abs() > threshold;
}

}  // namespace

double relative_divergence(const StaggeredVelocity& vel) {
  const double scale = vel.max_abs();
  if (scale == 0.0) return 0.0;
  double m = 0.0;
  const Lattice div = divergence(vel);
  for (double d : div.values()) m = std::max(m, std::abs(d));
  return m * std::min(vel.grid.hx(), vel.grid.hy()) / scale;
}

StaggeredVelocity rk4_step(const PoissonSolver& solver, const StaggeredVelocity& vel,
                           const SimConfig& cfg, double t) {
  require(vel.grid == solver.grid(), ErrorCode::kDimensionMismatch, "rk4_step: grid mismatch");
  StaggeredVelocity out = step_impl(solver, vel, cfg, t, nullptr);
  if (blown_up(out, cfg.blowup_threshold)) {
    fail(ErrorCode::kBlowUp, "rk4_step: blow-up at t = " + std::to_string(t + cfg.dt));
  }
  return out;
}

StaggeredVelocity rk4_step(const StaggeredVelocity& vel, const SimConfig& cfg, double t) {
  cfg.validate();
  require(relative_divergence(vel) <= 1e-8, ErrorCode::kInvalidArgument,
          "rk4_step: input velocity is not divergence free");
  const PoissonSolver solver(vel.grid);
  return rk4_step(solver, vel, cfg, t);
}

TrajectoryRecord simulate(const StaggeredVelocity& ic, const SimConfig& cfg) {
  const PoissonSolver solver(ic.grid);
  return simulate(solver, ic, cfg);
}

TrajectoryRecord simulate(const PoissonSolver& solver, const StaggeredVelocity& ic,
                          const SimConfig& cfg) {
  cfg.validate();
  require(ic.grid == solver.grid(), ErrorCode::kDimensionMismatch, "simulate: grid mismatch");
  require(ic.all_finite(), ErrorCode::kInvalidArgument, "simulate: initial condition not finite");
  require(relative_divergence(ic) <= 1e-8, ErrorCode::kInvalidArgument,
          "simulate: initial condition is not divergence free");

  TrajectoryRecord rec;
  rec.grid = ic.grid;
  rec.dt = cfg.dt;
  rec.snapshot_stride = cfg.snapshot_stride;
  rec.times.push_back(0.0);
  rec.snapshots.push_back(ic);

  const auto diagnose = [&](const StaggeredVelocity& u, const StaggeredVelocity& c, double t) {
    const Momentum p = momentum(u);
    rec.diagnostics.push_back({t, kinetic_energy(u), p.px, p.py,
                               cfg.closure.kind == ClosureKind::kNone ? 0.0 : closure_energy(u, c)});
  };

  StaggeredVelocity u = ic;
  for (int n = 0; n < cfg.n_steps; ++n) {
    const double t = n * cfg.dt;
    StaggeredVelocity c;
    StaggeredVelocity next = step_impl(solver, u, cfg, t, &c);
    diagnose(u, c, t);
    if (blown_up(next, cfg.blowup_threshold)) {
      rec.blew_up = true;
      rec.blowup_time = (n + 1) * cfg.dt;
      return rec;
    }
    u = std::move(next);
    rec.steps_completed = n + 1;
    if ((n + 1) % cfg.snapshot_stride == 0) {
      rec.times.push_back((n + 1) * cfg.dt);
      rec.snapshots.push_back(u);
    }
  }
  const double t_end = cfg.n_steps * cfg.dt;
  if (cfg.closure.kind == ClosureKind::kNone) {
    diagnose(u, u, t_end);
  } else {
    diagnose(u, projected_rate(solver, u, cfg, t_end).closure, t_end);
  }
  return rec;
}

}  // namespace les
