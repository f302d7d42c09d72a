#include "les/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "les/io.hpp"
#include "les/operators.hpp"
#include "les/projection.hpp"
#include "les/rng.hpp"

namespace les {

namespace {

void note(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

std::string fmt(double x, int digits = 6) {
  std::ostringstream out;
  out.precision(digits);
  out << x;
  return out.str();
}

using Complex = std::complex<double>;

// Re sum_k c_k exp(i k.x) on the positions xs (per column) and ys (per row).
Lattice synthesize(int nx, int ny, Stagger s, const std::vector<double>& xs, const std::vector<double>& ys,
                   int kmax, CounterRng& rng) {
  const int span = 2 * kmax - 1;
  std::vector<Complex> ex(static_cast<std::size_t>(span) * nx);
  std::vector<Complex> ey(static_cast<std::size_t>(span) * ny);
  for (int k = 0; k < span; ++k) {
    const double w = k - (kmax - 1);
    for (int i = 0; i < nx; ++i) ex[static_cast<std::size_t>(k) * nx + i] = std::polar(1.0, w * xs[i]);
    for (int j = 0; j < ny; ++j) ey[static_cast<std::size_t>(k) * ny + j] = std::polar(1.0, w * ys[j]);
  }
  Lattice out(nx, ny, s);
  std::vector<Complex> row(nx);
  for (int ky = -(kmax - 1); ky <= kmax - 1; ++ky) {
    std::fill(row.begin(), row.end(), Complex(0.0));
    bool any = false;
    for (int kx = -(kmax - 1); kx <= kmax - 1; ++kx) {
      const int k2 = kx * kx + ky * ky;
      if (k2 == 0 || k2 >= kmax * kmax) continue;
      const double re = rng.uniform(-1.0, 1.0);
      const double im = rng.uniform(-1.0, 1.0);
      const Complex c(re, im);
      const Complex* e = &ex[static_cast<std::size_t>(kx + kmax - 1) * nx];
      for (int i = 0; i < nx; ++i) row[i] += c * e[i];
      any = true;
    }
    if (!any) continue;
    const Complex* e = &ey[static_cast<std::size_t>(ky + kmax - 1) * ny];
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) out(i, j) += (row[i] * e[j]).real();
  }
  return out;
}

std::uint64_t trajectory_fingerprint(const TrajectoryRecord& traj) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    h = fnv1a64(&traj.times[k], sizeof(double), h);
    h = fingerprint(traj.snapshots[k], h);
  }
  return h;
}

}  // namespace

StaggeredVelocity random_initial_condition(const Grid& grid, std::uint64_t seed, int kappa_max,
                                           double target_energy) {
  require(kappa_max >= 1 && 2 * kappa_max < std::min(grid.nx, grid.ny), ErrorCode::kInvalidArgument,
          "random_initial_condition: kappa_max must be below min(nx, ny)/2");
  require(target_energy > 0.0, ErrorCode::kInvalidArgument,
          "random_initial_condition: target energy must be positive");
  std::vector<double> xf(grid.nx), xc(grid.nx), yf(grid.ny), yc(grid.ny);
  for (int i = 0; i < grid.nx; ++i) {
    xf[i] = grid.x_face(i);
    xc[i] = grid.x_center(i);
  }
  for (int j = 0; j < grid.ny; ++j) {
    yf[j] = grid.y_face(j);
    yc[j] = grid.y_center(j);
  }
  CounterRng rng(seed);
  StaggeredVelocity v(grid);
  v.u = synthesize(grid.nx, grid.ny, Stagger::kEastFace, xf, yc, kappa_max, rng);
  v.v = synthesize(grid.nx, grid.ny, Stagger::kNorthFace, xc, yf, kappa_max, rng);
  const double e = (dot(v.u, v.u) + dot(v.v, v.v)) / (2.0 * static_cast<double>(grid.size()));
  require(e > 0.0, ErrorCode::kInternal, "random_initial_condition: zero field");
  const double scale = std::sqrt(target_energy / e);
  for (double& x : v.u.values()) x *= scale;
  for (double& x : v.v.values()) x *= scale;
  return PoissonSolver(grid).project(v);
}

std::uint64_t simulation_seed(std::uint64_t base, int index) {
  return derive_seed(base, 0x51A0000ULL + static_cast<std::uint64_t>(index));
}

const std::vector<SnapshotDataset>& TrainingData::at(int n) const {
  for (std::size_t k = 0; k < coarse_n.size(); ++k) {
    if (coarse_n[k] == n) return sets[k];
  }
  fail(ErrorCode::kInvalidArgument, "training data: no datasets at resolution " + std::to_string(n));
}

int snapshot_aligned_steps(double t, double dt, int stride) {
  const double intervals = std::floor(t / (dt * stride) + 1e-9);
  return static_cast<int>(intervals) * stride;
}

TrainingData generate_training_data(const ExperimentConfig& cfg, const LogFn& log) {
  cfg.validate();
  const Grid fine = Grid::periodic_square(cfg.fine_n);
  const PoissonSolver solver(fine);
  std::vector<FaceAverageFilter> filters;
  for (int n : cfg.coarse_n) filters.emplace_back(fine, cfg.fine_n / n);

  TrainingData out;
  out.coarse_n = cfg.coarse_n;
  out.sets.resize(cfg.coarse_n.size());
  SimConfig sim;
  sim.dt = cfg.dt;
  sim.nu = cfg.nu;
  sim.n_steps = snapshot_aligned_steps(cfg.t_train, cfg.dt, cfg.snapshot_stride);
  sim.snapshot_stride = cfg.snapshot_stride;
  for (int s = 0; s < cfg.n_sims; ++s) {
    const std::uint64_t seed = simulation_seed(cfg.seed, s);
    note(log, "gen-data: DNS " + std::to_string(s + 1) + "/" + std::to_string(cfg.n_sims) + " on " +
                  std::to_string(cfg.fine_n) + "^2, " + std::to_string(sim.n_steps) + " steps");
    const auto ic = random_initial_condition(fine, seed, cfg.kappa_max, cfg.target_energy);
    const auto traj = simulate(solver, ic, sim);
    require(!traj.blew_up, ErrorCode::kBlowUp,
            "gen-data: DNS " + std::to_string(s) + " blew up at t = " + fmt(traj.blowup_time));
    out.sim_seeds.push_back(seed);
    out.fine_fingerprints.push_back(trajectory_fingerprint(traj));
    auto sets = build_fdns_dataset(traj, filters, {cfg.nu, ForcingKind::kNone, seed});
    for (std::size_t r = 0; r < sets.size(); ++r) out.sets[r].push_back(std::move(sets[r]));
  }
  return out;
}

SimConfig les_config(const ExperimentConfig& cfg, const ClosureModel& model, int n_steps,
                     const ForcingSpec& forcing, int snapshot_stride) {
  SimConfig sim;
  sim.dt = cfg.dt_coarse();
  sim.n_steps = n_steps;
  sim.nu = cfg.nu;
  sim.forcing = forcing;
  sim.snapshot_stride = snapshot_stride;
  sim.closure = model;
  return sim;
}

std::vector<double> smagorinsky_candidates(double cs_min, double cs_max, double step) {
  require(step > 0.0 && cs_max >= cs_min && cs_min >= 0.0, ErrorCode::kInvalidArgument,
          "smagorinsky_candidates: bad range");
  const auto count = static_cast<long long>(std::floor((cs_max - cs_min) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (long long k = 0; k < count; ++k) {
    out.push_back(static_cast<double>(std::llround((cs_min + static_cast<double>(k) * step) * 1e6)) / 1e6);
  }
  return out;
}

CalibrationResult calibrate_smagorinsky(const std::vector<SnapshotDataset>& data,
                                        const std::vector<double>& candidates, double t_target,
                                        double dt_coarse, double nu, const LogFn& log) {
  require(!data.empty() && !candidates.empty(), ErrorCode::kInvalidArgument,
          "calibrate_smagorinsky: need datasets and candidates");
  struct Target {
    const StaggeredVelocity* ic;
    Spectrum spectrum;
    int steps;
  };
  std::vector<Target> targets;
  for (const auto& d : data) {
    require(d.size() >= 2, ErrorCode::kInsufficientWindow, "calibrate_smagorinsky: dataset too short");
    const long long idx = std::llround(t_target / d.dt_between);
    require(idx >= 1 && static_cast<std::size_t>(idx) < d.size() &&
                std::abs(d.times[idx] - d.times[0] - t_target) <= 1e-9 * std::max(1.0, t_target),
            ErrorCode::kInsufficientWindow,
            "calibrate_smagorinsky: dataset has no snapshot at t = " + fmt(t_target));
    const long long per = std::llround(d.dt_between / dt_coarse);
    require(per >= 1 && std::abs(per * dt_coarse - d.dt_between) <= 1e-12 * d.dt_between,
            ErrorCode::kInvalidArgument, "calibrate_smagorinsky: snapshot spacing is not a multiple of dt");
    targets.push_back({&d.snapshots[0], energy_spectrum(d.snapshots[idx]), static_cast<int>(idx * per)});
  }

  CalibrationResult res;
  res.candidates = candidates;
  double best = std::numeric_limits<double>::infinity();
  res.cs = candidates.front();
  for (double cs : candidates) {
    double err = 0.0;
    for (const auto& t : targets) {
      SimConfig sim;
      sim.dt = dt_coarse;
      sim.n_steps = t.steps;
      sim.nu = nu;
      sim.snapshot_stride = t.steps;
      sim.closure = ClosureModel::smagorinsky(cs);
      const auto traj = simulate(*t.ic, sim);
      if (traj.blew_up) {
        err = std::numeric_limits<double>::infinity();
        break;
      }
      const Spectrum s = energy_spectrum(traj.snapshots.back());
      for (std::size_t b = 0; b < s.size(); ++b) {
        if (s.energy[b] > 0.0 && t.spectrum.energy[b] > 0.0) {
          const double d = std::log10(s.energy[b]) - std::log10(t.spectrum.energy[b]);
          err += d * d;
        }
      }
    }
    res.errors.push_back(err);
    note(log, "calibrate-smag: Cs = " + fmt(cs) + " error " + fmt(err));
    if (err < best) {
      best = err;
      res.cs = cs;
    }
  }
  return res;
}

ReferenceRun make_reference(const ExperimentConfig& cfg, int coarse_n, std::uint64_t seed, double t_end,
                            const LogFn& log) {
  cfg.validate();
  const Grid fine = Grid::periodic_square(cfg.fine_n);
  const FaceAverageFilter filter(fine, cfg.fine_n / coarse_n);
  const PoissonSolver solver(fine);
  SimConfig sim;
  sim.dt = cfg.dt;
  sim.nu = cfg.nu;
  const int steps = snapshot_aligned_steps(t_end, cfg.dt, cfg.snapshot_stride);
  sim.n_steps = steps;
  note(log, "reference: DNS on " + std::to_string(cfg.fine_n) + "^2 to t = " + fmt(steps * cfg.dt) +
                " filtered to " + std::to_string(coarse_n) + "^2");
  ReferenceRun ref;
  ref.coarse = filter.coarse();
  ref.seed = seed;
  StaggeredVelocity u = random_initial_condition(fine, seed, cfg.kappa_max, cfg.target_energy);
  ref.times.push_back(0.0);
  ref.fdns.push_back(filter.apply(u));
  for (int n = 0; n < steps; ++n) {
    u = rk4_step(solver, u, sim, n * cfg.dt);
    if ((n + 1) % cfg.snapshot_stride == 0) {
      ref.times.push_back((n + 1) * cfg.dt);
      ref.fdns.push_back(filter.apply(u));
    }
  }
  return ref;
}

const ModelOutcome& DecayReport::outcome(const std::string& name) const {
  for (const auto& m : models) {
    if (m.name == name) return m;
  }
  fail(ErrorCode::kInvalidArgument, "decay report: no model named " + name);
}

ModelOutcome run_against_reference(const NamedModel& model, const ReferenceRun& ref,
                                   const ExperimentConfig& cfg) {
  require(!ref.fdns.empty(), ErrorCode::kInvalidArgument, "run_against_reference: empty reference");
  const int per = cfg.steps_per_snapshot();
  const int n_steps = static_cast<int>(ref.fdns.size() - 1) * per;
  const auto traj = simulate(ref.fdns.front(), les_config(cfg, model.model, n_steps, ForcingSpec::none(), per));
  ModelOutcome out;
  out.name = model.name;
  out.blew_up = traj.blew_up;
  out.blowup_time = traj.blowup_time;
  out.steps_completed = traj.steps_completed;
  out.times = traj.times;
  out.error = trajectory_error(traj.snapshots, ref.fdns);
  out.steps = traj.diagnostics;
  const std::size_t mid = (ref.fdns.size() - 1) / 2;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    out.energy.push_back(kinetic_energy(traj.snapshots[k]));
    const Spectrum s = energy_spectrum(traj.snapshots[k]);
    out.spectrum_error.push_back(spectrum_error(s, energy_spectrum(ref.fdns[k])));
    if (k == mid) out.mid_spectrum = s;
    if (k + 1 == traj.snapshots.size()) out.final_spectrum = s;
  }
  return out;
}

DecayReport run_decaying_experiment(const std::vector<NamedModel>& models, const ReferenceRun& ref,
                                    const ExperimentConfig& cfg, const LogFn& log) {
  DecayReport rep;
  rep.reference = ref;
  rep.t_train = cfg.t_train;
  for (const auto& s : ref.fdns) rep.fdns_energy.push_back(kinetic_energy(s));
  rep.fdns_mid = energy_spectrum(ref.fdns[(ref.fdns.size() - 1) / 2]);
  rep.fdns_final = energy_spectrum(ref.fdns.back());
  for (const auto& m : models) {
    note(log, "run-decay: " + m.name);
    rep.models.push_back(run_against_reference(m, ref, cfg));
    const auto& o = rep.models.back();
    note(log, "run-decay: " + m.name + (o.blew_up ? " blew up at t = " + fmt(o.blowup_time) : " completed") +
                  ", final error " + fmt(o.error.empty() ? 0.0 : o.error.back()));
  }
  return rep;
}

const KolmogorovOutcome& KolmogorovReport::outcome(const std::string& name) const {
  for (const auto& m : models) {
    if (m.name == name) return m;
  }
  fail(ErrorCode::kInvalidArgument, "Kolmogorov report: no model named " + name);
}

namespace {

KolmogorovOutcome summarise_forced_run(const std::string& name, const TrajectoryRecord& traj,
                                       const std::vector<StaggeredVelocity>& samples) {
  KolmogorovOutcome out;
  out.name = name;
  out.blew_up = traj.blew_up;
  out.blowup_time = traj.blowup_time;
  out.steps_completed = traj.steps_completed;
  out.steps = traj.diagnostics;
  std::vector<Spectrum> spectra;
  for (std::size_t k = 1; k < samples.size(); ++k) spectra.push_back(energy_spectrum(samples[k]));
  if (spectra.empty()) spectra.push_back(energy_spectrum(samples.front()));
  out.mean_spectrum = average_spectra(spectra);
  out.top_bin_energy = out.mean_spectrum.energy.empty() ? 0.0 : out.mean_spectrum.energy.back();
  out.max_closure_energy = -std::numeric_limits<double>::infinity();
  std::vector<double> energies;
  for (const auto& d : traj.diagnostics) {
    out.max_closure_energy = std::max(out.max_closure_energy, d.closure_energy);
    if (d.t > 0.0) energies.push_back(d.energy);
  }
  if (energies.size() >= 2) {
    const double h = silverman_bandwidth(energies);
    const auto [lo, hi] = std::minmax_element(energies.begin(), energies.end());
    const double a = *lo - 3.0 * h, b = *hi + 3.0 * h;
    constexpr int kPoints = 200;
    for (int k = 0; k < kPoints; ++k) out.kde_points.push_back(a + (b - a) * k / (kPoints - 1));
    out.kde_density = gaussian_kde(energies, out.kde_points);
  }
  return out;
}

}  // namespace

KolmogorovReport run_kolmogorov_experiment(const std::vector<NamedModel>& models, const ExperimentConfig& cfg,
                                           const LogFn& log) {
  cfg.validate();
  const Grid fine = Grid::periodic_square(cfg.fine_n);
  const FaceAverageFilter filter(fine, cfg.fine_n / cfg.kf_coarse_n);
  const PoissonSolver fine_solver(fine);
  KolmogorovReport rep;
  rep.coarse = filter.coarse();
  rep.seed = derive_seed(cfg.seed, 0x4B46ULL);
  rep.warmup = cfg.kf_warmup;
  rep.horizon = cfg.kf_horizon;

  SimConfig warm;
  warm.dt = cfg.dt;
  warm.nu = cfg.nu;
  warm.forcing = ForcingSpec::kolmogorov();
  const int warm_steps = static_cast<int>(std::llround(cfg.kf_warmup / cfg.dt));
  note(log, "run-kolmogorov: warm-up DNS on " + std::to_string(cfg.fine_n) + "^2 for " +
                std::to_string(warm_steps) + " steps");
  StaggeredVelocity u = random_initial_condition(fine, rep.seed, cfg.kappa_max, cfg.target_energy);
  for (int n = 0; n < warm_steps; ++n) u = rk4_step(fine_solver, u, warm, n * cfg.dt);
  const StaggeredVelocity ic = filter.apply(u);

  const int steps = static_cast<int>(std::llround(cfg.kf_horizon / cfg.dt_coarse()));
  for (const auto& m : models) {
    note(log, "run-kolmogorov: " + m.name + " for " + std::to_string(steps) + " coarse steps");
    const auto traj = simulate(ic, les_config(cfg, m.model, steps, ForcingSpec::kolmogorov(), cfg.kf_sample_stride));
    rep.models.push_back(summarise_forced_run(m.name, traj, traj.snapshots));
    const auto& o = rep.models.back();
    note(log, "run-kolmogorov: " + m.name + (o.blew_up ? " blew up at t = " + fmt(o.blowup_time) : " completed") +
                  ", top-bin energy " + fmt(o.top_bin_energy));
  }

  if (cfg.kf_reference) {
    note(log, "run-kolmogorov: filtered DNS over the horizon");
    TrajectoryRecord traj;
    traj.grid = rep.coarse;
    traj.dt = cfg.dt_coarse();
    std::vector<StaggeredVelocity> samples{ic};
    const int per = cfg.coarse_multiplier;
    StaggeredVelocity v = u;
    for (int n = 0; n < steps * per; ++n) {
      v = rk4_step(fine_solver, v, warm, n * cfg.dt);
      if ((n + 1) % per != 0) continue;
      const int coarse_step = (n + 1) / per;
      const StaggeredVelocity f = filter.apply(v);
      const Momentum p = momentum(f);
      traj.diagnostics.push_back({coarse_step * cfg.dt_coarse(), kinetic_energy(f), p.px, p.py, 0.0});
      if (coarse_step % cfg.kf_sample_stride == 0) samples.push_back(f);
    }
    traj.steps_completed = steps;
    rep.models.push_back(summarise_forced_run("FDNS", traj, samples));
  }
  return rep;
}

std::uint64_t replica_seed(std::uint64_t base, ClosureKind kind, int index) {
  return derive_seed(base, 0x5EED0000ULL + static_cast<std::uint64_t>(kind) * 256 + static_cast<std::uint64_t>(index));
}

EnsembleReport run_ensemble(ClosureKind kind, int n_replicas, const std::vector<SnapshotDataset>& data,
                            const ReferenceRun& ref, const ExperimentConfig& cfg, int epochs,
                            const LogFn& log) {
  require(n_replicas >= 2, ErrorCode::kInvalidArgument, "run_ensemble: need at least two replicas");
  require(closure_has_network(kind), ErrorCode::kInvalidArgument, "run_ensemble: variant has no network");
  EnsembleReport rep;
  rep.kind = kind;
  rep.coarse_n = ref.coarse.nx;
  rep.epochs = epochs;
  for (int r = 0; r < n_replicas; ++r) {
    ReplicaOutcome rr;
    rr.replica = r;
    rr.seed = replica_seed(cfg.seed, kind, r);
    TrainConfig tc = cfg.train_config(epochs);
    tc.seed = rr.seed;
    const std::string name = std::string(closure_name(kind)) + "-" + std::to_string(r);
    const auto trained = train(data, cfg.initial_model(kind, rr.seed), tc, [&](const EpochRecord& e) {
      note(log, "run-ensemble: " + name + " epoch " + std::to_string(e.epoch) + " relative loss " +
                    fmt(e.relative_loss));
    });
    rr.final_relative_loss = trained.history.empty() ? 1.0 : trained.history.back().relative_loss;
    rr.model = trained.model;
    rr.outcome = run_against_reference({name, trained.model}, ref, cfg);
    note(log, "run-ensemble: " + name +
                  (rr.outcome.blew_up ? " blew up at t = " + fmt(rr.outcome.blowup_time) : " completed"));
    rep.replicas.push_back(std::move(rr));
  }
  return rep;
}

std::vector<SkewDiagnosticRow> skew_term_diagnostics(const ClosureModel& skew,
                                                     const std::vector<double>& times,
                                                     const std::vector<StaggeredVelocity>& states,
                                                     double nu) {
  require(skew.kind == ClosureKind::kSkew, ErrorCode::kInvalidArgument,
          "skew_term_diagnostics: model is not SKEW");
  require(times.size() == states.size(), ErrorCode::kShapeMismatch,
          "skew_term_diagnostics: times and states differ in length");
  const ClosureModel k_only = skew_ablation(skew, true, false);
  const ClosureModel q_only = skew_ablation(skew, false, true);
  std::vector<SkewDiagnosticRow> rows;
  for (std::size_t s = 0; s < states.size(); ++s) {
    const StaggeredVelocity& u = states[s];
    const StaggeredVelocity a = tendency(u, nu, ForcingSpec::none(), times[s]);
    const SkewParts parts = skew_parts(skew, u, a);
    const StaggeredVelocity full = apply_closure(skew, u, a);
    const StaggeredVelocity sum_paths = apply_closure(k_only, u, a) + apply_closure(q_only, u, a);
    SkewDiagnosticRow row;
    row.t = times[s];
    row.k_energy = closure_energy(u, parts.k_path);
    row.q_energy = closure_energy(u, parts.q_path);
    row.k_norm = norm2(parts.k_path);
    row.q_norm = norm2(parts.q_path);
    const double denom = norm2(u) * row.k_norm;
    row.k_energy_relative = denom > 0.0 ? std::abs(dot(u, parts.k_path)) / denom : 0.0;
    const double scale = full.max_abs();
    row.additivity_residual = scale > 0.0 ? (full - sum_paths).max_abs() / scale : 0.0;
    rows.push_back(row);
  }
  return rows;
}

ClosureModel skew_ablation(const ClosureModel& skew, bool keep_k, bool keep_q) {
  require(skew.kind == ClosureKind::kSkew, ErrorCode::kInvalidArgument, "skew_ablation: model is not SKEW");
  ClosureModel m = skew;
  m.use_k = keep_k;
  m.use_q = keep_q;
  return m;
}

}  // namespace les
