#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "les/closures.hpp"
#include "les/config.hpp"
#include "les/diagnostics.hpp"
#include "les/filtering.hpp"
#include "les/integrator.hpp"
#include "les/training.hpp"

namespace les {

/// Progress sink for long-running experiment steps; empty means silent.
using LogFn = std::function<void(const std::string&)>;

/// Low-wavenumber random field. For each component, in this order (u then
/// v; ky then kx ascending over [-kappa_max+1, kappa_max-1]), every integer
/// wavevector with 0 < |k| < kappa_max draws re, im uniform in [-1, 1) from
/// CounterRng(seed); the component is Re sum (re + i im) exp(i k.x) sampled
/// at its face positions. The pair is scaled so that sum(u^2 + v^2)/(2N)
/// equals target_energy and then projected.
StaggeredVelocity random_initial_condition(const Grid& grid, std::uint64_t seed, int kappa_max = 10,
                                           double target_energy = 1.2);

/// Seed of training simulation `index`.
std::uint64_t simulation_seed(std::uint64_t base, int index);

/// Filtered DNS data for every coarse resolution of the configuration.
struct TrainingData {
  std::vector<int> coarse_n;
  std::vector<std::vector<SnapshotDataset>> sets;  // [resolution][simulation]
  std::vector<std::uint64_t> sim_seeds;
  std::vector<std::uint64_t> fine_fingerprints;  // hash of each fine trajectory

  const std::vector<SnapshotDataset>& at(int n) const;
};

/// Runs cfg.n_sims DNS runs to t_train on the fine grid, keeping every
/// snapshot_stride-th state, and filters them to each coarse grid.
TrainingData generate_training_data(const ExperimentConfig& cfg, const LogFn& log = {});

/// Number of fine steps needed to reach `t` in whole snapshot intervals.
int snapshot_aligned_steps(double t, double dt, int stride);

/// Coarse LES settings derived from the configuration.
SimConfig les_config(const ExperimentConfig& cfg, const ClosureModel& model, int n_steps,
                     const ForcingSpec& forcing = ForcingSpec::none(), int snapshot_stride = 1);

/// Candidate grid cs_min, cs_min + step, ... <= cs_max, each rounded to the
/// nearest double of its 1e-6 decimal so 0.17 is the literal 0.17.
std::vector<double> smagorinsky_candidates(double cs_min, double cs_max, double step);

struct CalibrationResult {
  double cs = 0.0;
  std::vector<double> candidates;
  std::vector<double> errors;  // sum over datasets and bins of squared log10 spectrum differences
};

/// For every candidate runs SMAG from the first snapshot of each dataset to
/// t_target and compares log10 energy spectra with the stored snapshot at
/// t_target. Returns the minimiser, ties going to the smaller Cs. Runs that
/// blow up score +inf.
CalibrationResult calibrate_smagorinsky(const std::vector<SnapshotDataset>& data,
                                        const std::vector<double>& candidates, double t_target,
                                        double dt_coarse, double nu, const LogFn& log = {});

/// A closure with a display name.
struct NamedModel {
  std::string name;
  ClosureModel model;
};

/// Filtered DNS trajectory at one coarse resolution, spaced one coarse
/// snapshot interval apart.
struct ReferenceRun {
  Grid coarse;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<StaggeredVelocity> fdns;
};

ReferenceRun make_reference(const ExperimentConfig& cfg, int coarse_n, std::uint64_t seed, double t_end,
                            const LogFn& log = {});

/// One closure run against the reference.
struct ModelOutcome {
  std::string name;
  bool blew_up = false;
  double blowup_time = 0.0;
  int steps_completed = 0;
  std::vector<double> times;           // snapshot times reached
  std::vector<double> error;           // relative error vs FDNS per snapshot
  std::vector<double> energy;          // kinetic energy per snapshot
  std::vector<double> spectrum_error;  // per snapshot
  std::vector<StepDiagnostics> steps;  // every coarse step
  Spectrum mid_spectrum;
  Spectrum final_spectrum;
};

struct DecayReport {
  ReferenceRun reference;
  double t_train = 0.0;
  std::vector<double> fdns_energy;
  Spectrum fdns_mid;
  Spectrum fdns_final;
  std::vector<ModelOutcome> models;

  const ModelOutcome& outcome(const std::string& name) const;
};

/// Runs each model from the first reference snapshot over the whole
/// reference horizon. Blow-ups are recorded per model.
ModelOutcome run_against_reference(const NamedModel& model, const ReferenceRun& ref,
                                   const ExperimentConfig& cfg);
DecayReport run_decaying_experiment(const std::vector<NamedModel>& models, const ReferenceRun& ref,
                                    const ExperimentConfig& cfg, const LogFn& log = {});

struct KolmogorovOutcome {
  std::string name;
  bool blew_up = false;
  double blowup_time = 0.0;
  int steps_completed = 0;
  std::vector<StepDiagnostics> steps;
  Spectrum mean_spectrum;  // per-bin mean over sampled snapshots after t = 0
  double top_bin_energy = 0.0;
  double max_closure_energy = 0.0;
  std::vector<double> kde_points;
  std::vector<double> kde_density;  // of the kinetic energy time series
};

struct KolmogorovReport {
  Grid coarse;
  std::uint64_t seed = 0;
  double warmup = 0.0;
  double horizon = 0.0;
  std::vector<KolmogorovOutcome> models;

  const KolmogorovOutcome& outcome(const std::string& name) const;
};

/// Forced run: fine DNS warm-up from a random field, filtered final state
/// as the LES initial condition, then every model over the horizon. With
/// cfg.kf_reference the filtered DNS is run alongside as "FDNS".
KolmogorovReport run_kolmogorov_experiment(const std::vector<NamedModel>& models, const ExperimentConfig& cfg,
                                           const LogFn& log = {});

struct ReplicaOutcome {
  int replica = 0;
  std::uint64_t seed = 0;
  double final_relative_loss = 0.0;
  ClosureModel model;
  ModelOutcome outcome;
};

struct EnsembleReport {
  ClosureKind kind = ClosureKind::kSkew;
  int coarse_n = 0;
  int epochs = 0;
  std::vector<ReplicaOutcome> replicas;
};

/// Seed of ensemble replica `index` for a variant.
std::uint64_t replica_seed(std::uint64_t base, ClosureKind kind, int index);

/// Trains n_replicas models with distinct seeds and evaluates each on the
/// reference run.
EnsembleReport run_ensemble(ClosureKind kind, int n_replicas, const std::vector<SnapshotDataset>& data,
                            const ReferenceRun& ref, const ExperimentConfig& cfg, int epochs,
                            const LogFn& log = {});

/// Per-snapshot split of a SKEW closure into its two paths.
struct SkewDiagnosticRow {
  double t = 0.0;
  double k_energy = 0.0;           // Omega <u, (K - K^T) u>
  double q_energy = 0.0;           // Omega <u, -Q^T Q u>
  double k_energy_relative = 0.0;  // |<u, k>| / (|u| |k|)
  double k_norm = 0.0;
  double q_norm = 0.0;
  double additivity_residual = 0.0;  // max|c - (c_K + c_Q)| / max|c|
};

std::vector<SkewDiagnosticRow> skew_term_diagnostics(const ClosureModel& skew,
                                                     const std::vector<double>& times,
                                                     const std::vector<StaggeredVelocity>& states,
                                                     double nu);

/// A SKEW model with one path removed: "K" keeps only the skew-symmetric
/// part, "Q" only the dissipative part.
ClosureModel skew_ablation(const ClosureModel& skew, bool keep_k, bool keep_q);

}  // namespace les
