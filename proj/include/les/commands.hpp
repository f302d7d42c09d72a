#pragma once

#include <string>
#include <vector>

#include "les/config.hpp"
#include "les/pipeline.hpp"

namespace les {

/// A run directory and the configuration every command in it uses. All
/// outputs go below `dir`: config.snapshot, *.lesd, *.lesp, *.csv and
/// report.txt. Each command replaces its own report section in place.
struct RunDir {
  std::string dir;
  ExperimentConfig cfg;
  LogFn log;

  std::string path(const std::string& name) const;
};

/// File names shared between commands.
std::string dataset_file(int coarse_n, int sim);
std::string checkpoint_file(ClosureKind kind, int coarse_n);
std::string ensemble_checkpoint_file(ClosureKind kind, int coarse_n, int replica);

/// Writes config.snapshot and replaces section `name` of report.txt with a
/// header (config hash, seeds, resolutions, time steps, horizons) followed
/// by `body`.
void write_report_section(const RunDir& run, const std::string& name, const std::string& body);
/// Returns the section text, or empty when absent.
std::string read_report_section(const RunDir& run, const std::string& name);

/// gen-data: one .lesd per coarse resolution and simulation.
TrainingData command_gen_data(const RunDir& run);

/// Reads the gen-data output for one coarse resolution.
std::vector<SnapshotDataset> load_training_sets(const RunDir& run, int coarse_n);

/// calibrate-smag: one SMAG checkpoint and error table per coarse resolution.
std::vector<CalibrationResult> command_calibrate_smag(const RunDir& run);

struct TrainSummary {
  ClosureKind kind = ClosureKind::kNone;
  int coarse_n = 0;
  std::uint64_t seed = 0;
  ClosureModel model;
  std::vector<EpochRecord> history;
  double window_loss = 0.0;     // trained model, every phase-0 window
  double nc_window_loss = 0.0;  // no closure, same windows
};

/// train: every listed variant (default cfg.closures) at cfg.train_coarse_n.
std::vector<TrainSummary> command_train(const RunDir& run, const std::vector<std::string>& closures = {});

/// Seed used to initialise and train variant `kind` in `train`.
std::uint64_t training_seed(std::uint64_t base, ClosureKind kind);

/// SMAG from smag_<n>.lesp when calibrated, otherwise cfg.cs_fallback.
ClosureModel smagorinsky_for(const RunDir& run, int coarse_n, std::string* source = nullptr);

/// run-decay: NC, SMAG and every trained variant at cfg.train_coarse_n on a
/// fresh-seed (cfg.eval_seed) run to cfg.eval_horizon().
DecayReport command_run_decay(const RunDir& run);

/// run-kolmogorov: NC, SMAG, SKEW and CNN-C (the CNN checkpoint with its
/// output projected to an eddy viscosity) at cfg.kf_coarse_n. Network
/// checkpoints are taken from `train` when present at that resolution,
/// otherwise from ensemble replica 0.
KolmogorovReport command_run_kolmogorov(const RunDir& run);

/// run-ensemble: cfg.n_replicas replicas of each listed variant (default
/// SKEW and CNN) at cfg.ensemble_coarse_n with cfg.ensemble_epochs.
std::vector<EnsembleReport> command_run_ensemble(const RunDir& run, const std::vector<std::string>& closures = {});

/// spectrum: energy spectrum of one snapshot of a .lesd file (index -1 is
/// the last), written as CSV.
Spectrum command_spectrum(const RunDir& run, const std::string& dataset, int index, const std::string& output = {});

struct SkewDiagReport {
  std::vector<SkewDiagnosticRow> rows;
  std::vector<ModelOutcome> ablations;  // SKEW, SKEW-K, SKEW-Q
};

/// skew-diag: term split along the SKEW trajectory of the run-decay setup
/// plus the two ablated runs.
SkewDiagReport command_skew_diag(const RunDir& run, const std::string& checkpoint = {});

struct CommandOptions {
  std::vector<std::string> closures;
  std::string dataset;
  int snapshot = -1;
  std::string output;
  std::string checkpoint;
};

const std::vector<std::string>& command_names();

/// Dispatches by subcommand name and returns the report section written.
std::string run_command(const std::string& name, const RunDir& run, const CommandOptions& opt = {});

}  // namespace les
