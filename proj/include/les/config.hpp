#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "les/closures.hpp"
#include "les/training.hpp"

namespace les {

/// All experiment settings. Text form is one `key = value` per line, `#`
/// starts a comment, lists are comma separated. Defaults are the desk-scale
/// configuration; paper-scale values are reachable through the same keys.
struct ExperimentConfig {
  // DNS and filtering
  int fine_n = 256;
  std::vector<int> coarse_n{32, 64};
  double dt = 2e-3;
  int coarse_multiplier = 10;  // dt_coarse / dt
  int snapshot_stride = 10;    // fine steps between stored snapshots
  double nu = 1e-3;
  double t_train = 2.0;
  int n_sims = 2;
  std::uint64_t seed = 1;
  std::uint64_t eval_seed = 1001;
  int kappa_max = 10;
  double target_energy = 1.2;

  // networks and training
  std::vector<std::string> closures{"SKEW", "CNN", "DIV"};
  int hidden_channels = 8;
  int hidden_layers = 4;
  int radius = 2;
  int epochs = 50;
  int batch_size = 20;
  double lr = 1e-3;
  int n_unroll = 5;
  int threads = 1;
  int train_coarse_n = 64;

  // Smagorinsky calibration
  double cs_min = 0.0;
  double cs_max = 0.30;
  double cs_step = 0.01;
  double cs_fallback = 0.17;  // used when no calibrated checkpoint exists

  // decaying-turbulence evaluation; 0 means twice t_train
  double t_eval = 0.0;

  // ensembles
  int n_replicas = 3;
  int ensemble_epochs = 20;
  int ensemble_coarse_n = 32;

  // Kolmogorov flow
  double kf_warmup = 10.0;
  double kf_horizon = 100.0;
  int kf_coarse_n = 32;
  int kf_sample_stride = 50;  // coarse steps between spectrum samples
  bool kf_reference = false;  // also run the filtered DNS over the horizon

  /// Parses text, starting from the defaults. Unknown keys and malformed
  /// values throw InvalidArgument; the result is validated.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  /// Applies a single `key=value` override.
  void set(const std::string& key, const std::string& value);
  void apply_override(const std::string& assignment);

  /// Throws InvalidArgument on inconsistent settings.
  void validate() const;

  /// Canonical text: every key in a fixed order, doubles with 17 digits.
  std::string to_text() const;
  /// FNV-1a of to_text().
  std::uint64_t hash() const;

  double dt_coarse() const { return dt * coarse_multiplier; }
  int steps_per_snapshot() const { return snapshot_stride / coarse_multiplier; }
  double eval_horizon() const { return t_eval > 0.0 ? t_eval : 2.0 * t_train; }

  LossConfig loss_config() const;
  TrainConfig train_config(int epochs_override = -1) const;
  /// Freshly initialised network of the given variant.
  ClosureModel initial_model(ClosureKind kind, std::uint64_t model_seed) const;
};

}  // namespace les
