#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "les/closures.hpp"
#include "les/filtering.hpp"
#include "les/nn.hpp"
#include "les/projection.hpp"

namespace les {

/// Coarse solver settings shared by the loss and its gradient.
struct LossConfig {
  double dt = 2e-2;             // coarse step
  int steps_per_snapshot = 1;   // coarse steps between consecutive dataset entries
  int n_unroll = 5;             // dataset intervals per window
  double nu = 1e-3;
  ForcingSpec forcing;
};

/// Stage velocities of every unrolled RK4 step; enough to replay the
/// forward pass during the reverse sweep.
struct Tape {
  std::vector<std::array<StaggeredVelocity, 4>> stages;
  std::vector<StaggeredVelocity> outputs;  // state after each step
};

/// Trajectory-fitting loss over one window of n_unroll + 1 snapshots:
///   L = sum_{i=1..n} |u_model(t_i) - u_data(t_i)|^2 (plain 2-norm, no volume weight),
/// with the coarse model advanced by RK4 from the first snapshot.
class TrajectoryLoss {
 public:
  TrajectoryLoss(const Grid& coarse, const LossConfig& cfg);

  const LossConfig& config() const { return cfg_; }
  const PoissonSolver& solver() const { return solver_; }

  /// Throws InsufficientWindow unless window.size() >= n_unroll + 1.
  double loss(const ClosureModel& model, std::span<const StaggeredVelocity> window,
              Tape* tape = nullptr) const;

  /// Returns the loss and accumulates dL/dparams into grad (size = model.param_count()).
  double loss_and_gradient(const ClosureModel& model, std::span<const StaggeredVelocity> window,
                           std::span<double> grad) const;

 private:
  StaggeredVelocity rate(const ClosureModel& model, const StaggeredVelocity& u) const;
  /// Adjoint of u -> P(a(u) + c(u)) applied to adj; grad accumulates dθ.
  StaggeredVelocity rate_vjp(const ClosureModel& model, const StaggeredVelocity& u,
                             const StaggeredVelocity& adj, std::span<double> grad) const;

  Grid grid_;
  LossConfig cfg_;
  PoissonSolver solver_;
};

struct TrainConfig {
  int epochs = 50;
  int batch_size = 20;
  AdamConfig adam;
  std::uint64_t seed = 1;
  int threads = 1;
  LossConfig loss;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double nc_loss = 0.0;
  double relative_loss = 0.0;
};

struct TrainResult {
  ClosureModel model;
  ParamStore store;
  std::vector<EpochRecord> history;
};

/// A window is (dataset index, first snapshot index).
struct WindowRef {
  std::size_t dataset = 0;
  std::size_t start = 0;
};

/// Disjoint windows of n_unroll intervals starting at `phase` in every dataset.
std::vector<WindowRef> enumerate_windows(const std::vector<SnapshotDataset>& data, int n_unroll,
                                         int phase);

/// Mean loss over windows; threads > 1 evaluates windows concurrently.
double mean_window_loss(const TrajectoryLoss& loss, const ClosureModel& model,
                        const std::vector<SnapshotDataset>& data,
                        const std::vector<WindowRef>& windows, int threads = 1);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam over shuffled mini-batches of windows. Each epoch draws a random
/// phase in [0, n_unroll), takes the disjoint windows at that phase and
/// shuffles them. mean_loss is the average mini-batch loss before each
/// update; nc_loss is the no-closure loss on the same windows.
TrainResult train(const std::vector<SnapshotDataset>& data, const ClosureModel& initial,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace les
