#include <doctest.h>

#include <cmath>

#include "les/filtering.hpp"
#include "les/integrator.hpp"
#include "les/training.hpp"
#include "support.hpp"

using namespace les;

namespace {

// Reference data from a run on the same coarse grid with a different
// viscosity, so every closure has something to fit.
SnapshotDataset reference_data(const Grid& g, std::uint64_t seed, int snapshots, const LossConfig& lc,
                               double nu_data) {
  SimConfig sim;
  sim.dt = lc.dt;
  sim.nu = nu_data;
  sim.forcing = lc.forcing;
  sim.n_steps = (snapshots - 1) * lc.steps_per_snapshot;
  sim.snapshot_stride = lc.steps_per_snapshot;
  const auto traj = simulate(scaled(testing::random_solenoidal(g, seed), 0.5), sim);
  REQUIRE_FALSE(traj.blew_up);
  return build_fdns_dataset(traj, {FaceAverageFilter(g, 1)}, {nu_data, lc.forcing.kind, seed}).front();
}

LossConfig small_loss() {
  LossConfig lc;
  lc.dt = 1e-2;
  lc.steps_per_snapshot = 2;
  lc.n_unroll = 5;
  lc.nu = 1e-3;
  return lc;
}

}  // namespace

TEST_CASE("NC loss matches an independent rollout and has no gradient") {
  const Grid g = Grid::periodic_square(16);
  const LossConfig lc = small_loss();
  const auto data = reference_data(g, 1, 6, lc, 2e-2);
  const TrajectoryLoss loss(g, lc);
  const ClosureModel nc = ClosureModel::none();
  std::vector<double> grad;
  const double value = loss.loss_and_gradient(nc, data.snapshots, grad);

  SimConfig sim;
  sim.dt = lc.dt;
  sim.nu = lc.nu;
  sim.n_steps = lc.n_unroll * lc.steps_per_snapshot;
  sim.snapshot_stride = lc.steps_per_snapshot;
  const auto rollout = simulate(data.snapshots[0], sim);
  double expected = 0.0;
  for (int i = 1; i <= lc.n_unroll; ++i) {
    const auto diff = rollout.snapshots[i] - data.snapshots[i];
    expected += dot(diff, diff);
  }
  CHECK(value > 0.0);
  CHECK(value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("perfect-model data gives zero NC loss") {
  const Grid g = Grid::periodic_square(16);
  for (const ForcingSpec& f : {ForcingSpec::none(), ForcingSpec::kolmogorov()}) {
    LossConfig lc = small_loss();
    lc.forcing = f;
    const auto data = reference_data(g, 2, 6, lc, lc.nu);
    CHECK(TrajectoryLoss(g, lc).loss(ClosureModel::none(), data.snapshots) <= 1e-24);
  }
}

TEST_CASE("window length is checked") {
  const Grid g = Grid::periodic_square(16);
  const LossConfig lc = small_loss();
  const auto data = reference_data(g, 3, 5, lc, 2e-2);
  try {
    TrajectoryLoss(g, lc).loss(ClosureModel::none(), data.snapshots);
    FAIL("expected InsufficientWindow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientWindow);
  }
}

TEST_CASE("trajectory loss gradient matches central differences") {
  const Grid g = Grid::periodic_square(16);
  const LossConfig lc = small_loss();
  const auto data = reference_data(g, 4, 6, lc, 2e-2);
  const TrajectoryLoss loss(g, lc);
  for (ClosureKind kind : {ClosureKind::kCnn, ClosureKind::kDiv, ClosureKind::kSkew}) {
    CAPTURE(closure_name(kind));
    ClosureModel m = ClosureModel::network(kind, 4, 2, 2, 11);
    CounterRng jitter(12);
    for (double& p : m.params) p += 0.05 * jitter.uniform(-1.0, 1.0);
    std::vector<double> grad(m.param_count(), 0.0);
    loss.loss_and_gradient(m, data.snapshots, grad);
    CounterRng pick(13);
    const double eps = 1e-6;
    for (int t = 0; t < 20; ++t) {
      // Half the probes go to the B weights for SKEW.
      std::size_t p = pick.below(m.param_count());
      if (kind == ClosureKind::kSkew && t % 2 == 0)
        p = m.network_param_count() + pick.below(kSkewBParams);
      ClosureModel mp = m, mm = m;
      mp.params[p] += eps;
      mm.params[p] -= eps;
      const double fd = (loss.loss(mp, data.snapshots) - loss.loss(mm, data.snapshots)) / (2 * eps);
      CAPTURE(p);
      CHECK(std::abs(fd - grad[p]) <= 1e-5 * std::max(1.0, std::abs(grad[p])));
    }
  }
}

TEST_CASE("SKEW loss ignores the all-ones direction of each B kernel block") {
  const Grid g = Grid::periodic_square(16);
  const LossConfig lc = small_loss();
  const auto data = reference_data(g, 5, 6, lc, 2e-2);
  const TrajectoryLoss loss(g, lc);
  const ClosureModel m = ClosureModel::network(ClosureKind::kSkew, 4, 2, 2, 21);
  std::vector<double> grad(m.param_count(), 0.0);
  const double base = loss.loss_and_gradient(m, data.snapshots, grad);
  const std::size_t off = m.network_param_count();
  for (std::size_t block = 0; block < kSkewBParams / 25; ++block) {
    double gsum = 0.0, gabs = 0.0;
    for (std::size_t k = 0; k < 25; ++k) {
      gsum += grad[off + block * 25 + k];
      gabs += std::abs(grad[off + block * 25 + k]);
    }
    CHECK(std::abs(gsum) <= 1e-12 * std::max(1.0, gabs));
  }
  ClosureModel shifted_b = m;
  for (std::size_t k = 0; k < 25; ++k) shifted_b.params[off + 50 + k] += 0.3;
  CHECK(loss.loss(shifted_b, data.snapshots) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("window enumeration") {
  const Grid g = Grid::periodic_square(4);
  std::vector<SnapshotDataset> data(2);
  for (auto& d : data) {
    d.grid = g;
    d.snapshots.assign(11, StaggeredVelocity(g));
  }
  data[1].snapshots.resize(7);
  const auto w0 = enumerate_windows(data, 5, 0);
  REQUIRE(w0.size() == 3);
  CHECK(w0[0].start == 0);
  CHECK(w0[1].start == 5);
  CHECK(w0[2].dataset == 1);
  const auto w1 = enumerate_windows(data, 5, 1);
  REQUIRE(w1.size() == 2);
  CHECK(w1[0].start == 1);
  CHECK(w1[1].start == 1);
  CHECK(enumerate_windows(data, 5, 2).size() == 1);
}

TEST_CASE("training is deterministic and reduces the loss") {
  const Grid g = Grid::periodic_square(16);
  const LossConfig lc = small_loss();
  std::vector<SnapshotDataset> data{reference_data(g, 6, 16, lc, 2e-2), reference_data(g, 7, 16, lc, 2e-2)};
  TrainConfig tc;
  tc.epochs = 0;
  tc.batch_size = 3;
  tc.loss = lc;
  tc.seed = 9;
  const ClosureModel init = ClosureModel::network(ClosureKind::kCnn, 4, 1, 1, 31);
  const auto none = train(data, init, tc);
  CHECK(none.model.params == init.params);
  CHECK(none.history.empty());

  tc.epochs = 4;
  tc.adam.lr = 1e-2;
  std::vector<int> seen;
  const auto a = train(data, init, tc, [&](const EpochRecord& r) { seen.push_back(r.epoch); });
  tc.threads = 3;
  const auto b = train(data, init, tc);
  CHECK(seen == std::vector<int>{1, 2, 3, 4});
  REQUIRE(a.history.size() == 4);
  CHECK(a.model.params == b.model.params);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(a.history[k].mean_loss == b.history[k].mean_loss);
    CHECK(a.history[k].nc_loss == b.history[k].nc_loss);
    CHECK(a.history[k].relative_loss == a.history[k].mean_loss / a.history[k].nc_loss);
  }
  CHECK(a.store.step == 4 * 2);

  // The learned closure should fit the windows better than the untrained one.
  const TrajectoryLoss loss(g, lc);
  const auto windows = enumerate_windows(data, lc.n_unroll, 0);
  CHECK(mean_window_loss(loss, a.model, data, windows) < mean_window_loss(loss, init, data, windows));
  CHECK(mean_window_loss(loss, a.model, data, windows, 2) == mean_window_loss(loss, a.model, data, windows));
}

TEST_CASE("non-finite gradients abort training with the batch identified") {
  const Grid g = Grid::periodic_square(16);
  const LossConfig lc = small_loss();
  // Every window at every phase contains snapshot 5.
  std::vector<SnapshotDataset> data{reference_data(g, 8, 11, lc, 2e-2)};
  data[0].snapshots[5].u[0] = std::nan("");
  TrainConfig tc;
  tc.epochs = 1;
  tc.loss = lc;
  ClosureModel m = ClosureModel::network(ClosureKind::kDiv, 3, 1, 1, 1);
  try {
    train(data, m, tc);
    FAIL("expected NonFiniteGradient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFiniteGradient);
    CHECK(std::string(e.what()).find("windows 0:") != std::string::npos);
  }
}
