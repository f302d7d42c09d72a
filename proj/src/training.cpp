#include "les/training.hpp"

#include <cmath>
#include <sstream>
#include <thread>

#include "les/rng.hpp"

namespace les {

TrajectoryLoss::TrajectoryLoss(const Grid& coarse, const LossConfig& cfg)
    : grid_(coarse), cfg_(cfg), solver_(coarse) {
  require(cfg.dt > 0.0 && cfg.steps_per_snapshot >= 1 && cfg.n_unroll >= 1,
          ErrorCode::kInvalidArgument, "LossConfig: dt, steps_per_snapshot and n_unroll must be positive");
}

StaggeredVelocity TrajectoryLoss::rate(const ClosureModel& model, const StaggeredVelocity& u) const {
  StaggeredVelocity a = tendency(u, cfg_.nu, cfg_.forcing, 0.0);
  if (model.kind != ClosureKind::kNone) axpy(1.0, apply_closure(model, u, a), a);
  return solver_.project(a);
}

StaggeredVelocity TrajectoryLoss::rate_vjp(const ClosureModel& model, const StaggeredVelocity& u,
                                           const StaggeredVelocity& adj,
                                           std::span<double> grad) const {
  const StaggeredVelocity mu = solver_.project_transpose(adj);
  StaggeredVelocity adj_u(grid_);
  StaggeredVelocity adj_a = mu;
  if (model.kind != ClosureKind::kNone) {
    const StaggeredVelocity a = tendency(u, cfg_.nu, cfg_.forcing, 0.0);
    closure_vjp(model, u, a, mu, adj_u, adj_a, grad);
  }
  axpy(1.0, tendency_vjp(u, cfg_.nu, cfg_.forcing, adj_a), adj_u);
  return adj_u;
}

double TrajectoryLoss::loss(const ClosureModel& model, std::span<const StaggeredVelocity> window,
                            Tape* tape) const {
  const int n = cfg_.n_unroll;
  require(window.size() >= static_cast<std::size_t>(n) + 1, ErrorCode::kInsufficientWindow,
          "trajectory_loss: window has " + std::to_string(window.size()) + " snapshots, need " +
              std::to_string(n + 1));
  require(window.front().grid == grid_, ErrorCode::kDimensionMismatch,
          "trajectory_loss: window grid does not match loss grid");
  const double dt = cfg_.dt;
  StaggeredVelocity u = window.front();
  double total = 0.0;
  for (int i = 1; i <= n; ++i) {
    for (int s = 0; s < cfg_.steps_per_snapshot; ++s) {
      std::array<StaggeredVelocity, 4> st;
      st[0] = u;
      const StaggeredVelocity k1 = rate(model, st[0]);
      st[1] = u;
      axpy(0.5 * dt, k1, st[1]);
      const StaggeredVelocity k2 = rate(model, st[1]);
      st[2] = u;
      axpy(0.5 * dt, k2, st[2]);
      const StaggeredVelocity k3 = rate(model, st[2]);
      st[3] = u;
      axpy(dt, k3, st[3]);
      const StaggeredVelocity k4 = rate(model, st[3]);
      axpy(dt / 6.0, k1, u);
      axpy(dt / 3.0, k2, u);
      axpy(dt / 3.0, k3, u);
      axpy(dt / 6.0, k4, u);
      if (tape) {
        tape->stages.push_back(std::move(st));
        tape->outputs.push_back(u);
      }
    }
    const StaggeredVelocity& d = window[i];
    require(d.grid == grid_, ErrorCode::kDimensionMismatch, "trajectory_loss: snapshot grid mismatch");
    double e = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double du = u.u[k] - d.u[k];
      const double dv = u.v[k] - d.v[k];
      e += du * du + dv * dv;
    }
    total += e;
  }
  return total;
}

double TrajectoryLoss::loss_and_gradient(const ClosureModel& model,
                                         std::span<const StaggeredVelocity> window,
                                         std::span<double> grad) const {
  require(grad.size() == model.param_count(), ErrorCode::kShapeMismatch,
          "trajectory_loss: gradient buffer does not match parameters");
  Tape tape;
  const double value = loss(model, window, &tape);
  if (model.param_count() == 0) return value;

  const double dt = cfg_.dt;
  const int m = cfg_.steps_per_snapshot;
  const int total_steps = cfg_.n_unroll * m;
  StaggeredVelocity lambda(grid_);
  for (int s = total_steps - 1; s >= 0; --s) {
    if ((s + 1) % m == 0) {
      // dL/du at a snapshot time.
      const StaggeredVelocity& u = tape.outputs[s];
      const StaggeredVelocity& d = window[(s + 1) / m];
      for (std::size_t k = 0; k < u.size(); ++k) {
        lambda.u[k] += 2.0 * (u.u[k] - d.u[k]);
        lambda.v[k] += 2.0 * (u.v[k] - d.v[k]);
      }
    }
    const auto& st = tape.stages[s];
    StaggeredVelocity kbar = scaled(lambda, dt / 6.0);
    const StaggeredVelocity a4 = rate_vjp(model, st[3], kbar, grad);
    kbar = scaled(lambda, dt / 3.0);
    axpy(dt, a4, kbar);
    const StaggeredVelocity a3 = rate_vjp(model, st[2], kbar, grad);
    kbar = scaled(lambda, dt / 3.0);
    axpy(0.5 * dt, a3, kbar);
    const StaggeredVelocity a2 = rate_vjp(model, st[1], kbar, grad);
    kbar = scaled(lambda, dt / 6.0);
    axpy(0.5 * dt, a2, kbar);
    const StaggeredVelocity a1 = rate_vjp(model, st[0], kbar, grad);
    axpy(1.0, a1, lambda);
    axpy(1.0, a2, lambda);
    axpy(1.0, a3, lambda);
    axpy(1.0, a4, lambda);
  }
  return value;
}

std::vector<WindowRef> enumerate_windows(const std::vector<SnapshotDataset>& data, int n_unroll,
                                         int phase) {
  std::vector<WindowRef> out;
  for (std::size_t d = 0; d < data.size(); ++d) {
    const std::size_t n = data[d].size();
    for (std::size_t s = static_cast<std::size_t>(phase); s + n_unroll < n; s += n_unroll) {
      out.push_back({d, s});
    }
  }
  return out;
}

namespace {

std::span<const StaggeredVelocity> window_span(const std::vector<SnapshotDataset>& data,
                                               const WindowRef& w, int n_unroll) {
  return std::span<const StaggeredVelocity>(data[w.dataset].snapshots)
      .subspan(w.start, static_cast<std::size_t>(n_unroll) + 1);
}

// Runs body(k) for k in [0, n) on up to `threads` threads. Results are
// written by index so reductions done afterwards keep a fixed order.
template <class Body>
void parallel_for(std::size_t n, int threads, Body body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t k = 0; k < n; ++k) body(k);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < n; k += workers) body(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

double mean_window_loss(const TrajectoryLoss& loss, const ClosureModel& model,
                        const std::vector<SnapshotDataset>& data,
                        const std::vector<WindowRef>& windows, int threads) {
  if (windows.empty()) return 0.0;
  const int n = loss.config().n_unroll;
  std::vector<double> values(windows.size());
  parallel_for(windows.size(), threads,
               [&](std::size_t k) { values[k] = loss.loss(model, window_span(data, windows[k], n)); });
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(windows.size());
}

TrainResult train(const std::vector<SnapshotDataset>& data, const ClosureModel& initial,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  require(!data.empty(), ErrorCode::kInvalidArgument, "train: empty dataset");
  require(cfg.epochs >= 0 && cfg.batch_size >= 1, ErrorCode::kInvalidArgument,
          "train: epochs must be >= 0 and batch_size >= 1");
  initial.validate();
  const Grid& grid = data.front().grid;
  for (const auto& d : data) {
    require(d.grid == grid, ErrorCode::kDimensionMismatch, "train: datasets on different grids");
  }

  TrainResult result;
  result.model = initial;
  result.store = ParamStore(initial.params);
  const TrajectoryLoss loss(grid, cfg.loss);
  const int n = cfg.loss.n_unroll;
  const ClosureModel nc = ClosureModel::none();
  CounterRng rng(derive_seed(cfg.seed, 0x7A1));
  const std::size_t np = initial.param_count();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const int phase = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    std::vector<WindowRef> windows = enumerate_windows(data, n, phase);
    require(!windows.empty(), ErrorCode::kInsufficientWindow,
            "train: datasets are shorter than one window");
    rng.shuffle(windows);

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < windows.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(windows.size(), b + cfg.batch_size);
      const std::size_t count = e - b;
      std::vector<double> losses(count);
      std::vector<std::vector<double>> grads(count, std::vector<double>(np, 0.0));
      parallel_for(count, cfg.threads, [&](std::size_t k) {
        losses[k] = loss.loss_and_gradient(result.model, window_span(data, windows[b + k], n), grads[k]);
      });
      std::vector<double> grad(np, 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = 0; k < count; ++k) {
        batch_loss += losses[k];
        for (std::size_t p = 0; p < np; ++p) grad[p] += grads[k][p];
      }
      const double inv = 1.0 / static_cast<double>(count);
      for (double& g : grad) g *= inv;
      loss_sum += batch_loss;
      try {
        if (np > 0) adam_step(result.store, grad, cfg.adam);
      } catch (const Error& err) {
        std::ostringstream msg;
        msg << err.what() << " (epoch " << epoch << ", windows";
        for (std::size_t k = b; k < e; ++k) msg << " " << windows[k].dataset << ":" << windows[k].start;
        msg << ")";
        throw Error(err.code(), msg.str());
      }
      result.model.params = result.store.theta;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = loss_sum / static_cast<double>(windows.size());
    rec.nc_loss = mean_window_loss(loss, nc, data, windows, cfg.threads);
    rec.relative_loss = rec.nc_loss > 0.0 ? rec.mean_loss / rec.nc_loss : 0.0;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace les
