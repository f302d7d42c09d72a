#include "les/filtering.hpp"

#include <string>

namespace les {

FaceAverageFilter::FaceAverageFilter(const Grid& fine, int factor) : fine_(fine), factor_(factor) {
  require(factor >= 1 && fine.nx % factor == 0 && fine.ny % factor == 0,
          ErrorCode::kDimensionMismatch,
          "FaceAverageFilter: factor " + std::to_string(factor) + " does not divide " +
              std::to_string(fine.nx) + "x" + std::to_string(fine.ny));
  coarse_ = Grid(fine.nx / factor, fine.ny / factor, fine.lx, fine.ly, fine.x0, fine.y0);
}

StaggeredVelocity FaceAverageFilter::apply(const StaggeredVelocity& fine) const {
  require(fine.grid == fine_, ErrorCode::kDimensionMismatch,
          "FaceAverageFilter: input does not live on the filter's fine grid");
  const int f = factor_;
  const double inv = 1.0 / f;
  StaggeredVelocity out(coarse_);
  for (int jc = 0; jc < coarse_.ny; ++jc) {
    for (int ic = 0; ic < coarse_.nx; ++ic) {
      const int iface = (ic + 1) * f - 1;
      const int jface = (jc + 1) * f - 1;
      double su = 0.0;
      double sv = 0.0;
      for (int k = 0; k < f; ++k) {
        su += fine.u(iface, jc * f + k);
        sv += fine.v(ic * f + k, jface);
      }
      out.u(ic, jc) = su * inv;
      out.v(ic, jc) = sv * inv;
    }
  }
  return out;
}

StaggeredVelocity commutator_error(const FaceAverageFilter& filter, const PoissonSolver& fine_solver,
                                   const PoissonSolver& coarse_solver, const StaggeredVelocity& fine,
                                   double nu, const ForcingSpec& forcing, double t) {
  require(fine_solver.grid() == filter.fine() && coarse_solver.grid() == filter.coarse(),
          ErrorCode::kDimensionMismatch, "commutator_error: solver grids do not match filter");
  StaggeredVelocity c = filter.apply(fine_solver.project(tendency(fine, nu, forcing, t)));
  const StaggeredVelocity coarse = filter.apply(fine);
  axpy(-1.0, coarse_solver.project(tendency(coarse, nu, forcing, t)), c);
  return c;
}

StaggeredVelocity commutator_error(const FaceAverageFilter& filter, const StaggeredVelocity& fine,
                                   double nu, const ForcingSpec& forcing, double t) {
  const PoissonSolver fs(filter.fine());
  const PoissonSolver cs(filter.coarse());
  return commutator_error(filter, fs, cs, fine, nu, forcing, t);
}

std::vector<SnapshotDataset> build_fdns_dataset(const TrajectoryRecord& traj,
                                                const std::vector<FaceAverageFilter>& filters,
                                                const DatasetMetadata& meta) {
  std::vector<SnapshotDataset> out;
  out.reserve(filters.size());
  for (const auto& filter : filters) {
    SnapshotDataset ds;
    ds.grid = filter.coarse();
    ds.dt_between = traj.dt * traj.snapshot_stride;
    ds.nu = meta.nu;
    ds.forcing = meta.forcing;
    ds.seed = meta.seed;
    ds.times = traj.times;
    ds.snapshots.reserve(traj.snapshots.size());
    for (const auto& s : traj.snapshots) ds.snapshots.push_back(filter.apply(s));
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace les
