#pragma once

#include <cstdint>
#include <vector>

#include "les/grid.hpp"
#include "les/integrator.hpp"
#include "les/operators.hpp"
#include "les/projection.hpp"

namespace les {

/// Face-averaging filter from a fine grid to a grid coarser by `factor` in
/// both directions. Coarse u-face (I, J) averages the fine u-faces
/// ((I+1)*factor - 1, j) for j in [J*factor, (J+1)*factor); v likewise.
class FaceAverageFilter {
 public:
  /// factor >= 1 must divide both fine resolutions (factor 1 is the identity).
  FaceAverageFilter(const Grid& fine, int factor);

  const Grid& fine() const { return fine_; }
  const Grid& coarse() const { return coarse_; }
  int factor() const { return factor_; }

  StaggeredVelocity apply(const StaggeredVelocity& fine) const;

 private:
  Grid fine_;
  Grid coarse_;
  int factor_;
};

/// Exact closure target per unit volume:
///   c = W P_h a_h(u_h) - P_H a_H(W u_h),
/// with a = -C(u)u + nu D u + f the resolved tendency.
StaggeredVelocity commutator_error(const FaceAverageFilter& filter, const PoissonSolver& fine_solver,
                                   const PoissonSolver& coarse_solver, const StaggeredVelocity& fine,
                                   double nu, const ForcingSpec& forcing, double t);
StaggeredVelocity commutator_error(const FaceAverageFilter& filter, const StaggeredVelocity& fine,
                                   double nu, const ForcingSpec& forcing, double t);

/// Time-indexed coarse snapshots plus the metadata stored in .lesd files.
struct SnapshotDataset {
  Grid grid;
  double dt_between = 0.0;
  double nu = 0.0;
  ForcingKind forcing = ForcingKind::kNone;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<StaggeredVelocity> snapshots;

  std::size_t size() const { return snapshots.size(); }
};

struct DatasetMetadata {
  double nu = 0.0;
  ForcingKind forcing = ForcingKind::kNone;
  std::uint64_t seed = 0;
};

/// One dataset per filter, each holding the filtered trajectory snapshots.
std::vector<SnapshotDataset> build_fdns_dataset(const TrajectoryRecord& traj,
                                                const std::vector<FaceAverageFilter>& filters,
                                                const DatasetMetadata& meta);

}  // namespace les
