#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "les/grid.hpp"
#include "les/nn.hpp"
#include "les/operators.hpp"

namespace les {

// Closure models return tendencies per unit volume, like convection() and
// diffusion(). Energy and momentum contributions multiply by the cell volume.

enum class ClosureKind : std::uint8_t {
  kNone = 0,
  kSmagorinsky = 1,
  kDynamicSmagorinsky = 2,
  kCnn = 3,
  kDiv = 4,
  kSkew = 5,
  kCnnClipped = 6,
};

const char* closure_name(ClosureKind kind);
/// Accepts NC, SMAG, DYNSMAG, CNN, DIV, SKEW, CNNC (case-insensitive).
ClosureKind parse_closure_kind(const std::string& name);
bool closure_has_network(ClosureKind kind);
/// Output channels the network of a given variant must produce.
int closure_network_outputs(ClosureKind kind);

/// Parameters of the three 2->2 channel operators B1, B2, B3 of the SKEW model.
inline constexpr int kSkewBRadius = 2;
inline constexpr std::size_t kSkewBKernelSize = 2 * 2 * 25;
inline constexpr std::size_t kSkewBParams = 3 * kSkewBKernelSize;

/// Network input: u, v and the resolved tendency a(u) on the face lattices.
inline constexpr int kClosureInputChannels = 4;

struct ClosureModel {
  ClosureKind kind = ClosureKind::kNone;
  double cs = 0.0;  // SMAG only
  CnnSpec spec;
  /// Network parameters, followed for SKEW by the raw (not yet zero-sum)
  /// weights of B1, B2, B3, each laid out kernel[out][in][dy][dx].
  std::vector<double> params;
  /// SKEW ablations: drop the skew-symmetric (K) or dissipative (Q) path.
  bool use_k = true;
  bool use_q = true;

  static ClosureModel none();
  static ClosureModel smagorinsky(double cs);
  static ClosureModel dynamic_smagorinsky();
  /// Network variant with freshly initialised parameters.
  static ClosureModel network(ClosureKind kind, int hidden_channels, int hidden_layers, int radius,
                              std::uint64_t seed);

  std::size_t network_param_count() const { return spec.param_count(); }
  std::size_t param_count() const { return params.size(); }
  std::span<const double> network_params() const {
    return std::span<const double>(params).first(spec.param_count());
  }
  /// Throws ShapeMismatch if spec, kind and parameter count disagree.
  void validate() const;
};

/// S11, S22 at cell centres, S12 at corners.
struct StrainTensorField {
  Lattice s11, s22, s12;
};

StrainTensorField strain_rate(const StaggeredVelocity& vel);

/// Symmetric stress with t11, t22 at centres and t12 at corners. Returns
/// the staggered divergence: u-face (t11(i+1,j)-t11(i,j))/hx + (t12(i,j)-t12(i,j-1))/hy,
/// v-face (t12(i,j)-t12(i-1,j))/hx + (t22(i,j+1)-t22(i,j))/hy.
/// Satisfies <w, div(t)> = -sum(t11 S11(w) + t22 S22(w) + 2 t12 S12(w)).
StaggeredVelocity tensor_divergence(const Grid& grid, const StrainTensorField& t);

/// sqrt(2 tr(S^2)) at cell centres, with S12^2 averaged from the four corners.
Lattice strain_magnitude(const StrainTensorField& s);

/// div(nu S) with nu >= 0 at cell centres (corner values are four-point
/// averages). Dissipative for any non-negative nu and momentum conserving.
StaggeredVelocity eddy_viscosity_closure(const StaggeredVelocity& vel, const Lattice& nu_center);

/// nu_t = (Cs Delta)^2 sqrt(2 tr S^2), Delta = sqrt(hx hy), closure div(nu_t S).
Lattice smagorinsky_viscosity(const StaggeredVelocity& vel, double cs);
StaggeredVelocity smagorinsky_closure(const StaggeredVelocity& vel, double cs);

/// Germano-Lilly coefficient C(x) >= 0 at cell centres (test filter of width 2 Delta).
Lattice dynamic_smagorinsky_coefficient(const StaggeredVelocity& vel);
StaggeredVelocity dynamic_smagorinsky_closure(const StaggeredVelocity& vel);

/// b - mean(b) over each (2r+1)^2 block.
std::vector<double> zero_sum_reparam(std::span<const double> raw, int radius);

/// Per cell, nu = <raw, d>/|d|^2 with d = div(S) gathered from the cell's
/// u- and v-face, clipped at zero; returns div(nu S). Cells with d = 0 get nu = 0.
StaggeredVelocity clip_to_eddy_viscosity(const StaggeredVelocity& vel, const StaggeredVelocity& raw,
                                         Lattice* nu_out = nullptr);

/// Assembles the four-channel network input (u, v, a_u, a_v).
Channels closure_network_input(const StaggeredVelocity& vel, const StaggeredVelocity& resolved);

/// Evaluates the closure at vel. `resolved` is the resolved tendency a(vel)
/// used as network input; it is ignored by the non-network variants.
StaggeredVelocity apply_closure(const ClosureModel& model, const StaggeredVelocity& vel,
                                const StaggeredVelocity& resolved);
StaggeredVelocity apply_closure(const ClosureModel& model, const StaggeredVelocity& vel, double nu,
                                const ForcingSpec& forcing, double t);

/// Reverse mode through apply_closure for the trainable variants (NC, CNN,
/// DIV, SKEW). Accumulates into grad_params and the two adjoint fields.
void closure_vjp(const ClosureModel& model, const StaggeredVelocity& vel,
                 const StaggeredVelocity& resolved, const StaggeredVelocity& adj_closure,
                 StaggeredVelocity& adj_vel, StaggeredVelocity& adj_resolved,
                 std::span<double> grad_params);

/// Omega * <vel, c>.
double closure_energy(const StaggeredVelocity& vel, const StaggeredVelocity& c);
/// Omega * (sum c_u, sum c_v).
Momentum closure_momentum(const StaggeredVelocity& c);

/// The two SKEW paths evaluated separately. k_path = (K - K^T) x and
/// q_path = -Q^T Q x; q_norm2 = |Q x|^2 (plain sum, no volume factor).
struct SkewParts {
  StaggeredVelocity k_path;
  StaggeredVelocity q_path;
  double q_norm2 = 0.0;
};
SkewParts skew_parts(const ClosureModel& model, const StaggeredVelocity& vel,
                     const StaggeredVelocity& resolved);

/// Network outputs of a SKEW model at (vel, resolved): k = (k1, k2) and
/// q = (q1, q2), each two channels on the face lattices.
struct SkewFields {
  Channels k;
  Channels q;
};
SkewFields skew_fields(const ClosureModel& model, const StaggeredVelocity& vel,
                       const StaggeredVelocity& resolved);

/// The SKEW operator with frozen k, q applied to an arbitrary x; linear in x.
/// Returns (K - K^T) x when with_k, plus -Q^T Q x when with_q.
StaggeredVelocity skew_apply_frozen(const ClosureModel& model, const SkewFields& fields,
                                    const StaggeredVelocity& x, bool with_k, bool with_q);

/// Applies one zero-sum B operator (2 -> 2 channels) or its transpose to a
/// velocity field viewed as channels (u, v). `raw` is reparameterised first.
StaggeredVelocity skew_b_apply(std::span<const double> raw, const StaggeredVelocity& x);
StaggeredVelocity skew_b_apply_transpose(std::span<const double> raw, const StaggeredVelocity& x);

/// 1D periodic check of the skew-symmetric construction with fixed
/// difference stencils: Y = Dc diag(k) Df - Df^T diag(k) Dc^T and
/// Z = -Df^T diag(q)^2 Df, (Dc w)_i = w_{i+1} - w_{i-1}, (Df w)_i = w_{i+1} - w_i.
struct SkewStencil1dReport {
  double momentum_residual = 0.0;     // max |1^T Y w| / |w|, random k, w
  double energy_residual = 0.0;       // max |w^T Y w| / |w|^2
  double stencil_residual = 0.0;      // Y w vs expanded stencil, uniform k = 1/(2h), w = sin x
  double advection_residual = 0.0;    // single k_i = 1/(2h): (Y w)_i vs -(w_{i+1} - w_{i-1})/(2h)
  double diffusion_residual = 0.0;    // q = 1/h: Z w vs (w_{i+1} - 2 w_i + w_{i-1})/h^2, relative
  bool passed(double tol = 1e-12) const;
};
SkewStencil1dReport skew_stencil_1d_check(int n = 32, std::uint64_t seed = 7);

}  // namespace les
