#include "les/closures.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "les/rng.hpp"
#include "stencil.hpp"

namespace les {

using detail::Neighbours;

const char* closure_name(ClosureKind kind) {
  switch (kind) {
    case ClosureKind::kNone: return "NC";
    case ClosureKind::kSmagorinsky: return "SMAG";
    case ClosureKind::kDynamicSmagorinsky: return "DYNSMAG";
    case ClosureKind::kCnn: return "CNN";
    case ClosureKind::kDiv: return "DIV";
    case ClosureKind::kSkew: return "SKEW";
    case ClosureKind::kCnnClipped: return "CNNC";
  }
  return "?";
}

ClosureKind parse_closure_kind(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s == "NC" || s == "NONE") return ClosureKind::kNone;
  if (s == "SMAG") return ClosureKind::kSmagorinsky;
  if (s == "DYNSMAG" || s == "DYN-SMAG") return ClosureKind::kDynamicSmagorinsky;
  if (s == "CNN") return ClosureKind::kCnn;
  if (s == "DIV") return ClosureKind::kDiv;
  if (s == "SKEW") return ClosureKind::kSkew;
  if (s == "CNNC" || s == "CNN-C") return ClosureKind::kCnnClipped;
  fail(ErrorCode::kInvalidArgument, "unknown closure variant '" + name + "'");
}

bool closure_has_network(ClosureKind kind) {
  return kind == ClosureKind::kCnn || kind == ClosureKind::kDiv || kind == ClosureKind::kSkew ||
         kind == ClosureKind::kCnnClipped;
}

int closure_network_outputs(ClosureKind kind) {
  switch (kind) {
    case ClosureKind::kCnn:
    case ClosureKind::kCnnClipped: return 2;
    case ClosureKind::kDiv: return 3;
    case ClosureKind::kSkew: return 4;
    default: return 0;
  }
}

ClosureModel ClosureModel::none() { return {}; }

ClosureModel ClosureModel::smagorinsky(double cs) {
  require(cs >= 0.0, ErrorCode::kInvalidArgument, "smagorinsky: Cs must be >= 0");
  ClosureModel m;
  m.kind = ClosureKind::kSmagorinsky;
  m.cs = cs;
  return m;
}

ClosureModel ClosureModel::dynamic_smagorinsky() {
  ClosureModel m;
  m.kind = ClosureKind::kDynamicSmagorinsky;
  return m;
}

ClosureModel ClosureModel::network(ClosureKind kind, int hidden_channels, int hidden_layers,
                                   int radius, std::uint64_t seed) {
  require(closure_has_network(kind), ErrorCode::kInvalidArgument,
          std::string("network: variant ") + closure_name(kind) + " has no network");
  ClosureModel m;
  m.kind = kind;
  m.spec = CnnSpec::standard(kClosureInputChannels, hidden_channels, hidden_layers,
                             closure_network_outputs(kind), radius);
  m.spec.validate();
  m.params.assign(m.spec.param_count(), 0.0);
  init_cnn_params(m.spec, seed, m.params);
  if (kind == ClosureKind::kSkew) {
    CounterRng rng(derive_seed(seed, 0xB0B0B0));
    const double bound = std::sqrt(1.0 / (2.0 * 25.0));
    for (std::size_t k = 0; k < kSkewBParams; ++k) m.params.push_back(rng.uniform(-bound, bound));
  }
  return m;
}

void ClosureModel::validate() const {
  if (kind == ClosureKind::kSmagorinsky) {
    require(cs >= 0.0, ErrorCode::kInvalidArgument, "closure: Cs must be >= 0");
  }
  if (!closure_has_network(kind)) return;
  spec.validate();
  require(spec.in_channels() == kClosureInputChannels, ErrorCode::kShapeMismatch,
          "closure: network must take 4 input channels");
  require(spec.out_channels() == closure_network_outputs(kind), ErrorCode::kShapeMismatch,
          std::string("closure: ") + closure_name(kind) + " network must produce " +
              std::to_string(closure_network_outputs(kind)) + " channels");
  const std::size_t expected =
      spec.param_count() + (kind == ClosureKind::kSkew ? kSkewBParams : std::size_t{0});
  require(params.size() == expected, ErrorCode::kShapeMismatch,
          "closure: parameter vector has " + std::to_string(params.size()) + " entries, expected " +
              std::to_string(expected));
}

StrainTensorField strain_rate(const StaggeredVelocity& vel) {
  const Grid& g = vel.grid;
  const Neighbours nb(g);
  const double ihx = 1.0 / g.hx();
  const double ihy = 1.0 / g.hy();
  StrainTensorField s{Lattice(g.nx, g.ny, Stagger::kCenter), Lattice(g.nx, g.ny, Stagger::kCenter),
                      Lattice(g.nx, g.ny, Stagger::kCorner)};
  for (int j = 0; j < g.ny; ++j) {
    const int jm = nb.ym[j];
    const int jp = nb.yp[j];
    for (int i = 0; i < g.nx; ++i) {
      const int im = nb.xm[i];
      const int ip = nb.xp[i];
      s.s11(i, j) = (vel.u(i, j) - vel.u(im, j)) * ihx;
      s.s22(i, j) = (vel.v(i, j) - vel.v(i, jm)) * ihy;
      s.s12(i, j) = 0.5 * ((vel.u(i, jp) - vel.u(i, j)) * ihy + (vel.v(ip, j) - vel.v(i, j)) * ihx);
    }
  }
  return s;
}

StaggeredVelocity tensor_divergence(const Grid& g, const StrainTensorField& t) {
  const Neighbours nb(g);
  const double ihx = 1.0 / g.hx();
  const double ihy = 1.0 / g.hy();
  StaggeredVelocity out(g);
  for (int j = 0; j < g.ny; ++j) {
    const int jm = nb.ym[j];
    const int jp = nb.yp[j];
    for (int i = 0; i < g.nx; ++i) {
      const int im = nb.xm[i];
      const int ip = nb.xp[i];
      out.u(i, j) = (t.s11(ip, j) - t.s11(i, j)) * ihx + (t.s12(i, j) - t.s12(i, jm)) * ihy;
      out.v(i, j) = (t.s12(i, j) - t.s12(im, j)) * ihx + (t.s22(i, jp) - t.s22(i, j)) * ihy;
    }
  }
  return out;
}

namespace {

// Corner (i+1/2, j+1/2) average of the four surrounding centres.
Lattice centers_to_corners(const Grid& g, const Neighbours& nb, const Lattice& c) {
  Lattice k(g.nx, g.ny, Stagger::kCorner);
  for (int j = 0; j < g.ny; ++j) {
    const int jp = nb.yp[j];
    for (int i = 0; i < g.nx; ++i) {
      const int ip = nb.xp[i];
      k(i, j) = 0.25 * (c(i, j) + c(ip, j) + c(i, jp) + c(ip, jp));
    }
  }
  return k;
}

Lattice corners_to_centers(const Grid& g, const Neighbours& nb, const Lattice& k) {
  Lattice c(g.nx, g.ny, Stagger::kCenter);
  for (int j = 0; j < g.ny; ++j) {
    const int jm = nb.ym[j];
    for (int i = 0; i < g.nx; ++i) {
      const int im = nb.xm[i];
      c(i, j) = 0.25 * (k(i, j) + k(im, j) + k(i, jm) + k(im, jm));
    }
  }
  return c;
}

// Separable (1/4, 1/2, 1/4) filter: a discrete top hat of width 2 Delta.
Lattice test_filter(const Grid& g, const Neighbours& nb, const Lattice& a) {
  Lattice tmp(g.nx, g.ny, a.stagger());
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      tmp(i, j) = 0.25 * a(nb.xm[i], j) + 0.5 * a(i, j) + 0.25 * a(nb.xp[i], j);
    }
  }
  Lattice out(g.nx, g.ny, a.stagger());
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      out(i, j) = 0.25 * tmp(i, nb.ym[j]) + 0.5 * tmp(i, j) + 0.25 * tmp(i, nb.yp[j]);
    }
  }
  return out;
}

Lattice product(const Lattice& a, const Lattice& b) {
  Lattice out(a.nx(), a.ny(), a.stagger());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

}  // namespace

Lattice strain_magnitude(const StrainTensorField& s) {
  const int nx = s.s11.nx();
  const int ny = s.s11.ny();
  Lattice out(nx, ny, Stagger::kCenter);
  for (int j = 0; j < ny; ++j) {
    const int jm = (j + ny - 1) % ny;
    for (int i = 0; i < nx; ++i) {
      const int im = (i + nx - 1) % nx;
      const double s12sq = 0.25 * (s.s12(i, j) * s.s12(i, j) + s.s12(im, j) * s.s12(im, j) +
                                   s.s12(i, jm) * s.s12(i, jm) + s.s12(im, jm) * s.s12(im, jm));
      const double tr = s.s11(i, j) * s.s11(i, j) + s.s22(i, j) * s.s22(i, j) + 2.0 * s12sq;
      out(i, j) = std::sqrt(2.0 * tr);
    }
  }
  return out;
}

StaggeredVelocity eddy_viscosity_closure(const StaggeredVelocity& vel, const Lattice& nu_center) {
  const Grid& g = vel.grid;
  require(nu_center.nx() == g.nx && nu_center.ny() == g.ny, ErrorCode::kDimensionMismatch,
          "eddy_viscosity_closure: viscosity lattice does not match grid");
  const Neighbours nb(g);
  StrainTensorField t = strain_rate(vel);
  const Lattice nu_corner = centers_to_corners(g, nb, nu_center);
  for (std::size_t k = 0; k < g.size(); ++k) {
    t.s11[k] *= nu_center[k];
    t.s22[k] *= nu_center[k];
    t.s12[k] *= nu_corner[k];
  }
  return tensor_divergence(g, t);
}

Lattice smagorinsky_viscosity(const StaggeredVelocity& vel, double cs) {
  require(cs >= 0.0, ErrorCode::kInvalidArgument, "smagorinsky: Cs must be >= 0");
  const Grid& g = vel.grid;
  const double delta2 = g.hx() * g.hy();
  Lattice nu = strain_magnitude(strain_rate(vel));
  for (double& x : nu.values()) x *= cs * cs * delta2;
  return nu;
}

StaggeredVelocity smagorinsky_closure(const StaggeredVelocity& vel, double cs) {
  if (cs == 0.0) return StaggeredVelocity(vel.grid);
  return eddy_viscosity_closure(vel, smagorinsky_viscosity(vel, cs));
}

Lattice dynamic_smagorinsky_coefficient(const StaggeredVelocity& vel) {
  const Grid& g = vel.grid;
  const Neighbours nb(g);
  const double delta2 = g.hx() * g.hy();
  constexpr double kRatio2 = 4.0;  // (test width / grid width)^2

  Lattice uc(g.nx, g.ny, Stagger::kCenter);
  Lattice vc(g.nx, g.ny, Stagger::kCenter);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      uc(i, j) = 0.5 * (vel.u(nb.xm[i], j) + vel.u(i, j));
      vc(i, j) = 0.5 * (vel.v(i, nb.ym[j]) + vel.v(i, j));
    }
  }
  const StrainTensorField s = strain_rate(vel);
  const Lattice s12c = corners_to_centers(g, nb, s.s12);
  const Lattice mag = strain_magnitude(s);

  const auto f = [&](const Lattice& a) { return test_filter(g, nb, a); };
  const Lattice fu = f(uc);
  const Lattice fv = f(vc);
  const Lattice fuu = f(product(uc, uc));
  const Lattice fvv = f(product(vc, vc));
  const Lattice fuv = f(product(uc, vc));
  const Lattice fs11 = f(s.s11);
  const Lattice fs22 = f(s.s22);
  const Lattice fs12 = f(s12c);
  const Lattice fms11 = f(product(mag, s.s11));
  const Lattice fms22 = f(product(mag, s.s22));
  const Lattice fms12 = f(product(mag, s12c));

  Lattice lm(g.nx, g.ny, Stagger::kCenter);
  Lattice mm(g.nx, g.ny, Stagger::kCenter);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double l11 = fuu[k] - fu[k] * fu[k];
    const double l22 = fvv[k] - fv[k] * fv[k];
    const double l12 = fuv[k] - fu[k] * fv[k];
    const double ld11 = 0.5 * (l11 - l22);
    const double ld22 = -ld11;
    const double fmag = std::sqrt(
        2.0 * (fs11[k] * fs11[k] + fs22[k] * fs22[k] + 2.0 * fs12[k] * fs12[k]));
    const double m11 = 2.0 * delta2 * (fms11[k] - kRatio2 * fmag * fs11[k]);
    const double m22 = 2.0 * delta2 * (fms22[k] - kRatio2 * fmag * fs22[k]);
    const double m12 = 2.0 * delta2 * (fms12[k] - kRatio2 * fmag * fs12[k]);
    lm[k] = ld11 * m11 + ld22 * m22 + 2.0 * l12 * m12;
    mm[k] = m11 * m11 + m22 * m22 + 2.0 * m12 * m12;
  }
  const Lattice lm_avg = f(lm);
  const Lattice mm_avg = f(mm);
  Lattice c(g.nx, g.ny, Stagger::kCenter);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double ratio = mm_avg[k] > 1e-300 ? lm_avg[k] / mm_avg[k] : 0.0;
    c[k] = ratio > 0.0 ? ratio : 0.0;
  }
  return c;
}

StaggeredVelocity dynamic_smagorinsky_closure(const StaggeredVelocity& vel) {
  const Grid& g = vel.grid;
  const double delta2 = g.hx() * g.hy();
  const Lattice c = dynamic_smagorinsky_coefficient(vel);
  Lattice nu = strain_magnitude(strain_rate(vel));
  for (std::size_t k = 0; k < g.size(); ++k) nu[k] *= 2.0 * c[k] * delta2;
  return eddy_viscosity_closure(vel, nu);
}

std::vector<double> zero_sum_reparam(std::span<const double> raw, int radius) {
  const std::size_t block = static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1);
  require(radius >= 0 && raw.size() % block == 0, ErrorCode::kShapeMismatch,
          "zero_sum_reparam: size is not a multiple of the kernel size");
  std::vector<double> out(raw.begin(), raw.end());
  for (std::size_t b = 0; b < raw.size(); b += block) {
    double mean = 0.0;
    for (std::size_t k = 0; k < block; ++k) mean += raw[b + k];
    mean /= static_cast<double>(block);
    for (std::size_t k = 0; k < block; ++k) out[b + k] = raw[b + k] - mean;
  }
  return out;
}

StaggeredVelocity clip_to_eddy_viscosity(const StaggeredVelocity& vel, const StaggeredVelocity& raw,
                                         Lattice* nu_out) {
  require_same_grid(vel, raw, "clip_to_eddy_viscosity");
  const Grid& g = vel.grid;
  const StaggeredVelocity d = tensor_divergence(g, strain_rate(vel));
  Lattice nu(g.nx, g.ny, Stagger::kCenter);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double dd = d.u[k] * d.u[k] + d.v[k] * d.v[k];
    if (!(dd > 0.0)) continue;
    const double value = (raw.u[k] * d.u[k] + raw.v[k] * d.v[k]) / dd;
    nu[k] = value > 0.0 ? value : 0.0;
  }
  StaggeredVelocity out = eddy_viscosity_closure(vel, nu);
  if (nu_out) *nu_out = std::move(nu);
  return out;
}

Channels closure_network_input(const StaggeredVelocity& vel, const StaggeredVelocity& resolved) {
  require_same_grid(vel, resolved, "closure_network_input");
  const Grid& g = vel.grid;
  Channels in(g.nx, g.ny, kClosureInputChannels);
  std::copy(vel.u.values().begin(), vel.u.values().end(), in.channel(0));
  std::copy(vel.v.values().begin(), vel.v.values().end(), in.channel(1));
  std::copy(resolved.u.values().begin(), resolved.u.values().end(), in.channel(2));
  std::copy(resolved.v.values().begin(), resolved.v.values().end(), in.channel(3));
  return in;
}

namespace {

Channels as_channels(const StaggeredVelocity& x) {
  Channels c(x.grid.nx, x.grid.ny, 2);
  std::copy(x.u.values().begin(), x.u.values().end(), c.channel(0));
  std::copy(x.v.values().begin(), x.v.values().end(), c.channel(1));
  return c;
}

StaggeredVelocity as_velocity(const Grid& g, const Channels& c, int first = 0) {
  StaggeredVelocity out(g);
  const std::size_t n = g.size();
  std::copy(c.channel(first), c.channel(first) + n, out.u.values().begin());
  std::copy(c.channel(first + 1), c.channel(first + 1) + n, out.v.values().begin());
  return out;
}

Channels hadamard(const Channels& a, const Channels& b, int b_first = 0) {
  Channels out(a.nx, a.ny, a.nc);
  const std::size_t n = a.plane();
  for (int c = 0; c < a.nc; ++c) {
    const double* pa = a.channel(c);
    const double* pb = b.channel(b_first + c);
    double* po = out.channel(c);
    for (std::size_t k = 0; k < n; ++k) po[k] = pa[k] * pb[k];
  }
  return out;
}

// Intermediates of the SKEW closure for x = (u, v):
//   y_i = B_i x, out = B1^T(k y2) - B2^T(k y1) - B3^T(q^2 y3).
struct SkewState {
  std::vector<double> b1, b2, b3;  // zero-sum kernels
  Channels x, y1, y2, y3;
  Channels k, q;                   // network outputs split in two
  Channels k_path, q_path;
  double q_norm2 = 0.0;
  CnnCache cache;
};

void skew_operator(SkewState& st, bool with_k, bool with_q) {
  const int nx = st.x.nx;
  const int ny = st.x.ny;
  st.k_path = Channels(nx, ny, 2);
  st.q_path = Channels(nx, ny, 2);
  st.q_norm2 = 0.0;
  if (with_k) {
    st.y1 = conv2d_periodic(st.x, st.b1, {}, 2, kSkewBRadius);
    st.y2 = conv2d_periodic(st.x, st.b2, {}, 2, kSkewBRadius);
    const Channels a = conv2d_periodic_transpose(hadamard(st.k, st.y2), st.b1, 2, kSkewBRadius);
    const Channels b = conv2d_periodic_transpose(hadamard(st.k, st.y1), st.b2, 2, kSkewBRadius);
    for (std::size_t n = 0; n < a.data.size(); ++n) st.k_path.data[n] = a.data[n] - b.data[n];
  }
  if (with_q) {
    st.y3 = conv2d_periodic(st.x, st.b3, {}, 2, kSkewBRadius);
    const Channels qy = hadamard(st.q, st.y3);  // Q x
    for (double v : qy.data) st.q_norm2 += v * v;
    const Channels c = conv2d_periodic_transpose(hadamard(st.q, qy), st.b3, 2, kSkewBRadius);
    for (std::size_t n = 0; n < c.data.size(); ++n) st.q_path.data[n] = -c.data[n];
  }
}

void skew_kernels(const ClosureModel& model, SkewState& st) {
  const std::size_t net = model.spec.param_count();
  const auto params = std::span<const double>(model.params);
  st.b1 = zero_sum_reparam(params.subspan(net, kSkewBKernelSize), kSkewBRadius);
  st.b2 = zero_sum_reparam(params.subspan(net + kSkewBKernelSize, kSkewBKernelSize), kSkewBRadius);
  st.b3 = zero_sum_reparam(params.subspan(net + 2 * kSkewBKernelSize, kSkewBKernelSize), kSkewBRadius);
}

void split_skew_outputs(const Channels& out, SkewState& st) {
  st.k = Channels(out.nx, out.ny, 2);
  st.q = Channels(out.nx, out.ny, 2);
  std::copy(out.channel(0), out.channel(2), st.k.data.begin());
  std::copy(out.channel(2), out.channel(4), st.q.data.begin());
}

SkewState skew_forward(const ClosureModel& model, const StaggeredVelocity& vel,
                       const StaggeredVelocity& resolved, bool keep_cache) {
  SkewState st;
  skew_kernels(model, st);
  const Channels out = forward_cnn(model.spec, model.network_params(),
                                   closure_network_input(vel, resolved),
                                   keep_cache ? &st.cache : nullptr);
  split_skew_outputs(out, st);
  st.x = as_channels(vel);
  skew_operator(st, model.use_k, model.use_q);
  return st;
}

void check_network_model(const ClosureModel& model, const Grid& g) {
  model.validate();
  require(g.nx >= 1 && g.ny >= 1, ErrorCode::kShapeMismatch, "closure: empty grid");
}

void add_channels_to(StaggeredVelocity& dst, const Channels& c, int first) {
  const std::size_t n = dst.grid.size();
  const double* pu = c.channel(first);
  const double* pv = c.channel(first + 1);
  for (std::size_t k = 0; k < n; ++k) {
    dst.u[k] += pu[k];
    dst.v[k] += pv[k];
  }
}

}  // namespace

StaggeredVelocity skew_b_apply(std::span<const double> raw, const StaggeredVelocity& x) {
  require(raw.size() == kSkewBKernelSize, ErrorCode::kShapeMismatch, "skew_b_apply: kernel size");
  const auto b = zero_sum_reparam(raw, kSkewBRadius);
  return as_velocity(x.grid, conv2d_periodic(as_channels(x), b, {}, 2, kSkewBRadius));
}

StaggeredVelocity skew_b_apply_transpose(std::span<const double> raw, const StaggeredVelocity& x) {
  require(raw.size() == kSkewBKernelSize, ErrorCode::kShapeMismatch,
          "skew_b_apply_transpose: kernel size");
  const auto b = zero_sum_reparam(raw, kSkewBRadius);
  return as_velocity(x.grid, conv2d_periodic_transpose(as_channels(x), b, 2, kSkewBRadius));
}

StaggeredVelocity apply_closure(const ClosureModel& model, const StaggeredVelocity& vel,
                                const StaggeredVelocity& resolved) {
  const Grid& g = vel.grid;
  switch (model.kind) {
    case ClosureKind::kNone: return StaggeredVelocity(g);
    case ClosureKind::kSmagorinsky: return smagorinsky_closure(vel, model.cs);
    case ClosureKind::kDynamicSmagorinsky: return dynamic_smagorinsky_closure(vel);
    case ClosureKind::kCnn:
    case ClosureKind::kCnnClipped: {
      check_network_model(model, g);
      const Channels out =
          forward_cnn(model.spec, model.network_params(), closure_network_input(vel, resolved));
      StaggeredVelocity raw = as_velocity(g, out);
      if (model.kind == ClosureKind::kCnn) return raw;
      return clip_to_eddy_viscosity(vel, raw);
    }
    case ClosureKind::kDiv: {
      check_network_model(model, g);
      const Channels out =
          forward_cnn(model.spec, model.network_params(), closure_network_input(vel, resolved));
      StrainTensorField tau{Lattice(g.nx, g.ny, Stagger::kCenter),
                            Lattice(g.nx, g.ny, Stagger::kCenter),
                            Lattice(g.nx, g.ny, Stagger::kCorner)};
      const std::size_t n = g.size();
      std::copy(out.channel(0), out.channel(0) + n, tau.s11.values().begin());
      std::copy(out.channel(1), out.channel(1) + n, tau.s22.values().begin());
      std::copy(out.channel(2), out.channel(2) + n, tau.s12.values().begin());
      return tensor_divergence(g, tau);
    }
    case ClosureKind::kSkew: {
      check_network_model(model, g);
      const SkewState st = skew_forward(model, vel, resolved, false);
      StaggeredVelocity out = as_velocity(g, st.k_path);
      add_channels_to(out, st.q_path, 0);
      return out;
    }
  }
  fail(ErrorCode::kInternal, "apply_closure: unhandled closure kind");
}

StaggeredVelocity apply_closure(const ClosureModel& model, const StaggeredVelocity& vel, double nu,
                                const ForcingSpec& forcing, double t) {
  if (!closure_has_network(model.kind)) return apply_closure(model, vel, vel);
  return apply_closure(model, vel, tendency(vel, nu, forcing, t));
}

void closure_vjp(const ClosureModel& model, const StaggeredVelocity& vel,
                 const StaggeredVelocity& resolved, const StaggeredVelocity& adj_closure,
                 StaggeredVelocity& adj_vel, StaggeredVelocity& adj_resolved,
                 std::span<double> grad_params) {
  const Grid& g = vel.grid;
  require(grad_params.size() == model.params.size(), ErrorCode::kShapeMismatch,
          "closure_vjp: gradient buffer does not match parameters");
  if (model.kind == ClosureKind::kNone) return;
  require(model.kind == ClosureKind::kCnn || model.kind == ClosureKind::kDiv ||
              model.kind == ClosureKind::kSkew,
          ErrorCode::kInvalidArgument,
          std::string("closure_vjp: variant ") + closure_name(model.kind) + " is not trainable");
  check_network_model(model, g);
  const std::size_t net = model.spec.param_count();
  const auto params = std::span<const double>(model.params);
  const Channels input = closure_network_input(vel, resolved);

  Channels adj_out(g.nx, g.ny, model.spec.out_channels());
  CnnCache cache;
  if (model.kind == ClosureKind::kCnn) {
    forward_cnn(model.spec, params.first(net), input, &cache);
    const Channels a = as_channels(adj_closure);
    std::copy(a.data.begin(), a.data.end(), adj_out.data.begin());
  } else if (model.kind == ClosureKind::kDiv) {
    forward_cnn(model.spec, params.first(net), input, &cache);
    // <g, div(tau)> = -sum(tau11 S11(g) + tau22 S22(g) + 2 tau12 S12(g))
    const StrainTensorField sg = strain_rate(adj_closure);
    const std::size_t n = g.size();
    for (std::size_t k = 0; k < n; ++k) {
      adj_out.channel(0)[k] = -sg.s11[k];
      adj_out.channel(1)[k] = -sg.s22[k];
      adj_out.channel(2)[k] = -2.0 * sg.s12[k];
    }
  } else {
    SkewState st = skew_forward(model, vel, resolved, true);
    cache = std::move(st.cache);
    const Channels gc = as_channels(adj_closure);
    const auto grad_b1 = grad_params.subspan(net, kSkewBKernelSize);
    const auto grad_b2 = grad_params.subspan(net + kSkewBKernelSize, kSkewBKernelSize);
    const auto grad_b3 = grad_params.subspan(net + 2 * kSkewBKernelSize, kSkewBKernelSize);
    std::vector<double> gb1(kSkewBKernelSize, 0.0), gb2(kSkewBKernelSize, 0.0),
        gb3(kSkewBKernelSize, 0.0);
    Channels dx(g.nx, g.ny, 2);
    Channels dk(g.nx, g.ny, 2);
    Channels dq(g.nx, g.ny, 2);
    const std::size_t n2 = dx.data.size();
    if (model.use_k) {
      // <g, B1^T(k y2)> = <B1 g, k y2>,  <g, B2^T(k y1)> = <B2 g, k y1>
      const Channels g1 = conv2d_periodic(gc, st.b1, {}, 2, kSkewBRadius);
      const Channels g2 = conv2d_periodic(gc, st.b2, {}, 2, kSkewBRadius);
      Channels dy1(g.nx, g.ny, 2), dy2(g.nx, g.ny, 2);
      for (std::size_t n = 0; n < n2; ++n) {
        dk.data[n] += g1.data[n] * st.y2.data[n] - g2.data[n] * st.y1.data[n];
        dy2.data[n] = st.k.data[n] * g1.data[n];
        dy1.data[n] = -st.k.data[n] * g2.data[n];
      }
      conv2d_periodic_weight_grad(gc, hadamard(st.k, st.y2), kSkewBRadius, gb1, {});
      Channels neg_ky1 = hadamard(st.k, st.y1);
      for (double& v : neg_ky1.data) v = -v;
      conv2d_periodic_weight_grad(gc, neg_ky1, kSkewBRadius, gb2, {});
      conv2d_periodic_weight_grad(st.x, dy1, kSkewBRadius, gb1, {});
      conv2d_periodic_weight_grad(st.x, dy2, kSkewBRadius, gb2, {});
      const Channels t1 = conv2d_periodic_transpose(dy1, st.b1, 2, kSkewBRadius);
      const Channels t2 = conv2d_periodic_transpose(dy2, st.b2, 2, kSkewBRadius);
      for (std::size_t n = 0; n < n2; ++n) dx.data[n] += t1.data[n] + t2.data[n];
    }
    if (model.use_q) {
      // -<g, B3^T(q^2 y3)> = -<B3 g, q^2 y3>
      const Channels g3 = conv2d_periodic(gc, st.b3, {}, 2, kSkewBRadius);
      Channels dy3(g.nx, g.ny, 2);
      Channels neg_qqy(g.nx, g.ny, 2);
      for (std::size_t n = 0; n < n2; ++n) {
        const double q = st.q.data[n];
        dq.data[n] = -2.0 * q * g3.data[n] * st.y3.data[n];
        dy3.data[n] = -q * q * g3.data[n];
        neg_qqy.data[n] = -q * q * st.y3.data[n];
      }
      conv2d_periodic_weight_grad(gc, neg_qqy, kSkewBRadius, gb3, {});
      conv2d_periodic_weight_grad(st.x, dy3, kSkewBRadius, gb3, {});
      const Channels t3 = conv2d_periodic_transpose(dy3, st.b3, 2, kSkewBRadius);
      for (std::size_t n = 0; n < n2; ++n) dx.data[n] += t3.data[n];
    }
    // Gradient with respect to the raw weights: remove the block mean.
    const auto project_out_mean = [](const std::vector<double>& gb, std::span<double> dst) {
      const auto p = zero_sum_reparam(gb, kSkewBRadius);
      for (std::size_t k = 0; k < p.size(); ++k) dst[k] += p[k];
    };
    project_out_mean(gb1, grad_b1);
    project_out_mean(gb2, grad_b2);
    project_out_mean(gb3, grad_b3);
    add_channels_to(adj_vel, dx, 0);
    std::copy(dk.data.begin(), dk.data.end(), adj_out.channel(0));
    std::copy(dq.data.begin(), dq.data.end(), adj_out.channel(2));
  }
  const Channels adj_in =
      backward_cnn(model.spec, params.first(net), cache, adj_out, grad_params.first(net));
  add_channels_to(adj_vel, adj_in, 0);
  add_channels_to(adj_resolved, adj_in, 2);
}

double closure_energy(const StaggeredVelocity& vel, const StaggeredVelocity& c) {
  require_same_grid(vel, c, "closure_energy");
  return vel.grid.cell_volume() * dot(vel, c);
}

Momentum closure_momentum(const StaggeredVelocity& c) {
  const double vol = c.grid.cell_volume();
  return {vol * sum(c.u), vol * sum(c.v)};
}

SkewParts skew_parts(const ClosureModel& model, const StaggeredVelocity& vel,
                     const StaggeredVelocity& resolved) {
  require(model.kind == ClosureKind::kSkew, ErrorCode::kInvalidArgument,
          "skew_parts: model is not SKEW");
  check_network_model(model, vel.grid);
  const SkewState st = skew_forward(model, vel, resolved, false);
  SkewParts parts{as_velocity(vel.grid, st.k_path), as_velocity(vel.grid, st.q_path), st.q_norm2};
  return parts;
}

SkewFields skew_fields(const ClosureModel& model, const StaggeredVelocity& vel,
                       const StaggeredVelocity& resolved) {
  require(model.kind == ClosureKind::kSkew, ErrorCode::kInvalidArgument,
          "skew_fields: model is not SKEW");
  check_network_model(model, vel.grid);
  SkewState st;
  split_skew_outputs(
      forward_cnn(model.spec, model.network_params(), closure_network_input(vel, resolved)), st);
  return {std::move(st.k), std::move(st.q)};
}

StaggeredVelocity skew_apply_frozen(const ClosureModel& model, const SkewFields& fields,
                                    const StaggeredVelocity& x, bool with_k, bool with_q) {
  require(model.kind == ClosureKind::kSkew, ErrorCode::kInvalidArgument,
          "skew_apply_frozen: model is not SKEW");
  check_network_model(model, x.grid);
  require(fields.k.nx == x.grid.nx && fields.k.ny == x.grid.ny && fields.k.nc == 2 &&
              fields.q.nx == x.grid.nx && fields.q.ny == x.grid.ny && fields.q.nc == 2,
          ErrorCode::kShapeMismatch, "skew_apply_frozen: fields do not match grid");
  SkewState st;
  skew_kernels(model, st);
  st.k = fields.k;
  st.q = fields.q;
  st.x = as_channels(x);
  skew_operator(st, with_k, with_q);
  StaggeredVelocity out = as_velocity(x.grid, st.k_path);
  add_channels_to(out, st.q_path, 0);
  return out;
}

bool SkewStencil1dReport::passed(double tol) const {
  return momentum_residual <= tol && energy_residual <= tol && stencil_residual <= tol &&
         advection_residual <= tol && diffusion_residual <= tol;
}

SkewStencil1dReport skew_stencil_1d_check(int n, std::uint64_t seed) {
  require(n >= 5, ErrorCode::kInvalidArgument, "skew_stencil_1d_check: need at least 5 points");
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const double h = 2.0 * std::numbers::pi / n;
  MatrixXd dc = MatrixXd::Zero(n, n);
  MatrixXd df = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    dc(i, (i + 1) % n) += 1.0;
    dc(i, (i + n - 1) % n) -= 1.0;
    df(i, (i + 1) % n) += 1.0;
    df(i, i) -= 1.0;
  }
  const auto y_matrix = [&](const VectorXd& k) -> MatrixXd {
    return dc * k.asDiagonal() * df - df.transpose() * k.asDiagonal() * dc.transpose();
  };

  SkewStencil1dReport r;
  CounterRng rng(seed);
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd k(n), w(n);
    for (int i = 0; i < n; ++i) {
      k(i) = rng.uniform(-1.0, 1.0);
      w(i) = rng.uniform(-1.0, 1.0);
    }
    const VectorXd yw = y_matrix(k) * w;
    r.momentum_residual = std::max(r.momentum_residual, std::abs(yw.sum()) / w.norm());
    r.energy_residual = std::max(r.energy_residual, std::abs(w.dot(yw)) / w.squaredNorm());
  }

  // Uniform k against the expanded stencil
  // (Y w)_i = k_{i+1}(w_{i+2} - w_{i+1}) + k_i(w_{i-1} - w_{i+1}) + k_{i-1}(w_{i-1} - w_{i-2}).
  {
    VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = std::sin((i + 0.5) * h);
    const VectorXd k = VectorXd::Constant(n, 1.0 / (2.0 * h));
    const VectorXd yw = y_matrix(k) * w;
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto at = [&](int m) { return w(((m % n) + n) % n); };
      const double expected = k(i) * (at(i + 2) - at(i + 1)) + k(i) * (at(i - 1) - at(i + 1)) +
                              k(i) * (at(i - 1) - at(i - 2));
      err = std::max(err, std::abs(yw(i) - expected));
    }
    r.stencil_residual = err / yw.cwiseAbs().maxCoeff();
  }

  // A single active k_i = 1/(2h) gives minus the central first derivative at i.
  {
    VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = rng.uniform(-1.0, 1.0);
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      VectorXd k = VectorXd::Zero(n);
      k(i) = 1.0 / (2.0 * h);
      const double yi = (y_matrix(k) * w)(i);
      const double expected = -(w((i + 1) % n) - w((i + n - 1) % n)) / (2.0 * h);
      err = std::max(err, std::abs(yi - expected) / (std::abs(expected) + 1.0 / h));
    }
    r.advection_residual = err;
  }

  // q = 1/h: Z w is the second difference.
  {
    VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = rng.uniform(-1.0, 1.0);
    const VectorXd q = VectorXd::Constant(n, 1.0 / h);
    const MatrixXd z = -df.transpose() * q.cwiseProduct(q).asDiagonal() * df;
    const VectorXd zw = z * w;
    double err = 0.0;
    double scale = 0.0;
    for (int i = 0; i < n; ++i) {
      const double expected = (w((i + 1) % n) - 2.0 * w(i) + w((i + n - 1) % n)) / (h * h);
      err = std::max(err, std::abs(zw(i) - expected));
      scale = std::max(scale, std::abs(expected));
    }
    r.diffusion_residual = err / scale;
  }
  return r;
}

}  // namespace les
