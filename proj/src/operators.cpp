#include "les/operators.hpp"

#include <cmath>

#include "stencil.hpp"

namespace les {

using detail::Neighbours;

Lattice divergence(const StaggeredVelocity& vel) {
  const Grid& g = vel.grid;
  const Neighbours nb(g);
  const double ihx = 1.0 / g.hx();
  const double ihy = 1.0 / g.hy();
  Lattice div(g.nx, g.ny, Stagger::kCenter);
  for (int j = 0; j < g.ny; ++j) {
    const int jm = nb.ym[j];
    for (int i = 0; i < g.nx; ++i) {
      div(i, j) = (vel.u(i, j) - vel.u(nb.xm[i], j)) * ihx + (vel.v(i, j) - vel.v(i, jm)) * ihy;
    }
  }
  return div;
}

StaggeredVelocity gradient(const Grid& g, const Lattice& p) {
  require(p.nx() == g.nx && p.ny() == g.ny, ErrorCode::kDimensionMismatch,
          "gradient: pressure lattice does not match grid");
  const Neighbours nb(g);
  const double ihx = 1.0 / g.hx();
  const double ihy = 1.0 / g.hy();
  StaggeredVelocity out(g);
  for (int j = 0; j < g.ny; ++j) {
    const int jp = nb.yp[j];
    for (int i = 0; i < g.nx; ++i) {
      out.u(i, j) = (p(nb.xp[i], j) - p(i, j)) * ihx;
      out.v(i, j) = (p(i, jp) - p(i, j)) * ihy;
    }
  }
  return out;
}

// Flux layout:
//   fxx(i, j): (u-bar^x)^2 at centre (i, j), u-bar^x = (u(i-1,j) + u(i,j))/2
//   fyy(i, j): (v-bar^y)^2 at centre (i, j)
//   fxy(i, j): (u-bar^y)(v-bar^x) at corner (i+1/2, j+1/2)
StaggeredVelocity convection(const StaggeredVelocity& vel) {
  const Grid& g = vel.grid;
  const Neighbours nb(g);
  const double ihx = 1.0 / g.hx();
  const double ihy = 1.0 / g.hy();
  Lattice fxx(g.nx, g.ny, Stagger::kCenter);
  Lattice fyy(g.nx, g.ny, Stagger::kCenter);
  Lattice fxy(g.nx, g.ny, Stagger::kCorner);
  for (int j = 0; j < g.ny; ++j) {
    const int jm = nb.ym[j];
    const int jp = nb.yp[j];
    for (int i = 0; i < g.nx; ++i) {
      const int im = nb.xm[i];
      const int ip = nb.xp[i];
      const double uc = 0.5 * (vel.u(im, j) + vel.u(i, j));
      const double vc = 0.5 * (vel.v(i, jm) + vel.v(i, j));
      fxx(i, j) = uc * uc;
      fyy(i, j) = vc * vc;
      const double uk = 0.5 * (vel.u(i, j) + vel.u(i, jp));
      const double vk = 0.5 * (vel.v(i, j) + vel.v(ip, j));
      fxy(i, j) = uk * vk;
    }
  }
  StaggeredVelocity out(g);
  for (int j = 0; j < g.ny; ++j) {
    const int jm = nb.ym[j];
    const int jp = nb.yp[j];
    for (int i = 0; i < g.nx; ++i) {
      const int im = nb.xm[i];
      const int ip = nb.xp[i];
      out.u(i, j) = (fxx(ip, j) - fxx(i, j)) * ihx + (fxy(i, j) - fxy(i, jm)) * ihy;
      out.v(i, j) = (fxy(i, j) - fxy(im, j)) * ihx + (fyy(i, jp) - fyy(i, j)) * ihy;
    }
  }
  return out;
}

StaggeredVelocity convection_vjp(const StaggeredVelocity& vel, const StaggeredVelocity& adj) {
  require_same_grid(vel, adj, "convection_vjp");
  const Grid& g = vel.grid;
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
      // <adj, conv> = sum_c fxx(c) gxx(c) + sum_c fyy(c) gyy(c) + sum_k fxy(k) gxy(k)
      const double gxx = (adj.u(im, j) - adj.u(i, j)) * ihx;
      const double gyy = (adj.v(i, jm) - adj.v(i, j)) * ihy;
      const double gxy = (adj.u(i, j) - adj.u(i, jp)) * ihy + (adj.v(i, j) - adj.v(ip, j)) * ihx;

      const double uc = 0.5 * (vel.u(im, j) + vel.u(i, j));
      out.u(im, j) += gxx * uc;
      out.u(i, j) += gxx * uc;

      const double vc = 0.5 * (vel.v(i, jm) + vel.v(i, j));
      out.v(i, jm) += gyy * vc;
      out.v(i, j) += gyy * vc;

      const double uk = 0.5 * (vel.u(i, j) + vel.u(i, jp));
      const double vk = 0.5 * (vel.v(i, j) + vel.v(ip, j));
      out.u(i, j) += 0.5 * gxy * vk;
      out.u(i, jp) += 0.5 * gxy * vk;
      out.v(i, j) += 0.5 * gxy * uk;
      out.v(ip, j) += 0.5 * gxy * uk;
    }
  }
  return out;
}

namespace {

void laplacian_into(const Grid& g, const Neighbours& nb, const Lattice& in, double scale,
                    Lattice& out) {
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  for (int j = 0; j < g.ny; ++j) {
    const int jm = nb.ym[j];
    const int jp = nb.yp[j];
    for (int i = 0; i < g.nx; ++i) {
      const double c = in(i, j);
      out(i, j) = scale * ((in(nb.xp[i], j) - 2.0 * c + in(nb.xm[i], j)) * ihx2 +
                           (in(i, jp) - 2.0 * c + in(i, jm)) * ihy2);
    }
  }
}

}  // namespace

StaggeredVelocity diffusion(const StaggeredVelocity& vel, double nu) {
  require(nu >= 0.0, ErrorCode::kInvalidArgument, "diffusion: viscosity must be >= 0");
  const Grid& g = vel.grid;
  const Neighbours nb(g);
  StaggeredVelocity out(g);
  laplacian_into(g, nb, vel.u, nu, out.u);
  laplacian_into(g, nb, vel.v, nu, out.v);
  return out;
}

double ForwardDifferences::squared_norm() const {
  return dot(dxu, dxu) + dot(dyu, dyu) + dot(dxv, dxv) + dot(dyv, dyv);
}

ForwardDifferences forward_differences(const StaggeredVelocity& vel) {
  const Grid& g = vel.grid;
  const Neighbours nb(g);
  const double ihx = 1.0 / g.hx();
  const double ihy = 1.0 / g.hy();
  ForwardDifferences q{Lattice(g.nx, g.ny, Stagger::kCenter), Lattice(g.nx, g.ny, Stagger::kCorner),
                       Lattice(g.nx, g.ny, Stagger::kCorner), Lattice(g.nx, g.ny, Stagger::kCenter)};
  for (int j = 0; j < g.ny; ++j) {
    const int jp = nb.yp[j];
    for (int i = 0; i < g.nx; ++i) {
      const int ip = nb.xp[i];
      q.dxu(i, j) = (vel.u(ip, j) - vel.u(i, j)) * ihx;
      q.dyu(i, j) = (vel.u(i, jp) - vel.u(i, j)) * ihy;
      q.dxv(i, j) = (vel.v(ip, j) - vel.v(i, j)) * ihx;
      q.dyv(i, j) = (vel.v(i, jp) - vel.v(i, j)) * ihy;
    }
  }
  return q;
}

StaggeredVelocity forcing(const StaggeredVelocity& vel, const ForcingSpec& f, double /*t*/) {
  const Grid& g = vel.grid;
  StaggeredVelocity out(g);
  if (f.kind == ForcingKind::kNone) return out;
  const double k = ForcingSpec::kKolmogorovWavenumber;
  const double drag = ForcingSpec::kKolmogorovDrag;
  for (int j = 0; j < g.ny; ++j) {
    // u(i, j) lives at height y_center(j).
    const double s = std::sin(k * g.y_center(j));
    for (int i = 0; i < g.nx; ++i) {
      out.u(i, j) = s - drag * vel.u(i, j);
      out.v(i, j) = -drag * vel.v(i, j);
    }
  }
  return out;
}

StaggeredVelocity tendency(const StaggeredVelocity& vel, double nu, const ForcingSpec& f, double t) {
  StaggeredVelocity out = diffusion(vel, nu);
  const StaggeredVelocity c = convection(vel);
  axpy(-1.0, c, out);
  if (f.kind != ForcingKind::kNone) axpy(1.0, forcing(vel, f, t), out);
  return out;
}

StaggeredVelocity tendency_vjp(const StaggeredVelocity& vel, double nu, const ForcingSpec& f,
                               const StaggeredVelocity& adj) {
  // The Laplacian is symmetric, forcing is affine with a scalar drag.
  StaggeredVelocity out = diffusion(adj, nu);
  axpy(-1.0, convection_vjp(vel, adj), out);
  if (f.kind == ForcingKind::kKolmogorov) axpy(-ForcingSpec::kKolmogorovDrag, adj, out);
  return out;
}

StaggeredVelocity rhs_m(const StaggeredVelocity& vel, double nu, const ForcingSpec& f, double t) {
  return scaled(tendency(vel, nu, f, t), vel.grid.cell_volume());
}

Momentum momentum(const StaggeredVelocity& vel) {
  const double vol = vel.grid.cell_volume();
  return {vol * sum(vel.u), vol * sum(vel.v)};
}

double kinetic_energy(const StaggeredVelocity& vel) {
  return 0.5 * vel.grid.cell_volume() * (dot(vel.u, vel.u) + dot(vel.v, vel.v));
}

Lattice vorticity(const StaggeredVelocity& vel) {
  const Grid& g = vel.grid;
  const Neighbours nb(g);
  const double ihx = 1.0 / g.hx();
  const double ihy = 1.0 / g.hy();
  Lattice w(g.nx, g.ny, Stagger::kCorner);
  for (int j = 0; j < g.ny; ++j) {
    const int jp = nb.yp[j];
    for (int i = 0; i < g.nx; ++i) {
      w(i, j) = (vel.v(nb.xp[i], j) - vel.v(i, j)) * ihx - (vel.u(i, jp) - vel.u(i, j)) * ihy;
    }
  }
  return w;
}

Lattice vorticity_at_centers(const StaggeredVelocity& vel) {
  const Grid& g = vel.grid;
  const Neighbours nb(g);
  const Lattice w = vorticity(vel);
  Lattice c(g.nx, g.ny, Stagger::kCenter);
  for (int j = 0; j < g.ny; ++j) {
    const int jm = nb.ym[j];
    for (int i = 0; i < g.nx; ++i) {
      const int im = nb.xm[i];
      c(i, j) = 0.25 * (w(i, j) + w(im, j) + w(i, jm) + w(im, jm));
    }
  }
  return c;
}

}  // namespace les
