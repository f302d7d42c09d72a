#include "les/grid.hpp"

#include <algorithm>
#include <numbers>
#include <string>

namespace les {

Grid::Grid(int nx_, int ny_, double lx_, double ly_, double x0_, double y0_)
    : nx(nx_), ny(ny_), lx(lx_), ly(ly_), x0(x0_), y0(y0_) {
  require(nx >= 4 && ny >= 4, ErrorCode::kInvalidArgument,
          "grid needs at least 4 cells per direction, got " + std::to_string(nx) + "x" +
              std::to_string(ny));
  require(lx > 0.0 && ly > 0.0 && std::isfinite(lx) && std::isfinite(ly),
          ErrorCode::kInvalidArgument, "grid lengths must be positive");
}

Grid Grid::periodic_square(int n) {
  constexpr double pi = std::numbers::pi;
  return Grid(n, n, 2.0 * pi, 2.0 * pi, -pi, -pi);
}

bool StaggeredVelocity::all_finite() const {
  auto finite = [](double x) { return std::isfinite(x); };
  return std::all_of(u.values().begin(), u.values().end(), finite) &&
         std::all_of(v.values().begin(), v.values().end(), finite);
}

double StaggeredVelocity::max_abs() const {
  double m = 0.0;
  for (double x : u.values()) m = std::max(m, std::abs(x));
  for (double x : v.values()) m = std::max(m, std::abs(x));
  return m;
}

void require_same_grid(const StaggeredVelocity& a, const StaggeredVelocity& b, const char* where) {
  require(a.grid == b.grid && a.u.same_shape(b.u) && a.v.same_shape(b.v),
          ErrorCode::kDimensionMismatch, std::string(where) + ": grid mismatch");
}

void axpy(double a, const StaggeredVelocity& x, StaggeredVelocity& y) {
  require_same_grid(x, y, "axpy");
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < n; ++k) {
    y.u[k] += a * x.u[k];
    y.v[k] += a * x.v[k];
  }
}

StaggeredVelocity scaled(const StaggeredVelocity& x, double a) {
  StaggeredVelocity out = x;
  for (double& e : out.u.values()) e *= a;
  for (double& e : out.v.values()) e *= a;
  return out;
}

StaggeredVelocity operator+(const StaggeredVelocity& a, const StaggeredVelocity& b) {
  StaggeredVelocity out = a;
  axpy(1.0, b, out);
  return out;
}

StaggeredVelocity operator-(const StaggeredVelocity& a, const StaggeredVelocity& b) {
  StaggeredVelocity out = a;
  axpy(-1.0, b, out);
  return out;
}

double dot(const Lattice& a, const Lattice& b) {
  require(a.same_shape(b), ErrorCode::kDimensionMismatch, "dot: lattice shape mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double dot(const StaggeredVelocity& a, const StaggeredVelocity& b) {
  require_same_grid(a, b, "dot");
  return dot(a.u, b.u) + dot(a.v, b.v);
}

double norm2(const StaggeredVelocity& a) { return std::sqrt(dot(a, a)); }

double sum(const Lattice& a) {
  double s = 0.0;
  for (double x : a.values()) s += x;
  return s;
}

Lattice shifted(const Lattice& in, int a, int b) {
  Lattice out(in.nx(), in.ny(), in.stagger());
  const int nx = in.nx();
  const int ny = in.ny();
  for (int j = 0; j < ny; ++j) {
    const int jj = ((j + b) % ny + ny) % ny;
    for (int i = 0; i < nx; ++i) {
      const int ii = ((i + a) % nx + nx) % nx;
      out(ii, jj) = in(i, j);
    }
  }
  return out;
}

StaggeredVelocity shifted(const StaggeredVelocity& in, int a, int b) {
  StaggeredVelocity out(in.grid);
  out.u = shifted(in.u, a, b);
  out.v = shifted(in.v, a, b);
  return out;
}

}  // namespace les
