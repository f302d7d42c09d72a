#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "les/error.hpp"

namespace les {

/// Uniform, doubly periodic grid. Cell (i, j) spans
/// [x0 + i*hx, x0 + (i+1)*hx] x [y0 + j*hy, y0 + (j+1)*hy].
struct Grid {
  int nx = 0;
  int ny = 0;
  double lx = 0.0;
  double ly = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;

  Grid() = default;
  Grid(int nx_, int ny_, double lx_, double ly_, double x0_ = 0.0, double y0_ = 0.0);

  /// [-pi, pi]^2 with n cells per direction.
  static Grid periodic_square(int n);

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  double cell_volume() const { return hx() * hy(); }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  int wrap_x(int i) const { return ((i % nx) + nx) % nx; }
  int wrap_y(int j) const { return ((j % ny) + ny) % ny; }

  // Physical coordinates of the staggered locations.
  double x_center(int i) const { return x0 + (i + 0.5) * hx(); }
  double y_center(int j) const { return y0 + (j + 0.5) * hy(); }
  double x_face(int i) const { return x0 + (i + 1) * hx(); }
  double y_face(int j) const { return y0 + (j + 1) * hy(); }

  bool operator==(const Grid& o) const {
    return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly && x0 == o.x0 && y0 == o.y0;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

enum class Stagger { kCenter, kEastFace, kNorthFace, kCorner };

/// nx*ny scalars, row-major with x fastest, tagged with where they live.
class Lattice {
 public:
  Lattice() = default;
  Lattice(int nx, int ny, Stagger stagger, double value = 0.0)
      : nx_(nx), ny_(ny), stagger_(stagger),
        values_(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), value) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  Stagger stagger() const { return stagger_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int i, int j) { return values_[static_cast<std::size_t>(j) * nx_ + i]; }
  double operator()(int i, int j) const { return values_[static_cast<std::size_t>(j) * nx_ + i]; }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  /// Periodic access with arbitrary integer indices.
  double wrapped(int i, int j) const {
    i = ((i % nx_) + nx_) % nx_;
    j = ((j % ny_) + ny_) % ny_;
    return (*this)(i, j);
  }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }
  bool same_shape(const Lattice& o) const { return nx_ == o.nx_ && ny_ == o.ny_; }

 private:
  int nx_ = 0;
  int ny_ = 0;
  Stagger stagger_ = Stagger::kCenter;
  std::vector<double> values_;
};

/// Velocity on a staggered grid: u(i, j) sits at the east face (i+1/2, j) of
/// cell (i, j) and v(i, j) at its north face (i, j+1/2).
struct StaggeredVelocity {
  Grid grid;
  Lattice u;
  Lattice v;

  StaggeredVelocity() = default;
  explicit StaggeredVelocity(const Grid& g)
      : grid(g), u(g.nx, g.ny, Stagger::kEastFace), v(g.nx, g.ny, Stagger::kNorthFace) {}

  std::size_t size() const { return u.size(); }
  bool all_finite() const;
  double max_abs() const;
};

struct PressureField {
  Grid grid;
  Lattice p;

  PressureField() = default;
  explicit PressureField(const Grid& g) : grid(g), p(g.nx, g.ny, Stagger::kCenter) {}
};

// Whole-field algebra. Inner products are plain sums over all entries
// (the volume factor is applied by the caller where it matters).
void axpy(double a, const StaggeredVelocity& x, StaggeredVelocity& y);
StaggeredVelocity scaled(const StaggeredVelocity& x, double a);
StaggeredVelocity operator+(const StaggeredVelocity& a, const StaggeredVelocity& b);
StaggeredVelocity operator-(const StaggeredVelocity& a, const StaggeredVelocity& b);
double dot(const StaggeredVelocity& a, const StaggeredVelocity& b);
double dot(const Lattice& a, const Lattice& b);
double norm2(const StaggeredVelocity& a);
double sum(const Lattice& a);

void require_same_grid(const StaggeredVelocity& a, const StaggeredVelocity& b, const char* where);

/// Periodic shift by (a, b) cells: out(i + a, j + b) = in(i, j).
Lattice shifted(const Lattice& in, int a, int b);
StaggeredVelocity shifted(const StaggeredVelocity& in, int a, int b);

}  // namespace les
