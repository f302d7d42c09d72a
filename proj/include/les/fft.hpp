#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "les/grid.hpp"

namespace les {

/// Real-to-complex 2D transform of an nx*ny lattice (x fastest) backed by
/// FFTW. Output holds ny rows of nx/2+1 half-spectrum coefficients.
/// Unnormalised in both directions. Plans are immutable after construction;
/// transforms allocate their own buffers so one instance can be shared.
class RealFft2d {
 public:
  RealFft2d(int nx, int ny);
  ~RealFft2d();
  RealFft2d(const RealFft2d&) = delete;
  RealFft2d& operator=(const RealFft2d&) = delete;

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nx_half() const { return nx_ / 2 + 1; }

  std::vector<std::complex<double>> forward(const Lattice& in) const;
  /// Writes the unnormalised inverse transform into out.
  void inverse(const std::vector<std::complex<double>>& in, Lattice& out) const;

 private:
  struct Plans;
  int nx_;
  int ny_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace les
