#include "les/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace les {

namespace {
// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
}  // namespace

struct RealFft2d::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

RealFft2d::RealFft2d(int nx, int ny) : nx_(nx), ny_(ny), plans_(std::make_unique<Plans>()) {
  require(nx > 0 && ny > 0, ErrorCode::kInvalidArgument, "RealFft2d: empty lattice");
  const std::size_t nreal = static_cast<std::size_t>(nx) * ny;
  const std::size_t ncplx = static_cast<std::size_t>(nx / 2 + 1) * ny;
  std::unique_ptr<double, FftwFree> real(fftw_alloc_real(nreal));
  std::unique_ptr<fftw_complex, FftwFree> cplx(fftw_alloc_complex(ncplx));
  std::lock_guard<std::mutex> lock(planner_mutex());
  // FFTW_ESTIMATE does not time candidate plans, so the chosen algorithm (and
  // therefore every rounding) is reproducible run to run.
  plans_->r2c = fftw_plan_dft_r2c_2d(ny, nx, real.get(), cplx.get(), FFTW_ESTIMATE);
  plans_->c2r = fftw_plan_dft_c2r_2d(ny, nx, cplx.get(), real.get(), FFTW_ESTIMATE);
  require(plans_->r2c && plans_->c2r, ErrorCode::kInternal, "FFTW planning failed");
}

RealFft2d::~RealFft2d() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plans_->r2c) fftw_destroy_plan(plans_->r2c);
  if (plans_->c2r) fftw_destroy_plan(plans_->c2r);
}

std::vector<std::complex<double>> RealFft2d::forward(const Lattice& in) const {
  require(in.nx() == nx_ && in.ny() == ny_, ErrorCode::kDimensionMismatch,
          "RealFft2d::forward: lattice shape mismatch");
  const std::size_t nreal = static_cast<std::size_t>(nx_) * ny_;
  const std::size_t ncplx = static_cast<std::size_t>(nx_half()) * ny_;
  std::unique_ptr<double, FftwFree> real(fftw_alloc_real(nreal));
  std::unique_ptr<fftw_complex, FftwFree> cplx(fftw_alloc_complex(ncplx));
  std::memcpy(real.get(), in.data(), nreal * sizeof(double));
  fftw_execute_dft_r2c(plans_->r2c, real.get(), cplx.get());
  std::vector<std::complex<double>> out(ncplx);
  std::memcpy(static_cast<void*>(out.data()), cplx.get(), ncplx * sizeof(fftw_complex));
  return out;
}

void RealFft2d::inverse(const std::vector<std::complex<double>>& in, Lattice& out) const {
  const std::size_t nreal = static_cast<std::size_t>(nx_) * ny_;
  const std::size_t ncplx = static_cast<std::size_t>(nx_half()) * ny_;
  require(in.size() == ncplx && out.nx() == nx_ && out.ny() == ny_, ErrorCode::kDimensionMismatch,
          "RealFft2d::inverse: shape mismatch");
  std::unique_ptr<double, FftwFree> real(fftw_alloc_real(nreal));
  std::unique_ptr<fftw_complex, FftwFree> cplx(fftw_alloc_complex(ncplx));
  std::memcpy(cplx.get(), in.data(), ncplx * sizeof(fftw_complex));
  // c2r destroys its input; cplx is a scratch copy.
  fftw_execute_dft_c2r(plans_->c2r, cplx.get(), real.get());
  std::memcpy(out.data(), real.get(), nreal * sizeof(double));
}

}  // namespace les
