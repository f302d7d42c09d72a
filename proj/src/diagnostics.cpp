#include "les/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "les/fft.hpp"

namespace les {

double Spectrum::total() const {
  double s = 0.0;
  for (double e : energy) s += e;
  return s;
}

Spectrum energy_spectrum(const StaggeredVelocity& vel) {
  const Grid& g = vel.grid;
  const RealFft2d fft(g.nx, g.ny);
  const auto uh = fft.forward(vel.u);
  const auto vh = fft.forward(vel.v);
  const int nxh = fft.nx_half();
  const double kmax = std::hypot(g.nx / 2, g.ny / 2);
  const int nbins = static_cast<int>(std::floor(std::log2(kmax))) + 1;

  Spectrum s;
  for (int b = 0; b < nbins; ++b) {
    s.bin_low.push_back(std::ldexp(1.0, b));
    s.bin_high.push_back(std::ldexp(1.0, b + 1));
  }
  s.energy.assign(nbins, 0.0);
  const double n2 = static_cast<double>(g.size()) * static_cast<double>(g.size());
  for (int ky = 0; ky < g.ny; ++ky) {
    const int sky = ky <= g.ny / 2 ? ky : ky - g.ny;
    for (int kx = 0; kx < nxh; ++kx) {
      if (kx == 0 && ky == 0) continue;
      // Half spectrum: interior kx columns stand for +kx and -kx.
      const bool self_conjugate = kx == 0 || (g.nx % 2 == 0 && kx == g.nx / 2);
      const double weight = self_conjugate ? 1.0 : 2.0;
      const std::size_t idx = static_cast<std::size_t>(ky) * nxh + kx;
      const double e = 0.5 * weight * (std::norm(uh[idx]) + std::norm(vh[idx])) / n2;
      const double k = std::hypot(static_cast<double>(kx), static_cast<double>(sky));
      const int b = std::min(nbins - 1, static_cast<int>(std::floor(std::log2(k))));
      s.energy[b] += e;
    }
  }
  return s;
}

Spectrum average_spectra(std::span<const Spectrum> spectra) {
  require(!spectra.empty(), ErrorCode::kInvalidArgument, "average_spectra: no spectra");
  Spectrum out = spectra.front();
  for (std::size_t k = 1; k < spectra.size(); ++k) {
    require(spectra[k].size() == out.size(), ErrorCode::kShapeMismatch,
            "average_spectra: binning differs");
    for (std::size_t b = 0; b < out.size(); ++b) out.energy[b] += spectra[k].energy[b];
  }
  for (double& e : out.energy) e /= static_cast<double>(spectra.size());
  return out;
}

double relative_error(const StaggeredVelocity& model, const StaggeredVelocity& reference) {
  require_same_grid(model, reference, "relative_error");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < model.size(); ++k) {
    const double du = model.u[k] - reference.u[k];
    const double dv = model.v[k] - reference.v[k];
    num += du * du + dv * dv;
    den += reference.u[k] * reference.u[k] + reference.v[k] * reference.v[k];
  }
  require(den > 0.0, ErrorCode::kInvalidArgument, "relative_error: reference field is zero");
  return std::sqrt(num / den);
}

std::vector<double> trajectory_error(std::span<const StaggeredVelocity> model,
                                     std::span<const StaggeredVelocity> reference) {
  const std::size_t n = std::min(model.size(), reference.size());
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double e = relative_error(model[k], reference[k]);
    if (!std::isfinite(e)) break;
    out.push_back(e);
  }
  return out;
}

double spectrum_error(const Spectrum& model, const Spectrum& reference) {
  require(model.size() == reference.size(), ErrorCode::kShapeMismatch,
          "spectrum_error: binning differs");
  double acc = 0.0;
  int count = 0;
  for (std::size_t b = 0; b < model.size(); ++b) {
    if (!(model.energy[b] > 0.0) || !(reference.energy[b] > 0.0)) continue;
    const double d = std::log10(model.energy[b]) - std::log10(reference.energy[b]);
    acc += d * d;
    ++count;
  }
  if (count == 0 || acc == 0.0) return kSpectrumErrorFloor;
  return std::max(kSpectrumErrorFloor, std::log10(acc / count));
}

namespace {

double quantile(std::vector<double> sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double silverman_bandwidth(std::span<const double> samples) {
  require(samples.size() >= 2, ErrorCode::kInvalidArgument, "KDE: need at least two samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : samples) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / (n - 1.0));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  require(spread > 0.0, ErrorCode::kInvalidArgument, "KDE: samples have zero spread");
  return 0.9 * spread * std::pow(n, -0.2);
}

std::vector<double> gaussian_kde(std::span<const double> samples, std::span<const double> points) {
  const double h = silverman_bandwidth(samples);
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out(points.size(), 0.0);
  for (std::size_t p = 0; p < points.size(); ++p) {
    double acc = 0.0;
    for (double x : samples) {
      const double z = (points[p] - x) / h;
      acc += std::exp(-0.5 * z * z);
    }
    out[p] = acc * norm;
  }
  return out;
}

}  // namespace les
