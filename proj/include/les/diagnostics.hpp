#pragma once

#include <span>
#include <vector>

#include "les/grid.hpp"

namespace les {

/// Dyadic energy spectrum. Bin b collects the modes with
/// 2^b <= |k| < 2^(b+1), |k| the integer wavenumber magnitude; k = 0 is
/// excluded. Energies are normalised so that their sum is the domain-mean
/// kinetic energy (1/2N) sum(u^2 + v^2) of the mean-free field.
struct Spectrum {
  std::vector<double> bin_low;   // 2^b
  std::vector<double> bin_high;  // 2^(b+1)
  std::vector<double> energy;

  std::size_t size() const { return energy.size(); }
  double total() const;
};

Spectrum energy_spectrum(const StaggeredVelocity& vel);

/// Per-bin mean over several spectra with identical binning.
Spectrum average_spectra(std::span<const Spectrum> spectra);

/// |a - b| / |b| in the plain 2-norm over both components.
double relative_error(const StaggeredVelocity& model, const StaggeredVelocity& reference);

/// Relative error per snapshot over the common prefix of the two sequences.
std::vector<double> trajectory_error(std::span<const StaggeredVelocity> model,
                                     std::span<const StaggeredVelocity> reference);

inline constexpr double kSpectrumErrorFloor = -300.0;

/// log10(mean_b (log10 E_model(b) - log10 E_ref(b))^2) over bins where both
/// energies are positive; floored at -300 (identical spectra, or no bins).
double spectrum_error(const Spectrum& model, const Spectrum& reference);

/// Silverman's rule 0.9 min(sd, IQR/1.34) n^(-1/5); falls back to sd when
/// the IQR vanishes. Requires at least two samples.
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian kernel density estimate with Silverman bandwidth.
std::vector<double> gaussian_kde(std::span<const double> samples, std::span<const double> points);

}  // namespace les
