#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

#include "les/diagnostics.hpp"
#include "support.hpp"

using namespace les;

namespace {

// Naive full 2D DFT oracle for the binned modal energies.
std::vector<double> dft_spectrum(const StaggeredVelocity& v) {
  const Grid& g = v.grid;
  const double n = static_cast<double>(g.size());
  std::vector<double> bins;
  for (int ky = -g.ny / 2; ky < g.ny - g.ny / 2; ++ky)
    for (int kx = -g.nx / 2; kx < g.nx - g.nx / 2; ++kx) {
      if (kx == 0 && ky == 0) continue;
      std::complex<double> fu = 0.0, fv = 0.0;
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          const double ph = -2 * std::numbers::pi * (static_cast<double>(kx) * i / g.nx + static_cast<double>(ky) * j / g.ny);
          const std::complex<double> e(std::cos(ph), std::sin(ph));
          fu += v.u(i, j) * e;
          fv += v.v(i, j) * e;
        }
      const double e = 0.5 * (std::norm(fu) + std::norm(fv)) / (n * n);
      const auto b = static_cast<std::size_t>(std::floor(std::log2(std::hypot(kx, ky))));
      if (bins.size() <= b) bins.resize(b + 1, 0.0);
      bins[b] += e;
    }
  return bins;
}

double mean_free_energy(const StaggeredVelocity& v) {
  const double n = static_cast<double>(v.size());
  const double mu = sum(v.u) / n, mv = sum(v.v) / n;
  double e = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) e += (v.u[k] - mu) * (v.u[k] - mu) + (v.v[k] - mv) * (v.v[k] - mv);
  return e / (2 * n);
}

}  // namespace

TEST_CASE("single cosine mode lands in the first bin") {
  const Grid g = Grid::periodic_square(32);
  const auto v = testing::sample(g, [](double x, double) { return std::cos(x); }, [](double, double) { return 0.0; });
  const Spectrum s = energy_spectrum(v);
  REQUIRE(s.size() >= 1);
  CHECK(s.bin_low[0] == 1.0);
  CHECK(s.bin_high[0] == 2.0);
  CHECK(s.energy[0] == doctest::Approx(0.25).epsilon(1e-12));
  for (std::size_t b = 1; b < s.size(); ++b) CHECK(std::abs(s.energy[b]) <= 1e-14);
}

TEST_CASE("spectrum binning and Parseval") {
  for (int n : {8, 16}) {
    const Grid g = Grid::periodic_square(n);
    const auto v = testing::random_velocity(g, 100 + n);
    const Spectrum s = energy_spectrum(v);
    const auto oracle = dft_spectrum(v);
    REQUIRE(s.size() == oracle.size());
    for (std::size_t b = 0; b < s.size(); ++b) {
      CHECK(s.bin_low[b] == std::ldexp(1.0, static_cast<int>(b)));
      CHECK(s.energy[b] >= 0.0);
      CHECK(s.energy[b] == doctest::Approx(oracle[b]).epsilon(1e-10));
    }
    CHECK(s.total() == doctest::Approx(mean_free_energy(v)).epsilon(1e-8));
  }
  const Grid g = Grid::periodic_square(64);
  const auto v = testing::random_velocity(g, 7);
  CHECK(energy_spectrum(v).total() == doctest::Approx(mean_free_energy(v)).epsilon(1e-8));
  for (double e : energy_spectrum(StaggeredVelocity(g)).energy) CHECK(e == 0.0);
}

TEST_CASE("spectrum averaging") {
  const Grid g = Grid::periodic_square(16);
  const Spectrum a = energy_spectrum(testing::random_velocity(g, 1));
  const Spectrum b = energy_spectrum(testing::random_velocity(g, 2));
  const std::vector<Spectrum> both{a, b};
  const Spectrum m = average_spectra(both);
  for (std::size_t k = 0; k < m.size(); ++k) CHECK(m.energy[k] == doctest::Approx(0.5 * (a.energy[k] + b.energy[k])));
  const std::vector<Spectrum> mixed{a, energy_spectrum(testing::random_velocity(Grid::periodic_square(32), 3))};
  CHECK_THROWS_AS(average_spectra(mixed), Error);
}

TEST_CASE("trajectory error") {
  const Grid g = Grid::periodic_square(8);
  std::vector<StaggeredVelocity> ref, model;
  for (int k = 0; k < 4; ++k) {
    ref.push_back(testing::random_velocity(g, 10 + k));
    model.push_back(testing::random_velocity(g, 20 + k));
  }
  for (double e : trajectory_error(ref, ref)) CHECK(e == 0.0);
  std::vector<StaggeredVelocity> twice;
  for (const auto& r : ref) twice.push_back(scaled(r, 2.0));
  for (double e : trajectory_error(twice, ref)) CHECK(e == doctest::Approx(1.0).epsilon(1e-15));
  const auto err = trajectory_error(model, ref);
  REQUIRE(err.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      num += std::pow(model[k].u[i] - ref[k].u[i], 2) + std::pow(model[k].v[i] - ref[k].v[i], 2);
      den += ref[k].u[i] * ref[k].u[i] + ref[k].v[i] * ref[k].v[i];
    }
    CHECK(err[k] == doctest::Approx(std::sqrt(num / den)).epsilon(1e-13));
  }
  std::vector<StaggeredVelocity> ms, rs;
  for (std::size_t k = 0; k < 4; ++k) {
    ms.push_back(shifted(model[k], 3, 1));
    rs.push_back(shifted(ref[k], 3, 1));
  }
  const auto es = trajectory_error(ms, rs);
  for (std::size_t k = 0; k < 4; ++k) CHECK(es[k] == doctest::Approx(err[k]).epsilon(1e-14));

  model[2].u[5] = std::numeric_limits<double>::quiet_NaN();
  const auto truncated = trajectory_error(model, ref);
  CHECK(truncated.size() == 2);
  model.pop_back();
  CHECK(trajectory_error(model, ref).size() == 2);
}

TEST_CASE("spectrum error") {
  Spectrum a;
  a.bin_low = {1, 2, 4};
  a.bin_high = {2, 4, 8};
  a.energy = {0.5, 0.1, 0.003};
  CHECK(spectrum_error(a, a) == kSpectrumErrorFloor);
  Spectrum ten = a;
  for (double& e : ten.energy) e *= 10;
  CHECK(spectrum_error(ten, a) == doctest::Approx(0.0).epsilon(1e-14));
  Spectrum b = a;
  b.energy = {0.4, 0.2, 0.0};  // zero bin is dropped pairwise
  const double d0 = std::log10(0.4) - std::log10(0.5);
  const double d1 = std::log10(0.2) - std::log10(0.1);
  CHECK(spectrum_error(b, a) == doctest::Approx(std::log10(0.5 * (d0 * d0 + d1 * d1))).epsilon(1e-13));
}

TEST_CASE("Gaussian KDE") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> xs(10000);
  for (double& x : xs) x = normal(gen);
  const std::vector<double> zero{0.0};
  CHECK(gaussian_kde(xs, zero)[0] == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)).epsilon(0.05));

  std::vector<double> grid;
  for (int k = -800; k <= 800; ++k) grid.push_back(k * 0.01);
  const auto dens = gaussian_kde(xs, grid);
  double mass = 0.0, first = 0.0, sample_mean = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(dens[k] >= 0.0);
    mass += dens[k] * 0.01;
    first += grid[k] * dens[k] * 0.01;
  }
  for (double x : xs) sample_mean += x / xs.size();
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(first - sample_mean) <= silverman_bandwidth(xs));

  std::vector<double> jitter;
  for (int k = 0; k < 50; ++k) jitter.push_back(3.0 + 1e-6 * (k % 5 - 2));
  const std::vector<double> probe{2.0, 3.0, 4.0};
  const auto peak = gaussian_kde(jitter, probe);
  CHECK(peak[1] > 1e4);
  CHECK(peak[0] < 1e-10);
  CHECK(peak[2] < 1e-10);

  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(silverman_bandwidth(one), Error);
}
