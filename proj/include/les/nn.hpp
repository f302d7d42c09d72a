#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "les/error.hpp"

namespace les {

enum class Activation : std::uint8_t { kIdentity = 0, kRelu = 1 };

struct ConvLayerSpec {
  int in_ch = 0;
  int out_ch = 0;
  int radius = 0;
  Activation activation = Activation::kIdentity;

  int taps() const { return (2 * radius + 1) * (2 * radius + 1); }
  std::size_t kernel_size() const {
    return static_cast<std::size_t>(out_ch) * static_cast<std::size_t>(in_ch) * taps();
  }
  std::size_t param_count() const { return kernel_size() + static_cast<std::size_t>(out_ch); }
};

/// Stack of periodic convolutions. Parameters are stored flat, layer by
/// layer: kernel[out][in][dy][dx] followed by bias[out].
struct CnnSpec {
  std::vector<ConvLayerSpec> layers;

  /// in -> hidden (x n_hidden, ReLU) -> out (identity).
  static CnnSpec standard(int in_ch, int hidden_ch, int n_hidden, int out_ch, int radius);

  int in_channels() const { return layers.empty() ? 0 : layers.front().in_ch; }
  int out_channels() const { return layers.empty() ? 0 : layers.back().out_ch; }
  std::size_t param_count() const;
  /// Throws ShapeMismatch if channel counts do not chain or the final layer is not linear.
  void validate() const;

  bool operator==(const CnnSpec& o) const;
};

/// nc channels of an nx*ny periodic lattice, channel-major, x fastest.
struct Channels {
  int nx = 0;
  int ny = 0;
  int nc = 0;
  std::vector<double> data;

  Channels() = default;
  Channels(int nx_, int ny_, int nc_)
      : nx(nx_), ny(ny_), nc(nc_), data(static_cast<std::size_t>(nx_) * ny_ * nc_, 0.0) {}

  std::size_t plane() const { return static_cast<std::size_t>(nx) * ny; }
  double* channel(int c) { return data.data() + c * plane(); }
  const double* channel(int c) const { return data.data() + c * plane(); }
  double& at(int c, int i, int j) { return data[c * plane() + static_cast<std::size_t>(j) * nx + i]; }
  double at(int c, int i, int j) const {
    return data[c * plane() + static_cast<std::size_t>(j) * nx + i];
  }
};

/// Cross-correlation with circular padding:
///   out[o](i, j) = sum_{c, dy, dx} kernel[o][c][dy][dx] * in[c](i + dx, j + dy) + bias[o].
/// An empty bias span means no bias.
Channels conv2d_periodic(const Channels& in, std::span<const double> kernel,
                         std::span<const double> bias, int out_ch, int radius);

/// Adjoint of conv2d_periodic with respect to its input (bias ignored).
Channels conv2d_periodic_transpose(const Channels& delta, std::span<const double> kernel, int in_ch,
                                   int radius);

/// Accumulates d<delta, conv(in)>/dkernel into dkernel and, if non-empty,
/// the bias gradient into dbias.
void conv2d_periodic_weight_grad(const Channels& in, const Channels& delta, int radius,
                                 std::span<double> dkernel, std::span<double> dbias);

/// Intermediate states recorded by forward_cnn for the backward pass.
struct CnnCache {
  std::vector<Channels> activations;  // input, then the output of every layer
};

Channels forward_cnn(const CnnSpec& spec, std::span<const double> params, const Channels& input,
                     CnnCache* cache = nullptr);

/// Reverse sweep through a cached forward pass. Accumulates into grad_params
/// and returns the gradient with respect to the network input.
Channels backward_cnn(const CnnSpec& spec, std::span<const double> params, const CnnCache& cache,
                      const Channels& adj_output, std::span<double> grad_params);

/// Uniform in +-sqrt(1/(in_ch * taps)) for kernels, zero biases.
void init_cnn_params(const CnnSpec& spec, std::uint64_t seed, std::span<double> params);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Flat parameter vector together with the Adam moment estimates.
struct ParamStore {
  std::vector<double> theta;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  ParamStore() = default;
  explicit ParamStore(std::vector<double> params)
      : theta(std::move(params)), m(theta.size(), 0.0), v(theta.size(), 0.0) {}
};

/// One bias-corrected Adam update. Throws NonFiniteGradient (leaving the
/// store untouched) if any gradient entry is NaN or infinite.
void adam_step(ParamStore& store, std::span<const double> grad, const AdamConfig& cfg = {});

}  // namespace les
