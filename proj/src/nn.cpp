#include "les/nn.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>
#include <string>

#include "les/rng.hpp"

namespace les {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

// Row (c, dy, dx) of the column matrix holds in[c] shifted so that entry
// (i, j) equals in[c](i + dx, j + dy).
void im2col(const Channels& in, int radius, RowMatrix& col) {
  const int width = 2 * radius + 1;
  const int taps = width * width;
  const std::size_t plane = in.plane();
  col.resize(static_cast<Eigen::Index>(in.nc) * taps, static_cast<Eigen::Index>(plane));
  for (int c = 0; c < in.nc; ++c) {
    const double* src = in.channel(c);
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        const int row = c * taps + (dy + radius) * width + (dx + radius);
        double* dst = col.data() + static_cast<std::size_t>(row) * plane;
        const int sx = ((dx % in.nx) + in.nx) % in.nx;
        for (int j = 0; j < in.ny; ++j) {
          const int sj = ((j + dy) % in.ny + in.ny) % in.ny;
          const double* srow = src + static_cast<std::size_t>(sj) * in.nx;
          double* drow = dst + static_cast<std::size_t>(j) * in.nx;
          // drow[i] = srow[(i + sx) mod nx]
          std::memcpy(drow, srow + sx, static_cast<std::size_t>(in.nx - sx) * sizeof(double));
          std::memcpy(drow + (in.nx - sx), srow, static_cast<std::size_t>(sx) * sizeof(double));
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add every row back to its source location.
void col2im(const RowMatrix& col, int radius, Channels& out) {
  const int width = 2 * radius + 1;
  const int taps = width * width;
  const std::size_t plane = out.plane();
  for (int c = 0; c < out.nc; ++c) {
    double* dst = out.channel(c);
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        const int row = c * taps + (dy + radius) * width + (dx + radius);
        const double* src = col.data() + static_cast<std::size_t>(row) * plane;
        const int sx = ((dx % out.nx) + out.nx) % out.nx;
        for (int j = 0; j < out.ny; ++j) {
          const int sj = ((j + dy) % out.ny + out.ny) % out.ny;
          double* drow = dst + static_cast<std::size_t>(sj) * out.nx;
          const double* srow = src + static_cast<std::size_t>(j) * out.nx;
          for (int i = 0; i < out.nx - sx; ++i) drow[i + sx] += srow[i];
          for (int i = out.nx - sx; i < out.nx; ++i) drow[i + sx - out.nx] += srow[i];
        }
      }
    }
  }
}

void check_kernel(std::size_t kernel_size, int out_ch, int in_ch, int radius, const char* where) {
  const std::size_t taps = static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1);
  require(radius >= 0 && kernel_size == static_cast<std::size_t>(out_ch) * in_ch * taps,
          ErrorCode::kShapeMismatch, std::string(where) + ": kernel size does not match channels");
}

}  // namespace

CnnSpec CnnSpec::standard(int in_ch, int hidden_ch, int n_hidden, int out_ch, int radius) {
  CnnSpec s;
  int prev = in_ch;
  for (int l = 0; l < n_hidden; ++l) {
    s.layers.push_back({prev, hidden_ch, radius, Activation::kRelu});
    prev = hidden_ch;
  }
  s.layers.push_back({prev, out_ch, radius, Activation::kIdentity});
  return s;
}

std::size_t CnnSpec::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.param_count();
  return n;
}

void CnnSpec::validate() const {
  require(!layers.empty(), ErrorCode::kShapeMismatch, "CnnSpec: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    require(layers[l].in_ch > 0 && layers[l].out_ch > 0 && layers[l].radius >= 0,
            ErrorCode::kShapeMismatch, "CnnSpec: non-positive channel count or radius");
    if (l > 0) {
      require(layers[l].in_ch == layers[l - 1].out_ch, ErrorCode::kShapeMismatch,
              "CnnSpec: channel counts do not chain at layer " + std::to_string(l));
    }
  }
  require(layers.back().activation == Activation::kIdentity, ErrorCode::kShapeMismatch,
          "CnnSpec: final layer must be linear");
}

bool CnnSpec::operator==(const CnnSpec& o) const {
  if (layers.size() != o.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& a = layers[l];
    const auto& b = o.layers[l];
    if (a.in_ch != b.in_ch || a.out_ch != b.out_ch || a.radius != b.radius ||
        a.activation != b.activation)
      return false;
  }
  return true;
}

Channels conv2d_periodic(const Channels& in, std::span<const double> kernel,
                         std::span<const double> bias, int out_ch, int radius) {
  check_kernel(kernel.size(), out_ch, in.nc, radius, "conv2d_periodic");
  require(bias.empty() || bias.size() == static_cast<std::size_t>(out_ch), ErrorCode::kShapeMismatch,
          "conv2d_periodic: bias size does not match output channels");
  RowMatrix col;
  im2col(in, radius, col);
  Channels out(in.nx, in.ny, out_ch);
  const ConstRowMap w(kernel.data(), out_ch, col.rows());
  RowMap o(out.data.data(), out_ch, static_cast<Eigen::Index>(in.plane()));
  o.noalias() = w * col;
  if (!bias.empty()) {
    for (int c = 0; c < out_ch; ++c) o.row(c).array() += bias[c];
  }
  return out;
}

Channels conv2d_periodic_transpose(const Channels& delta, std::span<const double> kernel, int in_ch,
                                   int radius) {
  check_kernel(kernel.size(), delta.nc, in_ch, radius, "conv2d_periodic_transpose");
  const int taps = (2 * radius + 1) * (2 * radius + 1);
  const ConstRowMap w(kernel.data(), delta.nc, static_cast<Eigen::Index>(in_ch) * taps);
  const ConstRowMap d(delta.data.data(), delta.nc, static_cast<Eigen::Index>(delta.plane()));
  RowMatrix col = w.transpose() * d;
  Channels out(delta.nx, delta.ny, in_ch);
  col2im(col, radius, out);
  return out;
}

void conv2d_periodic_weight_grad(const Channels& in, const Channels& delta, int radius,
                                 std::span<double> dkernel, std::span<double> dbias) {
  require(in.nx == delta.nx && in.ny == delta.ny, ErrorCode::kShapeMismatch,
          "conv2d_periodic_weight_grad: lattice mismatch");
  check_kernel(dkernel.size(), delta.nc, in.nc, radius, "conv2d_periodic_weight_grad");
  RowMatrix col;
  im2col(in, radius, col);
  const ConstRowMap d(delta.data.data(), delta.nc, static_cast<Eigen::Index>(delta.plane()));
  RowMap dw(dkernel.data(), delta.nc, col.rows());
  dw.noalias() += d * col.transpose();
  if (!dbias.empty()) {
    require(dbias.size() == static_cast<std::size_t>(delta.nc), ErrorCode::kShapeMismatch,
            "conv2d_periodic_weight_grad: bias size mismatch");
    // Plain loop: Eigen's vectorised sum() peels by address, which would make
    // the result depend on heap alignment.
    for (int c = 0; c < delta.nc; ++c) {
      const double* row = delta.channel(c);
      double acc = 0.0;
      for (std::size_t k = 0; k < delta.plane(); ++k) acc += row[k];
      dbias[c] += acc;
    }
  }
}

Channels forward_cnn(const CnnSpec& spec, std::span<const double> params, const Channels& input,
                     CnnCache* cache) {
  require(params.size() == spec.param_count(), ErrorCode::kShapeMismatch,
          "forward_cnn: parameter count does not match spec");
  require(input.nc == spec.in_channels(), ErrorCode::kShapeMismatch,
          "forward_cnn: input has " + std::to_string(input.nc) + " channels, spec expects " +
              std::to_string(spec.in_channels()));
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(input);
  }
  Channels z = input;
  std::size_t offset = 0;
  for (const auto& layer : spec.layers) {
    const auto kernel = params.subspan(offset, layer.kernel_size());
    const auto bias = params.subspan(offset + layer.kernel_size(), layer.out_ch);
    offset += layer.param_count();
    z = conv2d_periodic(z, kernel, bias, layer.out_ch, layer.radius);
    if (layer.activation == Activation::kRelu) {
      for (double& x : z.data) x = x > 0.0 ? x : 0.0;
    }
    if (cache) cache->activations.push_back(z);
  }
  return z;
}

Channels backward_cnn(const CnnSpec& spec, std::span<const double> params, const CnnCache& cache,
                      const Channels& adj_output, std::span<double> grad_params) {
  require(grad_params.size() == params.size() && params.size() == spec.param_count(),
          ErrorCode::kShapeMismatch, "backward_cnn: parameter/gradient size mismatch");
  require(cache.activations.size() == spec.layers.size() + 1, ErrorCode::kShapeMismatch,
          "backward_cnn: cache does not match spec");
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& layer : spec.layers) {
    offsets.push_back(offset);
    offset += layer.param_count();
  }
  Channels delta = adj_output;
  for (std::size_t l = spec.layers.size(); l-- > 0;) {
    const auto& layer = spec.layers[l];
    if (layer.activation == Activation::kRelu) {
      const Channels& out = cache.activations[l + 1];
      for (std::size_t k = 0; k < delta.data.size(); ++k) {
        if (!(out.data[k] > 0.0)) delta.data[k] = 0.0;
      }
    }
    const Channels& in = cache.activations[l];
    conv2d_periodic_weight_grad(in, delta, layer.radius,
                                grad_params.subspan(offsets[l], layer.kernel_size()),
                                grad_params.subspan(offsets[l] + layer.kernel_size(), layer.out_ch));
    delta = conv2d_periodic_transpose(delta, params.subspan(offsets[l], layer.kernel_size()),
                                      layer.in_ch, layer.radius);
  }
  return delta;
}

void init_cnn_params(const CnnSpec& spec, std::uint64_t seed, std::span<double> params) {
  require(params.size() == spec.param_count(), ErrorCode::kShapeMismatch,
          "init_cnn_params: parameter count does not match spec");
  CounterRng rng(seed);
  std::size_t offset = 0;
  for (const auto& layer : spec.layers) {
    const double bound = std::sqrt(1.0 / (static_cast<double>(layer.in_ch) * layer.taps()));
    for (std::size_t k = 0; k < layer.kernel_size(); ++k) params[offset + k] = rng.uniform(-bound, bound);
    for (int c = 0; c < layer.out_ch; ++c) params[offset + layer.kernel_size() + c] = 0.0;
    offset += layer.param_count();
  }
}

void adam_step(ParamStore& store, std::span<const double> grad, const AdamConfig& cfg) {
  require(grad.size() == store.theta.size() && store.m.size() == store.theta.size() &&
              store.v.size() == store.theta.size(),
          ErrorCode::kShapeMismatch, "adam_step: gradient/parameter size mismatch");
  for (std::size_t k = 0; k < grad.size(); ++k) {
    require(std::isfinite(grad[k]), ErrorCode::kNonFiniteGradient,
            "adam_step: non-finite gradient at index " + std::to_string(k));
  }
  ++store.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(store.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(store.step));
  for (std::size_t k = 0; k < grad.size(); ++k) {
    store.m[k] = cfg.beta1 * store.m[k] + (1.0 - cfg.beta1) * grad[k];
    store.v[k] = cfg.beta2 * store.v[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
    const double mhat = store.m[k] / bc1;
    const double vhat = store.v[k] / bc2;
    store.theta[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace les
