#include "les/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

namespace les {

namespace {

class Writer {
 public:
  void bytes(const char* s, std::size_t n) { out_.insert(out_.end(), s, s + n); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(const std::vector<double>& v) {
    for (double x : v) f64(x);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, const char* what) : b_(b), what_(what) {}

  void need(std::size_t n) const {
    require(pos_ + n <= b_.size(), ErrorCode::kFormat, std::string(what_) + ": truncated input");
  }
  void magic(const char* m) {
    need(4);
    require(std::memcmp(b_.data() + pos_, m, 4) == 0, ErrorCode::kFormat,
            std::string(what_) + ": bad magic, expected " + m);
    pos_ += 4;
  }
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b_[pos_ + k]) << (8 * k);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64s(std::vector<double>& v) {
    need(8 * v.size());
    for (double& x : v) x = f64();
  }
  void finish() const {
    require(pos_ == b_.size(), ErrorCode::kFormat, std::string(what_) + ": trailing bytes");
  }

 private:
  const std::vector<std::uint8_t>& b_;
  const char* what_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_dataset(const SnapshotDataset& ds) {
  require(ds.times.size() == ds.snapshots.size(), ErrorCode::kInvalidArgument,
          "encode_dataset: times and snapshots differ in length");
  Writer w;
  w.bytes("LESD", 4);
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(ds.grid.nx));
  w.u32(static_cast<std::uint32_t>(ds.grid.ny));
  w.u32(static_cast<std::uint32_t>(ds.snapshots.size()));
  w.f64(ds.dt_between);
  w.f64(ds.nu);
  w.u8(static_cast<std::uint8_t>(ds.forcing));
  w.u64(ds.seed);
  for (std::size_t s = 0; s < ds.snapshots.size(); ++s) {
    require(ds.snapshots[s].grid == ds.grid, ErrorCode::kDimensionMismatch,
            "encode_dataset: snapshot grid differs from dataset grid");
    w.f64(ds.times[s]);
    w.f64s(ds.snapshots[s].u.values());
    w.f64s(ds.snapshots[s].v.values());
  }
  return w.take();
}

SnapshotDataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes, "dataset");
  r.magic("LESD");
  const std::uint32_t version = r.u32();
  require(version == kDatasetVersion, ErrorCode::kFormat,
          "dataset: unsupported version " + std::to_string(version));
  SnapshotDataset ds;
  const int nx = static_cast<int>(r.u32());
  const int ny = static_cast<int>(r.u32());
  const std::uint32_t n = r.u32();
  ds.grid = Grid(nx, ny, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi, -std::numbers::pi,
                 -std::numbers::pi);
  ds.dt_between = r.f64();
  ds.nu = r.f64();
  const std::uint8_t forcing = r.u8();
  require(forcing <= 1, ErrorCode::kFormat, "dataset: unknown forcing tag");
  ds.forcing = static_cast<ForcingKind>(forcing);
  ds.seed = r.u64();
  r.need(static_cast<std::size_t>(n) * (8 + 16 * ds.grid.size()));
  for (std::uint32_t s = 0; s < n; ++s) {
    ds.times.push_back(r.f64());
    StaggeredVelocity v(ds.grid);
    r.f64s(v.u.values());
    r.f64s(v.v.values());
    ds.snapshots.push_back(std::move(v));
  }
  r.finish();
  return ds;
}

std::vector<std::uint8_t> encode_checkpoint(const ClosureModel& model) {
  model.validate();
  Writer w;
  w.bytes("LESP", 4);
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(model.kind));
  w.u32(static_cast<std::uint32_t>(model.spec.layers.size()));
  for (const auto& l : model.spec.layers) {
    w.u32(static_cast<std::uint32_t>(l.in_ch));
    w.u32(static_cast<std::uint32_t>(l.out_ch));
    w.u32(static_cast<std::uint32_t>(l.radius));
    w.u8(static_cast<std::uint8_t>(l.activation));
  }
  if (model.kind == ClosureKind::kSmagorinsky) {
    w.f64(model.cs);
  } else {
    w.f64s(model.params);
  }
  return w.take();
}

ClosureModel decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes, "checkpoint");
  r.magic("LESP");
  const std::uint32_t version = r.u32();
  require(version == kCheckpointVersion, ErrorCode::kFormat,
          "checkpoint: unsupported version " + std::to_string(version));
  ClosureModel m;
  const std::uint8_t kind = r.u8();
  require(kind <= static_cast<std::uint8_t>(ClosureKind::kCnnClipped), ErrorCode::kFormat,
          "checkpoint: unknown closure variant");
  m.kind = static_cast<ClosureKind>(kind);
  const std::uint32_t layers = r.u32();
  require(layers <= 1024, ErrorCode::kFormat, "checkpoint: implausible layer count");
  for (std::uint32_t l = 0; l < layers; ++l) {
    ConvLayerSpec s;
    s.in_ch = static_cast<int>(r.u32());
    s.out_ch = static_cast<int>(r.u32());
    s.radius = static_cast<int>(r.u32());
    const std::uint8_t act = r.u8();
    require(act <= 1, ErrorCode::kFormat, "checkpoint: unknown activation");
    s.activation = static_cast<Activation>(act);
    m.spec.layers.push_back(s);
  }
  if (m.kind == ClosureKind::kSmagorinsky) {
    m.cs = r.f64();
  } else if (closure_has_network(m.kind)) {
    m.spec.validate();
    std::size_t count = m.spec.param_count();
    if (m.kind == ClosureKind::kSkew) count += kSkewBParams;
    m.params.resize(count);
    r.f64s(m.params);
  }
  r.finish();
  m.validate();
  return m;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open '" + path + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::kIo, "write to '" + path + "' failed");
}

void write_dataset(const std::string& path, const SnapshotDataset& ds) {
  write_file(path, encode_dataset(ds));
}
SnapshotDataset read_dataset(const std::string& path) { return decode_dataset(read_file(path)); }
void write_checkpoint(const std::string& path, const ClosureModel& model) {
  write_file(path, encode_checkpoint(model));
}
ClosureModel read_checkpoint(const std::string& path) {
  return decode_checkpoint(read_file(path));
}

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t k = 0; k < n; ++k) {
    h ^= p[k];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fingerprint(const StaggeredVelocity& vel, std::uint64_t h) {
  h = fnv1a64(vel.u.data(), vel.u.size() * sizeof(double), h);
  return fnv1a64(vel.v.data(), vel.v.size() * sizeof(double), h);
}

}  // namespace les
