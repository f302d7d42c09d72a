#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "les/closures.hpp"
#include "les/filtering.hpp"

namespace les {

// Binary formats are little-endian regardless of host byte order.
//
// .lesd: "LESD", version u32, nx u32, ny u32, n_snapshots u32,
//        dt_between f64, nu f64, forcing u8, seed u64,
//        then per snapshot: time f64, u[nx*ny] f64, v[nx*ny] f64.
//        The domain is not stored; readers assume [-pi, pi]^2.
// .lesp: "LESP", version u32, variant u8, layer count u32,
//        per layer: in_ch u32, out_ch u32, radius u32, activation u8,
//        then every parameter f64 in storage order (SKEW: raw B weights last).
//        SMAG stores zero layers and a single f64 holding Cs.

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_dataset(const SnapshotDataset& ds);
SnapshotDataset decode_dataset(const std::vector<std::uint8_t>& bytes);
void write_dataset(const std::string& path, const SnapshotDataset& ds);
SnapshotDataset read_dataset(const std::string& path);

std::vector<std::uint8_t> encode_checkpoint(const ClosureModel& model);
ClosureModel decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void write_checkpoint(const std::string& path, const ClosureModel& model);
ClosureModel read_checkpoint(const std::string& path);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

/// 64-bit FNV-1a, used to fingerprint configurations and trajectories.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fingerprint(const StaggeredVelocity& vel, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace les
