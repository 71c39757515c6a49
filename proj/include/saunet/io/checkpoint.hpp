#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "saunet/model/network.hpp"
#include "saunet/optim/adam.hpp"

namespace saunet::io {

inline constexpr char kCheckpointMagic[4] = {'S', 'A', 'U', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all integers and floats little-endian:
///
///   "SAUN" | u32 version
///   spec:    u8 variant | i32 base, depth, in, out, upconv_kernel, block_size | f64 drop_rate
///   params:  u32 count | count x record
///   optim:   u8 present | [f64 lr, beta1, beta2, eps | u64 step | u32 count | count x record]
///   u32 crc32 of every preceding byte
///
///   record:  u16 name_len | name | u8 dtype (1 = f32, 2 = f64) | u8 rank | rank x u64 dim | raw data
///
/// Optimizer records are named "<param>.m" and "<param>.v".
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const model::Network<T>& net,
                     const optim::Adam<T>* optimizer = nullptr);

struct OptimizerSnapshot {
  optim::AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

template <typename T>
struct LoadedCheckpoint {
  model::Network<T> network;
  std::optional<OptimizerSnapshot> optimizer;
};

/// Throws DataError on bad magic, version mismatch, truncation or checksum
/// failure, and ConfigError when `expected` is given and differs from the
/// stored spec.
template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path,
                                    const model::ArchitectureSpec* expected = nullptr);

model::ArchitectureSpec read_checkpoint_spec(const std::filesystem::path& path);

/// Copies a snapshot into an optimizer built over the same network.
template <typename T>
void restore_optimizer(const OptimizerSnapshot& snapshot, optim::Adam<T>& optimizer);

}  // namespace saunet::io
