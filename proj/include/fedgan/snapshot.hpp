#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fedgan/nn.hpp"

namespace fedgan {

/// Model snapshot layout (all integers u32 little-endian, all reals f64 little-endian):
///   "FGBF" | version | layer count |
///   per layer: activation tag | in | out | in*out weights (row-major) | out biases
inline constexpr std::uint32_t kSnapshotVersion = 1;

std::vector<std::uint8_t> encode_snapshot(const DenseNet& net);
DenseNet decode_snapshot(std::span<const std::uint8_t> bytes);

void save_snapshot(const DenseNet& net, const std::filesystem::path& path);
DenseNet load_snapshot(const std::filesystem::path& path);

/// FNV-1a over the encoded snapshot; identifies a parameter state in reports.
std::uint64_t snapshot_id(const DenseNet& net);

}  // namespace fedgan
