#pragma once

#include <cstdint>
#include <random>

namespace fedgan {

using Rng = std::mt19937_64;

/// Independent, reproducible generator for one (round, stream) pair under a
/// master seed. Client i uses stream i; the aggregator uses the reserved ids.
Rng substream(std::uint64_t master_seed, std::uint64_t round, std::uint64_t stream);

namespace streams {
inline constexpr std::uint64_t kInit = 0;
inline constexpr std::uint64_t kAggregatorMetadata = 1ull << 32;
inline constexpr std::uint64_t kAggregatorTrain = (1ull << 32) + 1;
inline constexpr std::uint64_t kReport = (1ull << 32) + 2;
inline constexpr std::uint64_t kData = (1ull << 32) + 3;
inline constexpr std::uint64_t kPartition = (1ull << 32) + 4;
}  // namespace streams

}  // namespace fedgan
