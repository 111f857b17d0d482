#include "fedgan/rng.hpp"

namespace fedgan {

Rng substream(std::uint64_t master_seed, std::uint64_t round, std::uint64_t stream) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(master_seed), hi(master_seed), lo(round), hi(round), lo(stream), hi(stream)};
    return Rng(seq);
}

}  // namespace fedgan
