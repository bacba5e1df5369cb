#pragma once

#include <cstdint>
#include <random>

namespace tlsnoise {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Seed of an independent sub-stream. Streams depend only on
/// (master seed, stream id), never on scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return detail::splitmix64(detail::splitmix64(master) ^ detail::splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Rng(seq);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) { return make_rng(derive_seed(master, stream)); }

/// Well-known stream ids; keep stable, they define the meaning of a seed.
namespace stream {
inline constexpr std::uint64_t white = 1;
inline constexpr std::uint64_t one_over_f = 2;
inline constexpr std::uint64_t ensemble = 3;
inline constexpr std::uint64_t ensemble_corners = 4;
inline constexpr std::uint64_t relaxation = 10;
inline constexpr std::uint64_t ramsey = 11;
inline constexpr std::uint64_t spinlock = 12;
inline constexpr std::uint64_t lorentzian_base = 1000;
inline constexpr std::uint64_t telegraph_base = 2000;
inline constexpr std::uint64_t ensemble_member_base = 100000;
inline constexpr std::uint64_t shots_base = 5000;
} // namespace stream

} // namespace tlsnoise
