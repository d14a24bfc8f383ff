#pragma once

#include <cstdint>
#include <initializer_list>

namespace stripedepth {

/// SplitMix64 finalizer. Used to derive independent, order-free RNG seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Folds a master seed with a path of indices, e.g. (depth, pixel).
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

}  // namespace stripedepth
