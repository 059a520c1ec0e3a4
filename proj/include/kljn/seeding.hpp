#pragma once

#include <cstdint>
#include <initializer_list>

namespace kljn {

// SplitMix64 finalizer. Used to derive independent per-task seeds so that
// results do not depend on the order in which tasks are executed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t p : path) {
        s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    }
    return s;
}

// Stream tags keep the seed spaces of different consumers disjoint.
enum class SeedStream : std::uint64_t {
    choices = 1,
    branch_noise = 2,
    calibration = 3,
    eve_coin = 4,
};

constexpr std::uint64_t tag(SeedStream s) noexcept { return static_cast<std::uint64_t>(s); }

inline constexpr const char* kGeneratorName = "std::mt19937_64 + std::normal_distribution, splitmix64 seed tree";

}  // namespace kljn
