#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace planlab {

// splitmix64; used for seed derivation so independent streams never share state.
inline auto splitmix64(std::uint64_t x) -> std::uint64_t {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a over bytes; stable across platforms, used for feature hashing and vocab digests.
inline auto fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) -> std::uint64_t {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Derives a child seed from (seed, tag, index). Tag keeps streams for different
// purposes disjoint even when indices collide.
inline auto derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) -> std::uint64_t {
    return splitmix64(seed ^ splitmix64(fnv1a(tag) + 0x9e3779b97f4a7c15ULL * (index + 1)));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    auto next_u64() -> std::uint64_t { return engine_(); }

    // Uniform in [0, n). Rejection sampling keeps the mapping portable; the
    // standard distributions are implementation-defined and would break
    // byte-identical reruns across toolchains.
    auto uniform_below(std::uint64_t n) -> std::uint64_t {
        if (n == 0) { return 0; }
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
        std::uint64_t v = engine_();
        while (v >= limit) { v = engine_(); }
        return v % n;
    }

    // Uniform double in [0, 1) with 53 bits of precision.
    auto uniform_double() -> double {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    template <typename T>
    auto pick(const std::vector<T>& items) -> const T& {
        return items[static_cast<std::size_t>(uniform_below(items.size()))];
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace planlab
