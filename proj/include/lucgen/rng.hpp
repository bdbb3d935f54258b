#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace lucgen::num {

// Deterministic random stream with named sub-streams.
//
// Pinned algorithm (platform-stable, documented here so runs reproduce
// anywhere):
//   - state:    xoshiro256++ (Blackman/Vigna), seeded by four successive
//               splitmix64 outputs of the 64-bit seed;
//   - streams:  stream(label) hashes the label with FNV-1a 64 and remixes
//               seed ^ hash through splitmix64 to obtain the child seed;
//               stream(label, index) additionally mixes the index;
//   - uniform:  next_u64() >> 11 scaled by 2^-53, giving [0, 1);
//   - normal:   Box-Muller on two uniforms; the second value of each pair is
//               cached and returned by the next call;
//   - index(n): Lemire multiply-shift of next_u64() into [0, n).
//
// Identical (seed, label, draw index) always yields identical output.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    SeededRng stream(std::string_view label) const;
    SeededRng stream(std::string_view label, std::uint64_t index) const;

    std::uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double normal();                        // standard normal
    std::size_t index(std::size_t n);       // uniform in [0, n); n >= 1

    // k distinct indices drawn from [0, n) by partial Fisher-Yates; k <= n.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t seed_ = 0;
    std::array<std::uint64_t, 4> s_{};
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

} // namespace lucgen::num
