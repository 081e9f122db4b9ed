#pragma once

#include <cstdint>

namespace pat {

/// 64-bit seed. Every random stream in the toolkit is derived from one of these.
struct Seed {
    std::uint64_t value = 0;

    constexpr Seed() = default;
    constexpr explicit Seed(std::uint64_t v) : value(v) {}

    friend constexpr bool operator==(Seed, Seed) = default;
};

/// SplitMix64 step (Steele, Lea, Flood 2014). Used for seeding and for
/// deriving child seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Child seed number `index` of `parent`: the (index+1)-th SplitMix64 output
/// of a state initialised to parent.value ^ (stream * 0xd1b54a32d192ed03).
/// Distinct `stream` values give disjoint families (train vs. eval, noise vs.
/// phantom, ...).
constexpr Seed derive_seed(Seed parent, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t state = parent.value ^ (stream * 0xd1b54a32d192ed03ULL);
    state += index * 0x9e3779b97f4a7c15ULL;
    return Seed{splitmix64(state)};
}

/// xoshiro256** 1.0 (Blackman, Vigna). State is filled from SplitMix64 of the
/// seed. All distributions below are implemented here so that streams are
/// bit-identical across standard libraries.
class Rng {
public:
    explicit Rng(Seed seed);

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n), unbiased (Lemire's multiply-shift with rejection).
    std::uint64_t uniform_index(std::uint64_t n);

    /// Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Standard normal via the Box-Muller transform; the second variate is cached.
    double normal();

private:
    std::uint64_t s_[4];
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace pat
