#pragma once

// Reproducible random number generation with (root, stream) sub-seeding.
// Every Monte Carlo replication draws from its own substream derived from
// (root, stream, replication index), so results do not depend on how
// replications are distributed over threads.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace minmax {

struct SeedSpec {
    std::uint64_t root = 0;
    std::uint64_t stream = 0;

    // Child seed for an independent purpose (moment matching, per-N jobs, ...).
    [[nodiscard]] SeedSpec child(std::uint64_t tag) const noexcept;

    friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

namespace rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ (Blackman/Vigna, public domain reference implementation).
class Xoshiro256pp {
public:
    Xoshiro256pp() : Xoshiro256pp(0) {}

    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t chain = seed;
        for (auto& word : state_) word = splitmix64(chain);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t operator()() noexcept {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on (0, 1]; never returns 0, so log() is always finite.
    double uniform01() noexcept {
        return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
    }

    // One Box-Muller pair per two uniforms, no cached spare: the value
    // sequence is a pure function of the engine state.
    void normal_pair(double& a, double& b) noexcept {
        const double r = std::sqrt(-2.0 * std::log(uniform01()));
        const double t = 2.0 * std::numbers::pi * uniform01();
        a = r * std::cos(t);
        b = r * std::sin(t);
    }

    double normal() noexcept {
        double a, b;
        normal_pair(a, b);
        return a;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

inline std::uint64_t mix3(std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
    std::uint64_t chain = a;
    std::uint64_t h = splitmix64(chain);
    chain ^= b * 0xff51afd7ed558ccdULL;
    h ^= splitmix64(chain);
    chain ^= c * 0xc4ceb9fe1a85ec53ULL;
    h ^= splitmix64(chain);
    return h;
}

// Engine for one replication of one stream. Distinct (root, stream, rep)
// triples give statistically independent sequences; equal triples give
// bit-identical ones.
inline Xoshiro256pp engine_for(SeedSpec seed, std::uint64_t rep = 0) noexcept {
    return Xoshiro256pp(mix3(seed.root, seed.stream, rep));
}

inline void fill_normals(Xoshiro256pp& eng, std::span<double> out) noexcept {
    std::size_t i = 0;
    for (; i + 1 < out.size(); i += 2) eng.normal_pair(out[i], out[i + 1]);
    if (i < out.size()) out[i] = eng.normal();
}

}  // namespace rng

inline SeedSpec SeedSpec::child(std::uint64_t tag) const noexcept {
    return SeedSpec{root, rng::mix3(stream, tag, 0x5eedc0de5eedc0deULL)};
}

}  // namespace minmax
