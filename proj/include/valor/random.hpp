#ifndef VALOR_RANDOM_HPP
#define VALOR_RANDOM_HPP

/**
 * @file random.hpp
 * @brief Keyed per-particle random streams and branch-free normal variates.
 *
 * Every particle owns a stream keyed by (master seed, replication, particle id),
 * so a trajectory depends only on its key and never on scheduling. The
 * generator and the Box-Muller transform are written as straight-line float
 * code so the particle kernel can evaluate them in SIMD lanes.
 */

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace valor {

/// SplitMix64 finalizer; used only for key derivation.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic child seed for a labelled sub-run (sweep group, figure panel).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label) {
    return splitmix64(master ^ splitmix64(label + 0x632be59bd9b4e019ULL));
}

/// xoshiro128+ with 32-bit lanes. Only the upper 24 bits of each output are used.
struct Xoshiro128Plus {
    std::uint32_t s[4] = {1, 0, 0, 0};

    constexpr std::uint32_t next() {
        const std::uint32_t result = s[0] + s[3];
        const std::uint32_t t = s[1] << 9;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = std::rotl(s[3], 11);
        return result;
    }
};

/// Stream for one particle of one replication.
constexpr Xoshiro128Plus particle_stream(std::uint64_t seed, std::uint64_t replication,
                                         std::uint64_t particle) {
    std::uint64_t k = splitmix64(seed);
    k = splitmix64(k ^ (replication * 0xd1b54a32d192ed03ULL));
    k = splitmix64(k ^ (particle * 0x8cb92ba72f3d8dd7ULL));
    const std::uint64_t a = splitmix64(k);
    const std::uint64_t b = splitmix64(a);
    Xoshiro128Plus g;
    g.s[0] = static_cast<std::uint32_t>(a);
    g.s[1] = static_cast<std::uint32_t>(a >> 32);
    g.s[2] = static_cast<std::uint32_t>(b);
    g.s[3] = static_cast<std::uint32_t>(b >> 32);
    if ((g.s[0] | g.s[1] | g.s[2] | g.s[3]) == 0) {
        g.s[0] = 1;
    }
    return g;
}

/// Uniform on (0, 1] with 24-bit resolution.
inline float unit_uniform(std::uint32_t bits) {
    return static_cast<float>((bits >> 8) + 1u) * (1.0f / 16777216.0f);
}

/// Natural log for positive normal floats; max abs error ~1e-7 on (0, 1].
inline float fast_log(float u) {
    const std::uint32_t b = std::bit_cast<std::uint32_t>(u);
    const std::uint32_t mant = (b & 0x007fffffu) | 0x3f800000u;
    // Fold the mantissa into [sqrt(1/2), sqrt(2)).
    const std::uint32_t fold = mant > 0x3fb504f3u ? 1u : 0u;
    const float m = std::bit_cast<float>(mant - (fold << 23));
    const float e = static_cast<float>(static_cast<int>(b >> 23) - 127 + static_cast<int>(fold));
    const float x = m - 1.0f;
    const float z = x * x;
    float y = 7.0376836292e-2f;
    y = y * x - 1.1514610310e-1f;
    y = y * x + 1.1676998740e-1f;
    y = y * x - 1.2420140846e-1f;
    y = y * x + 1.4249322787e-1f;
    y = y * x - 1.6668057665e-1f;
    y = y * x + 2.0000714765e-1f;
    y = y * x - 2.4999993993e-1f;
    y = y * x + 3.3333331174e-1f;
    y = y * x * z;
    y -= 0.5f * z;
    return x + y + e * 0.693147180559945f;
}

/// sin and cos of phi on [-pi/2, pi/2]; least-squares fits on that interval,
/// absolute error below 1e-8 before float rounding.
inline void sin_cos_quarter(float phi, float& s, float& c) {
    const float p2 = phi * phi;
    s = phi * (1.0f + p2 * (-1.6666660285e-1f +
                            p2 * (8.3330843948e-3f + p2 * (-1.9810871624e-4f + p2 * 2.6084540667e-6f))));
    c = 1.0f + p2 * (-4.9999999535e-1f +
                     p2 * (4.1666640258e-2f +
                           p2 * (-1.3888398351e-3f + p2 * (2.4761655690e-5f + p2 * -2.6073480084e-7f))));
}

/**
 * @brief Box-Muller transform of two (0, 1] uniforms into two standard normals.
 *
 * The angle 2 pi (u2 - 1/2) is built from the half angle by the double-angle
 * identities, which keeps the polynomial on [-pi/2, pi/2]. Shifting the angle
 * by pi negates both outputs, leaving the joint distribution unchanged.
 */
inline void box_muller(float u1, float u2, float& n1, float& n2) {
    const float r = std::sqrt(-2.0f * fast_log(u1));
    float s, c;
    sin_cos_quarter((u2 - 0.5f) * std::numbers::pi_v<float>, s, c);
    n1 = r * (2.0f * s * c);
    n2 = r * (c * c - s * s);
}

/// Largest |n| box_muller can return: sqrt(-2 ln 2^-24).
inline constexpr double kMaxNormalMagnitude = 5.7686;

/// Standard normals from a particle stream, drawn in Box-Muller pairs.
struct NormalSource {
    Xoshiro128Plus rng;

    float uniform() { return unit_uniform(rng.next()); }

    void pair(float& a, float& b) {
        const float u1 = uniform();
        const float u2 = uniform();
        box_muller(u1, u2, a, b);
    }
};

}  // namespace valor

#endif  // VALOR_RANDOM_HPP
