#ifndef VALOR_PARTICLE_HPP
#define VALOR_PARTICLE_HPP

// Single-particle Euler-Maruyama update with a reflective cylindrical wall.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "valor/channel.hpp"

namespace valor {

/// Position in um; x is the vessel axis, (y, z) the cross-section.
struct Particle {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double radial() const { return std::hypot(y, z); }
};

struct CrossSection {
    double y = 0.0;
    double z = 0.0;
};

inline constexpr int kMaxReflections = 8;

/**
 * @brief Specular radial reflection off the wall r = r_v.
 *
 * A point outside maps to radius 2 r_v - r along the same polar angle (a
 * negative radius crosses the axis). Repeats while the point is still outside;
 * returns nullopt if it has not re-entered after kMaxReflections passes.
 */
inline std::optional<CrossSection> reflect(double y, double z, double radius) {
    for (int pass = 0; pass <= kMaxReflections; ++pass) {
        const double r = std::hypot(y, z);
        if (r <= radius) {
            return CrossSection{y, z};
        }
        if (pass == kMaxReflections) {
            break;
        }
        const double scale = (2.0 * radius - r) / r;
        y *= scale;
        z *= scale;
    }
    return std::nullopt;
}

/**
 * @brief One time step driven by three standard normal draws (x, y, z).
 *
 * The flow displacement uses the radial position before the step. Returns
 * nullopt when the wall reflection does not converge; the caller redraws the
 * noise for the same dt.
 */
inline std::optional<Particle> try_step(const Particle& particle, double dt,
                                        const ChannelParams& p,
                                        const std::array<double, 3>& noise) {
    const double q = std::min(particle.radial() / p.radius, 1.0);
    const double flow = 2.0 * p.mean_velocity * (1.0 - q * q);
    const double sigma = std::sqrt(2.0 * p.diffusion * dt);
    Particle next;
    next.x = particle.x + flow * dt + sigma * noise[0];
    const auto cs = reflect(particle.y + sigma * noise[1], particle.z + sigma * noise[2], p.radius);
    if (!cs) {
        return std::nullopt;
    }
    next.y = cs->y;
    next.z = cs->z;
    return next;
}

/// Steps until a draw is accepted. `draw` fills three standard normals.
template <class DrawNormals>
Particle step(const Particle& particle, double dt, const ChannelParams& p, DrawNormals&& draw) {
    for (;;) {
        std::array<double, 3> noise{};
        draw(noise);
        if (auto next = try_step(particle, dt, p, noise)) {
            return *next;
        }
    }
}

}  // namespace valor

#endif  // VALOR_PARTICLE_HPP
