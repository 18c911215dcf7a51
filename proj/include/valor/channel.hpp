#ifndef VALOR_CHANNEL_HPP
#define VALOR_CHANNEL_HPP

/**
 * @file channel.hpp
 * @brief Physical scenario of a vessel-like channel and the closed-form flow
 *        and dispersion quantities derived from it.
 *
 * Units are fixed repo-wide: micrometres and seconds. Diffusion coefficients
 * are in um^2/s, velocities in um/s.
 */

#include <cmath>
#include <stdexcept>
#include <string>

namespace valor {

/// Cylindrical vessel with Poiseuille flow and a ring receiver downstream of a
/// point emitter.
struct ChannelParams {
    double diffusion = 300.0;       ///< D, um^2/s
    double radius = 5.0;            ///< r_v, um
    double mean_velocity = 2000.0;  ///< v_avg (cross-sectional mean), um/s
    double distance = 1000.0;       ///< l, emitter to receiver leading edge, um
    double width = 1.0;             ///< w, receiver axial width, um

    friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

/// Throws std::invalid_argument unless every field is finite and positive and
/// the receiver does not overlap the emitter (w <= l).
///
/// A still fluid (v_avg == 0) is accepted when `allow_still_fluid` is set; the
/// particle simulator uses it for Brownian consistency checks. Every closed form
/// that divides by v_avg rejects it separately.
inline void validate(const ChannelParams& p, bool allow_still_fluid = false) {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(p.diffusion)) {
        throw std::invalid_argument("diffusion coefficient must be positive");
    }
    if (!positive(p.radius)) {
        throw std::invalid_argument("vessel radius must be positive");
    }
    if (!std::isfinite(p.mean_velocity) || p.mean_velocity < 0.0 ||
        (p.mean_velocity == 0.0 && !allow_still_fluid)) {
        throw std::invalid_argument("mean flow velocity must be positive");
    }
    if (!positive(p.distance)) {
        throw std::invalid_argument("receiver distance must be positive");
    }
    if (!positive(p.width)) {
        throw std::invalid_argument("receiver width must be positive");
    }
    if (p.width > p.distance) {
        throw std::invalid_argument("receiver width must not exceed its distance from the emitter");
    }
}

namespace detail {
inline void require_flow(const ChannelParams& p) {
    if (!(p.mean_velocity > 0.0)) {
        throw std::domain_error("closed form requires a positive mean flow velocity");
    }
}
}  // namespace detail

/**
 * @brief Axial velocity of the parabolic Poiseuille profile.
 *
 * v(r) = 2 v_avg (1 - r^2 / r_v^2). Maximal (2 v_avg) on the axis, zero at the
 * no-slip wall.
 */
inline double poiseuille_velocity(double r, const ChannelParams& p) {
    if (!(r >= 0.0 && r <= p.radius)) {
        throw std::domain_error("radial position outside [0, r_v]: " + std::to_string(r));
    }
    const double q = r / p.radius;
    return 2.0 * p.mean_velocity * (1.0 - q * q);
}

/// Pe = v_avg r_v / D.
inline double peclet(const ChannelParams& p) { return p.mean_velocity * p.radius / p.diffusion; }

/// Taylor-Aris effective axial diffusion, D_e = D (1 + Pe^2 / 48).
inline double effective_diffusion(const ChannelParams& p) {
    const double pe = peclet(p);
    return p.diffusion * (1.0 + pe * pe / 48.0);
}

/// Time at which the exponent of the arrival distribution is maximal, l / v_avg.
inline double peak_time(const ChannelParams& p) {
    detail::require_flow(p);
    return p.distance / p.mean_velocity;
}

/// Temporal variance of the Gaussian-in-time arrival pulse, 2 D_e l / v_avg^3.
inline double predicted_variance(const ChannelParams& p) {
    detail::require_flow(p);
    const double v = p.mean_velocity;
    return 2.0 * effective_diffusion(p) * p.distance / (v * v * v);
}

struct DerivedChannel {
    double peclet = 0.0;
    double effective_diffusion = 0.0;  ///< um^2/s
    double peak_time = 0.0;            ///< s
    double predicted_variance = 0.0;   ///< s^2
};

inline DerivedChannel derive(const ChannelParams& p) {
    return {peclet(p), effective_diffusion(p), peak_time(p), predicted_variance(p)};
}

/// Outcome of a "much less than" check, operationalized as ratio <= margin.
struct RegimeCheck {
    double ratio = 0.0;
    bool pass = false;
};

inline constexpr double kDefaultRegimeMargin = 0.1;

/**
 * @brief Validity of the Taylor-dispersion reduction, Pe << 4 l / r_v.
 *
 * Returns the ratio Pe / (4 l / r_v); passes iff ratio <= margin.
 */
inline RegimeCheck check_condition1(const ChannelParams& p,
                                           double margin = kDefaultRegimeMargin) {
    if (!(margin > 0.0)) {
        throw std::invalid_argument("regime margin must be positive");
    }
    const double ratio = peclet(p) / (4.0 * p.distance / p.radius);
    return {ratio, ratio <= margin};
}

}  // namespace valor

#endif  // VALOR_CHANNEL_HPP
