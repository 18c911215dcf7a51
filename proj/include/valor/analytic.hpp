#ifndef VALOR_ANALYTIC_HPP
#define VALOR_ANALYTIC_HPP

/**
 * @file analytic.hpp
 * @brief One-dimensional Taylor-dispersion channel model and its Gaussian-in-time
 *        approximation around the peak.
 *
 * All functions are pure. Times are measured from the impulse release at t = 0;
 * every density and probability is zero for t <= 0.
 */

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "valor/channel.hpp"

namespace valor {

namespace detail {
// Exponents below this evaluate to zero instead of underflowing.
inline constexpr double kExponentFloor = -700.0;

inline double floored_exp(double e) { return e < kExponentFloor ? 0.0 : std::exp(e); }
}  // namespace detail

/**
 * @brief Axial position density of a released molecule at time t.
 *
 * p(x, t) = (4 pi D_e t)^(-1/2) exp(-(x - v_avg t)^2 / (4 D_e t)), in 1/um.
 */
inline double p_axial(double position, double t, const ChannelParams& p) {
    if (t <= 0.0) {
        return 0.0;
    }
    const double de = effective_diffusion(p);
    const double drift = position - p.mean_velocity * t;
    const double e = -drift * drift / (4.0 * de * t);
    return detail::floored_exp(e) / std::sqrt(4.0 * std::numbers::pi * de * t);
}

enum class ReceiverModel {
    small_width,  ///< w * p(l, t), the thin-receiver limit
    exact,        ///< integral of p over [l, l + w]
};

namespace detail {
// 0.5 * (erf(b) - erf(a)) for a <= b without cancellation in either tail.
inline double erf_difference_half(double a, double b) {
    if (a >= 0.0) {
        return 0.5 * (std::erfc(a) - std::erfc(b));
    }
    if (b <= 0.0) {
        return 0.5 * (std::erfc(-b) - std::erfc(-a));
    }
    return 0.5 * (std::erf(b) - std::erf(a));
}
}  // namespace detail

/// Probability that a single molecule lies inside the receiver slab at time t.
inline double detection_probability(double t, const ChannelParams& p,
                                    ReceiverModel model = ReceiverModel::small_width) {
    if (t <= 0.0) {
        return 0.0;
    }
    if (model == ReceiverModel::small_width) {
        return p.width * p_axial(p.distance, t, p);
    }
    const double scale = std::sqrt(4.0 * effective_diffusion(p) * t);
    const double front = p.mean_velocity * t;
    const double a = (p.distance - front) / scale;
    const double b = (p.distance + p.width - front) / scale;
    return std::clamp(detail::erf_difference_half(a, b), 0.0, 1.0);
}

/// Gaussian pulse in time: amplitude * exp(-(t - mean)^2 / (2 variance)).
struct GaussianPulse {
    double amplitude = 0.0;
    double mean = 0.0;      ///< s
    double variance = 0.0;  ///< s^2

    double operator()(double t) const {
        const double d = t - mean;
        return amplitude * detail::floored_exp(-d * d / (2.0 * variance));
    }
    double stddev() const { return std::sqrt(variance); }
};

/**
 * @brief Second-order expansion of the detection probability around t_peak.
 *
 * Keeping only the quadratic term of the exponent and freezing the 1/sqrt(t)
 * prefactor at t_peak gives mean l / v_avg, variance 2 D_e l / v_avg^3 and
 * amplitude w sqrt(v_avg / (4 pi D_e l)).
 */
inline GaussianPulse gaussian_approximation(const ChannelParams& p) {
    detail::require_flow(p);
    const double de = effective_diffusion(p);
    const double v = p.mean_velocity;
    GaussianPulse g;
    g.mean = p.distance / v;
    g.variance = 2.0 * de * p.distance / (v * v * v);
    g.amplitude = p.width * std::sqrt(v / (4.0 * std::numbers::pi * de * p.distance));
    return g;
}

/// Size of the cubic and quartic Taylor terms relative to the quadratic one
/// at one standard deviation from the peak.
struct ApproxDiagnostics {
    double alpha3 = 0.0;
    double alpha4 = 0.0;
    double ratio = 0.0;  ///< D_e / (l v_avg)
    bool pass = false;   ///< max(alpha3, alpha4) <= 1 and ratio <= margin
};

inline ApproxDiagnostics approximation_diagnostics(double effective_diffusivity, double distance,
                                                   double mean_velocity,
                                                   double margin = kDefaultRegimeMargin) {
    if (!(margin > 0.0)) {
        throw std::invalid_argument("approximation margin must be positive");
    }
    if (!(distance > 0.0) || !(mean_velocity > 0.0)) {
        throw std::domain_error("approximation diagnostics need positive distance and velocity");
    }
    ApproxDiagnostics d;
    d.ratio = effective_diffusivity / (distance * mean_velocity);
    d.alpha3 = 3.0 * std::numbers::sqrt2 * std::sqrt(d.ratio);
    d.alpha4 = 24.0 * d.ratio;
    d.pass = std::max(d.alpha3, d.alpha4) <= 1.0 && d.ratio <= margin;
    return d;
}

inline ApproxDiagnostics approximation_diagnostics(const ChannelParams& p,
                                                   double margin = kDefaultRegimeMargin) {
    return approximation_diagnostics(effective_diffusion(p), p.distance, p.mean_velocity, margin);
}

/// Simulated duration that covers the Gaussian pulse out to 12 standard deviations.
inline double auto_duration(const ChannelParams& p) {
    const GaussianPulse g = gaussian_approximation(p);
    return g.mean + 12.0 * g.stddev();
}

}  // namespace valor

#endif  // VALOR_ANALYTIC_HPP
