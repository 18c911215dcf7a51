#ifndef VALOR_ESTIMATORS_HPP
#define VALOR_ESTIMATORS_HPP

/**
 * @file estimators.hpp
 * @brief Distance estimators for a received count signal.
 *
 * VALOR inverts the variance-distance relation sigma^2 = 2 D_e l / v_avg^3 on
 * the measured temporal variance, which is invariant to any shift of the time
 * axis and so needs no emission time. The peak-time baseline reads the
 * distance off the arrival time of the signal maximum and therefore needs the
 * emission time.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "valor/analytic.hpp"
#include "valor/channel.hpp"
#include "valor/signal.hpp"

namespace valor {

class NoSignalError : public std::runtime_error {
public:
    NoSignalError() : std::runtime_error("signal has no nonzero samples") {}
};

class DegenerateSignalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Moments of a signal treated as a probability mass over its sample times.
struct SignalMoments {
    double mass = 0.0;       ///< sum of values times sample spacing
    double mean_time = 0.0;  ///< s
    double variance = 0.0;   ///< s^2
};

struct MomentOptions {
    /// Samples below tail_clip * max(value) are dropped. Biases the variance
    /// low; meant only for records too short to contain the whole pulse.
    double tail_clip = 0.0;
};

/**
 * @brief Weighted mean and central second moment on a uniform grid.
 *
 * Computed in sample-index space and scaled by the interval afterwards, so the
 * variance does not depend on start_time at all.
 */
template <class Values>
SignalMoments uniform_moments(double start_time, double interval, const Values& values,
                              const MomentOptions& opt = {}) {
    const std::size_t n = std::size(values);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = static_cast<double>(values[i]);
        if (!(v >= 0.0)) {
            throw std::invalid_argument("signal values must be non-negative");
        }
        peak = std::max(peak, v);
    }
    if (peak <= 0.0) {
        throw NoSignalError();
    }
    const double floor = opt.tail_clip * peak;
    auto weight = [&](std::size_t i) {
        const double v = static_cast<double>(values[i]);
        return v >= floor ? v : 0.0;
    };
    double w0 = 0.0, w1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weight(i);
        w0 += w;
        w1 += w * static_cast<double>(i);
    }
    const double mean_index = w1 / w0;
    double w2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(i) - mean_index;
        w2 += weight(i) * d * d;
    }
    SignalMoments m;
    m.mass = w0 * interval;
    m.mean_time = start_time + mean_index * interval;
    m.variance = w2 / w0 * interval * interval;
    return m;
}

inline SignalMoments signal_moments(const SignalRecord& s, const MomentOptions& opt = {}) {
    return uniform_moments(s.start_time, s.interval, s.counts, opt);
}

inline SignalMoments signal_moments(const UniformSeries& s, const MomentOptions& opt = {}) {
    return uniform_moments(s.start_time, s.interval, s.values, opt);
}

/// Two-pass weighted moments for arbitrary (not necessarily uniform) times.
inline SignalMoments weighted_moments(std::span<const double> times, std::span<const double> weights) {
    if (times.size() != weights.size()) {
        throw std::invalid_argument("times and weights differ in length");
    }
    double w0 = 0.0;
    for (double w : weights) {
        if (w < 0.0) {
            throw std::invalid_argument("weights must be non-negative");
        }
        w0 += w;
    }
    if (!(w0 > 0.0)) {
        throw NoSignalError();
    }
    const double origin = times.front();
    double w1 = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        w1 += weights[i] * (times[i] - origin);
    }
    const double mean = w1 / w0;
    double w2 = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double d = times[i] - origin - mean;
        w2 += weights[i] * d * d;
    }
    return {w0, origin + mean, w2 / w0};
}

enum class EstimatorMethod { valor, peak_time };

inline const char* to_string(EstimatorMethod m) {
    return m == EstimatorMethod::valor ? "valor" : "peak_time";
}

enum EstimateWarning : unsigned {
    kWarnNone = 0,
    kWarnPeakAtBoundary = 1u << 0,   ///< argmax on the first or last sample; record may be truncated
    kWarnNonPositive = 1u << 1,      ///< l_hat <= 0 (peak time before the assumed emission)
};

struct EstimateResult {
    EstimatorMethod method = EstimatorMethod::valor;
    double l_hat = 0.0;  ///< um
    double sigma2_hat = std::numeric_limits<double>::quiet_NaN();  ///< s^2, valor only
    double t_peak_hat = std::numeric_limits<double>::quiet_NaN();  ///< s, peak_time only
    ApproxDiagnostics diagnostics;  ///< evaluated at l_hat
    double dispersion_ratio = std::numeric_limits<double>::quiet_NaN();  ///< Pe / (4 l_hat / r_v)
    unsigned warnings = kWarnNone;
};

/// Parameters VALOR assumes known.
struct ValorInputs {
    double mean_velocity = 0.0;        ///< um/s
    double effective_diffusion = 0.0;  ///< um^2/s

    static ValorInputs from(const ChannelParams& p) {
        return {p.mean_velocity, valor::effective_diffusion(p)};
    }
};

namespace detail {
inline void fill_diagnostics(EstimateResult& r, double effective_diffusivity, double mean_velocity,
                             const ChannelParams* context) {
    if (!(r.l_hat > 0.0)) {
        return;
    }
    r.diagnostics = approximation_diagnostics(effective_diffusivity, r.l_hat, mean_velocity);
    if (context != nullptr) {
        ChannelParams q = *context;
        q.distance = r.l_hat;
        r.dispersion_ratio = check_condition1(q).ratio;
    }
}
}  // namespace detail

/// l_hat = sigma2_hat v_avg^3 / (2 D_e) from an already measured variance.
inline EstimateResult estimate_valor_from_variance(double sigma2_hat, const ValorInputs& in,
                                                   const ChannelParams* context = nullptr) {
    if (!(in.mean_velocity > 0.0) || !(in.effective_diffusion > 0.0)) {
        throw std::invalid_argument("VALOR needs positive v_avg and D_e");
    }
    if (!(sigma2_hat > 0.0) || !std::isfinite(sigma2_hat)) {
        throw DegenerateSignalError("signal variance is zero; distance is not identifiable");
    }
    const double v = in.mean_velocity;
    EstimateResult r;
    r.method = EstimatorMethod::valor;
    r.sigma2_hat = sigma2_hat;
    r.l_hat = sigma2_hat * v * v * v / (2.0 * in.effective_diffusion);
    detail::fill_diagnostics(r, in.effective_diffusion, v, context);
    return r;
}

/// VALOR on a recorded signal. `context` (full channel) only adds the
/// dispersion-regime ratio to the diagnostics.
inline EstimateResult estimate_valor(const SignalRecord& s, const ValorInputs& in,
                                     const ChannelParams* context = nullptr,
                                     const MomentOptions& opt = {}) {
    return estimate_valor_from_variance(signal_moments(s, opt).variance, in, context);
}

inline EstimateResult estimate_valor(const UniformSeries& s, const ValorInputs& in,
                                     const ChannelParams* context = nullptr,
                                     const MomentOptions& opt = {}) {
    return estimate_valor_from_variance(signal_moments(s, opt).variance, in, context);
}

inline constexpr std::size_t kDefaultSmoothingWindow = 51;

/// Centered moving average; near the ends the window shrinks to the samples available.
template <class Values>
std::vector<double> moving_average(const Values& values, std::size_t window) {
    if (window < 1 || window % 2 == 0) {
        throw std::invalid_argument("smoothing window must be odd and >= 1");
    }
    const std::size_t n = std::size(values);
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + static_cast<double>(values[i]);
    }
    const std::size_t half = window / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
    }
    return out;
}

/**
 * @brief Peak-time baseline: l_hat = v_avg (argmax of smoothed signal - emission time).
 *
 * `emission_time` is on the signal's own clock. Ties resolve to the earliest sample.
 */
template <class Values>
EstimateResult estimate_peak_time(double start_time, double interval, const Values& values,
                                  double emission_time, double mean_velocity,
                                  std::size_t smoothing_window = kDefaultSmoothingWindow,
                                  const ChannelParams* context = nullptr) {
    if (!(mean_velocity > 0.0)) {
        throw std::invalid_argument("peak-time estimate needs a positive v_avg");
    }
    const std::vector<double> smooth = moving_average(values, smoothing_window);
    const auto it = std::max_element(smooth.begin(), smooth.end());
    if (it == smooth.end() || !(*it > 0.0)) {
        throw NoSignalError();
    }
    const std::size_t idx = static_cast<std::size_t>(it - smooth.begin());
    EstimateResult r;
    r.method = EstimatorMethod::peak_time;
    r.t_peak_hat = start_time + static_cast<double>(idx) * interval - emission_time;
    r.l_hat = mean_velocity * r.t_peak_hat;
    if (idx == 0 || idx + 1 == smooth.size()) {
        r.warnings |= kWarnPeakAtBoundary;
    }
    if (!(r.l_hat > 0.0)) {
        r.warnings |= kWarnNonPositive;
    }
    if (context != nullptr) {
        detail::fill_diagnostics(r, effective_diffusion(*context), mean_velocity, context);
    }
    return r;
}

inline EstimateResult estimate_peak_time(const SignalRecord& s, double emission_time,
                                         double mean_velocity,
                                         std::size_t smoothing_window = kDefaultSmoothingWindow,
                                         const ChannelParams* context = nullptr) {
    return estimate_peak_time(s.start_time, s.interval, s.counts, emission_time, mean_velocity,
                              smoothing_window, context);
}

inline EstimateResult estimate_peak_time(const UniformSeries& s, double emission_time,
                                         double mean_velocity,
                                         std::size_t smoothing_window = kDefaultSmoothingWindow,
                                         const ChannelParams* context = nullptr) {
    return estimate_peak_time(s.start_time, s.interval, s.values, emission_time, mean_velocity,
                              smoothing_window, context);
}

}  // namespace valor

#endif  // VALOR_ESTIMATORS_HPP
