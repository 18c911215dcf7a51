#ifndef VALOR_METRICS_HPP
#define VALOR_METRICS_HPP

// Aggregate statistics for sweep results and figure checks.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>

namespace valor {

class UndefinedMetricError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct MeanStd {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();  ///< sample (n - 1) standard deviation
    std::size_t count = 0;
};

inline MeanStd mean_std(std::span<const double> xs) {
    MeanStd r;
    r.count = xs.size();
    if (xs.empty()) {
        return r;
    }
    double s = 0.0;
    for (double x : xs) {
        s += x;
    }
    r.mean = s / static_cast<double>(xs.size());
    if (xs.size() < 2) {
        r.stddev = 0.0;
        return r;
    }
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - r.mean) * (x - r.mean);
    }
    r.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return r;
}

/**
 * @brief Coefficient of determination of `predicted` against `observed`.
 *
 * 1 - SS_res / SS_tot with SS_tot about the mean of `observed`. `predicted` is
 * taken as given (e.g. a theory line), not refitted, so the value can be
 * negative.
 */
inline double r_squared(std::span<const double> observed, std::span<const double> predicted) {
    if (observed.size() != predicted.size()) {
        throw std::invalid_argument("r_squared: length mismatch");
    }
    if (observed.size() < 2) {
        throw std::invalid_argument("r_squared: need at least two points");
    }
    double mean = 0.0;
    for (double o : observed) {
        mean += o;
    }
    mean /= static_cast<double>(observed.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        ss_tot += (observed[i] - mean) * (observed[i] - mean);
        ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    }
    if (!(ss_tot > 0.0)) {
        throw UndefinedMetricError("r_squared undefined for constant observations");
    }
    return 1.0 - ss_res / ss_tot;
}

/// Root-mean-square difference divided by `reference` (typically the model peak).
inline double normalized_rmse(std::span<const double> observed, std::span<const double> predicted,
                              double reference) {
    if (observed.size() != predicted.size() || observed.empty()) {
        throw std::invalid_argument("normalized_rmse: need equal, non-empty inputs");
    }
    if (!(reference > 0.0)) {
        throw std::invalid_argument("normalized_rmse: reference must be positive");
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        ss += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    }
    return std::sqrt(ss / static_cast<double>(observed.size())) / reference;
}

/// Least-squares slope of y = k x (line through the origin).
inline double slope_through_origin(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) {
        throw std::invalid_argument("slope_through_origin: need equal, non-empty inputs");
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
    }
    if (!(sxx > 0.0)) {
        throw UndefinedMetricError("slope_through_origin: all x are zero");
    }
    return sxy / sxx;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

/// Ordinary least squares y = a + b x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) {
        throw std::invalid_argument("fit_line: need at least two paired points");
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw UndefinedMetricError("fit_line: x is constant");
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        f.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    }
    return f;
}

}  // namespace valor

#endif  // VALOR_METRICS_HPP
