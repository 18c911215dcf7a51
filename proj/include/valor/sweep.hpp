#ifndef VALOR_SWEEP_HPP
#define VALOR_SWEEP_HPP

/**
 * @file sweep.hpp
 * @brief Parameter grids over the channel, ensemble runs and aggregate metrics.
 *
 * Grid points that differ only in receiver placement (l, w) share one run:
 * receivers are transparent, so each group of equal (D, r_v, v_avg) is
 * simulated once and observed by every receiver of the group. Group g runs
 * with seed derive_seed(master, g), g counting groups in grid order.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "valor/analytic.hpp"
#include "valor/channel.hpp"
#include "valor/estimators.hpp"
#include "valor/metrics.hpp"
#include "valor/random.hpp"
#include "valor/signal.hpp"
#include "valor/simulator.hpp"

namespace valor {

enum class SweepAxis { distance, mean_velocity, radius, width, diffusion };

inline const char* axis_name(SweepAxis a) {
    switch (a) {
        case SweepAxis::distance: return "l";
        case SweepAxis::mean_velocity: return "v_avg";
        case SweepAxis::radius: return "r_v";
        case SweepAxis::width: return "w";
        case SweepAxis::diffusion: return "D";
    }
    return "?";
}

inline std::optional<SweepAxis> parse_axis(std::string_view name) {
    for (SweepAxis a : {SweepAxis::distance, SweepAxis::mean_velocity, SweepAxis::radius,
                        SweepAxis::width, SweepAxis::diffusion}) {
        if (name == axis_name(a)) {
            return a;
        }
    }
    return std::nullopt;
}

inline double& axis_field(ChannelParams& p, SweepAxis a) {
    switch (a) {
        case SweepAxis::distance: return p.distance;
        case SweepAxis::mean_velocity: return p.mean_velocity;
        case SweepAxis::radius: return p.radius;
        case SweepAxis::width: return p.width;
        case SweepAxis::diffusion: return p.diffusion;
    }
    return p.distance;
}

enum SweepMetric : unsigned {
    kMetricVariance = 1u << 0,
    kMetricValor = 1u << 1,
    kMetricPeakTime = 1u << 2,
    kMetricModelMatch = 1u << 3,
};

inline std::optional<SweepMetric> parse_metric(std::string_view name) {
    if (name == "variance") return kMetricVariance;
    if (name == "l_hat_valor") return kMetricValor;
    if (name == "l_hat_peak") return kMetricPeakTime;
    if (name == "model_match") return kMetricModelMatch;
    return std::nullopt;
}

/// Per-replication estimates averaged, or one estimate on the ensemble-mean signal.
enum class EstimationMode { per_replication, ensemble_mean };

struct SweepSpec {
    ChannelParams base;
    SimConfig config;  ///< config.seed is the master seed
    std::vector<std::pair<SweepAxis, std::vector<double>>> axes;
    std::uint64_t replications = 1;
    unsigned metrics = kMetricVariance;
    EstimationMode mode = EstimationMode::per_replication;
    double margin = kDefaultRegimeMargin;
    std::size_t smoothing_window = kDefaultSmoothingWindow;
    MomentOptions moments;
    bool keep_mean_signal = false;  ///< store the normalized ensemble-mean signal per point
};

struct ReplicationEstimate {
    std::uint64_t replication = 0;
    double sigma2 = std::numeric_limits<double>::quiet_NaN();
    std::optional<EstimateResult> valor;
    std::optional<EstimateResult> peak_time;
    std::string error;  ///< non-empty when this replication was skipped
};

struct SweepPoint {
    ChannelParams params;
    std::size_t group = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;

    std::optional<RegimeCheck> condition1;
    std::optional<ApproxDiagnostics> condition2;
    double sigma2_theory = std::numeric_limits<double>::quiet_NaN();

    MeanStd variance;
    MeanStd l_hat_valor;
    MeanStd err_pct_valor;
    MeanStd l_hat_peak;
    MeanStd err_pct_peak;
    double model_nrmse = std::numeric_limits<double>::quiet_NaN();
    std::size_t failed_replications = 0;

    std::vector<ReplicationEstimate> estimates;
    std::optional<UniformSeries> mean_signal;  ///< counts / M, on the simulation clock
    std::optional<std::size_t> curve;
};

/// Points that differ only in l. R^2 is against the theory line, not a fit.
struct SweepCurve {
    std::vector<std::size_t> points;
    double r2 = std::numeric_limits<double>::quiet_NaN();
    double slope_fit = std::numeric_limits<double>::quiet_NaN();     ///< through the origin, s^2/um
    double slope_theory = std::numeric_limits<double>::quiet_NaN();  ///< 2 D_e / v_avg^3
    std::string error;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::vector<SweepCurve> curves;
};

/// Cartesian product of the axes in the order given; the last axis varies fastest.
inline std::vector<ChannelParams> expand_grid(const SweepSpec& spec) {
    std::vector<ChannelParams> out{spec.base};
    for (const auto& [axis, values] : spec.axes) {
        if (values.empty()) {
            throw std::invalid_argument(std::string("sweep axis '") + axis_name(axis) + "' is empty");
        }
        std::vector<ChannelParams> next;
        next.reserve(out.size() * values.size());
        for (const ChannelParams& p : out) {
            for (double v : values) {
                ChannelParams q = p;
                axis_field(q, axis) = v;
                next.push_back(q);
            }
        }
        out = std::move(next);
    }
    return out;
}

/// Error percentage |l_hat - l| / l * 100.
inline double error_percent(double l_hat, double l_true) {
    return 100.0 * std::abs(l_hat - l_true) / l_true;
}

/// Normalized RMSE of a mean signal (counts / M) against the Gaussian pulse,
/// over |t - t_peak| <= 3 sigma and relative to the pulse amplitude.
inline double model_match_nrmse(const UniformSeries& mean_normalized, const ChannelParams& p,
                                double clock_offset = 0.0) {
    const GaussianPulse g = gaussian_approximation(p);
    const double half = 3.0 * g.stddev();
    std::vector<double> obs, pred;
    for (std::size_t i = 0; i < mean_normalized.size(); ++i) {
        const double t = mean_normalized.timestamp(i) - clock_offset;
        if (std::abs(t - g.mean) <= half) {
            obs.push_back(mean_normalized.values[i]);
            pred.push_back(g(t));
        }
    }
    if (obs.empty()) {
        throw UndefinedMetricError("record does not cover the pulse window");
    }
    return normalized_rmse(obs, pred, g.amplitude);
}

namespace detail {

inline bool same_flow(const ChannelParams& a, const ChannelParams& b) {
    return a.diffusion == b.diffusion && a.radius == b.radius && a.mean_velocity == b.mean_velocity;
}

inline bool same_curve(const ChannelParams& a, const ChannelParams& b) {
    return same_flow(a, b) && a.width == b.width;
}

inline void summarize_point(SweepPoint& pt, const SweepSpec& spec) {
    std::vector<double> var, lv, ev, lp, ep;
    for (const ReplicationEstimate& e : pt.estimates) {
        if (!e.error.empty()) {
            continue;
        }
        var.push_back(e.sigma2);
        if (e.valor) {
            lv.push_back(e.valor->l_hat);
            ev.push_back(error_percent(e.valor->l_hat, pt.params.distance));
        }
        if (e.peak_time) {
            lp.push_back(e.peak_time->l_hat);
            ep.push_back(error_percent(e.peak_time->l_hat, pt.params.distance));
        }
    }
    pt.failed_replications = pt.estimates.size() - var.size();
    if (var.empty()) {
        pt.ok = false;
        pt.error = pt.estimates.empty() ? "no replications" : pt.estimates.front().error;
        return;
    }
    pt.variance = mean_std(var);
    if (spec.metrics & kMetricValor) {
        pt.l_hat_valor = mean_std(lv);
        pt.err_pct_valor = mean_std(ev);
    }
    if (spec.metrics & kMetricPeakTime) {
        pt.l_hat_peak = mean_std(lp);
        pt.err_pct_peak = mean_std(ep);
    }
    pt.ok = true;
}

inline ReplicationEstimate estimate_replication(const UniformSeries* series, const SignalRecord* record,
                                                std::uint64_t rep, const ChannelParams& p,
                                                const SweepSpec& spec) {
    ReplicationEstimate e;
    e.replication = rep;
    try {
        const SignalMoments m = series ? signal_moments(*series, spec.moments)
                                       : signal_moments(*record, spec.moments);
        e.sigma2 = m.variance;
        if (spec.metrics & kMetricValor) {
            e.valor = estimate_valor_from_variance(m.variance, ValorInputs::from(p), &p);
        }
        if (spec.metrics & kMetricPeakTime) {
            const double emitted = spec.config.time_offset;
            e.peak_time = series ? estimate_peak_time(*series, emitted, p.mean_velocity,
                                                      spec.smoothing_window, &p)
                                 : estimate_peak_time(*record, emitted, p.mean_velocity,
                                                      spec.smoothing_window, &p);
        }
    } catch (const std::exception& ex) {
        e.error = ex.what();
    }
    return e;
}

}  // namespace detail

/**
 * @brief Runs every grid point of `spec`. Failures are recorded per point and
 *        never stop the sweep. Output depends only on the spec, not on `threads`.
 */
inline SweepResult run_sweep(const SweepSpec& spec, unsigned threads = 0) {
    if (spec.replications < 1) {
        throw std::invalid_argument("sweep needs at least one replication per point");
    }
    if (spec.metrics == 0) {
        throw std::invalid_argument("sweep needs at least one metric");
    }
    validate(spec.config, spec.base);

    SweepResult result;
    for (const ChannelParams& p : expand_grid(spec)) {
        SweepPoint pt;
        pt.params = p;
        result.points.push_back(std::move(pt));
    }

    // Validity and diagnostics, then grouping by flow parameters.
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        SweepPoint& pt = result.points[i];
        try {
            validate(pt.params);
            validate(spec.config, pt.params);
            pt.condition1 = check_condition1(pt.params, spec.margin);
            pt.condition2 = approximation_diagnostics(pt.params, spec.margin);
            pt.sigma2_theory = predicted_variance(pt.params);
        } catch (const std::exception& ex) {
            pt.error = ex.what();
            continue;
        }
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
            return detail::same_flow(result.points[g.front()].params, pt.params);
        });
        if (it == groups.end()) {
            groups.push_back({i});
        } else {
            it->push_back(i);
        }
    }

    for (std::size_t g = 0; g < groups.size(); ++g) {
        const std::vector<std::size_t>& members = groups[g];
        const std::uint64_t seed = derive_seed(spec.config.seed, g);
        std::vector<Receiver> receivers;
        std::vector<std::size_t> receiver_of_member;
        for (std::size_t idx : members) {
            result.points[idx].group = g;
            result.points[idx].seed = seed;
            const Receiver r = receiver_of(result.points[idx].params);
            auto it = std::find(receivers.begin(), receivers.end(), r);
            receiver_of_member.push_back(static_cast<std::size_t>(it - receivers.begin()));
            if (it == receivers.end()) {
                receivers.push_back(r);
            }
        }
        SimConfig cfg = spec.config;
        cfg.seed = seed;
        const bool need_mean = spec.keep_mean_signal || (spec.metrics & kMetricModelMatch) ||
                               spec.mode == EstimationMode::ensemble_mean;
        try {
            const RunPlan plan = plan_run(result.points[members.front()].params, cfg, receivers);
            std::vector<std::vector<std::uint64_t>> sums(
                need_mean ? receivers.size() : 0, std::vector<std::uint64_t>(plan.samples, 0));
            for (std::size_t idx : members) {
                result.points[idx].estimates.assign(
                    spec.mode == EstimationMode::per_replication ? spec.replications : 0, {});
            }
            for_each_replication(plan, 0, spec.replications, threads,
                                 [&](std::uint64_t rep, std::vector<SignalRecord> records) {
                if (need_mean) {
                    for (std::size_t r = 0; r < records.size(); ++r) {
                        for (std::size_t j = 0; j < plan.samples; ++j) {
                            sums[r][j] += records[r].counts[j];
                        }
                    }
                }
                if (spec.mode != EstimationMode::per_replication) {
                    return;
                }
                for (std::size_t k = 0; k < members.size(); ++k) {
                    SweepPoint& pt = result.points[members[k]];
                    pt.estimates[rep] = detail::estimate_replication(
                        nullptr, &records[receiver_of_member[k]], rep, pt.params, spec);
                }
            });
            const double norm = 1.0 / (static_cast<double>(spec.replications) *
                                       static_cast<double>(cfg.molecules));
            for (std::size_t k = 0; k < members.size(); ++k) {
                SweepPoint& pt = result.points[members[k]];
                if (need_mean) {
                    UniformSeries mean{cfg.time_offset, plan.sample_interval(), {}};
                    const auto& s = sums[receiver_of_member[k]];
                    mean.values.resize(s.size());
                    for (std::size_t j = 0; j < s.size(); ++j) {
                        mean.values[j] = static_cast<double>(s[j]) * norm;
                    }
                    if (spec.mode == EstimationMode::ensemble_mean) {
                        pt.estimates.push_back(
                            detail::estimate_replication(&mean, nullptr, 0, pt.params, spec));
                    }
                    if (spec.metrics & kMetricModelMatch) {
                        try {
                            pt.model_nrmse = model_match_nrmse(mean, pt.params, cfg.time_offset);
                        } catch (const std::exception&) {
                            pt.model_nrmse = std::numeric_limits<double>::quiet_NaN();
                        }
                    }
                    if (spec.keep_mean_signal) {
                        pt.mean_signal = std::move(mean);
                    }
                }
                detail::summarize_point(pt, spec);
            }
        } catch (const std::exception& ex) {
            for (std::size_t idx : members) {
                result.points[idx].ok = false;
                result.points[idx].error = ex.what();
            }
        }
    }

    // Variance-distance curves.
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        if (result.points[i].curve) {
            continue;
        }
        SweepCurve c;
        for (std::size_t j = i; j < result.points.size(); ++j) {
            if (!result.points[j].curve &&
                detail::same_curve(result.points[i].params, result.points[j].params)) {
                result.points[j].curve = result.curves.size();
                c.points.push_back(j);
            }
        }
        std::vector<double> l, obs, pred;
        for (std::size_t j : c.points) {
            const SweepPoint& pt = result.points[j];
            if (pt.ok) {
                l.push_back(pt.params.distance);
                obs.push_back(pt.variance.mean);
                pred.push_back(pt.sigma2_theory);
            }
        }
        if (!(spec.metrics & kMetricVariance)) {
            c.error = "variance metric not requested";
        } else if (l.size() < 3) {
            c.error = "fewer than three distance points";
        } else {
            try {
                c.r2 = r_squared(obs, pred);
                c.slope_fit = slope_through_origin(l, obs);
                ChannelParams q = result.points[c.points.front()].params;
                c.slope_theory = 2.0 * effective_diffusion(q) / std::pow(q.mean_velocity, 3);
            } catch (const std::exception& ex) {
                c.error = ex.what();
            }
        }
        result.curves.push_back(std::move(c));
    }
    return result;
}

}  // namespace valor

#endif  // VALOR_SWEEP_HPP
