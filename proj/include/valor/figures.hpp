#ifndef VALOR_FIGURES_HPP
#define VALOR_FIGURES_HPP

/**
 * @file figures.hpp
 * @brief Verification figures as sweeps with fixed grids.
 *
 * All figures use D = 300 um^2/s, r_v = 5 um, w = 1 um, dt = 0.1 ms unless the
 * figure varies that parameter. Velocity, distance, r_v and w grids are
 * reconstructions, not published values.
 *
 * | figure | varies              | desk (M, reps) | full (M, reps) |
 * |--------|---------------------|----------------|----------------|
 * | fig2   | (v_avg, l) panels   | 1e5, 100       | 1e6, 1000      |
 * | fig3   | v_avg x l           | 1e5, 100       | 1e6, 1000      |
 * | fig4a  | r_v x l             | 1e5, 20        | 1e6, 1000      |
 * | fig4b  | w x l               | 1e5, 20        | 1e6, 1000      |
 * | fig5   | v_avg x l, both estimators | 1e5, 20 | 1e6, 1000      |
 */

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "valor/analytic.hpp"
#include "valor/report.hpp"
#include "valor/sweep.hpp"

namespace valor {

enum class Figure { fig2, fig3, fig4a, fig4b, fig5 };
enum class Scale { desk, full };

inline const char* to_string(Figure f) {
    switch (f) {
        case Figure::fig2: return "fig2";
        case Figure::fig3: return "fig3";
        case Figure::fig4a: return "fig4a";
        case Figure::fig4b: return "fig4b";
        case Figure::fig5: return "fig5";
    }
    return "";
}

inline std::optional<Figure> parse_figure(std::string_view s) {
    for (Figure f : {Figure::fig2, Figure::fig3, Figure::fig4a, Figure::fig4b, Figure::fig5}) {
        if (s == to_string(f)) {
            return f;
        }
    }
    return std::nullopt;
}

inline const char* to_string(Scale s) { return s == Scale::desk ? "desk" : "full"; }

inline std::optional<Scale> parse_scale(std::string_view s) {
    if (s == "desk") return Scale::desk;
    if (s == "full") return Scale::full;
    return std::nullopt;
}

/// Distances shared by the variance figures, um.
inline const std::vector<double> kFigureDistances{500.0, 1000.0, 2000.0, 4000.0};
inline const std::vector<double> kFigureVelocities{1000.0, 2000.0, 4000.0};

/// Sweep behind a figure. Panels of fig2 are (v_avg, l) pairs and are not a
/// full grid, so fig2 is returned as two sweeps.
inline std::vector<SweepSpec> figure_sweeps(Figure f, Scale scale, std::uint64_t seed) {
    SweepSpec s;
    s.config.seed = seed;
    s.config.molecules = scale == Scale::desk ? 100000 : 1000000;
    s.replications = scale == Scale::desk ? 20 : 1000;
    switch (f) {
        case Figure::fig2: {
            s.replications = scale == Scale::desk ? 100 : 1000;
            s.metrics = kMetricVariance | kMetricModelMatch;
            s.keep_mean_signal = true;
            SweepSpec a = s, b = s;
            a.axes = {{SweepAxis::mean_velocity, {2000.0}}, {SweepAxis::distance, {1000.0, 2000.0}}};
            b.axes = {{SweepAxis::mean_velocity, {4000.0}}, {SweepAxis::distance, {2000.0}}};
            b.config.seed = derive_seed(seed, 1);
            return {a, b};
        }
        case Figure::fig3:
            s.replications = scale == Scale::desk ? 100 : 1000;
            s.axes = {{SweepAxis::mean_velocity, kFigureVelocities},
                      {SweepAxis::distance, kFigureDistances}};
            break;
        case Figure::fig4a:
            s.axes = {{SweepAxis::radius, {5.0, 10.0, 20.0}}, {SweepAxis::distance, kFigureDistances}};
            break;
        case Figure::fig4b:
            s.axes = {{SweepAxis::width, {1.0, 10.0, 100.0}}, {SweepAxis::distance, kFigureDistances}};
            break;
        case Figure::fig5:
            s.metrics = kMetricVariance | kMetricValor | kMetricPeakTime;
            s.axes = {{SweepAxis::mean_velocity, kFigureVelocities},
                      {SweepAxis::distance, {250.0, 500.0, 1000.0, 2000.0, 4000.0}}};
            break;
    }
    return {s};
}

struct FigureOutput {
    std::vector<std::string> files;  ///< written paths, relative to the output directory
    std::vector<SweepResult> results;
};

namespace detail {

inline void write_variance_table(const std::filesystem::path& path, const char* key,
                                 SweepAxis axis, const SweepResult& r) {
    CsvWriter w(path, std::string(key) + ",l,sigma2_sim_mean,sigma2_sim_std,sigma2_theory,R2");
    for (const SweepPoint& p : r.points) {
        ChannelParams q = p.params;
        const double r2 = p.curve ? r.curves[*p.curve].r2 : std::numeric_limits<double>::quiet_NaN();
        w.row({cell(axis_field(q, axis)), cell(p.params.distance), cell(p.variance.mean),
               cell(p.variance.stddev), cell(p.sigma2_theory), cell(r2)});
    }
}

inline std::string panel_name(const ChannelParams& p) {
    return "fig2_v" + format_number(p.mean_velocity) + "_l" + format_number(p.distance) + ".csv";
}

// Received fraction in percent over t_peak +- 6 sigma: simulation, the
// Gaussian pulse and the small-width channel model.
inline void write_fig2_panel(const std::filesystem::path& path, const SweepPoint& p) {
    CsvWriter w(path, "t,sim_pct,gaussian_pct,model_pct");
    if (!p.mean_signal) {
        return;
    }
    const GaussianPulse g = gaussian_approximation(p.params);
    const UniformSeries& s = *p.mean_signal;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double t = s.timestamp(i) - s.start_time;
        if (std::abs(t - g.mean) > 6.0 * g.stddev()) {
            continue;
        }
        w.row({cell(t), cell(100.0 * s.values[i]), cell(100.0 * g(t)),
               cell(100.0 * detection_probability(t, p.params))});
    }
}

}  // namespace detail

/**
 * @brief Runs figure `f` and writes its CSVs into `out_dir`.
 *
 * Every figure also writes `<fig>_points.csv` with all metrics and both regime
 * diagnostics per grid point. CSV content depends only on (f, scale, seed).
 */
inline FigureOutput reproduce_figure(Figure f, Scale scale, std::uint64_t seed, unsigned threads,
                                     const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    FigureOutput out;
    SweepResult merged;
    for (const SweepSpec& spec : figure_sweeps(f, scale, seed)) {
        SweepResult r = run_sweep(spec, threads);
        for (SweepPoint& p : r.points) {
            if (p.curve) {
                *p.curve += merged.curves.size();
            }
        }
        merged.points.insert(merged.points.end(), r.points.begin(), r.points.end());
        merged.curves.insert(merged.curves.end(), r.curves.begin(), r.curves.end());
        out.results.push_back(std::move(r));
    }
    const std::string name = to_string(f);
    auto emit = [&](const std::string& file) { out.files.push_back(file); return out_dir / file; };
    switch (f) {
        case Figure::fig2: {
            CsvWriter w(emit("fig2.csv"), "v_avg,l,nrmse,peak_sim_pct,peak_theory_pct");
            for (const SweepPoint& p : merged.points) {
                detail::write_fig2_panel(emit(detail::panel_name(p.params)), p);
                double peak = std::numeric_limits<double>::quiet_NaN();
                if (p.mean_signal) {
                    peak = 100.0 * *std::max_element(p.mean_signal->values.begin(),
                                                     p.mean_signal->values.end());
                }
                w.row({cell(p.params.mean_velocity), cell(p.params.distance), cell(p.model_nrmse),
                       cell(peak), cell(100.0 * gaussian_approximation(p.params).amplitude)});
            }
            break;
        }
        case Figure::fig3:
            detail::write_variance_table(emit("fig3.csv"), "v_avg", SweepAxis::mean_velocity, merged);
            break;
        case Figure::fig4a:
            detail::write_variance_table(emit("fig4a.csv"), "r_v", SweepAxis::radius, merged);
            break;
        case Figure::fig4b:
            detail::write_variance_table(emit("fig4b.csv"), "w", SweepAxis::width, merged);
            break;
        case Figure::fig5: {
            CsvWriter w(emit("fig5.csv"),
                        "v_avg,l,err_pct_valor,err_pct_valor_std,err_pct_peak,err_pct_peak_std");
            for (const SweepPoint& p : merged.points) {
                w.row({cell(p.params.mean_velocity), cell(p.params.distance),
                       cell(p.err_pct_valor.mean), cell(p.err_pct_valor.stddev),
                       cell(p.err_pct_peak.mean), cell(p.err_pct_peak.stddev)});
            }
            write_estimates_csv(emit("fig5_estimates.csv"), merged);
            break;
        }
    }
    write_points_csv(emit(name + "_points.csv"), merged);
    return out;
}

}  // namespace valor

#endif  // VALOR_FIGURES_HPP
