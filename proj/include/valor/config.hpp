#ifndef VALOR_CONFIG_HPP
#define VALOR_CONFIG_HPP

/**
 * @file config.hpp
 * @brief JSON run configuration.
 *
 * Physical quantities are strings with a unit ("0.1 ms", "2 mm", "300 um^2/s");
 * counts, seeds and ratios are bare numbers. Unknown keys are errors.
 *
 * @code{.json}
 * {
 *   "channel": {"D": "300 um^2/s", "r_v": "5 um", "v_avg": "2 mm/s", "l": "1 mm", "w": "1 um"},
 *   "sim": {"M": 100000, "dt": "0.1 ms", "T_sim": "auto", "record_every": 1, "seed": 1,
 *           "tx_radial_offset": "0 um", "tau_offset": "0 s", "kernel": "auto"},
 *   "sweep": {"axes": [{"name": "l", "values": ["0.5 mm", "1 mm"]}], "n_reps": 20,
 *             "metrics": ["variance", "l_hat_valor"], "mode": "per_replication"},
 *   "estimate": {"method": "both", "emission_time": "0 s", "smoothing_window": 51}
 * }
 * @endcode
 */

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "valor/channel.hpp"
#include "valor/estimators.hpp"
#include "valor/signal.hpp"
#include "valor/sweep.hpp"
#include "valor/units.hpp"

namespace valor {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class MethodChoice { valor, peak_time, both };

struct EstimateOptions {
    MethodChoice method = MethodChoice::both;
    std::optional<double> emission_time;  ///< s on the signal clock; default tau_offset
    std::size_t smoothing_window = kDefaultSmoothingWindow;
    EstimationMode mode = EstimationMode::per_replication;
    MomentOptions moments;
};

struct RunConfig {
    ChannelParams channel;
    SimConfig sim;
    bool has_seed = false;  ///< sim.seed came from the file
    std::vector<std::pair<SweepAxis, std::vector<double>>> axes;
    std::uint64_t replications = 1;
    unsigned metrics = kMetricVariance;
    EstimationMode sweep_mode = EstimationMode::per_replication;
    double margin = kDefaultRegimeMargin;
    EstimateOptions estimate;
};

inline Dimension axis_dimension(SweepAxis a) {
    switch (a) {
        case SweepAxis::mean_velocity: return Dimension::velocity;
        case SweepAxis::diffusion: return Dimension::diffusivity;
        default: return Dimension::length;
    }
}

namespace detail {

inline void reject_unknown(const Json& obj, const std::string& where,
                           std::initializer_list<const char*> known) {
    if (!obj.is_object()) {
        throw ConfigError(where + " must be an object");
    }
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [k, v] : obj.items()) {
        if (!allowed.contains(k)) {
            throw ConfigError("unknown key '" + where + "." + k + "'");
        }
    }
}

inline double quantity(const Json& v, const std::string& key, Dimension d) {
    if (!v.is_string()) {
        throw ConfigError("'" + key + "' needs a unit, e.g. \"1 " + canonical_unit(d) + "\"");
    }
    try {
        return parse_quantity(v.get<std::string>(), d);
    } catch (const UnitError& e) {
        throw ConfigError("'" + key + "': " + e.what());
    }
}

inline std::uint64_t count(const Json& v, const std::string& key) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw ConfigError("'" + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

inline EstimationMode parse_mode(const Json& v, const std::string& key) {
    const std::string s = v.get<std::string>();
    if (s == "per_replication") return EstimationMode::per_replication;
    if (s == "ensemble_mean") return EstimationMode::ensemble_mean;
    throw ConfigError("'" + key + "' must be per_replication or ensemble_mean");
}

}  // namespace detail

inline MethodChoice parse_method(const std::string& s) {
    if (s == "valor") return MethodChoice::valor;
    if (s == "peak_time") return MethodChoice::peak_time;
    if (s == "both") return MethodChoice::both;
    throw ConfigError("method must be valor, peak_time or both");
}

inline KernelChoice parse_kernel(const std::string& s) {
    if (s == "auto") return KernelChoice::automatic;
    if (s == "fast") return KernelChoice::fast;
    if (s == "reference") return KernelChoice::reference;
    throw ConfigError("kernel must be auto, fast or reference");
}

inline const char* to_string(KernelChoice k) {
    switch (k) {
        case KernelChoice::automatic: return "auto";
        case KernelChoice::fast: return "fast";
        case KernelChoice::reference: return "reference";
    }
    return "auto";
}

/// Applies one channel key ("D", "r_v", "v_avg", "l", "w") from a quantity string.
inline void set_channel_field(ChannelParams& p, const std::string& key, const Json& value) {
    const auto axis = parse_axis(key);
    if (!axis) {
        throw ConfigError("unknown key 'channel." + key + "'");
    }
    axis_field(p, *axis) = detail::quantity(value, key, axis_dimension(*axis));
}

inline void apply_channel(ChannelParams& p, const Json& j) {
    if (!j.is_object()) {
        throw ConfigError("channel must be an object");
    }
    for (const auto& [k, v] : j.items()) {
        set_channel_field(p, k, v);
    }
}

inline void apply_sim(RunConfig& rc, const Json& j) {
    detail::reject_unknown(j, "sim", {"M", "dt", "T_sim", "record_every", "seed",
                                      "tx_radial_offset", "tau_offset", "kernel"});
    SimConfig& s = rc.sim;
    if (j.contains("M")) s.molecules = detail::count(j["M"], "M");
    if (j.contains("dt")) s.time_step = detail::quantity(j["dt"], "dt", Dimension::time);
    if (j.contains("T_sim")) {
        if (j["T_sim"] == "auto") {
            s.duration.reset();
        } else {
            s.duration = detail::quantity(j["T_sim"], "T_sim", Dimension::time);
        }
    }
    if (j.contains("record_every")) {
        s.record_every = static_cast<std::uint32_t>(detail::count(j["record_every"], "record_every"));
    }
    if (j.contains("seed")) {
        s.seed = detail::count(j["seed"], "seed");
        rc.has_seed = true;
    }
    if (j.contains("tx_radial_offset")) {
        s.emitter_offset = detail::quantity(j["tx_radial_offset"], "tx_radial_offset", Dimension::length);
    }
    if (j.contains("tau_offset")) {
        s.time_offset = detail::quantity(j["tau_offset"], "tau_offset", Dimension::time);
    }
    if (j.contains("kernel")) s.kernel = parse_kernel(j["kernel"].get<std::string>());
}

inline void apply_sweep(RunConfig& rc, const Json& j) {
    detail::reject_unknown(j, "sweep", {"axes", "n_reps", "metrics", "mode", "margin"});
    if (j.contains("axes")) {
        rc.axes.clear();
        for (const Json& a : j["axes"]) {
            detail::reject_unknown(a, "sweep.axes[]", {"name", "values"});
            const auto axis = parse_axis(a.at("name").get<std::string>());
            if (!axis) {
                throw ConfigError("unknown sweep axis '" + a.at("name").get<std::string>() + "'");
            }
            std::vector<double> values;
            for (const Json& v : a.at("values")) {
                values.push_back(detail::quantity(v, axis_name(*axis), axis_dimension(*axis)));
            }
            rc.axes.emplace_back(*axis, std::move(values));
        }
    }
    if (j.contains("n_reps")) rc.replications = detail::count(j["n_reps"], "n_reps");
    if (j.contains("metrics")) {
        rc.metrics = 0;
        for (const Json& m : j["metrics"]) {
            const auto metric = parse_metric(m.get<std::string>());
            if (!metric) {
                throw ConfigError("unknown metric '" + m.get<std::string>() + "'");
            }
            rc.metrics |= *metric;
        }
    }
    if (j.contains("mode")) rc.sweep_mode = detail::parse_mode(j["mode"], "sweep.mode");
    if (j.contains("margin")) rc.margin = j["margin"].get<double>();
}

inline void apply_estimate(EstimateOptions& e, const Json& j) {
    detail::reject_unknown(j, "estimate", {"method", "emission_time", "smoothing_window", "mode",
                                           "tail_clip"});
    if (j.contains("method")) e.method = parse_method(j["method"].get<std::string>());
    if (j.contains("emission_time")) {
        e.emission_time = detail::quantity(j["emission_time"], "emission_time", Dimension::time);
    }
    if (j.contains("smoothing_window")) {
        e.smoothing_window = detail::count(j["smoothing_window"], "smoothing_window");
    }
    if (j.contains("mode")) e.mode = detail::parse_mode(j["mode"], "estimate.mode");
    if (j.contains("tail_clip")) e.moments.tail_clip = j["tail_clip"].get<double>();
}

/// Overlays the sections present in `j` onto `rc`.
inline void apply_config(RunConfig& rc, const Json& j) {
    detail::reject_unknown(j, "config", {"channel", "sim", "sweep", "estimate", "units",
                                         "replication", "samples", "version"});
    try {
        if (j.contains("channel")) apply_channel(rc.channel, j["channel"]);
        if (j.contains("sim")) apply_sim(rc, j["sim"]);
        if (j.contains("sweep")) apply_sweep(rc, j["sweep"]);
        if (j.contains("estimate")) apply_estimate(rc.estimate, j["estimate"]);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open '" + path + "'");
    }
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
    apply_config(base, read_json_file(path));
    return base;
}

inline Json channel_to_json(const ChannelParams& p) {
    return Json{{"D", format_quantity(p.diffusion, Dimension::diffusivity)},
                {"r_v", format_quantity(p.radius, Dimension::length)},
                {"v_avg", format_quantity(p.mean_velocity, Dimension::velocity)},
                {"l", format_quantity(p.distance, Dimension::length)},
                {"w", format_quantity(p.width, Dimension::length)}};
}

inline Json sim_to_json(const SimConfig& s) {
    Json j{{"M", s.molecules},
           {"dt", format_quantity(s.time_step, Dimension::time)},
           {"T_sim", s.duration ? Json(format_quantity(*s.duration, Dimension::time)) : Json("auto")},
           {"record_every", s.record_every},
           {"seed", s.seed},
           {"tx_radial_offset", format_quantity(s.emitter_offset, Dimension::length)},
           {"tau_offset", format_quantity(s.time_offset, Dimension::time)},
           {"kernel", to_string(s.kernel)}};
    return j;
}

}  // namespace valor

#endif  // VALOR_CONFIG_HPP
