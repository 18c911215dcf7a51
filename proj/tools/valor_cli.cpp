// valor: command-line front end for simulation, estimation, sweeps and figures.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "valor/valor.hpp"

namespace fs = std::filesystem;
using namespace valor;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::string out_dir = ".";
    std::string scale = "desk";
    std::string config;
};

const char* const kChannelKeys[] = {"D", "r_v", "v_avg", "l", "w"};

// "--set key=value" to a config overlay, e.g. "l=2 mm" or "M=1000".
Json overlay_from_sets(const std::vector<std::string>& sets) {
    Json j = Json::object();
    for (const std::string& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + s + "'");
        }
        const std::string key = s.substr(0, eq);
        const std::string value = s.substr(eq + 1);
        bool channel = false;
        for (const char* k : kChannelKeys) {
            channel = channel || key == k;
        }
        if (channel) {
            j["channel"][key] = value;
        } else if (key == "M" || key == "record_every" || key == "seed") {
            try {
                j["sim"][key] = std::stoull(value);
            } catch (const std::exception&) {
                throw ConfigError("'" + key + "' must be a non-negative integer");
            }
        } else {
            j["sim"][key] = value;
        }
    }
    return j;
}

bool sets_distance(const Json& j) { return j.contains("channel") && j["channel"].contains("l"); }

RunConfig base_config(const Globals& g, const std::vector<std::string>& sets) {
    RunConfig rc;
    if (!g.config.empty()) {
        rc = load_config(g.config, rc);
    }
    apply_config(rc, overlay_from_sets(sets));
    if (g.seed) {
        rc.sim.seed = *g.seed;
        rc.has_seed = true;
    }
    return rc;
}

Scale scale_of(const Globals& g) {
    const auto s = parse_scale(g.scale);
    if (!s) {
        throw ConfigError("--scale must be desk or full");
    }
    return *s;
}

std::string command_line(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_simulate(const Globals& g, const std::vector<std::string>& sets, std::uint64_t reps,
                 std::uint64_t first_rep, const std::string& cmdline) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig rc = base_config(g, sets);
    if (reps < 1) {
        throw ConfigError("--reps must be at least 1");
    }
    const fs::path dir(g.out_dir);
    fs::create_directories(dir);
    const RunPlan plan = plan_run(rc.channel, rc.sim, {receiver_of(rc.channel)});
    Manifest m;
    m.command = cmdline;
    m.seed = rc.sim.seed;
    m.threads = resolve_threads(g.threads);
    m.parameters = Json{{"channel", channel_to_json(rc.channel)},
                        {"sim", sim_to_json(rc.sim)},
                        {"replications", reps},
                        {"first_replication", first_rep},
                        {"resolved_T_sim", format_quantity(plan.duration, Dimension::time)},
                        {"kernel", plan.use_fast_kernel ? "fast" : "reference"}};
    std::vector<std::string> files(reps);
    for_each_replication(plan, first_rep, reps, g.threads,
                         [&](std::uint64_t rep, std::vector<SignalRecord> records) {
                             const std::string stem = "signal_rep" + std::to_string(rep);
                             save_signal((dir / stem).string(), records.front());
                             files[rep - first_rep] = stem;
                         });
    for (const std::string& stem : files) {
        m.outputs.push_back(stem + ".csv");
        m.outputs.push_back(stem + ".json");
    }
    m.wall_seconds = seconds_since(t0);
    m.write(dir);
    std::printf("wrote %llu signal(s) to %s (T_sim %s, %llu samples)\n",
                static_cast<unsigned long long>(reps), dir.string().c_str(),
                format_quantity(plan.duration, Dimension::time).c_str(),
                static_cast<unsigned long long>(plan.samples));
    return 0;
}

struct EstimateFlags {
    std::vector<std::string> files;
    std::string method;
    std::string emission_time;
    std::optional<std::size_t> window;
    bool ensemble_mean = false;
    std::optional<double> tail_clip;
};

int cmd_estimate(const Globals& g, const std::vector<std::string>& sets, const EstimateFlags& f,
                 const std::string& cmdline) {
    const auto t0 = std::chrono::steady_clock::now();
    if (f.files.empty()) {
        throw ConfigError("estimate needs at least one signal CSV");
    }
    const Json overlay = overlay_from_sets(sets);
    std::optional<Json> file_config;
    if (!g.config.empty()) {
        file_config = read_json_file(g.config);
    }

    struct Loaded {
        SignalRecord signal;
        RunConfig rc;
        bool distance_known = false;
    };
    std::vector<Loaded> loaded;
    for (const std::string& path : f.files) {
        Loaded L;
        L.signal = load_signal(path);
        std::string stem = path.ends_with(".csv") ? path.substr(0, path.size() - 4) : path;
        RunConfig rc;
        if (fs::exists(stem + ".json")) {
            const Json side = read_json_file(stem + ".json");
            apply_config(rc, side);
            L.distance_known = sets_distance(side);
        }
        if (file_config) {
            apply_config(rc, *file_config);
            L.distance_known = L.distance_known || sets_distance(*file_config);
        }
        apply_config(rc, overlay);
        L.distance_known = L.distance_known || sets_distance(overlay);
        if (!f.method.empty()) rc.estimate.method = parse_method(f.method);
        if (!f.emission_time.empty()) {
            rc.estimate.emission_time = parse_quantity(f.emission_time, Dimension::time);
        }
        if (f.window) rc.estimate.smoothing_window = *f.window;
        if (f.tail_clip) rc.estimate.moments.tail_clip = *f.tail_clip;
        if (f.ensemble_mean) rc.estimate.mode = EstimationMode::ensemble_mean;
        validate(rc.channel);
        L.rc = rc;
        loaded.push_back(std::move(L));
    }

    const fs::path dir(g.out_dir);
    fs::create_directories(dir);
    std::ofstream out(dir / "estimates.csv");
    if (!out) {
        throw std::runtime_error("cannot write estimates.csv");
    }
    out << "# units: um, s\n" << kEstimateCsvHeader << "\n";
    std::cout << kEstimateCsvHeader << "\n";
    auto emit = [&](const EstimateResult& r, const Loaded& L, std::uint64_t seed, std::uint64_t rep) {
        const double l_true = L.distance_known ? L.rc.channel.distance
                                               : std::numeric_limits<double>::quiet_NaN();
        const std::string row = estimate_csv_row(r, l_true, seed, rep);
        out << row << "\n";
        std::cout << row << "\n";
    };
    auto run_methods = [&](const auto& series, const Loaded& L, std::uint64_t seed, std::uint64_t rep) {
        const RunConfig& rc = L.rc;
        const ChannelParams& p = rc.channel;
        if (rc.estimate.method != MethodChoice::peak_time) {
            emit(estimate_valor(series, ValorInputs::from(p), &p, rc.estimate.moments), L, seed, rep);
        }
        if (rc.estimate.method != MethodChoice::valor) {
            const double emitted = rc.estimate.emission_time.value_or(rc.sim.time_offset);
            emit(estimate_peak_time(series, emitted, p.mean_velocity, rc.estimate.smoothing_window, &p),
                 L, seed, rep);
        }
    };

    if (loaded.front().rc.estimate.mode == EstimationMode::ensemble_mean) {
        std::vector<SignalRecord> records;
        for (const Loaded& L : loaded) {
            records.push_back(L.signal);
        }
        run_methods(mean_signal(records), loaded.front(), loaded.front().signal.meta.config.seed, 0);
    } else {
        for (const Loaded& L : loaded) {
            run_methods(L.signal, L, L.signal.meta.config.seed, L.signal.meta.replication);
        }
    }

    Manifest m;
    m.command = cmdline;
    m.seed = loaded.front().signal.meta.config.seed;
    m.threads = 1;
    Json inputs = Json::array();
    for (const std::string& p : f.files) inputs.push_back(p);
    m.parameters = Json{{"inputs", inputs},
                        {"channel", channel_to_json(loaded.front().rc.channel)},
                        {"mode", f.ensemble_mean ? "ensemble_mean" : "per_replication"}};
    m.outputs = {"estimates.csv"};
    m.wall_seconds = seconds_since(t0);
    m.write(dir);
    return 0;
}

int cmd_sweep(const Globals& g, const std::vector<std::string>& sets, std::optional<std::uint64_t> reps,
              const std::vector<std::string>& metrics, const std::string& cmdline) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig rc = base_config(g, sets);
    SweepSpec spec;
    spec.base = rc.channel;
    spec.config = rc.sim;
    spec.axes = rc.axes;
    spec.replications = reps.value_or(rc.replications);
    spec.metrics = rc.metrics;
    if (!metrics.empty()) {
        spec.metrics = 0;
        for (const std::string& s : metrics) {
            const auto m = parse_metric(s);
            if (!m) {
                throw ConfigError("unknown metric '" + s + "'");
            }
            spec.metrics |= *m;
        }
    }
    spec.mode = rc.sweep_mode;
    spec.margin = rc.margin;
    spec.smoothing_window = rc.estimate.smoothing_window;
    spec.moments = rc.estimate.moments;

    const SweepResult r = run_sweep(spec, g.threads);
    const fs::path dir(g.out_dir);
    fs::create_directories(dir);
    Manifest m;
    m.command = cmdline;
    m.seed = spec.config.seed;
    m.threads = resolve_threads(g.threads);
    m.parameters = Json{{"channel", channel_to_json(spec.base)},
                        {"sim", sim_to_json(spec.config)},
                        {"axes", axes_to_json(spec.axes)},
                        {"n_reps", spec.replications},
                        {"metrics", spec.metrics},
                        {"mode", spec.mode == EstimationMode::per_replication ? "per_replication"
                                                                               : "ensemble_mean"},
                        {"margin", spec.margin}};
    write_points_csv(dir / "sweep_points.csv", r);
    m.outputs.push_back("sweep_points.csv");
    if (spec.metrics & (kMetricValor | kMetricPeakTime)) {
        write_estimates_csv(dir / "sweep_estimates.csv", r);
        m.outputs.push_back("sweep_estimates.csv");
    }
    m.wall_seconds = seconds_since(t0);
    m.write(dir);

    std::size_t failed = 0;
    for (const SweepPoint& p : r.points) {
        failed += p.ok ? 0 : 1;
        if (!p.ok) {
            std::fprintf(stderr, "point l=%s v_avg=%s failed: %s\n", format_number(p.params.distance).c_str(),
                         format_number(p.params.mean_velocity).c_str(), p.error.c_str());
        }
    }
    std::printf("%zu point(s), %zu failed; results in %s\n", r.points.size(), failed,
                dir.string().c_str());
    return 0;
}

int cmd_reproduce(const Globals& g, const std::string& which, const std::string& cmdline) {
    const auto t0 = std::chrono::steady_clock::now();
    const Scale scale = scale_of(g);
    RunConfig rc;
    if (!g.config.empty()) {
        rc = load_config(g.config, rc);
    }
    const std::uint64_t seed = g.seed.value_or(rc.has_seed ? rc.sim.seed : 1);
    std::vector<Figure> figs;
    if (which == "all") {
        figs = {Figure::fig2, Figure::fig3, Figure::fig4a, Figure::fig4b, Figure::fig5};
    } else if (const auto f = parse_figure(which)) {
        figs = {*f};
    } else {
        throw ConfigError("unknown figure '" + which + "'");
    }
    const fs::path dir(g.out_dir);
    Manifest m;
    m.command = cmdline;
    m.seed = seed;
    m.threads = resolve_threads(g.threads);
    m.scale = to_string(scale);
    Json grids = Json::object();
    for (Figure f : figs) {
        const auto tf = std::chrono::steady_clock::now();
        FigureOutput out = reproduce_figure(f, scale, seed, g.threads, dir);
        Json sweeps = Json::array();
        for (const SweepSpec& s : figure_sweeps(f, scale, seed)) {
            sweeps.push_back(Json{{"axes", axes_to_json(s.axes)},
                                  {"channel", channel_to_json(s.base)},
                                  {"sim", sim_to_json(s.config)},
                                  {"n_reps", s.replications}});
        }
        grids[to_string(f)] = sweeps;
        m.outputs.insert(m.outputs.end(), out.files.begin(), out.files.end());
        std::printf("%s (%s): %zu file(s) in %.1f s\n", to_string(f), to_string(scale), out.files.size(),
                    seconds_since(tf));
        for (const SweepResult& r : out.results) {
            for (const SweepCurve& c : r.curves) {
                if (std::isfinite(c.r2)) {
                    const ChannelParams& p = r.points[c.points.front()].params;
                    std::printf("  v_avg=%s r_v=%s w=%s  R2=%.6f\n", format_number(p.mean_velocity).c_str(),
                                format_number(p.radius).c_str(), format_number(p.width).c_str(), c.r2);
                }
            }
        }
    }
    m.parameters = grids;
    m.wall_seconds = seconds_since(t0);
    m.write(dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Molecular channel simulator and distance estimators (units: um, s)", "valor"};
    app.set_version_flag("--version", std::string(VALOR_VERSION));
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Master seed (overrides the config file)");
    app.add_option("--threads", g.threads, "Worker threads, 0 = all cores")
        ->envname("VALOR_THREADS")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
    app.add_option("--scale", g.scale, "Figure scale")
        ->check(CLI::IsMember({"desk", "full"}))
        ->capture_default_str();
    app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);

    std::vector<std::string> sets;
    auto add_sets = [&](CLI::App* sub) {
        sub->add_option("--set", sets, "Override a parameter, e.g. --set \"l=2 mm\" --set M=1000");
    };

    auto* sim = app.add_subcommand("simulate", "Run replications and write signal CSVs with JSON sidecars");
    std::uint64_t reps = 1, first_rep = 0;
    sim->add_option("--reps", reps, "Number of replications")->capture_default_str();
    sim->add_option("--first-rep", first_rep, "First replication id")->capture_default_str();
    add_sets(sim);

    auto* est = app.add_subcommand("estimate", "Estimate the distance from signal CSVs");
    EstimateFlags ef;
    est->add_option("signals", ef.files, "Signal CSV files")->required()->check(CLI::ExistingFile);
    est->add_option("--method", ef.method, "valor, peak_time or both")
        ->check(CLI::IsMember({"valor", "peak_time", "both"}));
    est->add_option("--emission-time", ef.emission_time,
                    "Known emission time for peak_time, e.g. \"0 s\" (default: tau_offset)");
    est->add_option("--window", ef.window, "Peak-time smoothing window (odd)");
    est->add_flag("--ensemble-mean", ef.ensemble_mean, "Estimate once from the mean of all signals");
    est->add_option("--tail-clip", ef.tail_clip, "Drop samples below this fraction of the peak (biased)");
    add_sets(est);

    auto* sw = app.add_subcommand("sweep", "Run the parameter grid of the config file");
    std::optional<std::uint64_t> sweep_reps;
    std::vector<std::string> metrics;
    sw->add_option("--reps", sweep_reps, "Replications per grid point");
    sw->add_option("--metric", metrics, "variance, l_hat_valor, l_hat_peak, model_match");
    add_sets(sw);

    auto* rep = app.add_subcommand("reproduce", "Reproduce a verification figure");
    std::string which;
    rep->add_option("figure", which, "fig2, fig3, fig4a, fig4b, fig5 or all")
        ->required()
        ->check(CLI::IsMember({"fig2", "fig3", "fig4a", "fig4b", "fig5", "all"}));

    CLI11_PARSE(app, argc, argv);
    const std::string cmdline = command_line(argc, argv);
    try {
        if (*sim) return cmd_simulate(g, sets, reps, first_rep, cmdline);
        if (*est) return cmd_estimate(g, sets, ef, cmdline);
        if (*sw) return cmd_sweep(g, sets, sweep_reps, metrics, cmdline);
        if (*rep) return cmd_reproduce(g, which, cmdline);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
