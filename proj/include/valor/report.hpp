#ifndef VALOR_REPORT_HPP
#define VALOR_REPORT_HPP

// CSV tables and the manifest.json run record written by sweeps and figures.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "valor/config.hpp"
#include "valor/signal_io.hpp"
#include "valor/sweep.hpp"
#include "valor/units.hpp"

#ifndef VALOR_VERSION
#define VALOR_VERSION "unknown"
#endif

namespace valor {

/// Number cell: shortest round-trip form, empty for NaN.
inline std::string cell(double v) { return std::isfinite(v) ? format_number(v) : std::string(); }

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path) {
        if (!out_) {
            throw std::runtime_error("cannot write '" + path.string() + "'");
        }
        out_ << "# units: um, s\n" << header << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ',';
            line += cells[i];
        }
        out_ << line << '\n';
    }

private:
    std::ofstream out_;
};

/// Every grid point with its metrics and both regime diagnostics.
inline void write_points_csv(const std::filesystem::path& path, const SweepResult& r) {
    CsvWriter w(path,
                "point,D,r_v,v_avg,l,w,ok,seed,reps_used,sigma2_sim_mean,sigma2_sim_std,"
                "sigma2_theory,l_hat_valor_mean,l_hat_valor_std,err_pct_valor_mean,"
                "err_pct_valor_std,l_hat_peak_mean,l_hat_peak_std,err_pct_peak_mean,"
                "err_pct_peak_std,model_nrmse,cond1_ratio,cond1_pass,cond2_ratio,alpha3,alpha4,"
                "cond2_pass,R2,slope_fit,slope_theory,error");
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        const SweepPoint& p = r.points[i];
        const SweepCurve* c = p.curve ? &r.curves[*p.curve] : nullptr;
        std::string err = p.error;
        for (char& ch : err) {
            if (ch == ',' || ch == '\n') ch = ';';
        }
        w.row({std::to_string(i), cell(p.params.diffusion), cell(p.params.radius),
               cell(p.params.mean_velocity), cell(p.params.distance), cell(p.params.width),
               p.ok ? "1" : "0", std::to_string(p.seed),
               std::to_string(p.variance.count), cell(p.variance.mean), cell(p.variance.stddev),
               cell(p.sigma2_theory), cell(p.l_hat_valor.mean), cell(p.l_hat_valor.stddev),
               cell(p.err_pct_valor.mean), cell(p.err_pct_valor.stddev), cell(p.l_hat_peak.mean),
               cell(p.l_hat_peak.stddev), cell(p.err_pct_peak.mean), cell(p.err_pct_peak.stddev),
               cell(p.model_nrmse),
               p.condition1 ? cell(p.condition1->ratio) : "",
               p.condition1 ? (p.condition1->pass ? "1" : "0") : "",
               p.condition2 ? cell(p.condition2->ratio) : "",
               p.condition2 ? cell(p.condition2->alpha3) : "",
               p.condition2 ? cell(p.condition2->alpha4) : "",
               p.condition2 ? (p.condition2->pass ? "1" : "0") : "",
               c ? cell(c->r2) : "", c ? cell(c->slope_fit) : "", c ? cell(c->slope_theory) : "",
               err});
    }
}

/// Per-replication estimates in the EstimateResult row format.
inline void write_estimates_csv(const std::filesystem::path& path, const SweepResult& r) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << "# units: um, s\n" << kEstimateCsvHeader << "\n";
    for (const SweepPoint& p : r.points) {
        for (const ReplicationEstimate& e : p.estimates) {
            if (e.valor) {
                out << estimate_csv_row(*e.valor, p.params.distance, p.seed, e.replication) << "\n";
            }
            if (e.peak_time) {
                out << estimate_csv_row(*e.peak_time, p.params.distance, p.seed, e.replication) << "\n";
            }
        }
    }
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline Json axes_to_json(const std::vector<std::pair<SweepAxis, std::vector<double>>>& axes) {
    Json out = Json::array();
    for (const auto& [axis, values] : axes) {
        Json vs = Json::array();
        for (double v : values) {
            vs.push_back(format_quantity(v, axis_dimension(axis)));
        }
        out.push_back(Json{{"name", axis_name(axis)}, {"values", vs}});
    }
    return out;
}

/// Run record. Wall time and timestamps live only here, never in the CSVs.
struct Manifest {
    std::string command;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string scale;
    Json parameters = Json::object();
    std::vector<std::string> outputs;
    double wall_seconds = 0.0;

    Json to_json() const {
        return Json{{"tool", "valor"},
                    {"version", VALOR_VERSION},
                    {"compiler", __VERSION__},
                    {"created_utc", utc_timestamp()},
                    {"command", command},
                    {"seed", seed},
                    {"threads", threads},
                    {"scale", scale},
                    {"units", {{"length", "um"}, {"time", "s"}}},
                    {"parameters", parameters},
                    {"outputs", outputs},
                    {"wall_seconds", wall_seconds}};
    }

    void write(const std::filesystem::path& dir) const {
        std::ofstream out(dir / "manifest.json");
        if (!out) {
            throw std::runtime_error("cannot write manifest in '" + dir.string() + "'");
        }
        out << to_json().dump(2) << "\n";
    }
};

}  // namespace valor

#endif  // VALOR_REPORT_HPP
