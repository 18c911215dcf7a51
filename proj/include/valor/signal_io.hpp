#ifndef VALOR_SIGNAL_IO_HPP
#define VALOR_SIGNAL_IO_HPP

/**
 * @file signal_io.hpp
 * @brief CSV and JSON forms of signals and estimates.
 *
 * Signal CSV:
 * @code
 * # units: um, s
 * # seed=42 rep=0
 * t,count
 * 0,0
 * 0.0001,0
 * @endcode
 * The sidecar JSON holds "channel" and "sim" in the config file format, so it
 * can be passed back as --config.
 */

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "valor/config.hpp"
#include "valor/estimators.hpp"
#include "valor/signal.hpp"
#include "valor/units.hpp"

namespace valor {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void write_signal_csv(std::ostream& out, const SignalRecord& s) {
    out << "# units: um, s\n";
    out << "# seed=" << s.meta.config.seed << " rep=" << s.meta.replication << "\n";
    out << "t,count\n";
    std::string line;
    for (std::size_t i = 0; i < s.size(); ++i) {
        line = format_number(s.timestamp(i));
        line += ',';
        line += std::to_string(s.counts[i]);
        line += '\n';
        out << line;
    }
}

inline Json signal_sidecar(const SignalRecord& s) {
    return Json{{"units", {{"length", "um"}, {"time", "s"}}},
                {"channel", channel_to_json(s.meta.channel)},
                {"sim", sim_to_json(s.meta.config)},
                {"replication", s.meta.replication},
                {"samples", s.size()}};
}

/// Writes `<stem>.csv` and `<stem>.json`.
inline void save_signal(const std::string& stem, const SignalRecord& s) {
    std::ofstream csv(stem + ".csv");
    std::ofstream meta(stem + ".json");
    if (!csv || !meta) {
        throw FormatError("cannot write '" + stem + ".csv/.json'");
    }
    write_signal_csv(csv, s);
    meta << signal_sidecar(s).dump(2) << "\n";
}

namespace detail {
template <class T>
bool parse_field(std::string_view s, T& out) {
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc{} && r.ptr == s.data() + s.size();
}
}  // namespace detail

/**
 * @brief Reads a signal CSV. The grid is rebuilt from the first timestamp and
 *        the mean spacing; non-uniform spacing is rejected.
 */
inline SignalRecord read_signal_csv(std::istream& in) {
    SignalRecord s;
    std::vector<double> t;
    std::string line;
    bool header = false, units = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            if (line.find("units:") != std::string::npos) {
                if (line != "# units: um, s") {
                    throw FormatError("unsupported units line '" + line + "'");
                }
                units = true;
            }
            std::istringstream ls(line.substr(1));
            std::string tok;
            while (ls >> tok) {
                if (tok.starts_with("seed=")) {
                    detail::parse_field(std::string_view(tok).substr(5), s.meta.config.seed);
                } else if (tok.starts_with("rep=")) {
                    detail::parse_field(std::string_view(tok).substr(4), s.meta.replication);
                }
            }
            continue;
        }
        if (!header) {
            if (line != "t,count") {
                throw FormatError("expected header 't,count', got '" + line + "'");
            }
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        double ti = 0.0;
        std::uint32_t c = 0;
        if (comma == std::string::npos ||
            !detail::parse_field(std::string_view(line).substr(0, comma), ti) ||
            !detail::parse_field(std::string_view(line).substr(comma + 1), c)) {
            throw FormatError("bad row at line " + std::to_string(line_no) + ": '" + line + "'");
        }
        t.push_back(ti);
        s.counts.push_back(c);
    }
    if (!units) {
        throw FormatError("missing '# units: um, s' header");
    }
    if (t.empty()) {
        throw FormatError("signal has no samples");
    }
    s.start_time = t.front();
    if (t.size() > 1) {
        s.interval = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
        if (!(s.interval > 0.0)) {
            throw FormatError("timestamps must be strictly increasing");
        }
        for (std::size_t i = 1; i < t.size(); ++i) {
            const double expected = s.start_time + static_cast<double>(i) * s.interval;
            if (std::abs(t[i] - expected) > 1e-6 * s.interval) {
                throw FormatError("timestamps are not uniformly spaced near line " +
                                  std::to_string(i));
            }
        }
    }
    return s;
}

/// Reads `<path>` and, when present, the sidecar next to it (same stem, .json).
inline SignalRecord load_signal(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open '" + path + "'");
    }
    SignalRecord s = read_signal_csv(in);
    std::string stem = path;
    if (stem.ends_with(".csv")) {
        stem.resize(stem.size() - 4);
    }
    std::ifstream side(stem + ".json");
    if (side) {
        RunConfig rc;
        rc.sim.seed = s.meta.config.seed;
        apply_config(rc, read_json_file(stem + ".json"));
        s.meta.channel = rc.channel;
        s.meta.config = rc.sim;
    }
    return s;
}

inline constexpr const char* kEstimateCsvHeader =
    "method,l_true,l_hat,err_pct,sigma2_hat,t_peak_hat,cond1_ratio,alpha3,alpha4,seed,rep";

/// One estimate row; empty cells for quantities the method does not produce.
inline std::string estimate_csv_row(const EstimateResult& r, double l_true, std::uint64_t seed,
                                    std::uint64_t rep) {
    auto num = [](double v) { return std::isfinite(v) ? format_number(v) : std::string(); };
    const bool diag = r.l_hat > 0.0;
    std::string row = to_string(r.method);
    row += ',' + num(l_true);
    row += ',' + num(r.l_hat);
    row += ',' + num(100.0 * std::abs(r.l_hat - l_true) / l_true);
    row += ',' + num(r.sigma2_hat);
    row += ',' + num(r.t_peak_hat);
    row += ',' + num(r.dispersion_ratio);
    row += ',' + (diag ? num(r.diagnostics.alpha3) : std::string());
    row += ',' + (diag ? num(r.diagnostics.alpha4) : std::string());
    row += ',' + std::to_string(seed);
    row += ',' + std::to_string(rep);
    return row;
}

}  // namespace valor

#endif  // VALOR_SIGNAL_IO_HPP
