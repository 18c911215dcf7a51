#ifndef VALOR_UNITS_HPP
#define VALOR_UNITS_HPP

// Unit-suffixed quantities ("1.5 mm", "2000 um/s", "300 um^2/s") converted to
// the internal micrometre/second convention.

#include <charconv>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace valor {

enum class Dimension { length, time, velocity, diffusivity };

inline const char* canonical_unit(Dimension d) {
    switch (d) {
        case Dimension::length: return "um";
        case Dimension::time: return "s";
        case Dimension::velocity: return "um/s";
        case Dimension::diffusivity: return "um^2/s";
    }
    return "";
}

class UnitError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::optional<double> length_scale(std::string_view u) {
    if (u == "nm") return 1e-3;
    if (u == "um" || u == "µm" || u == "μm") return 1.0;
    if (u == "mm") return 1e3;
    if (u == "cm") return 1e4;
    if (u == "m") return 1e6;
    return std::nullopt;
}

inline std::optional<double> time_scale(std::string_view u) {
    if (u == "ns") return 1e-9;
    if (u == "us" || u == "µs" || u == "μs") return 1e-6;
    if (u == "ms") return 1e-3;
    if (u == "s") return 1.0;
    if (u == "min") return 60.0;
    return std::nullopt;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

// Scale of `unit` to the canonical unit of `d`, or nullopt if it has another dimension.
inline std::optional<double> unit_scale(std::string_view unit, Dimension d) {
    const auto slash = unit.find('/');
    const std::string_view num = trim(unit.substr(0, slash));
    const std::string_view den =
        slash == std::string_view::npos ? std::string_view{} : trim(unit.substr(slash + 1));
    switch (d) {
        case Dimension::length:
            return den.empty() ? length_scale(num) : std::nullopt;
        case Dimension::time:
            return den.empty() ? time_scale(num) : std::nullopt;
        case Dimension::velocity: {
            const auto l = length_scale(num);
            const auto t = time_scale(den);
            if (!l || !t) return std::nullopt;
            return *l / *t;
        }
        case Dimension::diffusivity: {
            std::string_view base = num;
            if (base.ends_with("^2")) {
                base.remove_suffix(2);
            } else if (base.ends_with("2") || base.ends_with("²")) {
                base.remove_suffix(base.ends_with("2") ? 1 : std::string_view("²").size());
            } else {
                return std::nullopt;
            }
            const auto l = length_scale(base);
            const auto t = time_scale(den);
            if (!l || !t) return std::nullopt;
            return *l * *l / *t;
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Parses "<number> <unit>" (space optional) into canonical units of `d`.
/// Bare numbers are rejected.
inline double parse_quantity(std::string_view text, Dimension d) {
    const std::string_view s = detail::trim(text);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{}) {
        throw UnitError("not a quantity: '" + std::string(text) + "'");
    }
    const std::string_view unit = detail::trim(s.substr(static_cast<std::size_t>(end - s.data())));
    if (unit.empty()) {
        throw UnitError("missing unit in '" + std::string(text) + "' (expected e.g. '" +
                        std::string("1 ") + canonical_unit(d) + "')");
    }
    const auto scale = detail::unit_scale(unit, d);
    if (!scale) {
        throw UnitError("unit '" + std::string(unit) + "' in '" + std::string(text) +
                        "' is not a " + canonical_unit(d) + " quantity");
    }
    const double out = value * *scale;
    if (!std::isfinite(out)) {
        throw UnitError("quantity out of range: '" + std::string(text) + "'");
    }
    return out;
}

/// Shortest round-trip decimal form of `v`.
inline std::string format_number(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

/// Canonical quantity string, e.g. "2000 um/s"; parse_quantity reads it back exactly.
inline std::string format_quantity(double v, Dimension d) {
    return format_number(v) + " " + canonical_unit(d);
}

}  // namespace valor

#endif  // VALOR_UNITS_HPP
