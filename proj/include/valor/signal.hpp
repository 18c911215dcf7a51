#ifndef VALOR_SIGNAL_HPP
#define VALOR_SIGNAL_HPP

// Monte Carlo controls and the receiver count time series a replication emits.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "valor/channel.hpp"

namespace valor {

enum class KernelChoice {
    automatic,  ///< vectorized float kernel when its single-reflection bound holds
    fast,       ///< vectorized float kernel; rejected if the bound does not hold
    reference,  ///< double-precision particle-at-a-time kernel
};

struct SimConfig {
    std::uint64_t molecules = 100000;       ///< M
    double time_step = 1e-4;                ///< dt, s
    std::optional<double> duration;         ///< T_sim, s; empty means auto
    std::uint32_t record_every = 1;         ///< steps per recorded sample
    std::uint64_t seed = 1;
    double emitter_offset = 0.0;            ///< radial release position, um
    double time_offset = 0.0;               ///< added to every timestamp, s
    KernelChoice kernel = KernelChoice::automatic;
};

inline void validate(const SimConfig& c, const ChannelParams& p) {
    if (c.molecules < 1) {
        throw std::invalid_argument("molecule count must be at least 1");
    }
    if (!(c.time_step > 0.0) || !std::isfinite(c.time_step)) {
        throw std::invalid_argument("time step must be positive");
    }
    if (c.duration && (!(*c.duration > 0.0) || !std::isfinite(*c.duration))) {
        throw std::invalid_argument("simulated duration must be positive");
    }
    if (c.record_every < 1) {
        throw std::invalid_argument("record_every must be at least 1");
    }
    if (!(c.emitter_offset >= 0.0) || !(c.emitter_offset < p.radius)) {
        throw std::invalid_argument("emitter radial offset must lie in [0, r_v)");
    }
    if (!(c.time_offset >= 0.0) || !std::isfinite(c.time_offset)) {
        throw std::invalid_argument("time offset must be non-negative");
    }
}

/// Axial slab [position, position + width] in which molecules are counted.
struct Receiver {
    double position = 0.0;  ///< um
    double width = 0.0;     ///< um

    friend bool operator==(const Receiver&, const Receiver&) = default;
};

inline Receiver receiver_of(const ChannelParams& p) { return {p.distance, p.width}; }

struct Provenance {
    ChannelParams channel;  ///< distance and width are the receiver's
    SimConfig config;
    std::uint64_t replication = 0;
};

/**
 * @brief Received count time series N_rx(t) of one replication at one receiver.
 *
 * Samples sit on a uniform grid: timestamp(i) = start_time + i * interval,
 * where start_time carries the unknown transmitter offset.
 */
struct SignalRecord {
    double start_time = 0.0;  ///< s
    double interval = 0.0;    ///< s
    std::vector<std::uint32_t> counts;
    Provenance meta;

    std::size_t size() const { return counts.size(); }
    double timestamp(std::size_t i) const { return start_time + static_cast<double>(i) * interval; }

    std::vector<double> timestamps() const {
        std::vector<double> t(counts.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = timestamp(i);
        }
        return t;
    }
};

/// Real-valued series on a uniform grid; used for ensemble means and synthetic pulses.
struct UniformSeries {
    double start_time = 0.0;
    double interval = 0.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double timestamp(std::size_t i) const { return start_time + static_cast<double>(i) * interval; }
};

/// Per-sample mean of several records on the same grid, divided by `scale`.
inline UniformSeries mean_signal(const std::vector<SignalRecord>& records, double scale = 1.0) {
    if (records.empty()) {
        throw std::invalid_argument("mean_signal needs at least one record");
    }
    UniformSeries out{records.front().start_time, records.front().interval,
                      std::vector<double>(records.front().size(), 0.0)};
    for (const auto& r : records) {
        if (r.size() != out.size() || r.interval != out.interval) {
            throw std::invalid_argument("records are not on a common time grid");
        }
        for (std::size_t i = 0; i < r.size(); ++i) {
            out.values[i] += r.counts[i];
        }
    }
    const double norm = 1.0 / (static_cast<double>(records.size()) * scale);
    for (double& v : out.values) {
        v *= norm;
    }
    return out;
}

}  // namespace valor

#endif  // VALOR_SIGNAL_HPP
