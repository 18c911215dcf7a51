#ifndef VALOR_SIMULATOR_HPP
#define VALOR_SIMULATOR_HPP

/**
 * @file simulator.hpp
 * @brief Particle-based Monte Carlo ground truth for the vessel channel.
 *
 * M molecules are released at x = 0 and advanced by Euler-Maruyama steps of
 * Poiseuille advection plus isotropic Brownian motion, with specular
 * reflection at the wall and unbounded ends. Transparent receivers count the
 * molecules inside their axial slab at every recorded sample; nothing is ever
 * absorbed, so several receivers can observe one run.
 *
 * Output is a pure function of (seed, replication, particle id): each particle
 * has its own stream and per-worker histograms are merged by integer addition,
 * so any thread count yields identical records.
 */

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "valor/analytic.hpp"
#include "valor/channel.hpp"
#include "valor/parallel.hpp"
#include "valor/particle.hpp"
#include "valor/random.hpp"
#include "valor/signal.hpp"

namespace valor {

/// Resolved run: grid size and the receivers observed.
struct RunPlan {
    ChannelParams channel;
    SimConfig config;
    std::vector<Receiver> receivers;
    double duration = 0.0;
    std::uint64_t steps = 0;
    std::uint64_t samples = 0;  ///< recorded samples, including t = 0
    bool use_fast_kernel = false;

    double sample_interval() const { return config.time_step * config.record_every; }
};

/// Duration used when SimConfig::duration is empty: t_peak + 12 sigma of the
/// farthest receiver.
inline double auto_duration(const ChannelParams& p, std::span<const Receiver> receivers) {
    if (!(p.mean_velocity > 0.0)) {
        throw std::invalid_argument("automatic duration needs a positive flow velocity");
    }
    double longest = 0.0;
    for (const Receiver& r : receivers) {
        ChannelParams q = p;
        q.distance = r.position + r.width;
        longest = std::max(longest, auto_duration(q));
    }
    return longest;
}

/// True when one reflection always suffices: the largest radial excursion the
/// float normals can produce in a step stays below 2 r_v.
inline bool single_reflection_bound(const ChannelParams& p, double dt) {
    const double sigma = std::sqrt(2.0 * p.diffusion * dt);
    return 1.01 * std::numbers::sqrt2 * kMaxNormalMagnitude * sigma <= 2.0 * p.radius;
}

inline RunPlan plan_run(const ChannelParams& p, const SimConfig& cfg,
                        std::vector<Receiver> receivers) {
    validate(p, /*allow_still_fluid=*/true);
    validate(cfg, p);
    if (receivers.empty()) {
        throw std::invalid_argument("at least one receiver is required");
    }
    for (const Receiver& r : receivers) {
        if (!(r.position > 0.0) || !(r.width > 0.0) || !std::isfinite(r.position + r.width)) {
            throw std::invalid_argument("receiver slab must have positive position and width");
        }
    }
    RunPlan plan;
    plan.channel = p;
    plan.config = cfg;
    plan.receivers = std::move(receivers);
    plan.duration = cfg.duration ? *cfg.duration : auto_duration(p, plan.receivers);
    plan.steps = static_cast<std::uint64_t>(std::ceil(plan.duration / cfg.time_step - 1e-9));
    plan.samples = plan.steps / cfg.record_every + 1;
    const bool bound = single_reflection_bound(p, cfg.time_step);
    switch (cfg.kernel) {
        case KernelChoice::automatic:
            plan.use_fast_kernel = bound;
            break;
        case KernelChoice::fast:
            if (!bound) {
                throw std::invalid_argument(
                    "fast kernel needs sqrt(2 D dt) small against the vessel radius");
            }
            plan.use_fast_kernel = true;
            break;
        case KernelChoice::reference:
            plan.use_fast_kernel = false;
            break;
    }
    return plan;
}

namespace detail {

inline constexpr std::size_t kLanes = 64;
inline constexpr std::size_t kChunkParticles = 4096;

// Three Newton iterations from the bit-trick seed; relative error ~1e-7.
inline float fast_rsqrt(float a) {
    float g = std::bit_cast<float>(0x5f375a86u - (std::bit_cast<std::uint32_t>(a) >> 1));
    const float h = 0.5f * a;
    g = g * (1.5f - h * g * g);
    g = g * (1.5f - h * g * g);
    g = g * (1.5f - h * g * g);
    return g;
}

// Emission point for a particle: the first draw of its stream sets the polar angle.
inline CrossSection emission_point(Xoshiro128Plus& rng, double radial_offset) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(unit_uniform(rng.next()));
    return {radial_offset * std::cos(theta), radial_offset * std::sin(theta)};
}

// Lanes of the vectorized kernel. Axial positions are kept relative to the
// mean-flow front x - v_avg t, which keeps float resolution far below the
// receiver width over the whole run.
struct alignas(64) LaneBlock {
    float x[kLanes];
    float y[kLanes];
    float z[kLanes];
    std::uint32_t s0[kLanes];
    std::uint32_t s1[kLanes];
    std::uint32_t s2[kLanes];
    std::uint32_t s3[kLanes];
    std::uint32_t active[kLanes];
    float xa[kLanes];
    float xb[kLanes];
};

struct LaneConstants {
    float sigma;      // sqrt(2 D dt)
    float peak_flow;  // 2 v_avg dt
    float mean_flow;  // v_avg dt
    float inv_r2;     // 1 / r_v^2
    float radius;
    float radius2;
};

// Advances every lane by one step (Second = false) or two steps. One pair of
// steps consumes six uniforms: normals (n0, n1, n2) drive the first step and
// (n3, n4, n5) the second, in (x, y, z) order.
template <bool Second>
inline void advance_lanes(LaneBlock& b, const LaneConstants& c) {
    const float sigma = c.sigma, peak = c.peak_flow, mean = c.mean_flow, inv_r2 = c.inv_r2;
    const float two_r = 2.0f * c.radius, r2max = c.radius2;
#pragma GCC ivdep
    for (std::size_t i = 0; i < kLanes; ++i) {
        std::uint32_t a0 = b.s0[i], a1 = b.s1[i], a2 = b.s2[i], a3 = b.s3[i];
        auto draw = [&]() {
            const std::uint32_t result = a0 + a3;
            const std::uint32_t t = a1 << 9;
            a2 ^= a0;
            a3 ^= a1;
            a1 ^= a2;
            a0 ^= a3;
            a2 ^= t;
            a3 = std::rotl(a3, 11);
            return unit_uniform(result);
        };
        const float u0 = draw(), u1 = draw(), u2 = draw(), u3 = draw(), u4 = draw(), u5 = draw();
        b.s0[i] = a0;
        b.s1[i] = a1;
        b.s2[i] = a2;
        b.s3[i] = a3;
        float n0, n1, n2, n3, n4, n5;
        box_muller(u0, u1, n0, n1);
        box_muller(u2, u3, n2, n3);
        box_muller(u4, u5, n4, n5);

        float x = b.x[i], y = b.y[i], z = b.z[i];
        {
            const float r2 = y * y + z * z;
            x += peak * (1.0f - r2 * inv_r2) - mean + sigma * n0;
            y += sigma * n1;
            z += sigma * n2;
            const float q2 = y * y + z * z;
            const float s = q2 > r2max ? two_r * fast_rsqrt(q2) - 1.0f : 1.0f;
            y *= s;
            z *= s;
        }
        b.xa[i] = x;
        if constexpr (Second) {
            const float r2 = y * y + z * z;
            x += peak * (1.0f - r2 * inv_r2) - mean + sigma * n3;
            y += sigma * n4;
            z += sigma * n5;
            const float q2 = y * y + z * z;
            const float s = q2 > r2max ? two_r * fast_rsqrt(q2) - 1.0f : 1.0f;
            y *= s;
            z *= s;
            b.xb[i] = x;
        }
        b.x[i] = x;
        b.y[i] = y;
        b.z[i] = z;
    }
}

// Kept out of line: inlined into the receiver loop, GCC vectorizes the outer
// loop instead and turns this one into gathers.
[[gnu::noinline]] inline std::uint32_t count_lanes(const float* xs, const std::uint32_t* active, float lo, float hi) {
    std::uint32_t n = 0;
    for (std::size_t i = 0; i < kLanes; ++i) {
        n += static_cast<std::uint32_t>(xs[i] >= lo) & static_cast<std::uint32_t>(xs[i] <= hi) &
             active[i];
    }
    return n;
}

// Histogram layout: receiver-major, hist[r * samples + j].
class Occupancy {
public:
    explicit Occupancy(const RunPlan& plan) : plan_(&plan) {}

    bool recorded(std::uint64_t step) const { return step % plan_->config.record_every == 0; }

    // Receiver bounds in the co-moving frame at `step`.
    std::pair<float, float> comoving_bounds(std::size_t r, std::uint64_t step) const {
        const double front = plan_->channel.mean_velocity * plan_->config.time_step *
                             static_cast<double>(step);
        const Receiver& rx = plan_->receivers[r];
        return {static_cast<float>(rx.position - front),
                static_cast<float>(rx.position + rx.width - front)};
    }

    void add_lanes(std::span<std::uint32_t> hist, const float* xs, const std::uint32_t* active,
                   std::uint64_t step) const {
        const std::size_t sample = step / plan_->config.record_every;
        for (std::size_t r = 0; r < plan_->receivers.size(); ++r) {
            const auto [lo, hi] = comoving_bounds(r, step);
            hist[r * plan_->samples + sample] += count_lanes(xs, active, lo, hi);
        }
    }

    void add_particle(std::span<std::uint32_t> hist, double x, std::uint64_t step) const {
        const std::size_t sample = step / plan_->config.record_every;
        for (std::size_t r = 0; r < plan_->receivers.size(); ++r) {
            const Receiver& rx = plan_->receivers[r];
            if (x >= rx.position && x <= rx.position + rx.width) {
                ++hist[r * plan_->samples + sample];
            }
        }
    }

private:
    const RunPlan* plan_;
};

// Simulates particles [first, first + count) with the vectorized kernel.
inline void run_block_fast(const RunPlan& plan, std::uint64_t replication, std::uint64_t first,
                           std::size_t count, std::span<std::uint32_t> hist,
                           std::vector<Particle>* final_positions) {
    const ChannelParams& p = plan.channel;
    const SimConfig& cfg = plan.config;
    const Occupancy occ(plan);
    const LaneConstants c{static_cast<float>(std::sqrt(2.0 * p.diffusion * cfg.time_step)),
                          static_cast<float>(2.0 * p.mean_velocity * cfg.time_step),
                          static_cast<float>(p.mean_velocity * cfg.time_step),
                          static_cast<float>(1.0 / (p.radius * p.radius)),
                          static_cast<float>(p.radius),
                          static_cast<float>(p.radius * p.radius)};
    LaneBlock b;
    for (std::size_t i = 0; i < kLanes; ++i) {
        Xoshiro128Plus rng = particle_stream(cfg.seed, replication, first + i);
        const CrossSection start = emission_point(rng, cfg.emitter_offset);
        b.x[i] = 0.0f;
        b.y[i] = static_cast<float>(start.y);
        b.z[i] = static_cast<float>(start.z);
        b.s0[i] = rng.s[0];
        b.s1[i] = rng.s[1];
        b.s2[i] = rng.s[2];
        b.s3[i] = rng.s[3];
        b.active[i] = i < count ? 1u : 0u;
    }
    occ.add_lanes(hist, b.x, b.active, 0);
    std::uint64_t step = 0;
    while (step + 2 <= plan.steps) {
        advance_lanes<true>(b, c);
        if (occ.recorded(step + 1)) {
            occ.add_lanes(hist, b.xa, b.active, step + 1);
        }
        if (occ.recorded(step + 2)) {
            occ.add_lanes(hist, b.xb, b.active, step + 2);
        }
        step += 2;
    }
    if (step < plan.steps) {
        advance_lanes<false>(b, c);
        ++step;
        if (occ.recorded(step)) {
            occ.add_lanes(hist, b.xa, b.active, step);
        }
    }
    if (final_positions != nullptr) {
        const double front = p.mean_velocity * cfg.time_step * static_cast<double>(plan.steps);
        for (std::size_t i = 0; i < count; ++i) {
            (*final_positions)[first + i] = {b.x[i] + front, b.y[i], b.z[i]};
        }
    }
}

// Double-precision particle-at-a-time kernel. Follows the same stream layout
// as the lane kernel; a rejected step redraws two further Box-Muller pairs.
inline void run_particle_reference(const RunPlan& plan, std::uint64_t replication,
                                   std::uint64_t id, std::span<std::uint32_t> hist,
                                   std::vector<Particle>* final_positions) {
    const ChannelParams& p = plan.channel;
    const SimConfig& cfg = plan.config;
    const Occupancy occ(plan);
    NormalSource normals{particle_stream(cfg.seed, replication, id)};
    const CrossSection start = emission_point(normals.rng, cfg.emitter_offset);
    Particle particle{0.0, start.y, start.z};
    occ.add_particle(hist, particle.x, 0);

    std::array<float, 6> pending{};
    for (std::uint64_t step = 1; step <= plan.steps; ++step) {
        const bool first_of_pair = (step % 2) == 1;
        if (first_of_pair) {
            normals.pair(pending[0], pending[1]);
            normals.pair(pending[2], pending[3]);
            normals.pair(pending[4], pending[5]);
        }
        const std::size_t o = first_of_pair ? 0 : 3;
        std::array<double, 3> noise{pending[o], pending[o + 1], pending[o + 2]};
        auto next = try_step(particle, cfg.time_step, p, noise);
        while (!next) {
            float a, b2, c2, d;
            normals.pair(a, b2);
            normals.pair(c2, d);
            noise = {a, b2, c2};
            next = try_step(particle, cfg.time_step, p, noise);
        }
        particle = *next;
        if (occ.recorded(step)) {
            occ.add_particle(hist, particle.x, step);
        }
    }
    if (final_positions != nullptr) {
        (*final_positions)[id] = particle;
    }
}

// Particles [begin, end) of one replication, added into `hist`.
inline void run_range(const RunPlan& plan, std::uint64_t replication, std::uint64_t begin,
                      std::uint64_t end, std::span<std::uint32_t> hist,
                      std::vector<Particle>* final_positions) {
    if (plan.use_fast_kernel) {
        for (std::uint64_t first = begin; first < end; first += kLanes) {
            const std::size_t count = static_cast<std::size_t>(std::min<std::uint64_t>(kLanes, end - first));
            run_block_fast(plan, replication, first, count, hist, final_positions);
        }
    } else {
        for (std::uint64_t id = begin; id < end; ++id) {
            run_particle_reference(plan, replication, id, hist, final_positions);
        }
    }
}

inline std::vector<SignalRecord> make_records(const RunPlan& plan, std::uint64_t replication,
                                              const std::vector<std::uint32_t>& hist) {
    std::vector<SignalRecord> out;
    out.reserve(plan.receivers.size());
    for (std::size_t r = 0; r < plan.receivers.size(); ++r) {
        SignalRecord rec;
        rec.start_time = plan.config.time_offset;
        rec.interval = plan.sample_interval();
        const auto begin = hist.begin() + static_cast<std::ptrdiff_t>(r * plan.samples);
        rec.counts.assign(begin, begin + static_cast<std::ptrdiff_t>(plan.samples));
        rec.meta.channel = plan.channel;
        rec.meta.channel.distance = plan.receivers[r].position;
        rec.meta.channel.width = plan.receivers[r].width;
        rec.meta.config = plan.config;
        rec.meta.config.duration = plan.duration;
        rec.meta.replication = replication;
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace detail

/**
 * @brief Runs replications [first_replication, first_replication + n) and hands
 *        each finished replication to `sink(replication, records)`.
 *
 * `records` holds one SignalRecord per receiver, in receiver order. Sink calls
 * are serialized but their order depends on scheduling; records themselves do
 * not.
 */
template <class Sink>
void for_each_replication(const RunPlan& plan, std::uint64_t first_replication, std::uint64_t n,
                          unsigned threads, Sink&& sink) {
    if (n == 0) {
        return;
    }
    threads = resolve_threads(threads);
    const std::uint64_t m = plan.config.molecules;
    const std::uint64_t chunks = (m + detail::kChunkParticles - 1) / detail::kChunkParticles;
    const std::uint64_t groups =
        std::clamp<std::uint64_t>((threads + n - 1) / n, 1, chunks);
    const std::size_t hist_size = plan.receivers.size() * plan.samples;

    struct Pending {
        std::vector<std::uint32_t> hist;
        std::uint64_t remaining = 0;
    };
    std::vector<Pending> pending(n);
    std::mutex merge_mutex;
    std::mutex sink_mutex;

    parallel_for(n * groups, threads, [&](std::size_t task) {
        const std::uint64_t rep = task / groups;
        const std::uint64_t group = task % groups;
        std::vector<std::uint32_t> local(hist_size, 0);
        for (std::uint64_t c = group; c < chunks; c += groups) {
            const std::uint64_t begin = c * detail::kChunkParticles;
            const std::uint64_t end = std::min(m, begin + detail::kChunkParticles);
            detail::run_range(plan, first_replication + rep, begin, end, local, nullptr);
        }
        std::vector<std::uint32_t> done;
        {
            std::lock_guard lock(merge_mutex);
            Pending& slot = pending[rep];
            if (slot.hist.empty()) {
                slot.hist = std::move(local);
                slot.remaining = groups - 1;
            } else {
                for (std::size_t i = 0; i < hist_size; ++i) {
                    slot.hist[i] += local[i];
                }
                --slot.remaining;
            }
            if (slot.remaining == 0) {
                done = std::move(slot.hist);
                slot.hist = {};
            }
        }
        if (!done.empty()) {
            auto records = detail::make_records(plan, first_replication + rep, done);
            std::lock_guard lock(sink_mutex);
            sink(first_replication + rep, std::move(records));
        }
    });
}

/// One replication observed by several receivers; records in receiver order.
inline std::vector<SignalRecord> run_replication(const ChannelParams& p, const SimConfig& cfg,
                                                 std::uint64_t replication,
                                                 std::vector<Receiver> receivers,
                                                 unsigned threads = 1) {
    const RunPlan plan = plan_run(p, cfg, std::move(receivers));
    std::vector<SignalRecord> out;
    for_each_replication(plan, replication, 1, threads,
                         [&](std::uint64_t, std::vector<SignalRecord> r) { out = std::move(r); });
    return out;
}

/// One replication at the receiver described by `p` (distance, width).
inline SignalRecord run_replication(const ChannelParams& p, const SimConfig& cfg,
                                    std::uint64_t replication, unsigned threads = 1) {
    return std::move(run_replication(p, cfg, replication, {receiver_of(p)}, threads).front());
}

/// Replications 0..n-1, indexed [replication][receiver].
inline std::vector<std::vector<SignalRecord>> run_ensemble(const ChannelParams& p,
                                                           const SimConfig& cfg,
                                                           std::uint64_t n_reps,
                                                           std::vector<Receiver> receivers,
                                                           unsigned threads = 0) {
    if (n_reps < 1) {
        throw std::invalid_argument("ensemble needs at least one replication");
    }
    const RunPlan plan = plan_run(p, cfg, std::move(receivers));
    std::vector<std::vector<SignalRecord>> out(n_reps);
    for_each_replication(plan, 0, n_reps, threads,
                         [&](std::uint64_t rep, std::vector<SignalRecord> r) {
                             out[rep] = std::move(r);
                         });
    return out;
}

inline std::vector<SignalRecord> run_ensemble(const ChannelParams& p, const SimConfig& cfg,
                                              std::uint64_t n_reps, unsigned threads = 0) {
    auto nested = run_ensemble(p, cfg, n_reps, {receiver_of(p)}, threads);
    std::vector<SignalRecord> out;
    out.reserve(nested.size());
    for (auto& rep : nested) {
        out.push_back(std::move(rep.front()));
    }
    return out;
}

/// Final positions of all M particles of one replication after the configured
/// duration (explicit duration required when v_avg = 0).
inline std::vector<Particle> simulate_positions(const ChannelParams& p, const SimConfig& cfg,
                                                std::uint64_t replication, unsigned threads = 1) {
    const RunPlan plan = plan_run(p, cfg, {receiver_of(p)});
    std::vector<Particle> out(cfg.molecules);
    const std::uint64_t chunks =
        (cfg.molecules + detail::kChunkParticles - 1) / detail::kChunkParticles;
    parallel_for(chunks, threads, [&](std::size_t c) {
        std::vector<std::uint32_t> scratch(plan.receivers.size() * plan.samples, 0);
        const std::uint64_t begin = c * detail::kChunkParticles;
        const std::uint64_t end = std::min<std::uint64_t>(cfg.molecules, begin + detail::kChunkParticles);
        detail::run_range(plan, replication, begin, end, scratch, &out);
    });
    return out;
}

}  // namespace valor

#endif  // VALOR_SIMULATOR_HPP
