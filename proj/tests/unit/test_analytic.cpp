#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "valor/analytic.hpp"

using namespace valor;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ChannelParams capillary() { return ChannelParams{300.0, 5.0, 2000.0, 1000.0, 1.0}; }

constexpr double kDe = 300.0 + 3e6 / 432.0;  // D (1 + Pe^2/48) at capillary parameters

// Slab probability from the normal CDF, independent of the library's erf handling.
double slab_probability(double t, const ChannelParams& p) {
    const double de = 300.0 * (1.0 + std::pow(p.mean_velocity * p.radius / p.diffusion, 2) / 48.0);
    const double s = std::sqrt(2.0 * de * t);
    auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - p.mean_velocity * t) / (s * std::sqrt(2.0))); };
    return cdf(p.distance + p.width) - cdf(p.distance);
}

}  // namespace

TEST_CASE("axial density on the advected front", "[analytic]") {
    const ChannelParams p = capillary();
    const double expected = 1.0 / std::sqrt(4.0 * std::numbers::pi * kDe * 0.5);
    CHECK_THAT(p_axial(1000.0, 0.5, p), WithinRel(expected, 1e-12));
    CHECK_THAT(p_axial(1000.0, 0.5, p), WithinAbs(4.688e-3, 1e-6));
    CHECK(p_axial(1000.0, 0.0, p) == 0.0);
    CHECK(p_axial(1000.0, -1.0, p) == 0.0);
}

TEST_CASE("axial density integrates to one", "[analytic]") {
    const ChannelParams p = capillary();
    for (double t : {0.01, 0.5, 3.0}) {
        const double sd = std::sqrt(2.0 * kDe * t);
        const double lo = p.mean_velocity * t - 12.0 * sd, hi = p.mean_velocity * t + 12.0 * sd;
        const int n = 4000;
        const double h = (hi - lo) / n;
        double s = 0.5 * (p_axial(lo, t, p) + p_axial(hi, t, p));
        for (int i = 1; i < n; ++i) {
            s += p_axial(lo + i * h, t, p);
        }
        CHECK_THAT(s * h, WithinAbs(1.0, 1e-6));
    }
}

TEST_CASE("far tails underflow to zero", "[analytic]") {
    const ChannelParams p = capillary();
    CHECK(p_axial(1e7, 0.5, p) == 0.0);
    CHECK(detection_probability(1e-6, p, ReceiverModel::exact) == 0.0);
}

TEST_CASE("detection probability receiver models", "[analytic]") {
    const ChannelParams p = capillary();
    const double small = detection_probability(0.5, p);
    CHECK_THAT(small, WithinAbs(4.688e-3, 1e-6));
    const double exact = detection_probability(0.5, p, ReceiverModel::exact);
    CHECK_THAT(exact, WithinRel(small, 1e-4));
    for (double t : {0.05, 0.3, 0.45, 0.5, 0.6, 2.0}) {
        const double e = detection_probability(t, p, ReceiverModel::exact);
        CHECK(e >= 0.0);
        CHECK(e <= 1.0);
        CHECK_THAT(e, WithinAbs(slab_probability(t, p), 1e-12));
    }
    ChannelParams wide = p;
    wide.width = 1000.0;
    CHECK(detection_probability(0.75, wide, ReceiverModel::exact) <= 1.0);
}

TEST_CASE("thin-receiver error shrinks as w^2", "[analytic]") {
    // Away from the peak so the first-derivative term does not vanish.
    ChannelParams p = capillary();
    auto gap = [&](double w) {
        p.width = w;
        return detection_probability(0.47, p, ReceiverModel::exact) - detection_probability(0.47, p);
    };
    const double g1 = gap(1.0), g2 = gap(0.5), g4 = gap(0.25);
    CHECK_THAT(g1 / g2, WithinRel(4.0, 0.02));
    CHECK_THAT(g2 / g4, WithinRel(4.0, 0.02));
}

TEST_CASE("Gaussian approximation by hand", "[analytic]") {
    const ChannelParams p = capillary();
    const GaussianPulse g = gaussian_approximation(p);
    CHECK(g.mean == 0.5);
    CHECK_THAT(g.variance, WithinRel(2.0 * kDe * 1000.0 / 8e9, 1e-12));
    CHECK_THAT(g.variance, WithinAbs(1.811e-3, 1e-6));
    CHECK_THAT(g.amplitude, WithinRel(std::sqrt(2000.0 / (4.0 * std::numbers::pi * kDe * 1000.0)), 1e-12));
    CHECK_THAT(g.amplitude, WithinAbs(4.688e-3, 1e-6));
    CHECK_THAT(g.amplitude, WithinRel(detection_probability(g.mean, p), 1e-14));
    CHECK(g(g.mean) == g.amplitude);

    ChannelParams twice = p;
    twice.distance *= 2.0;
    CHECK(gaussian_approximation(twice).variance == 2.0 * g.variance);
}

TEST_CASE("approximation diagnostics", "[analytic]") {
    const ApproxDiagnostics d = approximation_diagnostics(capillary());
    CHECK_THAT(d.ratio, WithinRel(kDe / 2e6, 1e-12));
    CHECK_THAT(d.ratio, WithinAbs(3.622e-3, 1e-6));
    CHECK_THAT(d.alpha3, WithinAbs(0.2553, 1e-4));
    CHECK_THAT(d.alpha4, WithinAbs(0.0869, 1e-4));
    CHECK(d.pass);

    ChannelParams far = capillary();
    far.distance = 1e9;
    CHECK(approximation_diagnostics(far).alpha3 < 1e-3);
    CHECK(approximation_diagnostics(far).alpha4 < 1e-6);

    ChannelParams near = capillary();
    near.distance = 5.0;
    CHECK_FALSE(approximation_diagnostics(near).pass);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const auto x = approximation_diagnostics(std::pow(10.0, u(rng) + 3.0), std::pow(10.0, u(rng) + 3.0),
                                                 std::pow(10.0, u(rng) + 3.0));
        CHECK_THAT(x.alpha4, WithinRel(4.0 / 3.0 * x.alpha3 * x.alpha3, 1e-12));
    }
}

TEST_CASE("sampled maximum of the detection curve", "[analytic]") {
    // The 1/sqrt(t) prefactor pulls the maximum to
    // t* = (sqrt(D_e^2 + v^2 l^2) - D_e) / v^2, slightly before l / v.
    for (double v : {1000.0, 2000.0, 4000.0}) {
        for (double l : {500.0, 1000.0, 4000.0}) {
            ChannelParams p = capillary();
            p.mean_velocity = v;
            p.distance = l;
            const double de = effective_diffusion(p);
            const double t_star = (std::sqrt(de * de + v * v * l * l) - de) / (v * v);
            const double t_peak = l / v;
            CHECK(t_peak - t_star > 0.0);
            CHECK(t_peak - t_star <= de / (v * v));

            const double dt = gaussian_approximation(p).stddev() / 100.0;
            double best = -1.0, arg = 0.0;
            for (double t = t_peak - 50 * dt; t <= t_peak + 50 * dt; t += dt) {
                const double y = detection_probability(t, p);
                if (y > best) {
                    best = y;
                    arg = t;
                }
            }
            CHECK(std::abs(arg - t_star) <= dt);
        }
    }
}

TEST_CASE("Gaussian variance matches the exact curve in the thin-dispersion regime", "[analytic]") {
    ChannelParams p = capillary();
    p.distance = 4000.0;  // D_e / (l v) = 9.1e-4
    REQUIRE(approximation_diagnostics(p).ratio <= 1e-3);
    const GaussianPulse g = gaussian_approximation(p);
    const double dt = g.stddev() / 200.0;
    double w0 = 0.0, w1 = 0.0;
    for (double t = dt; t < g.mean + 30 * g.stddev(); t += dt) {
        const double y = detection_probability(t, p);
        w0 += y;
        w1 += y * t;
    }
    const double mean = w1 / w0;
    double w2 = 0.0;
    for (double t = dt; t < g.mean + 30 * g.stddev(); t += dt) {
        w2 += detection_probability(t, p) * (t - mean) * (t - mean);
    }
    CHECK_THAT(w2 / w0, WithinRel(g.variance, 0.02));
}

TEST_CASE("automatic duration covers twelve standard deviations", "[analytic]") {
    const ChannelParams p = capillary();
    const GaussianPulse g = gaussian_approximation(p);
    CHECK_THAT(auto_duration(p), WithinRel(0.5 + 12.0 * std::sqrt(g.variance), 1e-12));
}
