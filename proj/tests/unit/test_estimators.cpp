#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "valor/estimators.hpp"

using namespace valor;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ChannelParams capillary() { return ChannelParams{300.0, 5.0, 2000.0, 1000.0, 1.0}; }

UniformSeries gaussian_series(double start, double dt, std::size_t n, double mean, double var) {
    UniformSeries s{start, dt, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double t = start + i * dt;
        s.values[i] = std::exp(-(t - mean) * (t - mean) / (2.0 * var));
    }
    return s;
}

}  // namespace

TEST_CASE("moments of a sampled Gaussian", "[estimators]") {
    const UniformSeries s = gaussian_series(0.0, 1e-4, 20000, 1.0, 1e-3);
    const SignalMoments m = signal_moments(s);
    CHECK_THAT(m.mean_time, WithinRel(1.0, 1e-6));
    CHECK_THAT(m.variance, WithinRel(1e-3, 1e-3));
    CHECK_THAT(m.mass, WithinRel(std::sqrt(2.0 * std::numbers::pi * 1e-3), 1e-3));
}

TEST_CASE("variance ignores a shift of the time axis", "[estimators]") {
    const UniformSeries a = gaussian_series(0.0, 1e-4, 20000, 1.0, 1e-3);
    UniformSeries b = a;
    b.start_time = 7.3;
    const SignalMoments ma = signal_moments(a), mb = signal_moments(b);
    CHECK_THAT(mb.variance, WithinRel(ma.variance, 1e-12));
    CHECK_THAT(mb.mean_time - ma.mean_time, WithinAbs(7.3, 1e-9));
}

TEST_CASE("a single nonzero sample is degenerate", "[estimators]") {
    UniformSeries s{0.0, 1e-3, std::vector<double>(100, 0.0)};
    s.values[40] = 5.0;
    CHECK(signal_moments(s).variance == 0.0);
    CHECK_THROWS_AS(estimate_valor(s, ValorInputs::from(capillary())), DegenerateSignalError);
}

TEST_CASE("empty and negative signals are rejected", "[estimators]") {
    const UniformSeries zero{0.0, 1e-3, std::vector<double>(50, 0.0)};
    CHECK_THROWS_AS(signal_moments(zero), NoSignalError);
    CHECK_THROWS_AS(estimate_peak_time(zero, 0.0, 2000.0), NoSignalError);
    UniformSeries neg{0.0, 1e-3, std::vector<double>(50, 1.0)};
    neg.values[3] = -1.0;
    CHECK_THROWS_AS(signal_moments(neg), std::invalid_argument);
}

TEST_CASE("VALOR inverts the variance-distance relation", "[estimators]") {
    const ChannelParams p = capillary();
    const ValorInputs in = ValorInputs::from(p);
    const double de = 300.0 + 3e6 / 432.0;
    CHECK_THAT(in.effective_diffusion, WithinRel(de, 1e-12));
    for (double l : {1.0, 500.0, 1000.0, 2000.0, 4000.0, 1e6}) {
        const double sigma2 = 2.0 * de * l / 8e9;
        CHECK_THAT(estimate_valor_from_variance(sigma2, in).l_hat, WithinRel(l, 1e-9));
    }
    // Doubling both D_e and sigma^2 leaves the estimate unchanged.
    const ValorInputs twice{in.mean_velocity, 2.0 * in.effective_diffusion};
    CHECK_THAT(estimate_valor_from_variance(2e-3, twice).l_hat,
               WithinRel(estimate_valor_from_variance(1e-3, in).l_hat, 1e-12));
    CHECK_THROWS_AS(estimate_valor_from_variance(0.0, in), DegenerateSignalError);
    CHECK_THROWS_AS(estimate_valor_from_variance(1e-3, ValorInputs{0.0, de}), std::invalid_argument);
}

TEST_CASE("VALOR on model-shaped pulses is linear and monotone in distance", "[estimators]") {
    ChannelParams p = capillary();
    const ValorInputs in = ValorInputs::from(p);
    double last = 0.0;
    for (double l : {500.0, 1000.0, 2000.0, 4000.0}) {
        p.distance = l;
        const GaussianPulse g = gaussian_approximation(p);
        const double dt = g.stddev() / 50.0;
        const UniformSeries s = gaussian_series(0.0, dt, static_cast<std::size_t>((g.mean + 12 * g.stddev()) / dt),
                                                g.mean, g.variance);
        const EstimateResult r = estimate_valor(s, in, &p);
        CHECK_THAT(r.l_hat, WithinRel(l, 0.005));
        CHECK(r.l_hat > last);
        CHECK(r.diagnostics.pass);
        CHECK(std::isfinite(r.dispersion_ratio));
        last = r.l_hat;
    }
}

TEST_CASE("VALOR estimate is independent of the clock offset", "[estimators]") {
    const ChannelParams p = capillary();
    const GaussianPulse g = gaussian_approximation(p);
    const UniformSeries s = gaussian_series(0.0, 1e-4, 12000, g.mean, g.variance);
    const double base = estimate_valor(s, ValorInputs::from(p)).l_hat;
    for (double offset : {1.0, 7.3, 100.0}) {
        UniformSeries shifted = s;
        shifted.start_time += offset;
        CHECK_THAT(estimate_valor(shifted, ValorInputs::from(p)).l_hat, WithinRel(base, 1e-12));
    }
}

TEST_CASE("peak-time baseline reads the argmax", "[estimators]") {
    const double dt = 1e-3;
    const UniformSeries s = gaussian_series(0.0, dt, 2000, 0.5, 1e-3);
    const EstimateResult r = estimate_peak_time(s, 0.0, 2000.0);
    CHECK(r.method == EstimatorMethod::peak_time);
    CHECK(std::abs(r.l_hat - 1000.0) <= dt * 2000.0 + 1e-9);
    CHECK(r.warnings == kWarnNone);

    // A late emission time assumption of 0.1 s shortens the estimate by v * 0.1.
    const EstimateResult late = estimate_peak_time(s, 0.1, 2000.0);
    CHECK_THAT(late.l_hat - r.l_hat, WithinAbs(-200.0, 1e-9));

    // A clock offset moves the estimate by v times the offset.
    UniformSeries shifted = s;
    shifted.start_time = 7.3;
    CHECK_THAT(estimate_peak_time(shifted, 0.0, 2000.0).l_hat - r.l_hat, WithinAbs(2000.0 * 7.3, 1e-6));
    CHECK_THAT(estimate_peak_time(shifted, 7.3, 2000.0).l_hat, WithinAbs(r.l_hat, 1e-6));
}

TEST_CASE("peak-time estimate grows linearly with distance", "[estimators]") {
    ChannelParams p = capillary();
    std::vector<double> est;
    for (double l : {500.0, 1000.0, 2000.0, 4000.0}) {
        p.distance = l;
        const GaussianPulse g = gaussian_approximation(p);
        const UniformSeries s = gaussian_series(0.0, 1e-4, static_cast<std::size_t>(2.0 * g.mean / 1e-4), g.mean,
                                                g.variance);
        est.push_back(estimate_peak_time(s, 0.0, p.mean_velocity, 1).l_hat);
        CHECK(std::abs(est.back() - l) <= 1e-4 * p.mean_velocity + 1e-9);
    }
}

TEST_CASE("peak-time warnings", "[estimators]") {
    UniformSeries rising{0.0, 1e-3, std::vector<double>(100)};
    for (std::size_t i = 0; i < 100; ++i) {
        rising.values[i] = static_cast<double>(i);
    }
    const EstimateResult r = estimate_peak_time(rising, 0.0, 2000.0, 1);
    CHECK((r.warnings & kWarnPeakAtBoundary) != 0);
    const EstimateResult early = estimate_peak_time(rising, 1.0, 2000.0, 1);
    CHECK((early.warnings & kWarnNonPositive) != 0);
    CHECK(early.l_hat < 0.0);
    CHECK_THROWS_AS(estimate_peak_time(rising, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("moving average", "[estimators]") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const auto y = moving_average(x, 3);
    CHECK(y == std::vector<double>{1.5, 2.0, 3.0, 4.0, 4.5});
    CHECK(moving_average(x, 1) == x);
    CHECK_THROWS_AS(moving_average(x, 4), std::invalid_argument);
    CHECK_THROWS_AS(moving_average(x, 0), std::invalid_argument);
}

TEST_CASE("weighted moments against a brute-force sum", "[estimators]") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> t(300), w(300);
    double acc = 100.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        acc += u(rng);
        t[i] = acc;
        w[i] = u(rng);
    }
    double s0 = 0, s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        s0 += w[i];
        s1 += w[i] * t[i];
    }
    const double mean = s1 / s0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        s2 += w[i] * (t[i] - mean) * (t[i] - mean);
    }
    const SignalMoments m = weighted_moments(t, w);
    CHECK_THAT(m.mass, WithinRel(s0, 1e-12));
    CHECK_THAT(m.mean_time, WithinRel(mean, 1e-12));
    CHECK_THAT(m.variance, WithinRel(s2 / s0, 1e-9));
}

TEST_CASE("tail clipping drops small samples", "[estimators]") {
    UniformSeries s = gaussian_series(0.0, 1e-4, 20000, 1.0, 1e-3);
    s.values[0] = 1e-3;  // far outlier
    const double full = signal_moments(s).variance;
    const double clipped = signal_moments(s, MomentOptions{0.01}).variance;
    CHECK(clipped < full);
    CHECK_THAT(clipped, WithinRel(1e-3, 0.05));
}
