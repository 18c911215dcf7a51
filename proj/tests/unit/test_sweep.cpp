#include <catch_amalgamated.hpp>

#include <cmath>

#include "valor/sweep.hpp"

using namespace valor;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SweepSpec small_spec() {
    SweepSpec s;
    s.base = ChannelParams{300.0, 5.0, 2000.0, 200.0, 1.0};
    s.config.molecules = 4000;
    s.config.seed = 3;
    s.replications = 2;
    s.metrics = kMetricVariance | kMetricValor | kMetricPeakTime;
    return s;
}

}  // namespace

TEST_CASE("grid expansion order", "[sweep]") {
    SweepSpec s = small_spec();
    s.axes = {{SweepAxis::mean_velocity, {1000.0, 2000.0}}, {SweepAxis::distance, {100.0, 200.0, 300.0}}};
    const auto grid = expand_grid(s);
    REQUIRE(grid.size() == 6);
    CHECK(grid[0].mean_velocity == 1000.0);
    CHECK(grid[0].distance == 100.0);
    CHECK(grid[1].distance == 200.0);
    CHECK(grid[2].distance == 300.0);
    CHECK(grid[3].mean_velocity == 2000.0);
    CHECK(grid[3].distance == 100.0);
    CHECK(grid[5].radius == 5.0);
    s.axes.push_back({SweepAxis::width, {}});
    CHECK_THROWS_AS(expand_grid(s), std::invalid_argument);
}

TEST_CASE("axis and metric names", "[sweep]") {
    for (SweepAxis a : {SweepAxis::distance, SweepAxis::mean_velocity, SweepAxis::radius, SweepAxis::width,
                        SweepAxis::diffusion}) {
        CHECK(parse_axis(axis_name(a)) == a);
    }
    CHECK_FALSE(parse_axis("length"));
    CHECK(parse_metric("variance") == kMetricVariance);
    CHECK(parse_metric("l_hat_valor") == kMetricValor);
    CHECK(parse_metric("l_hat_peak") == kMetricPeakTime);
    CHECK(parse_metric("model_match") == kMetricModelMatch);
    CHECK_FALSE(parse_metric("bias"));
}

TEST_CASE("error percentage is absolute", "[sweep]") {
    CHECK_THAT(error_percent(1100.0, 1000.0), WithinRel(10.0, 1e-12));
    CHECK_THAT(error_percent(900.0, 1000.0), WithinRel(10.0, 1e-12));
}

TEST_CASE("single-point sweep", "[sweep]") {
    const SweepSpec s = small_spec();
    const SweepResult r = run_sweep(s, 2);
    REQUIRE(r.points.size() == 1);
    const SweepPoint& p = r.points.front();
    CHECK(p.ok);
    CHECK(p.error.empty());
    CHECK(p.estimates.size() == 2);
    CHECK(p.variance.count == 2);
    CHECK(p.variance.mean > 0.0);
    CHECK(p.l_hat_valor.count == 2);
    CHECK(p.l_hat_peak.count == 2);
    CHECK(p.condition1);
    CHECK(p.condition2);
    CHECK_THAT(p.sigma2_theory, WithinRel(predicted_variance(p.params), 1e-12));
    REQUIRE(r.curves.size() == 1);
    CHECK(std::isnan(r.curves.front().r2));
    CHECK_FALSE(r.curves.front().error.empty());
}

TEST_CASE("an invalid point is recorded and the sweep continues", "[sweep]") {
    SweepSpec s = small_spec();
    s.axes = {{SweepAxis::width, {1.0, 500.0}}};  // w > l is invalid
    const SweepResult r = run_sweep(s, 1);
    REQUIRE(r.points.size() == 2);
    CHECK(r.points[0].ok);
    CHECK_FALSE(r.points[1].ok);
    CHECK_FALSE(r.points[1].error.empty());
}

TEST_CASE("sweep output is independent of the thread count", "[sweep]") {
    SweepSpec s = small_spec();
    s.axes = {{SweepAxis::mean_velocity, {1000.0, 2000.0}}, {SweepAxis::distance, {100.0, 200.0}}};
    const SweepResult a = run_sweep(s, 1);
    const SweepResult b = run_sweep(s, 4);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].seed == b.points[i].seed);
        CHECK(a.points[i].variance.mean == b.points[i].variance.mean);
        CHECK(a.points[i].l_hat_peak.mean == b.points[i].l_hat_peak.mean);
    }
    // Points sharing the flow share one run and seed.
    CHECK(a.points[0].seed == a.points[1].seed);
    CHECK(a.points[0].seed != a.points[2].seed);
}

TEST_CASE("variance curves over distance", "[sweep]") {
    SweepSpec s = small_spec();
    s.axes = {{SweepAxis::distance, {100.0, 200.0, 300.0}}};
    s.replications = 3;
    const SweepResult r = run_sweep(s, 2);
    REQUIRE(r.curves.size() == 1);
    const SweepCurve& c = r.curves.front();
    CHECK(c.points.size() == 3);
    CHECK(c.error.empty());
    CHECK(c.r2 > 0.9);
    const double de = effective_diffusion(s.base);
    CHECK_THAT(c.slope_theory, WithinRel(2.0 * de / 8e9, 1e-12));
    CHECK_THAT(c.slope_fit, WithinRel(c.slope_theory, 0.2));
}

TEST_CASE("ensemble-mean mode gives one estimate per point", "[sweep]") {
    SweepSpec s = small_spec();
    s.mode = EstimationMode::ensemble_mean;
    s.keep_mean_signal = true;
    const SweepResult r = run_sweep(s, 2);
    const SweepPoint& p = r.points.front();
    CHECK(p.ok);
    CHECK(p.estimates.size() == 1);
    REQUIRE(p.mean_signal);
    CHECK(p.mean_signal->interval == s.config.time_step);
}

TEST_CASE("model match of an exact Gaussian is zero", "[sweep]") {
    const ChannelParams p{300.0, 5.0, 2000.0, 1000.0, 1.0};
    const GaussianPulse g = gaussian_approximation(p);
    UniformSeries s{2.0, 1e-4, std::vector<double>(12000)};
    for (std::size_t i = 0; i < s.size(); ++i) {
        s.values[i] = g(i * 1e-4);
    }
    CHECK_THAT(model_match_nrmse(s, p, 2.0), WithinAbs(0.0, 1e-12));
    for (double& v : s.values) {
        v *= 1.1;
    }
    CHECK(model_match_nrmse(s, p, 2.0) > 0.01);
    CHECK_THROWS_AS(model_match_nrmse(s, p, 100.0), UndefinedMetricError);
}

TEST_CASE("sweep rejects empty requests", "[sweep]") {
    SweepSpec s = small_spec();
    s.replications = 0;
    CHECK_THROWS_AS(run_sweep(s), std::invalid_argument);
    s = small_spec();
    s.metrics = 0;
    CHECK_THROWS_AS(run_sweep(s), std::invalid_argument);
}
