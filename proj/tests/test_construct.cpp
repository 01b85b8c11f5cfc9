#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plaplab/errors.hpp"
#include "plaplab/escalation.hpp"

#include <cmath>

using namespace plaplab;

namespace {

// Exact leading-order blow-up profile for the power family: the decreasing
// half-line solution of (|u'|^{p-2}u')' = u^gamma is A d^(-beta) with
//   beta = p / (gamma - p + 1),
//   A    = [beta^(p-1) (beta + 1) (p - 1)]^(1/(gamma - p + 1)).
double rate_exponent(double p, double gamma) { return p / (gamma - p + 1.0); }
double rate_amplitude(double p, double gamma) {
    double beta = rate_exponent(p, gamma);
    return std::pow(std::pow(beta, p - 1.0) * (beta + 1.0) * (p - 1.0),
                    1.0 / (gamma - p + 1.0));
}

SystemSpec cube_system() {
    SystemSpec sys;
    sys.d = 1;
    sys.gradient = {[](const std::array<double, 2>&, std::span<const double> u) {
        return u[0] * u[0] * u[0];
    }};
    sys.potential = [](const std::array<double, 2>&, std::span<const double> u) {
        return 0.25 * u[0] * u[0] * u[0] * u[0];
    };
    sys.lower_bounds = {make_power(1.0, 3.0)};
    sys.upper_bound = make_power(1.0, 3.0);
    return sys;
}

SystemSpec coupled_product_system() {
    SystemSpec sys;
    sys.d = 2;
    sys.gradient = {
        [](const std::array<double, 2>&, std::span<const double> u) { return u[0] * u[1] * u[1]; },
        [](const std::array<double, 2>&, std::span<const double> u) { return u[1] * u[0] * u[0]; }};
    sys.potential = [](const std::array<double, 2>&, std::span<const double> u) {
        double t = u[0] * u[1];
        return 0.5 * t * t;
    };
    sys.lower_bounds = {make_power(1.0, 3.0), make_power(1.0, 3.0)};
    sys.upper_bound = make_power(1.0, 3.0);
    return sys;
}

} // namespace

TEST_CASE("barrier reproduces the closed-form half-line profile for the cube") {
    BarrierFunction mu(make_power(1.0, 3.0), 2.0);
    for (double delta : {1e-3, 1e-2, 1e-1}) {
        CHECK(mu.value(delta) ==
              doctest::Approx(std::sqrt(2.0) / delta).epsilon(1e-6));
    }
}

TEST_CASE("first-integral profile confirms the rate formulas for all benchmark pairs") {
    struct Case {
        double p, gamma;
    };
    for (Case c : {Case{2.0, 3.0}, Case{3.0, 4.0}, Case{1.5, 2.0}}) {
        BarrierFunction mu(make_power(1.0, c.gamma), c.p);
        std::vector<double> d, v;
        for (int k = 0; k < 24; ++k) {
            double delta = std::pow(10.0, -3.0 + 2.0 * k / 23.0);
            d.push_back(delta);
            v.push_back(mu.value(delta));
        }
        LogLogFit fit = fit_log_log(d, v);
        CAPTURE(c.p);
        CAPTURE(c.gamma);
        CHECK(-fit.slope == doctest::Approx(rate_exponent(c.p, c.gamma)).epsilon(2e-3));
        CHECK(std::exp(fit.intercept) ==
              doctest::Approx(rate_amplitude(c.p, c.gamma)).epsilon(2e-3));
    }
}

TEST_CASE("barrier is monotone decreasing and rejects inadmissible nonlinearities") {
    BarrierFunction mu(make_power(1.0, 3.0), 2.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double delta : {0.01, 0.05, 0.2, 1.0, 3.0}) {
        double v = mu.value(delta);
        CHECK(v < prev);
        CHECK(v > 0.0);
        prev = v;
    }
    CHECK_THROWS_AS(BarrierFunction(make_power(1.0, 1.0), 2.0), DomainError);
    CHECK_THROWS_AS(mu.value(0.0), DomainError);
}

TEST_CASE("schedule levels and validation") {
    GridPtr g = build_grid(DomainSpec::interval(-1.0, 1.0, 33));
    EscalationSchedule s;
    s.base = 2.0;
    s.ratio = 2.0;
    s.max_levels = 4;
    s.core_margin = 0.5;
    s.stall_tol = 1e-8;
    s.validate(*g);
    CHECK(s.level_value(0) == 2.0);
    CHECK(s.level_value(3) == 16.0);
    s.growth = GrowthKind::Arithmetic;
    s.step = 3.0;
    CHECK(s.level_value(2) == 8.0);

    EscalationSchedule bad = s;
    bad.max_levels = 2;
    CHECK_THROWS_AS(bad.validate(*g), DomainError);
    bad = s;
    bad.core_margin = 2.0;
    CHECK_THROWS_AS(bad.validate(*g), DomainError);
    bad = s;
    bad.growth = GrowthKind::Geometric;
    bad.ratio = 0.9;
    CHECK_THROWS_AS(bad.validate(*g), DomainError);
}

TEST_CASE("boundary ring picks the interior neighbors of the boundary") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 11));
    CHECK(boundary_ring(*g) == std::vector<int>{1, 9});
    GridPtr gb = build_grid(DomainSpec::radial_ball(1.0, 3, 11));
    CHECK(boundary_ring(*gb) == std::vector<int>{9});
}

TEST_CASE("escalation is monotone with growing near-boundary values") {
    GridPtr g = build_grid(DomainSpec::interval(-1.0, 1.0, 201, Grading::BoundaryRefined, 0.85));
    EscalationSchedule sched;
    sched.base = 1.0;
    sched.ratio = 2.0;
    sched.max_levels = 4;
    sched.core_margin = 0.5;
    sched.stall_tol = 1e-12;
    SolveOptions opts;
    opts.tol = 1e-7;
    EscalationTrace trace = escalate_blowup(g, cube_system(), 2.0, sched, opts);
    REQUIRE(trace.levels.size() == 4);
    CHECK_FALSE(trace.stabilized);
    CHECK_FALSE(trace.truncated);
    for (std::size_t k = 1; k < trace.levels.size(); ++k) {
        CHECK(trace.levels[k].min_increment >= -1e-8);
        CHECK(trace.levels[k].boundary_ring_max > trace.levels[k - 1].boundary_ring_max);
    }
    // core values keep rising toward the interior large solution
    CHECK(trace.levels.back().core_delta > 0.0);
}

TEST_CASE("a generous stall tolerance stops the escalation early") {
    GridPtr g = build_grid(DomainSpec::interval(-1.0, 1.0, 101));
    EscalationSchedule sched;
    sched.base = 1.0;
    sched.ratio = 2.0;
    sched.max_levels = 6;
    sched.core_margin = 0.5;
    sched.stall_tol = 10.0;
    EscalationTrace trace = escalate_blowup(g, cube_system(), 2.0, sched);
    CHECK(trace.stabilized);
    CHECK(trace.levels.size() == 2);
}

TEST_CASE("decoupled components escalate identically") {
    GridPtr g = build_grid(DomainSpec::interval(-1.0, 1.0, 101));
    SystemSpec sys;
    sys.d = 2;
    sys.gradient = {
        [](const std::array<double, 2>&, std::span<const double> u) { return u[0] * u[0] * u[0]; },
        [](const std::array<double, 2>&, std::span<const double> u) { return u[1] * u[1] * u[1]; }};
    sys.potential = [](const std::array<double, 2>&, std::span<const double> u) {
        return 0.25 * (std::pow(u[0], 4.0) + std::pow(u[1], 4.0));
    };
    sys.lower_bounds = {make_power(1.0, 3.0), make_power(1.0, 3.0)};
    sys.upper_bound = make_power(1.0, 3.0);

    EscalationSchedule sched;
    sched.base = 1.0;
    sched.ratio = 2.0;
    sched.max_levels = 3;
    sched.core_margin = 0.5;
    sched.stall_tol = 1e-12;
    EscalationTrace trace = escalate_blowup(g, sys, 2.0, sched);
    REQUIRE(trace.levels.size() == 3);
    for (const auto& level : trace.levels)
        for (int i = 0; i < g->n(); ++i)
            CHECK(std::abs(level.report.solution[0][i] - level.report.solution[1][i]) < 1e-10);
}

TEST_CASE("mixed escalation holds the fixed component under its boundary value") {
    GridPtr g = build_grid(DomainSpec::interval(-1.0, 1.0, 201, Grading::BoundaryRefined, 0.85));
    EscalationSchedule sched;
    sched.base = 1.0;
    sched.ratio = 2.0;
    sched.max_levels = 4;
    sched.core_margin = 0.5;
    sched.stall_tol = 1e-12;
    SolveOptions opts;
    opts.tol = 1e-7;
    EscalationTrace trace =
        escalate_mixed(g, coupled_product_system(), 2.0, {0}, {1.0, 1.0}, sched, opts);
    REQUIRE(trace.levels.size() == 4);
    for (const auto& level : trace.levels) {
        CHECK(level.max_fixed_excess <= 1e-8);
        CHECK(level.min_increment >= -1e-8);
    }
    CHECK(trace.final_ring_deviation <= 0.02);
    // the escalating component grows near the boundary
    CHECK(trace.levels.back().boundary_ring_max > trace.levels.front().boundary_ring_max);
}

TEST_CASE("mixed escalation validates its component sets") {
    GridPtr g = build_grid(DomainSpec::interval(-1.0, 1.0, 33));
    SystemSpec sys = coupled_product_system();
    EscalationSchedule sched;
    sched.base = 1.0;
    sched.max_levels = 3;
    sched.core_margin = 0.5;
    sched.stall_tol = 1e-8;
    CHECK_THROWS_AS(escalate_mixed(g, sys, 2.0, {}, {1.0, 1.0}, sched), DomainError);
    CHECK_THROWS_AS(escalate_mixed(g, sys, 2.0, {0, 1}, {1.0, 1.0}, sched), DomainError);
    CHECK_THROWS_AS(escalate_mixed(g, sys, 2.0, {5}, {1.0, 1.0}, sched), DomainError);
    CHECK_THROWS_AS(escalate_mixed(g, sys, 2.0, {0}, {1.0, -1.0}, sched), DomainError);
}

TEST_CASE("rate fit on a constant field is flat, and windows are checked") {
    GridPtr g = build_grid(DomainSpec::interval(-1.0, 1.0, 201, Grading::BoundaryRefined, 0.85));
    GridFunction c = make_constant(g, 3.25);
    RateFit fit = fit_boundary_rate(c, *g, 0.02, 0.3);
    CHECK(std::abs(fit.exponent) < 1e-10);
    CHECK(fit.amplitude == doctest::Approx(3.25).epsilon(1e-12));

    CHECK_THROWS_AS(fit_boundary_rate(c, *g, 0.02, 2.0), DomainError);   // window past inradius
    CHECK_THROWS_AS(fit_boundary_rate(c, *g, 1e-9, 2e-9), DomainError);  // too few nodes
    GridFunction zero = make_constant(g, 0.0);
    CHECK_THROWS_AS(fit_boundary_rate(zero, *g, 0.02, 0.3), DomainError);
}

TEST_CASE("trace levels stay below the barrier on the fit window") {
    GridPtr g = build_grid(DomainSpec::interval(-1.0, 1.0, 401, Grading::BoundaryRefined, 0.85));
    EscalationSchedule sched;
    sched.base = 4.0;
    sched.ratio = 2.0;
    sched.max_levels = 4;
    sched.core_margin = 0.5;
    sched.stall_tol = 1e-12;
    SolveOptions opts;
    opts.tol = 1e-5;
    EscalationTrace trace = escalate_blowup(g, cube_system(), 2.0, sched, opts);
    REQUIRE(trace.levels.size() == 4);
    BarrierFunction mu(make_power(1.0, 3.0), 2.0);
    BarrierCheck check = verify_barrier_domination(trace, *g, mu, 0, 0.05, 0.4);
    CHECK(check.window_nodes >= 6);
    CHECK(check.max_ratio <= 1.05);
    CHECK(check.max_ratio > 0.1); // the window actually sees the blow-up layer
}
