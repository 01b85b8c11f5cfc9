#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plaplab/entire.hpp"
#include "plaplab/errors.hpp"

#include <cmath>

using namespace plaplab;

namespace {

// Closed-form benchmark: A(r) = 3 (1+r^2)^(-5/2), p = 2, N = 3 gives
// z(r) = (1+r^2)^(-1/2); with g(t) = t^2 the lifted field is w = 1/z.
double weight_closed_form(double r) { return 3.0 * std::pow(1.0 + r * r, -2.5); }
double z_closed_form(double r) { return 1.0 / std::sqrt(1.0 + r * r); }

SystemSpec entire_system(int d = 1) {
    SystemSpec sys;
    sys.d = d;
    for (int c = 0; c < d; ++c) {
        sys.gradient.push_back(
            [c](const std::array<double, 2>&, std::span<const double> u) {
                return u[static_cast<std::size_t>(c)] * u[static_cast<std::size_t>(c)];
            });
        sys.lower_bounds.push_back(make_power(1.0, 2.0));
        sys.weights.push_back([](const std::array<double, 2>& x) { return weight_closed_form(x[0]); });
    }
    if (d == 1) {
        sys.potential = [](const std::array<double, 2>&, std::span<const double> u) {
            return u[0] * u[0] * u[0] / 3.0;
        };
    }
    sys.upper_bound = make_power(1.0, 2.0);
    return sys;
}

} // namespace

TEST_CASE("radial upper solution reproduces the closed form") {
    RadialProfile z = radial_upper_solution(weight_closed_form, 2.0, 3, 8.0, 201);
    CHECK(z.ambient_dim == 3);
    REQUIRE(z.radii.size() == 201);
    double worst = 0.0;
    for (std::size_t i = 0; i < z.radii.size(); ++i)
        worst = std::max(worst, std::abs(z.values[i] - z_closed_form(z.radii[i])));
    CHECK(worst < 1e-5);
    CHECK(z.values.front() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(z.values[25] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-5)); // r = 1
    for (std::size_t i = 1; i < z.values.size(); ++i) CHECK(z.values[i] <= z.values[i - 1] + 1e-12);
    CHECK_FALSE(z.decay_verified); // z(8) = 1/sqrt(65) is well above 1e-3 z(0)
}

TEST_CASE("radial upper solution is linear in the weight at p = 2") {
    RadialUpperSolution z1(weight_closed_form, 2.0, 3, 4.0, 64);
    RadialUpperSolution z2([](double r) { return 2.0 * weight_closed_form(r); }, 2.0, 3, 4.0, 64);
    for (double r : {0.0, 0.5, 1.0, 3.0})
        CHECK(z2.value(r) == doctest::Approx(2.0 * z1.value(r)).epsilon(1e-7));
}

TEST_CASE("weights whose outer integral diverges are rejected") {
    // P(s) ~ s makes the slope integrand ~ 1/s: no decaying tail.
    CHECK_THROWS_AS(RadialUpperSolution([](double r) { return 1.0 / (1.0 + r * r); }, 2.0, 3, 4.0, 64),
                    DomainError);
    CHECK_THROWS_AS(RadialUpperSolution([](double) { return -1.0; }, 2.0, 3, 4.0, 64), DomainError);
}

TEST_CASE("lifted field solves the transform identity and the closed form") {
    RadialProfile z = radial_upper_solution(weight_closed_form, 2.0, 3, 8.0, 129);
    Nonlinearity g = make_power(1.0, 2.0);
    RadialProfile w = build_subsolution_w(z, g, 2.0);
    PhiTransform phi(g, 2.0);
    for (std::size_t i = 0; i < w.radii.size(); ++i) {
        double r = w.radii[i];
        CHECK(w.values[i] == doctest::Approx(std::sqrt(1.0 + r * r)).epsilon(1e-5));
        CHECK(std::abs(phi.value(w.values[i]) - z.values[i]) <= 1e-7);
        if (i > 0) CHECK(w.values[i] >= w.values[i - 1] - 1e-12);
    }
    CHECK(w.values.front() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("lifted field propagates out-of-range transform values with the node") {
    RadialProfile z;
    z.ambient_dim = 3;
    z.radii = {0.0, 1.0};
    z.values = {1e30, 1.0}; // far above the attainable transform range
    CHECK_THROWS_AS(build_subsolution_w(z, make_power(1.0, 2.0), 2.0), DomainError);
}

TEST_CASE("ball exhaustion brackets the solution between w and its boundary value") {
    EntireTrace trace = ball_exhaustion(entire_system(), make_power(1.0, 2.0), 2.0, 3,
                                        {2.0, 4.0}, 101);
    REQUIRE(trace.balls.size() == 2);
    CHECK(trace.all_converged);
    CHECK(trace.lower_bound_ok);
    CHECK(trace.worst_lower_violation <= 1e-7);
    CHECK(trace.worst_upper_violation <= 1e-7);
    CHECK(trace.balls[0].w_boundary == doctest::Approx(std::sqrt(5.0)).epsilon(1e-5));
    CHECK(trace.balls[1].w_boundary == doctest::Approx(std::sqrt(17.0)).epsilon(1e-5));
    REQUIRE(trace.nested_core_deltas.size() == 1);
    REQUIRE(trace.nested_core_deltas[0].size() == 1);
    CHECK(trace.nested_core_deltas[0][0] > 0.0);
}

TEST_CASE("ball exhaustion validates its inputs") {
    SystemSpec sys = entire_system();
    CHECK_THROWS_AS(ball_exhaustion(sys, make_power(1.0, 2.0), 2.0, 3, {}, 65), DomainError);
    CHECK_THROWS_AS(ball_exhaustion(sys, make_power(1.0, 2.0), 2.0, 3, {2.0, 2.0}, 65), DomainError);
    SystemSpec unweighted = sys;
    unweighted.weights.clear();
    CHECK_THROWS_AS(ball_exhaustion(unweighted, make_power(1.0, 2.0), 2.0, 3, {2.0}, 65), DomainError);
}

TEST_CASE("decoupled two-component exhaustion produces identical components") {
    EntireTrace trace = ball_exhaustion(entire_system(2), make_power(1.0, 2.0), 2.0, 3,
                                        {2.0, 4.0}, 65);
    REQUIRE(trace.balls.size() == 2);
    CHECK(trace.all_converged);
    for (const BallSolve& ball : trace.balls)
        for (int i = 0; i < ball.grid->n(); ++i)
            CHECK(std::abs(ball.report.solution[0][i] - ball.report.solution[1][i]) < 1e-9);
}

TEST_CASE("large-solution verdict: positive for the benchmark, withheld when the bracket fails") {
    EntireTrace trace = ball_exhaustion(entire_system(), make_power(1.0, 2.0), 2.0, 3,
                                        {2.0, 4.0, 8.0}, 101);
    REQUIRE(trace.balls.size() == 3);
    LargeSolutionReport rep = verify_large_at_infinity(trace, make_power(1.0, 2.0), 2.0, 5.0);
    CHECK(rep.divergence_certified);
    CHECK(rep.w_at_outermost > 5.0);
    CHECK(rep.min_component_value > 5.0);
    CHECK(rep.verdict);

    EntireTrace broken = trace;
    broken.lower_bound_ok = false;
    LargeSolutionReport withheld = verify_large_at_infinity(broken, make_power(1.0, 2.0), 2.0, 5.0);
    CHECK_FALSE(withheld.verdict);
    CHECK(withheld.note.find("withheld") != std::string::npos);
}

TEST_CASE("nested deltas shrink between successive outer balls") {
    EntireTrace trace = ball_exhaustion(entire_system(), make_power(1.0, 2.0), 2.0, 3,
                                        {2.0, 4.0, 8.0}, 101);
    REQUIRE(trace.nested_core_deltas.size() == 2);
    REQUIRE(trace.nested_core_deltas[0].size() == 2);
    CHECK(trace.nested_core_deltas[0][1] < trace.nested_core_deltas[0][0]);
}
