#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plaplab/errors.hpp"
#include "plaplab/solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace plaplab;

namespace {

SystemSpec dirichlet_only() {
    SystemSpec sys;
    sys.d = 1;
    sys.gradient = {[](const std::array<double, 2>&, std::span<const double>) { return 0.0; }};
    sys.potential = [](const std::array<double, 2>&, std::span<const double>) { return 0.0; };
    sys.gradient_jacobian = [](const std::array<double, 2>&, std::span<const double>, double* j) {
        j[0] = 0.0;
    };
    sys.lower_bounds = {make_power(1.0, 2.0)};
    sys.upper_bound = make_power(1.0, 2.0);
    return sys;
}

SystemSpec coupled_product_system() {
    // potential (u1 u2)^2 / 2, gradient (u1 u2^2, u2 u1^2)
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

double cosh_solution(double x) { return std::cosh(x - 0.5) / std::cosh(0.5); }

} // namespace

TEST_CASE("discrete energy of a linear ramp matches the p-Dirichlet integral") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 41));
    GridFunction u = make_from(g, [](const std::array<double, 2>& x) { return x[0]; });
    SystemSpec sys = dirichlet_only();
    CHECK(discrete_energy(*g, {u}, sys, 2.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(discrete_energy(*g, {u}, sys, 3.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    GridFunction c = make_constant(g, 4.2);
    CHECK(discrete_energy(*g, {c}, sys, 2.0) == doctest::Approx(0.0));
}

TEST_CASE("discrete energy requires a potential for coupled systems") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 9));
    SystemSpec sys = coupled_product_system();
    sys.potential = nullptr;
    GridFunction u = make_constant(g, 1.0);
    CHECK_THROWS_AS(discrete_energy(*g, {u, u}, sys, 2.0), DomainError);
}

TEST_CASE("flux operator: linear fields have zero interior residual for any p") {
    for (double p : {1.5, 2.0, 3.0}) {
        GridPtr g = build_grid(DomainSpec::interval(-1.0, 2.0, 31));
        GridFunction u = make_from(g, [](const std::array<double, 2>& x) { return 2.0 * x[0] - 1.0; });
        GridFunction r = apply_p_laplacian(*g, u, p);
        for (int i : g->interior) CHECK(std::abs(r[i]) < 1e-10);
        for (int i : g->boundary) CHECK(r[i] == 0.0);
    }
}

TEST_CASE("flux operator: quadratic field reproduces the second derivative") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 41, Grading::BoundaryRefined, 0.8));
    GridFunction u = make_from(g, [](const std::array<double, 2>& x) { return x[0] * x[0]; });
    GridFunction r = apply_p_laplacian(*g, u, 2.0);
    for (int i : g->interior) CHECK(r[i] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("flux operator: radial quadratic gives the radial second-order identity") {
    GridPtr g = build_grid(DomainSpec::radial_ball(1.0, 3, 33));
    GridFunction u = make_from(g, [](const std::array<double, 2>& x) { return x[0] * x[0]; });
    GridFunction r = apply_p_laplacian(*g, u, 2.0);
    for (int i : g->interior) CHECK(r[i] == doctest::Approx(6.0).epsilon(1e-8));
}

TEST_CASE("variational consistency: the operator is the scaled energy gradient") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> noise(-0.1, 0.1);
    for (double p : {1.5, 2.0, 3.0}) {
        GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 33));
        GridFunction u = make_from(g, [&](const std::array<double, 2>& x) {
            return 1.0 + 0.5 * std::sin(3.0 * x[0]);
        });
        for (int i : g->interior) u[i] += noise(rng);
        SystemSpec sys = dirichlet_only();
        const double eps = 1e-8;
        GridFunction L = apply_p_laplacian(*g, u, p, eps);
        GridFunction v = make_constant(g, 0.0);
        for (int i : g->interior) v[i] = noise(rng);
        double directional = 0.0;
        for (int i : g->interior)
            directional -= g->cell_measure[static_cast<std::size_t>(i)] * L[i] * v[i];
        double h = 1e-6;
        GridFunction up = u, um = u;
        for (int i : g->interior) {
            up[i] += h * v[i];
            um[i] -= h * v[i];
        }
        double fd = (discrete_energy(*g, {up}, sys, p, eps) -
                     discrete_energy(*g, {um}, sys, p, eps)) /
                    (2.0 * h);
        CHECK(std::abs(fd - directional) <= 1e-6 * std::max(std::abs(directional), 1e-12));
    }
}

TEST_CASE("p = 2 exactness against a directly assembled tridiagonal solve") {
    const int n = 21;
    const double lambda = 2.5;
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, n));
    Nonlinearity lin = make_power(lambda, 1.0);
    SolveReport rep = solve_dirichlet_scalar(*g, lin, make_constant(g, 1.0), 2.0);
    REQUIRE(rep.converged);

    // oracle: (u_{i-1} - 2 u_i + u_{i+1}) / h^2 = lambda u_i, u_0 = u_n = 1
    const double h = 1.0 / (n - 1);
    int ni = n - 2;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ni, ni);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(ni);
    for (int k = 0; k < ni; ++k) {
        A(k, k) = 2.0 / (h * h) + lambda;
        if (k > 0) A(k, k - 1) = -1.0 / (h * h);
        if (k + 1 < ni) A(k, k + 1) = -1.0 / (h * h);
    }
    b(0) += 1.0 / (h * h);
    b(ni - 1) += 1.0 / (h * h);
    Eigen::VectorXd exact = A.fullPivLu().solve(b);
    for (int k = 0; k < ni; ++k)
        CHECK(std::abs(rep.solution[0][k + 1] - exact(k)) < 1e-10);
}

TEST_CASE("linear absorption benchmark solves to the cosh closed form") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 101));
    SolveReport rep = solve_dirichlet_scalar(*g, make_power(1.0, 1.0), make_constant(g, 1.0), 2.0);
    REQUIRE(rep.converged);
    double worst = 0.0;
    for (int i = 0; i < g->n(); ++i)
        worst = std::max(worst, std::abs(rep.solution[0][i] - cosh_solution(g->x(i))));
    CHECK(worst < 1e-4);
    CHECK(rep.solution[0][50] == doctest::Approx(0.886818883970074).epsilon(1e-4));
    // energy descent along the trace
    for (std::size_t k = 1; k < rep.energy_trace.size(); ++k)
        CHECK(rep.energy_trace[k] <=
              rep.energy_trace[k - 1] + 1e-12 * (1.0 + std::abs(rep.energy_trace[k - 1])));
}

TEST_CASE("zero boundary with linear absorption returns the zero solution immediately") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 33));
    SolveReport rep = solve_dirichlet_scalar(*g, make_power(1.0, 1.0), make_constant(g, 0.0), 2.0);
    CHECK(rep.converged);
    CHECK(rep.iterations == 0);
    for (double v : rep.solution[0].values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("cubic absorption at p = 3 stays below the p-harmonic interpolant") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 81));
    GridFunction boundary = make_constant(g, 0.0);
    boundary[g->n() - 1] = 0.5;
    SolveReport rep = solve_dirichlet_scalar(*g, make_power(1.0, 3.0), boundary, 3.0);
    REQUIRE(rep.converged);
    // p-harmonic interpolant of the boundary data in 1D is the linear ramp
    GridFunction ramp = make_from(g, [](const std::array<double, 2>& x) { return 0.5 * x[0]; });
    ComparisonReport cmp = verify_comparison(*g, rep.solution[0], ramp, 3.0, 1e-8);
    CHECK(cmp.conclusion_holds);
    for (double v : rep.solution[0].values) CHECK(v >= -1e-10);
}

TEST_CASE("solver reports non-convergence at a tiny iteration cap") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 41));
    SolveOptions opts;
    opts.max_iters = 1;
    SolveReport rep = solve_dirichlet_scalar(*g, make_power(1.0, 3.0), make_constant(g, 2.0), 3.0,
                                             opts);
    CHECK_FALSE(rep.converged);
}

TEST_CASE("decoupled two-component system reduces to the scalar benchmark") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 101));
    SystemSpec sys;
    sys.d = 2;
    sys.gradient = {
        [](const std::array<double, 2>&, std::span<const double> u) { return u[0]; },
        [](const std::array<double, 2>&, std::span<const double> u) { return u[1]; }};
    sys.potential = [](const std::array<double, 2>&, std::span<const double> u) {
        return 0.5 * (u[0] * u[0] + u[1] * u[1]);
    };
    sys.lower_bounds = {make_power(1.0, 1.0), make_power(1.0, 1.0)};
    sys.upper_bound = make_power(1.0, 1.0);
    std::vector<GridFunction> boundary{make_constant(g, 1.0), make_constant(g, 1.0)};
    SolveReport rep = solve_dirichlet_system(*g, sys, boundary, 2.0);
    REQUIRE(rep.converged);
    for (int i = 0; i < g->n(); ++i) {
        CHECK(rep.solution[0][i] == doctest::Approx(cosh_solution(g->x(i))).epsilon(1e-4));
        CHECK(rep.solution[0][i] == doctest::Approx(rep.solution[1][i]).epsilon(1e-12));
    }
}

TEST_CASE("coupled symmetric system matches the scalar cube solve and its bracket") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 81));
    SystemSpec sys = coupled_product_system();
    std::vector<GridFunction> boundary{make_constant(g, 1.0), make_constant(g, 1.0)};
    SolveReport rep = solve_dirichlet_system(*g, sys, boundary, 2.0);
    REQUIRE(rep.converged);
    CHECK(rep.sandwich_checked);
    CHECK(rep.sandwich_ok);
    CHECK(rep.sandwich_violation <= 1e-6);

    SolveReport scalar = solve_dirichlet_scalar(*g, make_power(1.0, 3.0), make_constant(g, 1.0), 2.0);
    REQUIRE(scalar.converged);
    for (int i = 0; i < g->n(); ++i) {
        CHECK(std::abs(rep.solution[0][i] - rep.solution[1][i]) < 1e-10);
        CHECK(std::abs(rep.solution[0][i] - scalar.solution[0][i]) < 1e-8);
        CHECK(rep.solution[0][i] <= 1.0 + 1e-9);
    }
}

TEST_CASE("system solves demand positive boundary data") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 17));
    SystemSpec sys = coupled_product_system();
    std::vector<GridFunction> boundary{make_constant(g, 1.0), make_constant(g, 0.0)};
    CHECK_THROWS_AS(solve_dirichlet_system(*g, sys, boundary, 2.0), DomainError);
}

TEST_CASE("expression-backed nonlinearity without analytic primitive solves identically") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 41));
    SolveReport a = solve_dirichlet_scalar(*g, make_expr("t^3"), make_constant(g, 0.5), 2.0);
    SolveReport b = solve_dirichlet_scalar(*g, make_power(1.0, 3.0), make_constant(g, 0.5), 2.0);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    for (int i = 0; i < g->n(); ++i) CHECK(std::abs(a.solution[0][i] - b.solution[0][i]) < 1e-9);
}

TEST_CASE("comparison check: equality, ordered solves, and a constructed violation") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 61));
    SolveReport u1 = solve_dirichlet_scalar(*g, make_power(1.0, 1.0), make_constant(g, 1.0), 2.0);
    SolveReport u2 = solve_dirichlet_scalar(*g, make_power(1.0, 1.0), make_constant(g, 2.0), 2.0);

    ComparisonReport eq = verify_comparison(*g, u1.solution[0], u1.solution[0], 2.0, 1e-9);
    CHECK(eq.hypothesis_met);
    CHECK(eq.conclusion_holds);

    ComparisonReport ord = verify_comparison(*g, u1.solution[0], u2.solution[0], 2.0, 1e-8);
    CHECK(ord.conclusion_holds);

    GridFunction shifted = u1.solution[0];
    for (double& v : shifted.values) v += 1.0;
    ComparisonReport bad = verify_comparison(*g, shifted, u1.solution[0], 2.0, 1e-9);
    CHECK_FALSE(bad.hypothesis_met);
    CHECK_FALSE(bad.conclusion_holds);
    CHECK(bad.worst_conclusion_violation == doctest::Approx(1.0));
}

TEST_CASE("randomized ordered boundary pairs stay pointwise ordered") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 61));
    std::mt19937 rng(20240811);
    std::uniform_real_distribution<double> dist(0.2, 3.0);
    for (int trial = 0; trial < 5; ++trial) {
        double b1 = dist(rng), b2 = dist(rng);
        if (b1 > b2) std::swap(b1, b2);
        SolveReport r1 = solve_dirichlet_scalar(*g, make_power(1.0, 3.0), make_constant(g, b1), 2.0);
        SolveReport r2 = solve_dirichlet_scalar(*g, make_power(1.0, 3.0), make_constant(g, b2), 2.0);
        REQUIRE(r1.converged);
        REQUIRE(r2.converged);
        for (int i = 0; i < g->n(); ++i)
            CHECK(r1.solution[0][i] <= r2.solution[0][i] + 1e-8);
    }
}

TEST_CASE("sub/super-solution checks: constants above, the scalar seed below") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 61));
    SystemSpec sys = coupled_product_system();

    GridFunction big = make_constant(g, 2.0);
    SubsolutionReport sup = verify_subsolution(*g, {big, big}, sys, 2.0, SolutionSide::Super, 1e-9);
    CHECK(sup.all_pass);

    SolveReport psi = solve_dirichlet_scalar(*g, sys.upper_bound, make_constant(g, 1.0), 2.0);
    REQUIRE(psi.converged);
    SubsolutionReport sub = verify_subsolution(*g, {psi.solution[0], psi.solution[0]}, sys, 2.0,
                                               SolutionSide::Sub, 1e-6);
    CHECK(sub.all_pass);

    // scaling the seed up breaks the sub-solution inequality
    GridFunction scaled = psi.solution[0];
    for (double& v : scaled.values) v *= 3.0;
    SubsolutionReport broken = verify_subsolution(*g, {scaled, scaled}, sys, 2.0,
                                                  SolutionSide::Sub, 1e-6);
    CHECK_FALSE(broken.all_pass);
}

TEST_CASE("system validation: passes the product system, catches a broken floor") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 17));
    SystemDiagnostics good = validate_system(coupled_product_system(), *g);
    CHECK(good.ok);

    SystemSpec bad;
    bad.d = 1;
    bad.gradient = {[](const std::array<double, 2>&, std::span<const double> u) { return u[0]; }};
    bad.lower_bounds = {make_power(1.0, 3.0)}; // t^3 > t for t > 1: floor fails
    bad.upper_bound = make_power(1.0, 1.0);
    SystemDiagnostics diag = validate_system(bad, *g);
    CHECK_FALSE(diag.ok);
    bool found = false;
    for (const auto& c : diag.checks)
        if (c.name == "lower_bound" && !c.pass) found = true;
    CHECK(found);
}

TEST_CASE("weighted one-component radial solve honors the weight in the residual") {
    GridPtr g = build_grid(DomainSpec::radial_ball(2.0, 3, 65));
    SystemSpec sys;
    sys.d = 1;
    sys.gradient = {[](const std::array<double, 2>&, std::span<const double> u) {
        return u[0] * u[0];
    }};
    sys.potential = [](const std::array<double, 2>&, std::span<const double> u) {
        return u[0] * u[0] * u[0] / 3.0;
    };
    sys.lower_bounds = {make_power(1.0, 2.0)};
    sys.upper_bound = make_power(1.0, 2.0);
    sys.weights = {[](const std::array<double, 2>& x) {
        return 3.0 * std::pow(1.0 + x[0] * x[0], -2.5);
    }};
    std::vector<GridFunction> boundary{make_constant(g, 2.0)};
    SolveReport rep = solve_dirichlet_system(*g, sys, boundary, 2.0);
    REQUIRE(rep.converged);
    // residual check via the flux operator and the weighted right-hand side
    GridFunction L = apply_p_laplacian(*g, rep.solution[0], 2.0);
    for (int i : g->interior) {
        double a = sys.weights[0](g->nodes[static_cast<std::size_t>(i)]);
        double rhs = a * rep.solution[0][i] * rep.solution[0][i];
        CHECK(std::abs(L[i] - rhs) <= 1e-6 * (1.0 + std::abs(rhs)));
    }
}
