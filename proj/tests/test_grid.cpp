#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plaplab/errors.hpp"
#include "plaplab/grid.hpp"

#include <cmath>
#include <set>
#include <sstream>

using namespace plaplab;

TEST_CASE("uniform interval: nodes, boundary flags, measures") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 5));
    REQUIRE(g->n() == 5);
    for (int i = 0; i < 5; ++i) CHECK(g->x(i) == doctest::Approx(0.25 * i).epsilon(1e-15));
    CHECK(g->boundary == std::vector<int>{0, 4});
    CHECK(g->interior == std::vector<int>{1, 2, 3});
    double sum = 0.0;
    for (double m : g->cell_measure) sum += m;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g->cell_measure[0] == doctest::Approx(0.125));
    CHECK(g->cell_measure[2] == doctest::Approx(0.25));
}

TEST_CASE("radial ball: origin is interior, measures carry the radial weight") {
    GridPtr g = build_grid(DomainSpec::radial_ball(1.0, 3, 5));
    REQUIRE(g->n() == 5);
    CHECK(g->boundary == std::vector<int>{4});
    CHECK(g->interior.front() == 0);
    double sum = 0.0;
    for (double m : g->cell_measure) sum += m;
    CHECK(sum == doctest::Approx(1.0 / 3.0).epsilon(1e-12)); // R^N / N
    CHECK(g->domain_measure() == doctest::Approx(1.0 / 3.0));
    // edge transversal measures are the midpoint radial weights
    CHECK(g->edges.front().tmeasure == doctest::Approx(0.125 * 0.125));
}

TEST_CASE("rectangle at resolution 3 has a single interior node") {
    GridPtr g = build_grid(DomainSpec::rectangle(0.0, 1.0, 0.0, 1.0, 3));
    CHECK(g->n() == 9);
    CHECK(g->interior == std::vector<int>{4});
    double sum = 0.0;
    for (double m : g->cell_measure) sum += m;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("boundary distances are the exact geometric ones") {
    GridPtr gi = build_grid(DomainSpec::interval(0.0, 1.0, 11));
    CHECK(boundary_distance(*gi, 3) == doctest::Approx(0.3).epsilon(1e-14));

    GridPtr gr = build_grid(DomainSpec::rectangle(0.0, 1.0, 0.0, 1.0, 11));
    int node = 2 * 11 + 5; // (x, y) = (0.5, 0.2)
    CHECK(gr->x(node) == doctest::Approx(0.5));
    CHECK(gr->y(node) == doctest::Approx(0.2));
    CHECK(boundary_distance(*gr, node) == doctest::Approx(0.2).epsilon(1e-14));

    GridPtr gb = build_grid(DomainSpec::radial_ball(2.0, 2, 5));
    CHECK(gb->r(1) == doctest::Approx(0.5));
    CHECK(boundary_distance(*gb, 1) == doctest::Approx(1.5).epsilon(1e-14));

    CHECK_THROWS_AS(boundary_distance(*gi, 99), DomainError);
}

TEST_CASE("core restriction follows the distance field") {
    GridPtr g = build_grid(DomainSpec::interval(0.0, 1.0, 5));
    CHECK(restrict_to_core(*g, 0.25) == std::vector<int>{1, 2, 3});
    CHECK(restrict_to_core(*g, 0.0).size() == 5);

    GridPtr gb = build_grid(DomainSpec::radial_ball(1.0, 2, 5));
    CHECK(restrict_to_core(*gb, 0.5) == std::vector<int>{0, 1, 2});

    CHECK_THROWS_AS(restrict_to_core(*g, 0.5), DomainError);  // reaches the inradius
    GridPtr coarse = build_grid(DomainSpec::interval(0.0, 1.0, 4));
    CHECK_THROWS_AS(restrict_to_core(*coarse, 0.45), DomainError); // empty core
}

TEST_CASE("cell doubling keeps coarse nodes (uniform grading)") {
    for (int n : {9, 17}) {
        GridPtr coarse = build_grid(DomainSpec::interval(-1.0, 2.0, n));
        GridPtr fine = build_grid(DomainSpec::interval(-1.0, 2.0, 2 * n - 1));
        std::set<double> fine_nodes;
        for (int i = 0; i < fine->n(); ++i) fine_nodes.insert(fine->x(i));
        for (int i = 0; i < coarse->n(); ++i) {
            bool found = false;
            for (double xf : fine_nodes)
                if (std::abs(xf - coarse->x(i)) <= 1e-13) found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("dual cells integrate constants and (on uniform interval grids) linears exactly") {
    GridPtr g = build_grid(DomainSpec::interval(0.25, 1.75, 31));
    double mass = 0.0, first = 0.0;
    for (int i = 0; i < g->n(); ++i) {
        mass += g->cell_measure[static_cast<std::size_t>(i)];
        first += g->cell_measure[static_cast<std::size_t>(i)] * g->x(i);
    }
    CHECK(mass == doctest::Approx(1.5).epsilon(1e-13));
    CHECK(first == doctest::Approx((1.75 * 1.75 - 0.25 * 0.25) / 2.0).epsilon(1e-13));
}

TEST_CASE("boundary-refined grading clusters geometrically with bounded contrast") {
    GridPtr g = build_grid(
        DomainSpec::interval(-1.0, 1.0, 101, Grading::BoundaryRefined, 0.85));
    REQUIRE(g->n() == 101);
    CHECK(g->x(0) == -1.0);
    CHECK(g->x(100) == 1.0);
    double hmin = 1e9, hmax = 0.0;
    for (const Edge& e : g->edges) {
        CHECK(e.length > 0.0);
        hmin = std::min(hmin, e.length);
        hmax = std::max(hmax, e.length);
    }
    CHECK(hmax / hmin > 50.0);
    CHECK(hmax / hmin < 200.0);
    // first interval ratio near the configured one
    CHECK(g->edges[1].length / g->edges[0].length == doctest::Approx(1.0 / 0.85).epsilon(1e-9));
    // distance is 1-Lipschitz along edges
    for (const Edge& e : g->edges)
        CHECK(std::abs(g->dist_boundary[static_cast<std::size_t>(e.a)] -
                       g->dist_boundary[static_cast<std::size_t>(e.b)]) <= e.length + 1e-12);
}

TEST_CASE("distance Lipschitz bound holds on refined rectangles") {
    GridPtr g = build_grid(
        DomainSpec::rectangle(0.0, 2.0, 0.0, 1.0, 17, Grading::BoundaryRefined, 0.7));
    for (const Edge& e : g->edges)
        CHECK(std::abs(g->dist_boundary[static_cast<std::size_t>(e.a)] -
                       g->dist_boundary[static_cast<std::size_t>(e.b)]) <= e.length + 1e-12);
}

TEST_CASE("domain validation catches bad shapes") {
    CHECK_THROWS_AS(build_grid(DomainSpec::interval(1.0, 0.0, 9)), DomainError);
    CHECK_THROWS_AS(build_grid(DomainSpec::interval(0.0, 1.0, 2)), DomainError);
    CHECK_THROWS_AS(build_grid(DomainSpec::radial_ball(-1.0, 3, 9)), DomainError);
    CHECK_THROWS_AS(build_grid(DomainSpec::radial_ball(1.0, 1, 9)), DomainError);
    CHECK_THROWS_AS(build_grid(DomainSpec::interval(0.0, 1.0, 9, Grading::BoundaryRefined, 1.2)),
                    DomainError);
    DomainSpec strict = DomainSpec::interval(0.0, 1.0, 5);
    CHECK_THROWS_AS(strict.validate(true), DomainError); // config minimum is 8
}

TEST_CASE("grid function CSV round trip") {
    GridPtr g = build_grid(DomainSpec::radial_ball(2.0, 3, 9));
    GridFunction f = make_from(g, [](const std::array<double, 2>& x) {
        return std::cos(x[0]) + 1.0 / 3.0;
    });
    std::stringstream buf;
    write_grid_function_csv(f, buf);
    GridFunction back = read_grid_function_csv(buf, g);
    for (int i = 0; i < g->n(); ++i) CHECK(back[i] == f[i]);

    GridPtr other = build_grid(DomainSpec::radial_ball(2.0, 3, 11));
    std::stringstream buf2;
    write_grid_function_csv(f, buf2);
    CHECK_THROWS_AS(read_grid_function_csv(buf2, other), DomainError);
}
