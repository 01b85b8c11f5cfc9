#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace plaplab {

enum class DomainKind { Interval, Rectangle, RadialBall };
enum class Grading { Uniform, BoundaryRefined };

/// Description of a discretizable domain: an interval (a,b), an axis-aligned
/// rectangle, or a ball of radius R in dimension N reduced to its radial
/// profile (weight r^(N-1), symmetry condition at the origin).
struct DomainSpec {
    DomainKind kind = DomainKind::Interval;
    double a = 0.0, b = 1.0;                       // interval
    double ax = 0.0, bx = 1.0, ay = 0.0, by = 1.0; // rectangle
    double radius = 1.0;                           // radial ball
    int ambient_dim = 3;                           // N for the radial ball
    int resolution = 64;                           // nodes per axis
    Grading grading = Grading::Uniform;
    double grading_ratio = 0.85;

    static DomainSpec interval(double a, double b, int resolution,
                               Grading grading = Grading::Uniform, double ratio = 0.85);
    static DomainSpec rectangle(double ax, double bx, double ay, double by, int resolution,
                                Grading grading = Grading::Uniform, double ratio = 0.85);
    static DomainSpec radial_ball(double radius, int ambient_dim, int resolution,
                                  Grading grading = Grading::Uniform, double ratio = 0.85);

    /// Geometric checks; `strict` additionally enforces the configuration
    /// minimum of 8 nodes per axis.
    void validate(bool strict = false) const;
    double inradius() const;
};

struct Edge {
    int a = 0;
    int b = 0;
    double length = 0.0;
    double tmeasure = 0.0; // transversal measure (radial weight, dual width, ...)
};

/// An immutable discretized domain. Nodes carry exact boundary distances and
/// dual-cell quadrature weights; edges carry lengths and transversal measures
/// so that the discrete energy is a plain sum over edges and nodes.
struct Grid {
    DomainSpec spec;
    int dim = 1; // coordinate components actually used (1 or 2)
    std::vector<std::array<double, 2>> nodes;
    std::vector<int> interior;
    std::vector<int> boundary;
    std::vector<bool> is_boundary;
    std::vector<double> cell_measure;
    std::vector<double> dist_boundary;
    std::vector<Edge> edges;

    int n() const { return static_cast<int>(nodes.size()); }
    double domain_measure() const;
    double x(int i) const { return nodes[static_cast<std::size_t>(i)][0]; }
    double y(int i) const { return nodes[static_cast<std::size_t>(i)][1]; }
    double r(int i) const { return nodes[static_cast<std::size_t>(i)][0]; }
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr build_grid(const DomainSpec& spec);

double boundary_distance(const Grid& grid, int node_index);

/// Indices of nodes at distance >= margin from the boundary. Throws when the
/// margin reaches the inradius or no node qualifies.
std::vector<int> restrict_to_core(const Grid& grid, double margin);

/// A nodal scalar field bound to its grid.
struct GridFunction {
    GridPtr grid;
    std::vector<double> values;

    double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
};

GridFunction make_constant(GridPtr grid, double value);
GridFunction make_from(GridPtr grid, const std::function<double(const std::array<double, 2>&)>& f);

/// CSV serialization: node_index, x [, y | r], dist_boundary, value.
void write_grid_function_csv(const GridFunction& f, std::ostream& out);
GridFunction read_grid_function_csv(std::istream& in, GridPtr grid);

} // namespace plaplab
