#include "plaplab/grid.hpp"

#include "plaplab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace plaplab {

namespace {

// Wall cells shrink geometrically by `ratio` until they are ~100x smaller
// than core cells; beyond that the mesh stays uniform. Keeps dual-cell
// measures bounded away from rounding noise at any resolution.
constexpr double kGradingContrast = 100.0;

int geometric_layers(double ratio) {
    return static_cast<int>(std::ceil(std::log(kGradingContrast) / std::log(1.0 / ratio)));
}

// Relative cell widths along one axis with m cells, optionally clustered
// toward either wall.
std::vector<double> axis_weights(int m, double ratio, bool cluster_lo, bool cluster_hi) {
    std::vector<double> w(static_cast<std::size_t>(m), 1.0);
    int layers = std::min(geometric_layers(ratio), cluster_lo && cluster_hi ? m / 2 : m);
    for (int j = 0; j < layers; ++j) {
        double scale = std::pow(ratio, layers - j);
        if (cluster_lo) w[static_cast<std::size_t>(j)] = std::min(w[static_cast<std::size_t>(j)], scale);
        if (cluster_hi)
            w[static_cast<std::size_t>(m - 1 - j)] =
                std::min(w[static_cast<std::size_t>(m - 1 - j)], scale);
    }
    return w;
}

std::vector<double> axis_nodes(double lo, double hi, int n, Grading grading, double ratio,
                               bool cluster_lo, bool cluster_hi) {
    std::vector<double> x(static_cast<std::size_t>(n));
    if (grading == Grading::Uniform) {
        for (int i = 0; i < n; ++i)
            x[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
        x.back() = hi;
        return x;
    }
    std::vector<double> w = axis_weights(n - 1, ratio, cluster_lo, cluster_hi);
    double total = 0.0;
    for (double v : w) total += v;
    x[0] = lo;
    double acc = 0.0;
    for (int i = 1; i < n; ++i) {
        acc += w[static_cast<std::size_t>(i - 1)];
        x[static_cast<std::size_t>(i)] = lo + (hi - lo) * acc / total;
    }
    x.back() = hi;
    return x;
}

std::vector<double> dual_widths(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    std::vector<double> m(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double left = (i == 0) ? x[0] : 0.5 * (x[static_cast<std::size_t>(i - 1)] + x[static_cast<std::size_t>(i)]);
        double right = (i == n - 1) ? x.back()
                                    : 0.5 * (x[static_cast<std::size_t>(i)] + x[static_cast<std::size_t>(i + 1)]);
        m[static_cast<std::size_t>(i)] = right - left;
    }
    return m;
}

} // namespace

DomainSpec DomainSpec::interval(double a, double b, int resolution, Grading grading, double ratio) {
    DomainSpec s;
    s.kind = DomainKind::Interval;
    s.a = a;
    s.b = b;
    s.resolution = resolution;
    s.grading = grading;
    s.grading_ratio = ratio;
    return s;
}

DomainSpec DomainSpec::rectangle(double ax, double bx, double ay, double by, int resolution,
                                 Grading grading, double ratio) {
    DomainSpec s;
    s.kind = DomainKind::Rectangle;
    s.ax = ax;
    s.bx = bx;
    s.ay = ay;
    s.by = by;
    s.resolution = resolution;
    s.grading = grading;
    s.grading_ratio = ratio;
    return s;
}

DomainSpec DomainSpec::radial_ball(double radius, int ambient_dim, int resolution,
                                   Grading grading, double ratio) {
    DomainSpec s;
    s.kind = DomainKind::RadialBall;
    s.radius = radius;
    s.ambient_dim = ambient_dim;
    s.resolution = resolution;
    s.grading = grading;
    s.grading_ratio = ratio;
    return s;
}

void DomainSpec::validate(bool strict) const {
    switch (kind) {
        case DomainKind::Interval:
            if (!(a < b)) throw DomainError("interval: need a < b");
            break;
        case DomainKind::Rectangle:
            if (!(ax < bx) || !(ay < by)) throw DomainError("rectangle: need ax < bx and ay < by");
            break;
        case DomainKind::RadialBall:
            if (!(radius > 0.0)) throw DomainError("radial_ball: radius must be positive");
            if (ambient_dim < 2) throw DomainError("radial_ball: ambient dimension must be >= 2");
            break;
    }
    int min_res = strict ? 8 : 3;
    if (resolution < min_res)
        throw DomainError("resolution " + std::to_string(resolution) + " too small (need >= " +
                          std::to_string(min_res) + ")");
    if (grading == Grading::BoundaryRefined && !(grading_ratio > 0.0 && grading_ratio < 1.0))
        throw DomainError("boundary_refined ratio must lie in (0,1)");
}

double DomainSpec::inradius() const {
    switch (kind) {
        case DomainKind::Interval: return (b - a) / 2.0;
        case DomainKind::Rectangle: return std::min((bx - ax) / 2.0, (by - ay) / 2.0);
        case DomainKind::RadialBall: return radius;
    }
    return 0.0;
}

double Grid::domain_measure() const {
    switch (spec.kind) {
        case DomainKind::Interval: return spec.b - spec.a;
        case DomainKind::Rectangle: return (spec.bx - spec.ax) * (spec.by - spec.ay);
        case DomainKind::RadialBall:
            return std::pow(spec.radius, spec.ambient_dim) / spec.ambient_dim;
    }
    return 0.0;
}

GridPtr build_grid(const DomainSpec& spec) {
    spec.validate(false);
    auto grid = std::make_shared<Grid>();
    grid->spec = spec;
    const int n = spec.resolution;

    if (spec.kind == DomainKind::Interval) {
        grid->dim = 1;
        std::vector<double> x =
            axis_nodes(spec.a, spec.b, n, spec.grading, spec.grading_ratio, true, true);
        std::vector<double> m = dual_widths(x);
        for (int i = 0; i < n; ++i) {
            grid->nodes.push_back({x[static_cast<std::size_t>(i)], 0.0});
            grid->cell_measure.push_back(m[static_cast<std::size_t>(i)]);
            bool bdry = (i == 0 || i == n - 1);
            grid->is_boundary.push_back(bdry);
            (bdry ? grid->boundary : grid->interior).push_back(i);
            grid->dist_boundary.push_back(
                std::min(x[static_cast<std::size_t>(i)] - spec.a, spec.b - x[static_cast<std::size_t>(i)]));
        }
        for (int i = 0; i + 1 < n; ++i)
            grid->edges.push_back({i, i + 1,
                                   x[static_cast<std::size_t>(i + 1)] - x[static_cast<std::size_t>(i)], 1.0});
    } else if (spec.kind == DomainKind::RadialBall) {
        grid->dim = 1;
        const int N = spec.ambient_dim;
        std::vector<double> r =
            axis_nodes(0.0, spec.radius, n, spec.grading, spec.grading_ratio, false, true);
        for (int i = 0; i < n; ++i) {
            double left = (i == 0) ? 0.0
                                   : 0.5 * (r[static_cast<std::size_t>(i - 1)] + r[static_cast<std::size_t>(i)]);
            double right = (i == n - 1)
                               ? spec.radius
                               : 0.5 * (r[static_cast<std::size_t>(i)] + r[static_cast<std::size_t>(i + 1)]);
            grid->nodes.push_back({r[static_cast<std::size_t>(i)], 0.0});
            grid->cell_measure.push_back((std::pow(right, N) - std::pow(left, N)) / N);
            bool bdry = (i == n - 1); // the origin is interior: symmetry condition u'(0) = 0
            grid->is_boundary.push_back(bdry);
            (bdry ? grid->boundary : grid->interior).push_back(i);
            grid->dist_boundary.push_back(spec.radius - r[static_cast<std::size_t>(i)]);
        }
        for (int i = 0; i + 1 < n; ++i) {
            double mid = 0.5 * (r[static_cast<std::size_t>(i)] + r[static_cast<std::size_t>(i + 1)]);
            grid->edges.push_back({i, i + 1,
                                   r[static_cast<std::size_t>(i + 1)] - r[static_cast<std::size_t>(i)],
                                   std::pow(mid, N - 1)});
        }
    } else {
        grid->dim = 2;
        std::vector<double> x =
            axis_nodes(spec.ax, spec.bx, n, spec.grading, spec.grading_ratio, true, true);
        std::vector<double> y =
            axis_nodes(spec.ay, spec.by, n, spec.grading, spec.grading_ratio, true, true);
        std::vector<double> mx = dual_widths(x);
        std::vector<double> my = dual_widths(y);
        auto id = [n](int i, int j) { return j * n + i; };
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                double xi = x[static_cast<std::size_t>(i)];
                double yj = y[static_cast<std::size_t>(j)];
                grid->nodes.push_back({xi, yj});
                grid->cell_measure.push_back(mx[static_cast<std::size_t>(i)] * my[static_cast<std::size_t>(j)]);
                bool bdry = (i == 0 || i == n - 1 || j == 0 || j == n - 1);
                grid->is_boundary.push_back(bdry);
                (bdry ? grid->boundary : grid->interior).push_back(id(i, j));
                grid->dist_boundary.push_back(std::min({xi - spec.ax, spec.bx - xi,
                                                        yj - spec.ay, spec.by - yj}));
            }
        }
        for (int j = 0; j < n; ++j)
            for (int i = 0; i + 1 < n; ++i)
                grid->edges.push_back({id(i, j), id(i + 1, j),
                                       x[static_cast<std::size_t>(i + 1)] - x[static_cast<std::size_t>(i)],
                                       my[static_cast<std::size_t>(j)]});
        for (int j = 0; j + 1 < n; ++j)
            for (int i = 0; i < n; ++i)
                grid->edges.push_back({id(i, j), id(i, j + 1),
                                       y[static_cast<std::size_t>(j + 1)] - y[static_cast<std::size_t>(j)],
                                       mx[static_cast<std::size_t>(i)]});
    }

    if (grid->interior.empty())
        throw DomainError("grid has no interior node at resolution " + std::to_string(n));
    return grid;
}

double boundary_distance(const Grid& grid, int node_index) {
    if (node_index < 0 || node_index >= grid.n())
        throw DomainError("boundary_distance: node index out of range");
    return grid.dist_boundary[static_cast<std::size_t>(node_index)];
}

std::vector<int> restrict_to_core(const Grid& grid, double margin) {
    if (margin < 0.0) throw DomainError("restrict_to_core: margin must be nonnegative");
    if (margin > 0.0 && margin >= grid.spec.inradius())
        throw DomainError("restrict_to_core: margin " + std::to_string(margin) +
                          " reaches the domain inradius " + std::to_string(grid.spec.inradius()));
    std::vector<int> core;
    for (int i = 0; i < grid.n(); ++i)
        if (grid.dist_boundary[static_cast<std::size_t>(i)] >= margin - 1e-14) core.push_back(i);
    if (core.empty())
        throw DomainError("restrict_to_core: no node lies at distance >= " + std::to_string(margin));
    return core;
}

GridFunction make_constant(GridPtr grid, double value) {
    GridFunction f;
    f.values.assign(static_cast<std::size_t>(grid->n()), value);
    f.grid = std::move(grid);
    return f;
}

GridFunction make_from(GridPtr grid,
                       const std::function<double(const std::array<double, 2>&)>& fn) {
    GridFunction f;
    f.values.reserve(static_cast<std::size_t>(grid->n()));
    for (const auto& node : grid->nodes) f.values.push_back(fn(node));
    f.grid = std::move(grid);
    return f;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_grid_function_csv(const GridFunction& f, std::ostream& out) {
    const Grid& g = *f.grid;
    bool radial = g.spec.kind == DomainKind::RadialBall;
    out << (g.dim == 2 ? "node_index,x,y,dist_boundary,value\n"
                       : (radial ? "node_index,r,dist_boundary,value\n"
                                 : "node_index,x,dist_boundary,value\n"));
    for (int i = 0; i < g.n(); ++i) {
        out << i << ',' << fmt(g.x(i));
        if (g.dim == 2) out << ',' << fmt(g.y(i));
        out << ',' << fmt(g.dist_boundary[static_cast<std::size_t>(i)]) << ',' << fmt(f[i]) << '\n';
    }
}

GridFunction read_grid_function_csv(std::istream& in, GridPtr grid) {
    GridFunction f = make_constant(grid, 0.0);
    std::string line;
    if (!std::getline(in, line)) throw DomainError("grid function CSV: empty file");
    int count = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        std::size_t expected = grid->dim == 2 ? 5 : 4;
        if (row.size() != expected)
            throw DomainError("grid function CSV: expected " + std::to_string(expected) +
                              " columns, got " + std::to_string(row.size()));
        int idx = static_cast<int>(row[0]);
        if (idx < 0 || idx >= grid->n())
            throw DomainError("grid function CSV: node index " + std::to_string(idx) + " out of range");
        if (std::abs(row[1] - grid->x(idx)) > 1e-9 ||
            (grid->dim == 2 && std::abs(row[2] - grid->y(idx)) > 1e-9))
            throw DomainError("grid function CSV: coordinates at node " + std::to_string(idx) +
                              " do not match the configured grid");
        f[idx] = row.back();
        ++count;
    }
    if (count != grid->n())
        throw DomainError("grid function CSV: " + std::to_string(count) + " rows for a grid of " +
                          std::to_string(grid->n()) + " nodes");
    return f;
}

} // namespace plaplab
