#include "plaplab/entire.hpp"

#include "plaplab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace plaplab {

namespace {

constexpr double kBracketTol = 1e-7;
constexpr double kResidualLimit = 1e-6;
constexpr int kProbeCount = 65;

double interp_radial(const Grid& grid, const GridFunction& u, double r) {
    const auto& nodes = grid.nodes;
    const int n = grid.n();
    if (r <= nodes[0][0]) return u[0];
    if (r >= nodes[static_cast<std::size_t>(n - 1)][0]) return u[n - 1];
    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        if (nodes[static_cast<std::size_t>(mid)][0] <= r)
            lo = mid;
        else
            hi = mid;
    }
    double r0 = nodes[static_cast<std::size_t>(lo)][0];
    double r1 = nodes[static_cast<std::size_t>(hi)][0];
    double t = (r - r0) / (r1 - r0);
    return (1.0 - t) * u[lo] + t * u[hi];
}

} // namespace

RadialUpperSolution::RadialUpperSolution(RealFn weight_sum, double p, int ambient_dim,
                                         double r_max, int resolution)
    : A_(std::move(weight_sum)), p_(p), N_(ambient_dim), r_max_(r_max) {
    if (!(p > 1.0)) throw DomainError("radial_upper_solution: p must exceed 1");
    if (ambient_dim < 2) throw DomainError("radial_upper_solution: ambient dimension must be >= 2");
    if (!(r_max > 0.0)) throw DomainError("radial_upper_solution: r_max must be positive");
    if (resolution < 8) throw DomainError("radial_upper_solution: resolution too small");

    for (double r : {r_max * 1e-3, r_max * 0.1, r_max * 0.5, r_max}) {
        double a = A_(r);
        if (!(a > 0.0) || !std::isfinite(a))
            throw DomainError("radial_upper_solution: weight sum must be positive, got " +
                              std::to_string(a) + " at r = " + std::to_string(r));
    }

    const double r_ext = 100.0 * r_max;
    RealFn a = A_;
    int N = N_;
    mass_ = std::make_shared<CumulativeIntegral>(
        [a, N](double t) { return std::pow(t, N - 1) * a(t); }, r_ext * 1.01, 1e-13,
        r_max * 1e-6);

    auto mass = mass_;
    double expn = 1.0 / (p_ - 1.0);
    RealFn slope = [mass, N, expn](double s) {
        return std::pow(std::pow(s, 1 - N) * mass->value(s), expn);
    };
    try {
        outer_ = std::make_shared<TailIntegralTransform>(slope, r_ext, 1e-12, r_max * 1e-9,
                                                         r_ext * 1e6);
    } catch (const NumericsError& e) {
        throw DomainError(std::string("radial_upper_solution: the decay hypothesis fails for "
                                      "this weight (outer integral diverges): ") +
                          e.what());
    }

    profile_.ambient_dim = N_;
    profile_.radii.resize(static_cast<std::size_t>(resolution));
    profile_.values.resize(static_cast<std::size_t>(resolution));
    for (int i = 0; i < resolution; ++i) {
        double r = r_max * static_cast<double>(i) / (resolution - 1);
        profile_.radii[static_cast<std::size_t>(i)] = r;
        profile_.values[static_cast<std::size_t>(i)] = value(r);
    }
    profile_.decay_verified = profile_.values.back() <= 1e-3 * profile_.values.front();

    // Residual of the radial equation at interior samples. Wide five-point
    // stencils of the evaluators keep quadrature noise well below the 1e-6
    // relative target.
    double worst = 0.0;
    const double delta = 1e-3 * r_max;
    auto deriv5 = [delta](const RealFn& fn, double s) {
        return (-fn(s + 2.0 * delta) + 8.0 * fn(s + delta) - 8.0 * fn(s - delta) +
                fn(s - 2.0 * delta)) /
               (12.0 * delta);
    };
    RealFn zf = [this](double r) { return value(r); };
    RealFn pf = [this](double r) { return inner_mass(r); };
    for (int j = 1; j <= 16; ++j) {
        double s = r_max * (0.05 + 0.9 * static_cast<double>(j - 1) / 15.0);
        double k = slope_magnitude(s);
        worst = std::max(worst, std::abs(deriv5(zf, s) + k) / std::max(k, 1e-30));
        double rhs = std::pow(s, N_ - 1) * A_(s);
        worst = std::max(worst,
                         std::abs(deriv5(pf, s) - rhs) / std::max(std::abs(rhs), 1e-30));
    }
    max_residual_ = worst;
}

double RadialUpperSolution::value(double r) const {
    if (r < 0.0) throw DomainError("radial_upper_solution: negative radius");
    double w_min = outer_->w_min();
    if (r >= w_min) return outer_->value(r);
    // below the anchored range the slope integrand is O(r); extend exactly
    RealFn slope = [this](double s) { return slope_magnitude(s); };
    return outer_->value(w_min) + integrate(slope, r, w_min, 1e-14);
}

double RadialUpperSolution::inner_mass(double s) const { return mass_->value(s); }

double RadialUpperSolution::slope_magnitude(double s) const {
    return std::pow(std::pow(s, 1 - N_) * mass_->value(s), 1.0 / (p_ - 1.0));
}

RadialProfile radial_upper_solution(const RealFn& weight_sum, double p, int ambient_dim,
                                    double r_max, int resolution) {
    RadialUpperSolution z(weight_sum, p, ambient_dim, r_max, resolution);
    if (z.max_relative_residual() > kResidualLimit)
        throw NumericsError("radial_upper_solution: radial equation residual " +
                            std::to_string(z.max_relative_residual()) + " exceeds 1e-6");
    return z.profile();
}

namespace {

template <typename Values>
void invert_values(const PhiTransform& phi, const Values& z, Values& w,
                   const std::string& what) {
    for (std::size_t i = 0; i < z.size(); ++i) {
        try {
            w[i] = phi.invert(z[i]);
        } catch (const Error& e) {
            throw DomainError(what + ": node " + std::to_string(i) + ": " + e.what());
        }
    }
}

} // namespace

RadialProfile build_subsolution_w(const RadialProfile& z, const Nonlinearity& g, double p) {
    PhiTransform phi(g, p);
    RadialProfile w = z;
    invert_values(phi, z.values, w.values, "build_subsolution_w");
    w.decay_verified = false;
    return w;
}

GridFunction build_subsolution_w(const GridFunction& z, const Nonlinearity& g, double p) {
    PhiTransform phi(g, p);
    GridFunction w = z;
    invert_values(phi, z.values, w.values, "build_subsolution_w");
    return w;
}

EntireTrace ball_exhaustion(const SystemSpec& sys, const Nonlinearity& g, double p,
                            int ambient_dim, const std::vector<double>& ball_radii,
                            int resolution, const SolveOptions& opts) {
    if (ball_radii.empty()) throw DomainError("ball_exhaustion: need at least one radius");
    for (std::size_t k = 0; k < ball_radii.size(); ++k) {
        if (!(ball_radii[k] > 0.0)) throw DomainError("ball_exhaustion: radii must be positive");
        if (k > 0 && !(ball_radii[k] > ball_radii[k - 1]))
            throw DomainError("ball_exhaustion: radii must be strictly increasing");
    }
    if (!sys.has_weights())
        throw DomainError("ball_exhaustion: the system must carry weight fields");

    std::vector<PointFn> ws = sys.weights;
    RealFn weight_sum = [ws](double r) {
        double s = 0.0;
        for (const auto& w : ws) s += w({r, 0.0});
        return s;
    };

    const double r_max = ball_radii.back();
    RadialUpperSolution z(weight_sum, p, ambient_dim, r_max, resolution);
    if (z.max_relative_residual() > kResidualLimit)
        throw NumericsError("ball_exhaustion: radial upper solution residual " +
                            std::to_string(z.max_relative_residual()) + " exceeds 1e-6");
    PhiTransform phi(g, p);

    EntireTrace trace;
    trace.ball_radii = ball_radii;
    trace.z_profile = z.profile();
    trace.w_profile = build_subsolution_w(trace.z_profile, g, p);

    for (double radius : ball_radii) {
        BallSolve ball;
        ball.radius = radius;
        ball.grid = build_grid(DomainSpec::radial_ball(radius, ambient_dim, resolution));
        const Grid& grid = *ball.grid;

        ball.z_on_grid.resize(static_cast<std::size_t>(grid.n()));
        ball.w_on_grid.resize(static_cast<std::size_t>(grid.n()));
        for (int i = 0; i < grid.n(); ++i)
            ball.z_on_grid[static_cast<std::size_t>(i)] = z.value(grid.r(i));
        invert_values(phi, ball.z_on_grid, ball.w_on_grid, "ball_exhaustion");
        // w is radially nondecreasing, so the boundary value is the max over
        // the closed ball.
        ball.w_boundary = ball.w_on_grid.back();

        GridFunction wf = make_constant(ball.grid, 0.0);
        for (int i = 0; i < grid.n(); ++i) wf[i] = ball.w_on_grid[static_cast<std::size_t>(i)];

        std::vector<GridFunction> boundary(static_cast<std::size_t>(sys.d),
                                           make_constant(ball.grid, ball.w_boundary));
        SolveOptions run = opts;
        run.initial = std::vector<GridFunction>(static_cast<std::size_t>(sys.d), wf);
        ball.report = solve_dirichlet_system(grid, sys, boundary, p, run);
        trace.all_converged &= ball.report.converged;

        double min_over = 0.0, max_over = 0.0;
        for (int c = 0; c < sys.d; ++c) {
            const GridFunction& u = ball.report.solution[static_cast<std::size_t>(c)];
            for (int i = 0; i < grid.n(); ++i) {
                min_over = std::min(min_over, u[i] - ball.w_on_grid[static_cast<std::size_t>(i)]);
                max_over = std::max(max_over, u[i] - ball.w_boundary);
            }
        }
        ball.min_u_minus_w = min_over;
        ball.max_u_minus_wb = max_over;
        trace.worst_lower_violation = std::max(trace.worst_lower_violation, -min_over);
        trace.worst_upper_violation = std::max(trace.worst_upper_violation, max_over);
        if (-min_over > kBracketTol) trace.lower_bound_ok = false;

        trace.balls.push_back(std::move(ball));
        if (!trace.all_converged) break; // truncated trace
    }

    // Stabilization on nested inner balls, sampled on fixed probe radii.
    for (std::size_t j = 0; j + 1 < ball_radii.size(); ++j) {
        std::vector<double> deltas;
        for (std::size_t k = j; k + 1 < trace.balls.size(); ++k) {
            double delta = 0.0;
            for (int c = 0; c < sys.d; ++c) {
                const auto& a = trace.balls[k];
                const auto& b = trace.balls[k + 1];
                for (int q = 0; q < kProbeCount; ++q) {
                    double r = ball_radii[j] * static_cast<double>(q) / (kProbeCount - 1);
                    double ua = interp_radial(*a.grid, a.report.solution[static_cast<std::size_t>(c)], r);
                    double ub = interp_radial(*b.grid, b.report.solution[static_cast<std::size_t>(c)], r);
                    delta = std::max(delta, std::abs(ub - ua));
                }
            }
            deltas.push_back(delta);
        }
        trace.nested_core_deltas.push_back(std::move(deltas));
    }
    return trace;
}

LargeSolutionReport verify_large_at_infinity(const EntireTrace& trace, const Nonlinearity& g,
                                             double p, double growth_threshold) {
    LargeSolutionReport rep;
    if (trace.balls.empty()) {
        rep.note = "empty trace";
        return rep;
    }
    if (!trace.all_converged || !trace.lower_bound_ok) {
        rep.note = !trace.all_converged ? "verdict withheld: a ball solve did not converge"
                                        : "verdict withheld: the lower bound w <= u failed";
        return rep;
    }

    const BallSolve& outer = trace.balls.back();
    const Grid& grid = *outer.grid;
    int node = grid.interior.back(); // outermost interior node
    double min_u = std::numeric_limits<double>::infinity();
    for (const auto& u : outer.report.solution) min_u = std::min(min_u, u[node]);
    rep.min_component_value = min_u;
    rep.w_at_outermost = outer.w_on_grid[static_cast<std::size_t>(node)];

    // Certify that w = Φ⁻¹(z) keeps growing across the sampled range as z
    // shrinks by successive decades.
    PhiTransform phi(g, p);
    double z0 = outer.z_on_grid.back();
    double floor = phi.attainable_min() * 10.0;
    double prev = -std::numeric_limits<double>::infinity();
    double first = 0.0;
    int steps = 0;
    bool increasing = true;
    for (double zq = z0; zq > floor && steps < 5; zq /= 10.0, ++steps) {
        double w = phi.invert(zq);
        if (steps == 0) first = w;
        if (w <= prev) increasing = false;
        prev = w;
    }
    rep.divergence_certified = increasing && steps >= 2 && prev >= 2.0 * first;

    rep.verdict = rep.divergence_certified && rep.min_component_value >= growth_threshold &&
                  rep.w_at_outermost >= growth_threshold;
    if (!rep.verdict && rep.note.empty()) rep.note = "growth threshold or divergence check not met";
    return rep;
}

} // namespace plaplab
