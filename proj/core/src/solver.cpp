#include "plaplab/solver.hpp"

#include "plaplab/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace plaplab {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kAlphaMin = 1e-14;
constexpr double kSandwichTol = 1e-6;

/// Regularized flux model Φ_{p,eps}(s) = (s^2+eps^2)^{(p-2)/2} s with its
/// potential and derivative. eps = 0 gives the exact p-Dirichlet density.
struct FluxModel {
    double p;
    double eps;

    double pot(double s) const {
        if (eps == 0.0) return std::pow(std::abs(s), p) / p;
        return (std::pow(s * s + eps * eps, p / 2.0) - std::pow(eps, p)) / p;
    }
    double flux(double s) const {
        if (eps == 0.0) {
            if (s == 0.0) return 0.0;
            return std::copysign(std::pow(std::abs(s), p - 1.0), s);
        }
        return std::pow(s * s + eps * eps, (p - 2.0) / 2.0) * s;
    }
    double dflux(double s) const {
        if (eps == 0.0) return (p - 1.0) * std::pow(std::abs(s), p - 2.0);
        return std::pow(s * s + eps * eps, (p - 4.0) / 2.0) * ((p - 1.0) * s * s + eps * eps);
    }
};

struct Assembly {
    const Grid& grid;
    const SystemSpec& sys;
    FluxModel fm;
    int d;
    int ni;
    std::vector<int> rank; // node index -> interior rank, or -1

    // weights evaluated once per node per component (1.0 when absent)
    std::vector<std::vector<double>> wnode;

    bool use_energy = false;

    Assembly(const Grid& g, const SystemSpec& s, FluxModel f)
        : grid(g), sys(s), fm(f), d(s.d), ni(static_cast<int>(g.interior.size())) {
        rank.assign(static_cast<std::size_t>(g.n()), -1);
        for (int k = 0; k < ni; ++k) rank[static_cast<std::size_t>(g.interior[static_cast<std::size_t>(k)])] = k;
        wnode.assign(static_cast<std::size_t>(d), {});
        for (int c = 0; c < d; ++c) {
            wnode[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(g.n()), 1.0);
            if (sys.has_weights())
                for (int i = 0; i < g.n(); ++i)
                    wnode[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] =
                        sys.weights[static_cast<std::size_t>(c)](g.nodes[static_cast<std::size_t>(i)]);
        }
        // A joint energy exists when a potential is available and the weights
        // do not differ across components (trivially true for d = 1).
        use_energy = static_cast<bool>(sys.potential) && (d == 1 || !sys.has_weights());
    }

    double node_values(const std::vector<GridFunction>& u, int node, std::vector<double>& buf) const {
        buf.resize(static_cast<std::size_t>(d));
        for (int c = 0; c < d; ++c) buf[static_cast<std::size_t>(c)] = u[static_cast<std::size_t>(c)][node];
        return 0.0;
    }

    /// Raw gradient of the merit's smooth core: for every component and
    /// interior node, d(dirichlet)/du + m * a_c * F_{u_c}(x, u).
    void raw_gradient(const std::vector<GridFunction>& u, std::vector<double>& out) const {
        out.assign(static_cast<std::size_t>(ni * d), 0.0);
        for (int c = 0; c < d; ++c) {
            const GridFunction& uc = u[static_cast<std::size_t>(c)];
            for (const Edge& e : grid.edges) {
                double s = (uc[e.b] - uc[e.a]) / e.length;
                double f = e.tmeasure * fm.flux(s);
                int rb = rank[static_cast<std::size_t>(e.b)];
                int ra = rank[static_cast<std::size_t>(e.a)];
                if (rb >= 0) out[static_cast<std::size_t>(c * ni + rb)] += f;
                if (ra >= 0) out[static_cast<std::size_t>(c * ni + ra)] -= f;
            }
        }
        std::vector<double> uv;
        for (int k = 0; k < ni; ++k) {
            int i = grid.interior[static_cast<std::size_t>(k)];
            node_values(u, i, uv);
            double m = grid.cell_measure[static_cast<std::size_t>(i)];
            for (int c = 0; c < d; ++c) {
                double a = wnode[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
                double g = sys.gradient[static_cast<std::size_t>(c)](grid.nodes[static_cast<std::size_t>(i)], uv);
                out[static_cast<std::size_t>(c * ni + k)] += m * a * g;
            }
        }
    }

    /// Sup norm of the interior residual in operator scaling (raw / m).
    double residual_sup(const std::vector<double>& raw) const {
        double worst = 0.0;
        for (int k = 0; k < ni; ++k) {
            double m = grid.cell_measure[static_cast<std::size_t>(grid.interior[static_cast<std::size_t>(k)])];
            for (int c = 0; c < d; ++c)
                worst = std::max(worst, std::abs(raw[static_cast<std::size_t>(c * ni + k)]) / m);
        }
        return worst;
    }

    Eigen::SparseMatrix<double> jacobian(const std::vector<GridFunction>& u) const {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(d) * (grid.edges.size() * 4 + static_cast<std::size_t>(ni) * static_cast<std::size_t>(d)));
        for (int c = 0; c < d; ++c) {
            const GridFunction& uc = u[static_cast<std::size_t>(c)];
            for (const Edge& e : grid.edges) {
                double s = (uc[e.b] - uc[e.a]) / e.length;
                double w = e.tmeasure / e.length * fm.dflux(s);
                int rb = rank[static_cast<std::size_t>(e.b)];
                int ra = rank[static_cast<std::size_t>(e.a)];
                if (rb >= 0) trip.emplace_back(c * ni + rb, c * ni + rb, w);
                if (ra >= 0) trip.emplace_back(c * ni + ra, c * ni + ra, w);
                if (rb >= 0 && ra >= 0) {
                    trip.emplace_back(c * ni + rb, c * ni + ra, -w);
                    trip.emplace_back(c * ni + ra, c * ni + rb, -w);
                }
            }
        }
        std::vector<double> uv, jac(static_cast<std::size_t>(d * d));
        std::vector<double> up, um;
        for (int k = 0; k < ni; ++k) {
            int i = grid.interior[static_cast<std::size_t>(k)];
            node_values(u, i, uv);
            double m = grid.cell_measure[static_cast<std::size_t>(i)];
            const auto& x = grid.nodes[static_cast<std::size_t>(i)];
            if (sys.gradient_jacobian) {
                sys.gradient_jacobian(x, uv, jac.data());
            } else {
                // central differences of the gradient components
                for (int cc = 0; cc < d; ++cc) {
                    double step = 1e-6 * (1.0 + std::abs(uv[static_cast<std::size_t>(cc)]));
                    up = uv;
                    um = uv;
                    up[static_cast<std::size_t>(cc)] += step;
                    um[static_cast<std::size_t>(cc)] -= step;
                    for (int c = 0; c < d; ++c) {
                        double hi = sys.gradient[static_cast<std::size_t>(c)](x, up);
                        double lo = sys.gradient[static_cast<std::size_t>(c)](x, um);
                        jac[static_cast<std::size_t>(c * d + cc)] = (hi - lo) / (2.0 * step);
                    }
                }
            }
            for (int c = 0; c < d; ++c) {
                double a = wnode[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
                for (int cc = 0; cc < d; ++cc) {
                    double v = m * a * jac[static_cast<std::size_t>(c * d + cc)];
                    if (v != 0.0) trip.emplace_back(c * ni + k, cc * ni + k, v);
                }
            }
        }
        Eigen::SparseMatrix<double> J(ni * d, ni * d);
        J.setFromTriplets(trip.begin(), trip.end());
        return J;
    }

    double merit(const std::vector<GridFunction>& u) const {
        if (use_energy) return energy(u, fm.eps);
        std::vector<double> raw;
        raw_gradient(u, raw);
        double s = 0.0;
        for (double r : raw) s += r * r;
        return 0.5 * s;
    }

    double energy(const std::vector<GridFunction>& u, double eps) const {
        FluxModel m{fm.p, eps};
        double dirichlet = 0.0;
        for (int c = 0; c < d; ++c) {
            const GridFunction& uc = u[static_cast<std::size_t>(c)];
            for (const Edge& e : grid.edges)
                dirichlet += e.tmeasure * e.length * m.pot((uc[e.b] - uc[e.a]) / e.length);
        }
        double potential = 0.0;
        std::vector<double> uv;
        for (int i = 0; i < grid.n(); ++i) {
            node_values(u, i, uv);
            double scale = (d == 1) ? wnode[0][static_cast<std::size_t>(i)] : 1.0;
            potential += grid.cell_measure[static_cast<std::size_t>(i)] * scale *
                         sys.potential(grid.nodes[static_cast<std::size_t>(i)], uv);
        }
        return dirichlet + potential;
    }
};

void apply_direction(std::vector<GridFunction>& u, const Assembly& asmbl,
                     const std::vector<double>& dir, double alpha,
                     const std::vector<GridFunction>& base) {
    for (int c = 0; c < asmbl.d; ++c) {
        for (int k = 0; k < asmbl.ni; ++k) {
            int i = asmbl.grid.interior[static_cast<std::size_t>(k)];
            u[static_cast<std::size_t>(c)][i] =
                base[static_cast<std::size_t>(c)][i] + alpha * dir[static_cast<std::size_t>(c * asmbl.ni + k)];
        }
    }
}

/// Linear p = 2 extension of the boundary data with zero right-hand side;
/// the standard starting point when no sub-solution is available.
std::vector<GridFunction> harmonic_extension(const Grid& grid, const SystemSpec& sys,
                                             const std::vector<GridFunction>& boundary) {
    std::vector<GridFunction> u;
    u.reserve(static_cast<std::size_t>(sys.d));
    for (int c = 0; c < sys.d; ++c) {
        GridFunction f = make_constant(boundary[static_cast<std::size_t>(c)].grid, 0.0);
        bool constant = true;
        double b0 = boundary[static_cast<std::size_t>(c)][grid.boundary[0]];
        for (int i : grid.boundary) {
            f[i] = boundary[static_cast<std::size_t>(c)][i];
            constant &= (f[i] == b0);
        }
        if (constant) {
            for (int i : grid.interior) f[i] = b0;
            u.push_back(std::move(f));
            continue;
        }
        // one linear solve of the p = 2 Dirichlet problem
        const int ni = static_cast<int>(grid.interior.size());
        std::vector<int> rank(static_cast<std::size_t>(grid.n()), -1);
        for (int k = 0; k < ni; ++k) rank[static_cast<std::size_t>(grid.interior[static_cast<std::size_t>(k)])] = k;
        std::vector<Eigen::Triplet<double>> trip;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ni);
        for (const Edge& e : grid.edges) {
            double w = e.tmeasure / e.length;
            int ra = rank[static_cast<std::size_t>(e.a)];
            int rb = rank[static_cast<std::size_t>(e.b)];
            if (ra >= 0) trip.emplace_back(ra, ra, w);
            if (rb >= 0) trip.emplace_back(rb, rb, w);
            if (ra >= 0 && rb >= 0) {
                trip.emplace_back(ra, rb, -w);
                trip.emplace_back(rb, ra, -w);
            } else if (ra >= 0) {
                rhs[ra] += w * f[e.b];
            } else if (rb >= 0) {
                rhs[rb] += w * f[e.a];
            }
        }
        Eigen::SparseMatrix<double> A(ni, ni);
        A.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
        if (lu.info() != Eigen::Success)
            throw NumericsError("harmonic extension: factorization failed");
        Eigen::VectorXd sol = lu.solve(rhs);
        for (int k = 0; k < ni; ++k) f[grid.interior[static_cast<std::size_t>(k)]] = sol[k];
        u.push_back(std::move(f));
    }
    return u;
}

SolveReport solve_impl(const Grid& grid, const SystemSpec& sys,
                       const std::vector<GridFunction>& boundary, double p,
                       const SolveOptions& opts) {
    if (!(p > 1.0)) throw DomainError("solver: p must exceed 1");
    if (static_cast<int>(sys.gradient.size()) != sys.d)
        throw DomainError("solver: gradient component count does not match d");
    if (static_cast<int>(boundary.size()) != sys.d)
        throw DomainError("solver: boundary field count does not match d");
    for (const auto& b : boundary)
        for (int i : grid.boundary)
            if (!std::isfinite(b[i])) throw DomainError("solver: non-finite boundary value");

    FluxModel fm{p, opts.resolved_eps(p)};
    Assembly asmbl(grid, sys, fm);
    const double tol = opts.resolved_tol(p);

    std::vector<GridFunction> u;
    if (opts.initial) {
        if (static_cast<int>(opts.initial->size()) != sys.d)
            throw DomainError("solver: warm start component count does not match d");
        u = *opts.initial;
        for (int c = 0; c < sys.d; ++c)
            for (int i : grid.boundary) u[static_cast<std::size_t>(c)][i] = boundary[static_cast<std::size_t>(c)][i];
    } else {
        u = harmonic_extension(grid, sys, boundary);
    }

    SolveReport report;
    report.regularization_eps = fm.eps;
    report.energy_available = asmbl.use_energy;

    double merit = asmbl.merit(u);
    if (!std::isfinite(merit))
        throw NumericsError("solver: merit is non-finite at the starting point");
    report.energy_trace.push_back(merit);

    std::vector<double> raw;
    Eigen::SparseMatrix<double> J;
    Eigen::VectorXd dir_newton, grad_vec;
    std::vector<GridFunction> trial = u;

    auto residual_now = [&](double& sup) {
        asmbl.raw_gradient(u, raw);
        sup = asmbl.residual_sup(raw);
    };

    double sup = 0.0;
    residual_now(sup);
    int iter = 0;
    bool stalled = false;
    double best_sup = sup;
    int no_progress = 0;

    while (sup > tol && iter < opts.max_iters && !stalled) {
        // Rounding floor: the residual stops improving once the iterate is
        // the best the arithmetic supports.
        if (sup < best_sup * (1.0 - 1e-3)) {
            best_sup = sup;
            no_progress = 0;
        } else if (++no_progress >= 5) {
            break;
        }
        J = asmbl.jacobian(u);
        grad_vec = Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<long>(raw.size()));

        bool have_newton = false;
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(J);
        if (lu.info() == Eigen::Success) {
            dir_newton = lu.solve(-grad_vec);
            have_newton = dir_newton.allFinite();
        }

        auto directional = [&](const Eigen::VectorXd& dir) {
            if (asmbl.use_energy) return grad_vec.dot(dir);
            return grad_vec.dot(J * dir); // merit 0.5||R||^2, R == grad_vec
        };

        auto try_direction = [&](const Eigen::VectorXd& dir) -> double {
            double dd = directional(dir);
            if (!(dd < 0.0)) return -1.0;
            double alpha = 1.0;
            std::vector<double> dv(dir.data(), dir.data() + dir.size());
            while (alpha > kAlphaMin) {
                apply_direction(trial, asmbl, dv, alpha, u);
                double m_trial = asmbl.merit(trial);
                if (std::isfinite(m_trial) && m_trial <= merit + kArmijo * alpha * dd) return alpha;
                alpha *= opts.line_search_beta;
            }
            return -1.0;
        };

        double alpha = have_newton ? try_direction(dir_newton) : -1.0;
        if (alpha < 0.0 && opts.newton_fallback) {
            // preconditioned steepest descent on the merit
            Eigen::VectorXd gm = asmbl.use_energy ? grad_vec : Eigen::VectorXd(J.transpose() * grad_vec);
            for (int k = 0; k < asmbl.ni; ++k) {
                double m = grid.cell_measure[static_cast<std::size_t>(grid.interior[static_cast<std::size_t>(k)])];
                for (int c = 0; c < sys.d; ++c) gm[c * asmbl.ni + k] /= m;
            }
            Eigen::VectorXd dir_grad = -gm;
            alpha = try_direction(dir_grad);
            if (alpha > 0.0) {
                std::vector<double> dv(dir_grad.data(), dir_grad.data() + dir_grad.size());
                apply_direction(u, asmbl, dv, alpha, u);
            }
        } else if (alpha > 0.0) {
            std::vector<double> dv(dir_newton.data(), dir_newton.data() + dir_newton.size());
            apply_direction(u, asmbl, dv, alpha, u);
        }

        if (alpha < 0.0) {
            stalled = true;
            break;
        }

        merit = asmbl.merit(u);
        if (!std::isfinite(merit)) throw NumericsError("solver: divergent iteration, non-finite merit");
        report.energy_trace.push_back(merit);
        ++iter;
        residual_now(sup);
    }

    // Polish: a couple of full Newton steps after the tolerance is met
    // tighten the iterate toward the exact discrete solution.
    for (int extra = 0; extra < 2 && sup <= tol && sup > 0.0; ++extra) {
        J = asmbl.jacobian(u);
        grad_vec = Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<long>(raw.size()));
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(J);
        if (lu.info() != Eigen::Success) break;
        Eigen::VectorXd step = lu.solve(-grad_vec);
        if (!step.allFinite()) break;
        std::vector<double> dv(step.data(), step.data() + step.size());
        apply_direction(trial, asmbl, dv, 1.0, u);
        std::vector<double> raw_trial;
        asmbl.raw_gradient(trial, raw_trial);
        double sup_trial = asmbl.residual_sup(raw_trial);
        double merit_trial = asmbl.merit(trial);
        if (std::isfinite(merit_trial) && sup_trial < sup &&
            merit_trial <= merit + 1e-12 * (1.0 + std::abs(merit))) {
            for (int c = 0; c < sys.d; ++c) u[static_cast<std::size_t>(c)] = trial[static_cast<std::size_t>(c)];
            merit = merit_trial;
            sup = sup_trial;
            raw = raw_trial;
            report.energy_trace.push_back(merit);
        } else {
            break;
        }
    }

    report.solution = std::move(u);
    report.residual_sup = sup;
    report.iterations = iter;
    report.converged = sup <= tol;
    return report;
}

bool structurally_valid(const Nonlinearity& g, std::string& why) {
    double h0 = g.h(0.0);
    if (!std::isfinite(h0) || std::abs(h0) > 1e-12) {
        why = "g(0) = " + std::to_string(h0) + " is not 0";
        return false;
    }
    for (double t : {1e-4, 1e-2, 1.0, 1e2, 1e4}) {
        double v = g.h(t);
        if (!(v > 0.0) || !std::isfinite(v)) {
            why = "g(" + std::to_string(t) + ") = " + std::to_string(v) + " is not positive";
            return false;
        }
        if (g.h_prime(t) < -1e-10) {
            why = "g'(" + std::to_string(t) + ") < 0";
            return false;
        }
    }
    return true;
}

} // namespace

double SystemSpec::weight(int component, const std::array<double, 2>& x) const {
    if (weights.empty()) return 1.0;
    return weights[static_cast<std::size_t>(component)](x);
}

SystemSpec scalar_system(const Nonlinearity& g) {
    SystemSpec sys;
    sys.d = 1;
    RealFn h = g.h;
    // The solver may probe slightly negative values during line search;
    // extend by zero, consistent with h(0) = 0.
    auto safe_h = [h](double t) { return t > 0.0 ? h(t) : 0.0; };
    sys.gradient = {[safe_h](const std::array<double, 2>&, std::span<const double> u) {
        return safe_h(u[0]);
    }};
    RealFn G;
    if (g.primitive) {
        RealFn P = g.primitive;
        G = [P](double t) { return t > 0.0 ? P(t) : 0.0; };
    } else {
        auto table = std::make_shared<CumulativeIntegral>(RealFn(safe_h), 1e10, 1e-12);
        G = [table](double t) {
            if (t <= 0.0) return 0.0;
            if (t > table->t_max()) return std::numeric_limits<double>::infinity();
            return table->value(t);
        };
    }
    sys.potential = [G](const std::array<double, 2>&, std::span<const double> u) {
        return G(u[0]);
    };
    RealFn hp = g.h_prime;
    sys.gradient_jacobian = [hp](const std::array<double, 2>&, std::span<const double> u,
                                 double* jac) { jac[0] = u[0] > 0.0 ? hp(u[0]) : 0.0; };
    sys.lower_bounds = {g};
    sys.upper_bound = g;
    return sys;
}

SystemDiagnostics validate_system(const SystemSpec& sys, const Grid& grid,
                                  int coordinate_samples, int value_samples) {
    SystemDiagnostics diag;
    auto fail = [&diag](const std::string& name, int c, double t, const std::string& note) {
        diag.checks.push_back({name, c, false, t, note});
    };
    auto pass = [&diag](const std::string& name) { diag.checks.push_back({name, -1, true, 0.0, ""}); };

    if (sys.d < 1 || static_cast<int>(sys.gradient.size()) != sys.d ||
        static_cast<int>(sys.lower_bounds.size()) != sys.d ||
        (sys.has_weights() && static_cast<int>(sys.weights.size()) != sys.d)) {
        fail("shape", -1, 0.0, "component list lengths do not match d");
        diag.ok = false;
        return diag;
    }

    std::vector<std::array<double, 2>> xs;
    for (int k = 0; k < coordinate_samples; ++k) {
        int i = static_cast<int>(static_cast<long>(k) * (grid.n() - 1) / std::max(1, coordinate_samples - 1));
        xs.push_back(grid.nodes[static_cast<std::size_t>(i)]);
    }
    std::vector<double> ts;
    for (int k = 0; k < value_samples; ++k)
        ts.push_back(std::pow(10.0, -3.0 + 6.0 * static_cast<double>(k) / (value_samples - 1)));

    bool lower_ok = true, upper_ok = true, weights_ok = true;
    std::vector<double> uv(static_cast<std::size_t>(sys.d));
    for (double t : ts) {
        std::fill(uv.begin(), uv.end(), t);
        for (const auto& x : xs) {
            for (int c = 0; c < sys.d && (lower_ok || upper_ok); ++c) {
                double gv = sys.gradient[static_cast<std::size_t>(c)](x, uv);
                double slack = 1e-9 + 1e-12 * std::abs(gv);
                double fb = sys.lower_bounds[static_cast<std::size_t>(c)].h(t);
                if (lower_ok && gv < fb - (1e-9 + 1e-12 * std::abs(fb))) {
                    lower_ok = false;
                    fail("lower_bound", c, t,
                         "gradient " + std::to_string(gv) + " below floor " + std::to_string(fb));
                }
                double env = sys.upper_bound.h(t);
                if (upper_ok && env < gv - slack) {
                    upper_ok = false;
                    fail("upper_envelope", c, t,
                         "envelope " + std::to_string(env) + " below gradient " + std::to_string(gv));
                }
            }
            if (weights_ok && sys.has_weights()) {
                for (int c = 0; c < sys.d; ++c) {
                    double w = sys.weights[static_cast<std::size_t>(c)](x);
                    if (!(w > 0.0) || !std::isfinite(w)) {
                        weights_ok = false;
                        fail("weights_positive", c, x[0], "weight " + std::to_string(w));
                        break;
                    }
                }
            }
        }
    }
    if (lower_ok) pass("lower_bound");
    if (upper_ok) pass("upper_envelope");
    if (weights_ok) pass("weights_positive");

    bool potential_ok = true;
    if (sys.potential) {
        std::vector<double> up, um;
        for (const auto& x : xs) {
            for (double t : {0.5, 1.0, 2.0}) {
                std::fill(uv.begin(), uv.end(), t);
                for (int c = 0; c < sys.d && potential_ok; ++c) {
                    double step = 1e-5 * (1.0 + t);
                    up = uv;
                    um = uv;
                    up[static_cast<std::size_t>(c)] += step;
                    um[static_cast<std::size_t>(c)] -= step;
                    double fd = (sys.potential(x, up) - sys.potential(x, um)) / (2.0 * step);
                    double an = sys.gradient[static_cast<std::size_t>(c)](x, uv);
                    double scale = std::max({std::abs(an), std::abs(fd), 1e-8});
                    if (std::abs(fd - an) / scale > 1e-4) {
                        potential_ok = false;
                        fail("potential_consistency", c, t,
                             "potential slope " + std::to_string(fd) +
                                 " disagrees with gradient " + std::to_string(an));
                    }
                }
            }
        }
        if (potential_ok) pass("potential_consistency");
    }

    diag.ok = lower_ok && upper_ok && weights_ok && potential_ok;
    return diag;
}

double discrete_energy(const Grid& grid, const std::vector<GridFunction>& u,
                       const SystemSpec& sys, double p, double eps) {
    if (!sys.potential)
        throw DomainError("discrete_energy: the system has no potential" +
                          std::string(sys.d > 1 ? " (required for d > 1)" : ""));
    if (static_cast<int>(u.size()) != sys.d)
        throw DomainError("discrete_energy: field count does not match d");
    Assembly asmbl(grid, sys, FluxModel{p, eps});
    return asmbl.energy(u, eps);
}

GridFunction apply_p_laplacian(const Grid& grid, const GridFunction& u, double p, double eps) {
    if (!(p > 1.0)) throw DomainError("apply_p_laplacian: p must exceed 1");
    if (eps < 0.0) throw DomainError("apply_p_laplacian: eps must be nonnegative");
    FluxModel fm{p, eps};
    GridFunction out = make_constant(u.grid, 0.0);
    for (const Edge& e : grid.edges) {
        double s = (u[e.b] - u[e.a]) / e.length;
        double f = e.tmeasure * fm.flux(s);
        if (!grid.is_boundary[static_cast<std::size_t>(e.b)]) out[e.b] -= f;
        if (!grid.is_boundary[static_cast<std::size_t>(e.a)]) out[e.a] += f;
    }
    for (int i : grid.interior) out[i] /= grid.cell_measure[static_cast<std::size_t>(i)];
    return out;
}

SolveReport solve_dirichlet_scalar(const Grid& grid, const Nonlinearity& g,
                                   const GridFunction& boundary, double p,
                                   const SolveOptions& opts) {
    std::string why;
    if (!structurally_valid(g, why))
        throw DomainError("solve_dirichlet_scalar: nonlinearity " + g.label + " rejected: " + why);
    SystemSpec sys = scalar_system(g);
    return solve_impl(grid, sys, {boundary}, p, opts);
}

SolveReport solve_dirichlet(const Grid& grid, const SystemSpec& sys,
                            const std::vector<GridFunction>& boundary, double p,
                            const SolveOptions& opts) {
    return solve_impl(grid, sys, boundary, p, opts);
}

SolveReport solve_dirichlet_system(const Grid& grid, const SystemSpec& sys,
                                   const std::vector<GridFunction>& boundary, double p,
                                   const SolveOptions& opts) {
    if (static_cast<int>(boundary.size()) != sys.d)
        throw DomainError("solve_dirichlet_system: boundary field count does not match d");
    for (const auto& b : boundary)
        for (int i : grid.boundary)
            if (!(b[i] > 0.0) || !std::isfinite(b[i]))
                throw DomainError("solve_dirichlet_system: boundary values must be positive and finite");

    // Constant boundary data admit the ordered bracket [psi, M]: psi solves
    // the scalar envelope problem at the smallest boundary level.
    bool constant = true;
    std::vector<double> alpha(static_cast<std::size_t>(sys.d));
    for (int c = 0; c < sys.d && constant; ++c) {
        double v = boundary[static_cast<std::size_t>(c)][grid.boundary[0]];
        for (int i : grid.boundary)
            if (boundary[static_cast<std::size_t>(c)][i] != v) {
                constant = false;
                break;
            }
        alpha[static_cast<std::size_t>(c)] = v;
    }

    std::optional<GridFunction> psi;
    SolveOptions inner = opts;
    inner.initial.reset();
    if (constant) {
        double m = *std::min_element(alpha.begin(), alpha.end());
        SolveReport prep = solve_dirichlet_scalar(grid, sys.upper_bound,
                                                  make_constant(boundary[0].grid, m), p, inner);
        if (prep.converged) psi = std::move(prep.solution[0]);
    }

    SolveOptions run = opts;
    if (!run.initial && psi) {
        std::vector<GridFunction> init(static_cast<std::size_t>(sys.d), *psi);
        run.initial = std::move(init);
    }

    SolveReport report = solve_impl(grid, sys, boundary, p, run);

    if (constant && psi) {
        double M = *std::max_element(alpha.begin(), alpha.end());
        report.sandwich_checked = true;
        double worst = 0.0;
        int witness = -1;
        for (int c = 0; c < sys.d; ++c) {
            for (int i = 0; i < grid.n(); ++i) {
                double v = report.solution[static_cast<std::size_t>(c)][i];
                double viol = std::max((*psi)[i] - v, v - M);
                if (viol > worst) {
                    worst = viol;
                    witness = i;
                }
            }
        }
        report.sandwich_violation = worst;
        report.sandwich_witness = witness;
        report.sandwich_ok = worst <= kSandwichTol;
    }
    return report;
}

ComparisonReport verify_comparison(const Grid& grid, const GridFunction& u,
                                   const GridFunction& v, double p, double tol) {
    ComparisonReport rep;
    GridFunction Lu = apply_p_laplacian(grid, u, p);
    GridFunction Lv = apply_p_laplacian(grid, v, p);

    double worst_h = -std::numeric_limits<double>::infinity();
    int worst_h_node = -1;
    for (int i : grid.interior) {
        double viol = Lv[i] - Lu[i]; // -Δp u <= -Δp v  <=>  Δp u >= Δp v
        if (viol > worst_h) {
            worst_h = viol;
            worst_h_node = i;
        }
    }
    for (int i : grid.boundary) {
        double viol = u[i] - v[i];
        if (viol > worst_h) {
            worst_h = viol;
            worst_h_node = i;
        }
    }
    rep.hypothesis_met = worst_h <= tol;
    rep.worst_hypothesis_node = worst_h_node;
    rep.worst_hypothesis_violation = std::max(0.0, worst_h);

    double worst_c = -std::numeric_limits<double>::infinity();
    int worst_c_node = -1;
    for (int i = 0; i < grid.n(); ++i) {
        double viol = u[i] - v[i];
        if (viol > worst_c) {
            worst_c = viol;
            worst_c_node = i;
        }
    }
    rep.conclusion_holds = worst_c <= tol;
    rep.worst_conclusion_node = worst_c_node;
    rep.worst_conclusion_violation = std::max(0.0, worst_c);
    return rep;
}

SubsolutionReport verify_subsolution(const Grid& grid, const std::vector<GridFunction>& u,
                                     const SystemSpec& sys, double p, SolutionSide side,
                                     double tol) {
    if (static_cast<int>(u.size()) != sys.d)
        throw DomainError("verify_subsolution: field count does not match d");
    SubsolutionReport rep;
    rep.components.resize(static_cast<std::size_t>(sys.d));
    std::vector<double> uv(static_cast<std::size_t>(sys.d));
    for (int c = 0; c < sys.d; ++c) {
        GridFunction Lu = apply_p_laplacian(grid, u[static_cast<std::size_t>(c)], p);
        auto& comp = rep.components[static_cast<std::size_t>(c)];
        double worst = -std::numeric_limits<double>::infinity();
        for (int i : grid.interior) {
            for (int cc = 0; cc < sys.d; ++cc) uv[static_cast<std::size_t>(cc)] = u[static_cast<std::size_t>(cc)][i];
            const auto& x = grid.nodes[static_cast<std::size_t>(i)];
            double rhs = sys.weight(c, x) * sys.gradient[static_cast<std::size_t>(c)](x, uv);
            double lhs = Lu[i] - rhs;
            double viol = (side == SolutionSide::Sub) ? -lhs : lhs;
            if (viol > worst) {
                worst = viol;
                comp.worst_node = i;
            }
        }
        comp.worst_violation = std::max(0.0, worst);
        comp.pass = worst <= tol;
        rep.all_pass &= comp.pass;
    }
    return rep;
}

} // namespace plaplab
