#include "plaplab/escalation.hpp"

#include "plaplab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace plaplab {

namespace {

constexpr double kMonotonicityHardLimit = 1e-6;

EscalationTrace escalate_impl(const GridPtr& gp, const SystemSpec& sys, double p,
                              const std::vector<int>& blowup_components,
                              const std::vector<double>& fixed_boundary,
                              const EscalationSchedule& sched, const SolveOptions& opts) {
    const Grid& grid = *gp;
    sched.validate(grid);

    const bool mixed = !blowup_components.empty() &&
                       static_cast<int>(blowup_components.size()) < sys.d;
    std::set<int> blow(blowup_components.begin(), blowup_components.end());

    EscalationTrace trace;
    trace.core_indices = restrict_to_core(grid, sched.core_margin);
    trace.ring_indices = boundary_ring(grid);
    trace.blowup_components = blowup_components;

    std::optional<std::vector<GridFunction>> prev;

    for (int k = 0; k < sched.max_levels; ++k) {
        double b = sched.level_value(k);
        std::vector<GridFunction> boundary;
        boundary.reserve(static_cast<std::size_t>(sys.d));
        for (int c = 0; c < sys.d; ++c) {
            double v = (!mixed || blow.count(c)) ? b : fixed_boundary[static_cast<std::size_t>(c)];
            boundary.push_back(make_constant(gp, v));
        }

        SolveOptions level_opts = opts;
        if (prev) level_opts.initial = prev;
        SolveReport rep = solve_dirichlet_system(grid, sys, boundary, p, level_opts);

        if (!rep.converged) {
            trace.truncated = true;
            break;
        }

        EscalationLevel level;
        level.boundary_value = b;

        if (prev) {
            double min_inc = std::numeric_limits<double>::infinity();
            int worst_node = -1;
            double core_delta = 0.0;
            for (int c = 0; c < sys.d; ++c) {
                const GridFunction& now = rep.solution[static_cast<std::size_t>(c)];
                const GridFunction& before = (*prev)[static_cast<std::size_t>(c)];
                // The ordered-solution argument applies to the components
                // whose boundary data rise; held components may legitimately
                // fall as the coupling strengthens.
                if (!mixed || blow.count(c)) {
                    for (int i = 0; i < grid.n(); ++i) {
                        double inc = now[i] - before[i];
                        if (inc < min_inc) {
                            min_inc = inc;
                            worst_node = i;
                        }
                    }
                }
                for (int i : trace.core_indices)
                    core_delta = std::max(core_delta, std::abs(now[i] - before[i]));
            }
            if (min_inc < -kMonotonicityHardLimit)
                throw NumericsError("escalation lost monotonicity at level " + std::to_string(k) +
                                    ", node " + std::to_string(worst_node) + " (drop " +
                                    std::to_string(-min_inc) + ")");
            level.min_increment = min_inc;
            level.core_delta = core_delta;
        }

        double ring_max = 0.0;
        for (int c = 0; c < sys.d; ++c)
            for (int i : trace.ring_indices)
                ring_max = std::max(ring_max, rep.solution[static_cast<std::size_t>(c)][i]);
        level.boundary_ring_max = ring_max;

        if (mixed) {
            double excess = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < sys.d; ++c) {
                if (blow.count(c)) continue;
                double alpha = fixed_boundary[static_cast<std::size_t>(c)];
                for (int i = 0; i < grid.n(); ++i)
                    excess = std::max(excess, rep.solution[static_cast<std::size_t>(c)][i] - alpha);
            }
            level.max_fixed_excess = excess;
        }

        prev = rep.solution;
        level.report = std::move(rep);
        trace.levels.push_back(std::move(level));

        if (!trace.levels.empty() && trace.levels.size() >= 2 &&
            trace.levels.back().core_delta <= sched.stall_tol) {
            trace.stabilized = true;
            break;
        }
    }

    if (!trace.levels.empty()) trace.limit_fields = trace.levels.back().report.solution;

    if (mixed && !trace.levels.empty()) {
        double dev = 0.0;
        const auto& last = trace.levels.back().report.solution;
        for (int c = 0; c < sys.d; ++c) {
            if (blow.count(c)) continue;
            double alpha = fixed_boundary[static_cast<std::size_t>(c)];
            for (int i : trace.ring_indices)
                dev = std::max(dev, std::abs(last[static_cast<std::size_t>(c)][i] - alpha));
        }
        trace.final_ring_deviation = dev;
    }
    return trace;
}

} // namespace

double EscalationSchedule::level_value(int k) const {
    if (growth == GrowthKind::Geometric) return base * std::pow(ratio, k);
    return base + step * static_cast<double>(k);
}

void EscalationSchedule::validate(const Grid& grid) const {
    if (!(base > 0.0)) throw DomainError("escalation schedule: base must be positive");
    if (growth == GrowthKind::Geometric && !(ratio > 1.0))
        throw DomainError("escalation schedule: geometric ratio must exceed 1");
    if (growth == GrowthKind::Arithmetic && !(step > 0.0))
        throw DomainError("escalation schedule: arithmetic step must be positive");
    if (max_levels < 3) throw DomainError("escalation schedule: need at least 3 levels");
    if (!(stall_tol > 0.0)) throw DomainError("escalation schedule: stall tolerance must be positive");
    if (!(core_margin > 0.0) || core_margin >= grid.spec.inradius())
        throw DomainError("escalation schedule: core margin must lie in (0, inradius)");
}

std::vector<int> boundary_ring(const Grid& grid) {
    std::set<int> ring;
    for (const Edge& e : grid.edges) {
        bool ab = grid.is_boundary[static_cast<std::size_t>(e.a)];
        bool bb = grid.is_boundary[static_cast<std::size_t>(e.b)];
        if (ab && !bb) ring.insert(e.b);
        if (bb && !ab) ring.insert(e.a);
    }
    return {ring.begin(), ring.end()};
}

EscalationTrace escalate_blowup(const GridPtr& grid, const SystemSpec& sys, double p,
                                const EscalationSchedule& sched, const SolveOptions& opts) {
    return escalate_impl(grid, sys, p, {}, {}, sched, opts);
}

EscalationTrace escalate_mixed(const GridPtr& grid, const SystemSpec& sys, double p,
                               const std::vector<int>& blowup_components,
                               const std::vector<double>& fixed_boundary,
                               const EscalationSchedule& sched, const SolveOptions& opts) {
    if (blowup_components.empty())
        throw DomainError("escalate_mixed: blow-up component set is empty");
    if (static_cast<int>(blowup_components.size()) >= sys.d)
        throw DomainError("escalate_mixed: blow-up set must be a proper subset of the components"
                          " (use escalate_blowup to escalate all of them)");
    for (int c : blowup_components)
        if (c < 0 || c >= sys.d)
            throw DomainError("escalate_mixed: component index " + std::to_string(c) + " out of range");
    if (static_cast<int>(fixed_boundary.size()) != sys.d)
        throw DomainError("escalate_mixed: fixed boundary values must be given for all components");
    std::set<int> blow(blowup_components.begin(), blowup_components.end());
    for (int c = 0; c < sys.d; ++c)
        if (!blow.count(c) && !(fixed_boundary[static_cast<std::size_t>(c)] > 0.0))
            throw DomainError("escalate_mixed: fixed boundary value for component " +
                              std::to_string(c) + " must be positive");
    return escalate_impl(grid, sys, p, blowup_components, fixed_boundary, sched, opts);
}

RateFit fit_boundary_rate(const GridFunction& u, const Grid& grid,
                          double window_lo, double window_hi) {
    if (!(window_lo > 0.0) || !(window_hi > window_lo) || window_hi >= grid.spec.inradius())
        throw DomainError("fit_boundary_rate: window must satisfy 0 < lo < hi < inradius");
    std::vector<double> d, v;
    for (int i : grid.interior) {
        double dist = grid.dist_boundary[static_cast<std::size_t>(i)];
        if (dist < window_lo || dist > window_hi) continue;
        if (!(u[i] > 0.0))
            throw DomainError("fit_boundary_rate: nonpositive field value at node " + std::to_string(i));
        d.push_back(dist);
        v.push_back(u[i]);
    }
    if (d.size() < 6)
        throw DomainError("fit_boundary_rate: only " + std::to_string(d.size()) +
                          " nodes in the window, need at least 6");
    LogLogFit fit = fit_log_log(d, v);
    RateFit out;
    out.exponent = -fit.slope;
    out.amplitude = std::exp(fit.intercept);
    out.rms_residual = fit.rms_residual;
    return out;
}

void attach_rate_fits(EscalationTrace& trace, const Grid& grid,
                      double window_lo, double window_hi) {
    trace.rate_fits.clear();
    for (const GridFunction& u : trace.limit_fields)
        trace.rate_fits.push_back(fit_boundary_rate(u, grid, window_lo, window_hi));
}

BarrierFunction::BarrierFunction(const Nonlinearity& f, double p, double u_cap) {
    if (!(p > 1.0)) throw DomainError("barrier: p must exceed 1");
    if (!(u_cap > 100.0)) throw DomainError("barrier: cap value too small");
    KellerOssermanVerdict ko = keller_osserman_check(f, p);
    if (!ko.converges)
        throw DomainError("barrier undefined: the growth condition fails for " + f.label +
                          " at p = " + std::to_string(p) + " (decay exponent " +
                          std::to_string(ko.tail_exponent) + ")");

    // cap before the primitive overflows (H <= t h(t))
    double cap = u_cap;
    {
        double t = 1.0;
        while (t < u_cap) {
            double tn = std::min(t * 10.0, u_cap);
            double v = f.h(tn);
            if (!std::isfinite(v) || v > 1e280 / tn) break;
            t = tn;
        }
        cap = t;
    }
    if (cap < 100.0) throw DomainError("barrier undefined: " + f.label + " overflows below t = 100");

    // Analytic primitives keep the distance integrand smooth; the anchored
    // cumulative fallback is accurate but too jittery for deep adaptivity.
    RealFn H_of;
    if (f.primitive) {
        RealFn P = f.primitive;
        H_of = [P](double s) { return s > 0.0 ? P(s) : 0.0; };
    } else {
        primitive_ = std::make_shared<CumulativeIntegral>(f.h, cap * 1.02, 1e-12);
        auto H = primitive_;
        H_of = [H](double s) { return H->value(s); };
    }
    const double pprime = p / (p - 1.0);
    RealFn integrand = [H_of, pprime, p](double s) {
        return std::pow(pprime * H_of(s), -1.0 / p);
    };
    try {
        distance_ = std::make_shared<TailIntegralTransform>(integrand, cap, 1e-10, 1e-8, 1e30);
    } catch (const NumericsError& e) {
        throw DomainError("barrier undefined for " + f.label + ": " + e.what());
    }
}

double BarrierFunction::value(double delta) const {
    if (!(delta > 0.0)) throw DomainError("barrier: distance must be positive");
    return distance_->invert(delta);
}

double barrier_mu(const Nonlinearity& f, double p, double delta) {
    return BarrierFunction(f, p).value(delta);
}

BarrierCheck verify_barrier_domination(const EscalationTrace& trace, const Grid& grid,
                                       const BarrierFunction& mu, int component,
                                       double window_lo, double window_hi) {
    std::vector<int> nodes;
    std::vector<double> mu_at;
    for (int i : grid.interior) {
        double d = grid.dist_boundary[static_cast<std::size_t>(i)];
        if (d < window_lo || d > window_hi) continue;
        nodes.push_back(i);
        mu_at.push_back(mu.value(d));
    }
    BarrierCheck check;
    check.window_nodes = nodes.size();
    for (std::size_t lev = 0; lev < trace.levels.size(); ++lev) {
        const GridFunction& u = trace.levels[lev].report.solution[static_cast<std::size_t>(component)];
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            double ratio = u[nodes[j]] / mu_at[j];
            if (ratio > check.max_ratio) {
                check.max_ratio = ratio;
                check.worst_node = nodes[j];
                check.worst_level = static_cast<int>(lev);
            }
        }
    }
    return check;
}

} // namespace plaplab
