#pragma once

#include "plaplab/solver.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace plaplab {

enum class GrowthKind { Geometric, Arithmetic };

/// Monotone boundary escalation: levels b_k = base * ratio^k (geometric) or
/// base + k * step (arithmetic), stopping on core stabilization or the level
/// cap.
struct EscalationSchedule {
    double base = 1.0;
    GrowthKind growth = GrowthKind::Geometric;
    double ratio = 2.0;
    double step = 1.0;
    int max_levels = 8;
    double core_margin = 0.25;
    double stall_tol = 1e-6;

    double level_value(int k) const;
    void validate(const Grid& grid) const;
};

struct EscalationLevel {
    double boundary_value = 0.0;
    SolveReport report;
    double core_delta = 0.0;        // sup change on the core vs previous level
    double boundary_ring_max = 0.0; // max over components on the outermost interior ring
    // Min nodal change vs the previous level over the escalating components
    // (ordering evidence); held components in mixed runs are excluded.
    double min_increment = 0.0;
    double max_fixed_excess = 0.0;  // mixed runs: max of u_j - alpha_j over fixed components
};

/// Least-squares power fit u ≈ amplitude * d^(-exponent) in log-log space.
struct RateFit {
    double amplitude = 0.0;
    double exponent = 0.0;
    double rms_residual = 0.0;
};

struct EscalationTrace {
    std::vector<EscalationLevel> levels;
    bool stabilized = false;
    bool truncated = false; // a level failed to converge
    std::vector<GridFunction> limit_fields;
    std::vector<RateFit> rate_fits; // per component; filled by attach_rate_fits
    std::vector<int> core_indices;
    std::vector<int> ring_indices;
    // Mixed runs only:
    std::vector<int> blowup_components;
    double final_ring_deviation = 0.0; // max |u_j - alpha_j| on the ring, fixed components
};

/// Interior nodes sharing an edge with a boundary node.
std::vector<int> boundary_ring(const Grid& grid);

EscalationTrace escalate_blowup(const GridPtr& grid, const SystemSpec& sys, double p,
                                const EscalationSchedule& sched, const SolveOptions& opts = {});

/// Escalates only the listed components (0-based); the complement is held at
/// fixed_boundary[c]. blowup_components must be a nonempty proper subset.
EscalationTrace escalate_mixed(const GridPtr& grid, const SystemSpec& sys, double p,
                               const std::vector<int>& blowup_components,
                               const std::vector<double>& fixed_boundary,
                               const EscalationSchedule& sched, const SolveOptions& opts = {});

/// Fits u ≈ A d^(-beta) over interior nodes with boundary distance inside
/// [window_lo, window_hi]. Needs at least 6 nodes in the window.
RateFit fit_boundary_rate(const GridFunction& u, const Grid& grid,
                          double window_lo, double window_hi);

void attach_rate_fits(EscalationTrace& trace, const Grid& grid,
                      double window_lo, double window_hi);

/// The one-dimensional large-solution barrier determined by f: the value at
/// distance delta of the decreasing solution of (|u'|^{p-2} u')' = f(u) on a
/// half line, built from the first-integral reduction
/// u' = -(p' H(u))^{1/p}, truncated at a large cap value.
class BarrierFunction {
public:
    BarrierFunction(const Nonlinearity& f, double p, double u_cap = 1e10);
    double value(double delta) const;

private:
    std::shared_ptr<const TailIntegralTransform> distance_;
    std::shared_ptr<const CumulativeIntegral> primitive_;
};

double barrier_mu(const Nonlinearity& f, double p, double delta);

struct BarrierCheck {
    double max_ratio = 0.0; // max of u / mu(d) over levels and window nodes
    int worst_node = -1;
    int worst_level = -1;
    std::size_t window_nodes = 0;
};

/// Checks every level of a trace against the barrier on a distance window.
BarrierCheck verify_barrier_domination(const EscalationTrace& trace, const Grid& grid,
                                       const BarrierFunction& mu, int component,
                                       double window_lo, double window_hi);

} // namespace plaplab
