#pragma once

#include "plaplab/grid.hpp"
#include "plaplab/nonlinearity.hpp"

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plaplab {

using PointFn = std::function<double(const std::array<double, 2>&)>;
using CoupledFn = std::function<double(const std::array<double, 2>&, std::span<const double>)>;

/// A coupled system: d equations driven by the gradient components of a
/// potential, bracketed below by per-component nonlinearities and above by a
/// single envelope nonlinearity, with optional positive weight fields.
struct SystemSpec {
    int d = 1;
    std::vector<CoupledFn> gradient;      // component c: (x, u_1..u_d) -> value
    CoupledFn potential;                  // optional joint potential
    std::vector<Nonlinearity> lower_bounds;
    Nonlinearity upper_bound;
    std::vector<PointFn> weights;         // optional; empty means weight 1

    /// Optional analytic jacobian of `gradient` with respect to u
    /// (row-major d x d). Central differences are used when absent.
    std::function<void(const std::array<double, 2>&, std::span<const double>, double*)>
        gradient_jacobian;

    bool has_weights() const { return !weights.empty(); }
    double weight(int component, const std::array<double, 2>& x) const;
};

/// Wraps a scalar nonlinearity g as a one-component system with analytic
/// potential and jacobian: the Dirichlet problem div(|∇u|^{p-2}∇u) = g(u).
SystemSpec scalar_system(const Nonlinearity& g);

struct SystemCheckResult {
    std::string name;
    int component = -1;
    bool pass = true;
    double witness_t = 0.0;
    std::string note;
};

struct SystemDiagnostics {
    std::vector<SystemCheckResult> checks;
    bool ok = false;
};

/// Sampled validation of the structural hypotheses: the gradient dominates
/// the per-component lower bounds on the diagonal, the envelope dominates the
/// gradient on the diagonal, the potential is consistent with its gradient,
/// and weights are positive.
SystemDiagnostics validate_system(const SystemSpec& sys, const Grid& grid,
                                  int coordinate_samples = 8, int value_samples = 12);

struct SolveOptions {
    double tol = -1.0; // negative: 1e-9 when p == 2, otherwise 1e-7
    int max_iters = 10000;
    double eps = 1e-8; // flux regularization for p != 2
    double line_search_beta = 0.5;
    bool newton_fallback = true;
    std::optional<std::vector<GridFunction>> initial; // warm start

    double resolved_tol(double p) const { return tol >= 0.0 ? tol : (p == 2.0 ? 1e-9 : 1e-7); }
    double resolved_eps(double p) const { return p == 2.0 ? 0.0 : eps; }
};

struct SolveReport {
    std::vector<GridFunction> solution;
    double residual_sup = 0.0;          // sup norm of the interior residual
    std::vector<double> energy_trace;   // merit per accepted iterate
    int iterations = 0;
    bool converged = false;
    double regularization_eps = 0.0;
    bool energy_available = true;       // merit is the energy, not a residual norm

    // Ordered-bracket diagnostic, evaluated for constant boundary data.
    bool sandwich_checked = false;
    bool sandwich_ok = true;
    double sandwich_violation = 0.0;
    int sandwich_witness = -1;
};

/// Discrete energy: sum over edges of t_e * l_e * phi_{p,eps}(du/l_e) over
/// all components, plus the cell-weighted potential. For one-component
/// systems a weight field multiplies the potential term. Throws when the
/// potential is missing and d > 1.
double discrete_energy(const Grid& grid, const std::vector<GridFunction>& u,
                       const SystemSpec& sys, double p, double eps = 0.0);

/// Interior residual field of the flux operator: the negative gradient of
/// the Dirichlet energy divided by cell measures, a consistent approximation
/// of div(|∇u|^{p-2}∇u). Boundary entries are zero.
GridFunction apply_p_laplacian(const Grid& grid, const GridFunction& u, double p,
                               double eps = 0.0);

SolveReport solve_dirichlet_scalar(const Grid& grid, const Nonlinearity& g,
                                   const GridFunction& boundary, double p,
                                   const SolveOptions& opts = {});

SolveReport solve_dirichlet_system(const Grid& grid, const SystemSpec& sys,
                                   const std::vector<GridFunction>& boundary, double p,
                                   const SolveOptions& opts = {});

/// General Dirichlet solve without the ordered-bracket preparation; boundary
/// data only need to be finite.
SolveReport solve_dirichlet(const Grid& grid, const SystemSpec& sys,
                            const std::vector<GridFunction>& boundary, double p,
                            const SolveOptions& opts = {});

struct ComparisonReport {
    bool hypothesis_met = false;   // flux ordering in the interior + boundary ordering
    bool conclusion_holds = false; // u <= v + tol at every node
    int worst_hypothesis_node = -1;
    double worst_hypothesis_violation = 0.0;
    int worst_conclusion_node = -1;
    double worst_conclusion_violation = 0.0;
};

/// Nodewise comparison check: if -Δp u <= -Δp v in the interior and u <= v on
/// the boundary, then u <= v everywhere. Verdicts are data, never thrown.
ComparisonReport verify_comparison(const Grid& grid, const GridFunction& u,
                                   const GridFunction& v, double p, double tol);

enum class SolutionSide { Sub, Super };

struct SubsolutionComponentReport {
    bool pass = true;
    int worst_node = -1;
    double worst_violation = 0.0;
};

struct SubsolutionReport {
    std::vector<SubsolutionComponentReport> components;
    bool all_pass = true;
};

/// Nodewise strong-form rendering of the weak inequality: for side Sub,
/// Δp u_i - a_i F_{u_i}(x, u) >= -tol at every interior node; Super reverses.
SubsolutionReport verify_subsolution(const Grid& grid, const std::vector<GridFunction>& u,
                                     const SystemSpec& sys, double p, SolutionSide side,
                                     double tol);

} // namespace plaplab
