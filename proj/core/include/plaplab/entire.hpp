#pragma once

#include "plaplab/escalation.hpp"
#include "plaplab/solver.hpp"

#include <memory>
#include <string>
#include <vector>

namespace plaplab {

struct RadialProfile {
    std::vector<double> radii;
    std::vector<double> values;
    int ambient_dim = 3;
    bool decay_verified = false; // value at the last radius below 1e-3 of the center value
};

/// The canonical radial solution of -div(|∇z|^{p-2}∇z) = A(|x|) on R^N that
/// decays at infinity:
///   z(r) = ∫_r^∞ [ s^{1-N} ∫_0^s t^{N-1} A(t) dt ]^{1/(p-1)} ds,
/// evaluated by nested anchored quadrature with a fitted power tail beyond
/// the working range. Construction fails when the outer integral diverges.
class RadialUpperSolution {
public:
    RadialUpperSolution(RealFn weight_sum, double p, int ambient_dim, double r_max,
                        int resolution);

    double value(double r) const;       // z(r), any r >= 0
    double inner_mass(double s) const;  // ∫_0^s t^(N-1) A(t) dt
    double slope_magnitude(double s) const; // |z'(s)| = [s^{1-N} P(s)]^{1/(p-1)}

    const RadialProfile& profile() const { return profile_; }
    double max_relative_residual() const { return max_residual_; }

private:
    RealFn A_;
    double p_;
    int N_;
    double r_max_;
    std::shared_ptr<const CumulativeIntegral> mass_;
    std::shared_ptr<const TailIntegralTransform> outer_;
    RadialProfile profile_;
    double max_residual_ = 0.0;
};

/// Profile-level wrapper around RadialUpperSolution; verifies the radial
/// equation to relative 1e-6 at interior samples and throws otherwise.
RadialProfile radial_upper_solution(const RealFn& weight_sum, double p, int ambient_dim,
                                    double r_max, int resolution);

/// w = Φ⁻¹ ∘ z pointwise, where Φ(w) = ∫_w^∞ g^{-1/(p-1)}. Every z value must
/// lie in the attainable range of Φ; violations name the offending node.
RadialProfile build_subsolution_w(const RadialProfile& z, const Nonlinearity& g, double p);
GridFunction build_subsolution_w(const GridFunction& z, const Nonlinearity& g, double p);

struct BallSolve {
    double radius = 0.0;
    GridPtr grid;
    std::vector<double> z_on_grid;
    std::vector<double> w_on_grid;
    double w_boundary = 0.0; // w at the ball radius, the imposed boundary value
    SolveReport report;
    double min_u_minus_w = 0.0;  // over components and nodes
    double max_u_minus_wb = 0.0; // over components and nodes
};

struct EntireTrace {
    std::vector<double> ball_radii;
    std::vector<BallSolve> balls;
    RadialProfile z_profile;
    RadialProfile w_profile;
    bool all_converged = true;
    bool lower_bound_ok = true; // w <= u_i within 1e-7 on every ball
    double worst_lower_violation = 0.0;
    double worst_upper_violation = 0.0;
    /// nested_core_deltas[j][k]: sup change of the solution on the ball of
    /// radius ball_radii[j] between consecutive outer balls k and k+1.
    std::vector<std::vector<double>> nested_core_deltas;
};

/// Solves the weighted Dirichlet system on each ball with boundary value
/// w(ball radius), warm-starting from w, and records the bracket checks and
/// nested stabilization diagnostics.
EntireTrace ball_exhaustion(const SystemSpec& sys, const Nonlinearity& g, double p,
                            int ambient_dim, const std::vector<double>& ball_radii,
                            int resolution, const SolveOptions& opts = {});

struct LargeSolutionReport {
    bool verdict = false;
    double min_component_value = 0.0; // at the outermost interior node, largest ball
    double w_at_outermost = 0.0;
    bool divergence_certified = false; // Φ⁻¹ keeps growing as z → 0
    std::string note;
};

LargeSolutionReport verify_large_at_infinity(const EntireTrace& trace, const Nonlinearity& g,
                                             double p, double growth_threshold);

} // namespace plaplab
