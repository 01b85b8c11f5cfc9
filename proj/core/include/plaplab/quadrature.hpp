#pragma once

#include <functional>
#include <vector>

namespace plaplab {

using RealFn = std::function<double(double)>;

/// Adaptive Gauss-Kronrod integration of f over the finite interval [a, b],
/// targeting absolute tolerance `abs_tol`. Throws NumericsError when the
/// integrand produces a non-finite value, reporting the abscissa.
double integrate(const RealFn& f, double a, double b, double abs_tol);

/// Same, but splits [a, b] into geometric segments first. Intended for
/// integrands spanning many decades (b/a large).
double integrate_split(const RealFn& f, double a, double b, double abs_tol);

/// Largest decade point t <= t_max (scanning upward from 1) where s(t) is
/// finite with |s(t)| above the floor. Used to truncate working ranges before
/// fast-growing integrands overflow.
double largest_representable_abscissa(const RealFn& s, double t_max, double floor_value = 1e-250);

/// Precomputed cumulative integral C(t) = ∫_0^t f, anchored at geometric
/// points so that value() costs a single short quadrature from the nearest
/// anchor below. Valid for t in [0, t_max].
class CumulativeIntegral {
public:
    CumulativeIntegral(RealFn f, double t_max, double abs_tol, double first_anchor = 1e-6);
    double value(double t) const;
    double t_max() const { return t_max_; }

private:
    RealFn f_;
    double t_max_;
    double abs_tol_;
    std::vector<double> anchors_;
    std::vector<double> sums_;
};

/// Ordinary least squares of log s against log t.
struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0; // in log space
    double rms_residual = 0.0;
};
LogLogFit fit_log_log(const std::vector<double>& t, const std::vector<double>& s);

/// Local power-law model s(t) ≈ coeff · t^(-q) fitted over the decade
/// [T/10, T]. Gives an analytic estimate of the remainder ∫_T^∞ s when q > 1.
struct PowerTail {
    double T = 0.0;
    double q = 0.0;
    double coeff = 0.0;
    double fit_rms = 0.0;

    bool decays(double margin = 0.0) const { return q > 1.0 + margin; }
    double value(double t) const;
    /// ∫_from^∞ coeff · t^(-q) dt, for from ≥ T/10. Requires q > 1.
    double integral_beyond(double from) const;
    /// Inverse of z = integral_beyond(w) on the tail branch.
    double invert_integral(double z) const;
};
PowerTail fit_power_tail(const RealFn& s, double T, int samples = 24);

/// V(w) = ∫_w^∞ s(t) dt for a positive integrand with a power-law tail:
/// finite part by anchored quadrature on [w, T], remainder from the fitted
/// tail. Strictly decreasing in w; invert() recovers w from a value by
/// bracket expansion from w = 1 and bisection.
class TailIntegralTransform {
public:
    TailIntegralTransform(RealFn integrand, double T, double abs_tol,
                          double w_min = 1e-8, double w_max = 1e12);

    double value(double w) const;
    double invert(double z, double value_tol = 1e-8, double rel_width = 1e-12) const;

    const PowerTail& tail() const { return tail_; }
    double w_min() const { return w_min_; }
    double w_max() const { return w_max_; }
    double attainable_max() const { return value_at_w_min_; }
    double attainable_min() const { return value_at_w_max_; }

private:
    RealFn s_;
    double T_;
    double abs_tol_;
    double w_min_;
    double w_max_;
    PowerTail tail_;
    std::vector<double> anchors_; // descending from T
    std::vector<double> sums_;    // ∫_{anchors_[k]}^{T} s
    double value_at_w_min_ = 0.0;
    double value_at_w_max_ = 0.0;
};

} // namespace plaplab
