#pragma once

#include "plaplab/quadrature.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace plaplab {

/// A candidate nonlinearity h: [0,∞) → [0,∞) with derivative access and,
/// for the built-in families, an analytic primitive. Instances are immutable
/// values; all members are pure functions.
struct Nonlinearity {
    std::string label;
    RealFn h;
    RealFn h_prime;
    RealFn primitive; // analytic ∫_0^t h when available, else null

    double operator()(double t) const { return h(t); }
};

/// Builders for the supported families.
Nonlinearity make_power(double c, double gamma);
Nonlinearity make_expm1(double c);
Nonlinearity make_sum(const Nonlinearity& a, const Nonlinearity& b);
Nonlinearity make_expr(const std::string& body);

/// Parses the nonlinearity grammar used in configuration files:
///   power(c,gamma) | expm1(c) | sum(spec,spec) | expr("<arithmetic in t>")
Nonlinearity parse_nonlinearity(const std::string& spec);

/// H(t) = ∫_0^t h(s) ds by adaptive quadrature.
double primitive_H(const Nonlinearity& f, double t, double abs_tol = 1e-10);

struct KellerOssermanVerdict {
    bool converges = false;
    double tail_exponent = 0.0;    // fitted decay exponent of H^(-1/p) at t_max
    double integral_estimate = 0.0; // finite part on [1, t_max]
    double tail_bound = 0.0;        // analytic remainder estimate, 0 unless converges
    bool boundary_case = false;     // exponent within margin of 1; reported divergent
};

/// Truncated test of ∫_1^∞ H(t)^(-1/p) dt < ∞ with a fitted power-law tail.
/// Margin on the decay exponent is 0.01; exact-boundary exponents are
/// reported divergent with boundary_case set.
KellerOssermanVerdict keller_osserman_check(const Nonlinearity& f, double p,
                                            double t_max = 1e8, double abs_tol = 1e-8);

/// Φ(w) = ∫_w^∞ g(t)^(-1/(p-1)) dt and its inverse. Construction verifies the
/// tail actually decays; otherwise the transform is undefined and a
/// DomainError names g and p.
class PhiTransform {
public:
    PhiTransform(const Nonlinearity& g, double p,
                 double t_max = 1e8, double abs_tol = 1e-10,
                 double w_min = 1e-8, double w_max = 1e12);

    double value(double w) const;
    double invert(double z) const;
    double attainable_min() const { return transform_->attainable_min(); }
    double attainable_max() const { return transform_->attainable_max(); }

private:
    std::shared_ptr<const TailIntegralTransform> transform_;
    std::string label_;
};

double phi_transform(const Nonlinearity& g, double p, double w);
double phi_invert(const Nonlinearity& g, double p, double z);

/// One structural property check with a witness when it fails.
struct PropertyCheck {
    std::string name;
    bool pass = false;
    double witness = 0.0;
    std::string note;
};

struct ClassFDiagnostics {
    std::vector<PropertyCheck> checks;
    std::optional<KellerOssermanVerdict> keller_osserman;
    bool structurally_valid = false; // everything except the growth test
    bool admissible = false;         // structurally valid and Keller-Osserman holds
};

/// Samples h on a log-spaced grid of (0, 1e6]: value at zero, positivity,
/// monotonicity of h', derivative consistency, and the growth test.
/// Failures are recorded as data, never thrown.
ClassFDiagnostics class_f_validate(const Nonlinearity& f, double p, int sample_count = 64);

} // namespace plaplab
