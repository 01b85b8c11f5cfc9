#include "plaplab/nonlinearity.hpp"

#include "plaplab/errors.hpp"
#include "plaplab/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace plaplab {

namespace {

constexpr double kExponentMargin = 0.01;
constexpr double kFitRmsThreshold = 0.05;

double central_difference(const RealFn& f, double t) {
    double delta = 1e-6 * (1.0 + std::abs(t));
    double lo = std::max(t - delta, 0.0);
    double hi = t + delta;
    return (f(hi) - f(lo)) / (hi - lo);
}

} // namespace

Nonlinearity make_power(double c, double gamma) {
    if (!(c > 0.0)) throw DomainError("power(c,gamma): scale c must be positive");
    if (!(gamma >= 1.0)) throw DomainError("power(c,gamma): exponent gamma must be >= 1");
    Nonlinearity f;
    f.label = "power(" + std::to_string(c) + "," + std::to_string(gamma) + ")";
    f.h = [c, gamma](double t) { return c * std::pow(t, gamma); };
    f.h_prime = [c, gamma](double t) { return c * gamma * std::pow(t, gamma - 1.0); };
    f.primitive = [c, gamma](double t) { return c * std::pow(t, gamma + 1.0) / (gamma + 1.0); };
    return f;
}

Nonlinearity make_expm1(double c) {
    if (!(c > 0.0)) throw DomainError("expm1(c): scale c must be positive");
    Nonlinearity f;
    f.label = "expm1(" + std::to_string(c) + ")";
    f.h = [c](double t) { return c * std::expm1(t); };
    f.h_prime = [c](double t) { return c * std::exp(t); };
    f.primitive = [c](double t) { return c * (std::expm1(t) - t); };
    return f;
}

Nonlinearity make_sum(const Nonlinearity& a, const Nonlinearity& b) {
    Nonlinearity f;
    f.label = "sum(" + a.label + "," + b.label + ")";
    auto ah = a.h, bh = b.h;
    f.h = [ah, bh](double t) { return ah(t) + bh(t); };
    auto ap = a.h_prime, bp = b.h_prime;
    f.h_prime = [ap, bp](double t) { return ap(t) + bp(t); };
    if (a.primitive && b.primitive) {
        auto aP = a.primitive, bP = b.primitive;
        f.primitive = [aP, bP](double t) { return aP(t) + bP(t); };
    }
    return f;
}

Nonlinearity make_expr(const std::string& body) {
    Expression e = Expression::parse(body, {"t"});
    Nonlinearity f;
    f.label = "expr(\"" + body + "\")";
    f.h = [e](double t) { return e.eval(std::vector<double>{t}); };
    auto h = f.h;
    f.h_prime = [h](double t) { return central_difference(h, t); };
    return f;
}

namespace {

struct SpecParser {
    const std::string& src;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw DomainError("nonlinearity spec \"" + src + "\": " + what);
    }

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < src.size() && src[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    double number() {
        skip_ws();
        const char* begin = src.c_str() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("expected a number");
        pos += static_cast<std::size_t>(end - begin);
        return v;
    }

    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < src.size() && std::isalnum(static_cast<unsigned char>(src[pos]))) ++pos;
        if (pos == start) fail("expected a family name");
        return src.substr(start, pos - start);
    }

    std::string quoted() {
        skip_ws();
        if (pos >= src.size() || src[pos] != '"') fail("expected a quoted expression");
        ++pos;
        std::size_t start = pos;
        while (pos < src.size() && src[pos] != '"') ++pos;
        if (pos >= src.size()) fail("unterminated quote");
        std::string body = src.substr(start, pos - start);
        ++pos;
        return body;
    }

    Nonlinearity parse() {
        std::string name = ident();
        if (!eat('(')) fail("expected '(' after " + name);
        Nonlinearity out;
        if (name == "power") {
            double c = number();
            if (!eat(',')) fail("power takes two parameters");
            double gamma = number();
            out = make_power(c, gamma);
        } else if (name == "expm1") {
            out = make_expm1(number());
        } else if (name == "sum") {
            Nonlinearity a = parse();
            if (!eat(',')) fail("sum takes two members");
            Nonlinearity b = parse();
            out = make_sum(a, b);
        } else if (name == "expr") {
            out = make_expr(quoted());
        } else {
            fail("unknown family '" + name + "'");
        }
        if (!eat(')')) fail("expected ')'");
        return out;
    }
};

} // namespace

Nonlinearity parse_nonlinearity(const std::string& spec) {
    SpecParser p{spec};
    Nonlinearity f = p.parse();
    p.skip_ws();
    if (p.pos != spec.size()) p.fail("trailing input");
    return f;
}

double primitive_H(const Nonlinearity& f, double t, double abs_tol) {
    if (t < 0.0) throw DomainError("primitive_H: t must be nonnegative");
    if (t == 0.0) return 0.0;
    if (t <= 1.0) return integrate(f.h, 0.0, t, abs_tol);
    return integrate(f.h, 0.0, 1.0, abs_tol / 2) + integrate_split(f.h, 1.0, t, abs_tol / 2);
}

KellerOssermanVerdict keller_osserman_check(const Nonlinearity& f, double p,
                                            double t_max, double abs_tol) {
    if (!(p > 1.0)) throw DomainError("keller_osserman_check: p must exceed 1");
    if (!(t_max > 10.0)) throw DomainError("keller_osserman_check: t_max too small");

    // Truncate before the primitive overflows; H(t) <= t h(t) for
    // nondecreasing h, so capping t h(t) keeps H representable.
    double cap = t_max;
    {
        double t = 1.0;
        while (t < t_max) {
            double tn = std::min(t * 10.0, t_max);
            double v = f.h(tn);
            if (!std::isfinite(v) || v > 1e280 / tn) break;
            t = tn;
        }
        cap = t;
    }
    if (cap < 100.0)
        throw DomainError("keller_osserman_check: " + f.label +
                          " overflows below t = 100; no representable working range");

    // Prefer the analytic primitive (smooth integrand); fall back to an
    // anchored cumulative quadrature of h.
    std::shared_ptr<CumulativeIntegral> table;
    RealFn H_of;
    if (f.primitive) {
        RealFn P = f.primitive;
        H_of = [P](double t) { return t > 0.0 ? P(t) : 0.0; };
    } else {
        table = std::make_shared<CumulativeIntegral>(f.h, cap * 1.01, abs_tol * 1e-2);
        H_of = [table](double t) { return table->value(t); };
    }
    if (!(H_of(1.0) > 0.0))
        throw DomainError("keller_osserman_check: H(t) vanishes on [0,1]; h must be positive on (0,∞)");

    RealFn integrand = [H_of, p](double t) { return std::pow(H_of(t), -1.0 / p); };

    PowerTail tail = fit_power_tail(integrand, cap);
    double bound_exponent = tail.q;
    if (tail.fit_rms > kFitRmsThreshold) {
        // A poor linear fit in log-log space is either oscillation (reject)
        // or accelerating decay (exponential families); the latter shows a
        // clearly steeper slope in the later half of the window, and its
        // early-window exponent is a valid conservative bound.
        PowerTail early = fit_power_tail(integrand, cap / std::sqrt(10.0));
        if (tail.q >= 1.5 * early.q && early.q > 1.0 + kExponentMargin) {
            bound_exponent = early.q;
        } else {
            throw NumericsError("keller_osserman_check: decay exponent fit is oscillating (rms " +
                                std::to_string(tail.fit_rms) + "); retry with a larger t_max");
        }
    }

    KellerOssermanVerdict verdict;
    verdict.tail_exponent = tail.q;
    verdict.boundary_case = std::abs(tail.q - 1.0) <= kExponentMargin;
    verdict.converges = tail.q > 1.0 + kExponentMargin;
    verdict.integral_estimate = integrate_split(integrand, 1.0, cap, abs_tol);
    verdict.tail_bound =
        verdict.converges ? integrand(cap) * cap / (bound_exponent - 1.0) : 0.0;
    return verdict;
}

PhiTransform::PhiTransform(const Nonlinearity& g, double p,
                           double t_max, double abs_tol, double w_min, double w_max)
    : label_(g.label) {
    if (!(p > 1.0)) throw DomainError("PhiTransform: p must exceed 1");
    double exponent = -1.0 / (p - 1.0);
    RealFn gh = g.h;
    RealFn integrand = [gh, exponent](double t) { return std::pow(gh(t), exponent); };
    // fast-growing g drives the integrand below the representable range long
    // before the nominal truncation point
    double cap = largest_representable_abscissa(integrand, t_max);
    if (cap < 100.0)
        throw DomainError("decay transform undefined for " + label_ +
                          ": integrand leaves the representable range below t = 100");
    try {
        transform_ = std::make_shared<TailIntegralTransform>(integrand, cap, abs_tol,
                                                             w_min, std::max(w_max, cap));
    } catch (const NumericsError& e) {
        throw DomainError("decay transform undefined for " + label_ + " with p = " +
                          std::to_string(p) + ": " + e.what());
    }
}

double PhiTransform::value(double w) const {
    if (!(w > 0.0)) throw DomainError("phi_transform: w must be positive");
    return transform_->value(w);
}

double PhiTransform::invert(double z) const { return transform_->invert(z); }

double phi_transform(const Nonlinearity& g, double p, double w) {
    return PhiTransform(g, p).value(w);
}

double phi_invert(const Nonlinearity& g, double p, double z) {
    return PhiTransform(g, p).invert(z);
}

ClassFDiagnostics class_f_validate(const Nonlinearity& f, double p, int sample_count) {
    if (sample_count < 16) throw DomainError("class_f_validate: need at least 16 samples");

    ClassFDiagnostics diag;
    auto record = [&diag](const std::string& name, bool pass, double witness, std::string note) {
        diag.checks.push_back({name, pass, witness, std::move(note)});
    };

    double h0 = f.h(0.0);
    record("value_at_zero", std::isfinite(h0) && std::abs(h0) <= 1e-12, 0.0,
           "h(0) = " + std::to_string(h0));

    std::vector<double> samples(static_cast<std::size_t>(sample_count));
    const double lo = std::log(1e-6), hi = std::log(1e6);
    for (int i = 0; i < sample_count; ++i)
        samples[static_cast<std::size_t>(i)] =
            std::exp(lo + (hi - lo) * static_cast<double>(i) / (sample_count - 1));

    bool positive = true;
    double pos_witness = 0.0;
    for (double t : samples) {
        double v = f.h(t);
        if (!(v > 0.0) || !std::isfinite(v)) {
            positive = false;
            pos_witness = t;
            break;
        }
    }
    record("positivity", positive, pos_witness,
           positive ? "" : "h(" + std::to_string(pos_witness) + ") = " +
                               std::to_string(f.h(pos_witness)));

    bool monotone = f.h_prime(0.0) >= -1e-10;
    double mono_witness = 0.0;
    if (monotone) {
        for (double t : samples) {
            if (f.h_prime(t) < -1e-10) {
                monotone = false;
                mono_witness = t;
                break;
            }
        }
    }
    record("monotonicity", monotone, mono_witness,
           monotone ? "" : "h'(" + std::to_string(mono_witness) + ") = " +
                               std::to_string(f.h_prime(mono_witness)));

    bool consistent = true;
    double cons_witness = 0.0;
    for (double t : samples) {
        if (t < 1e-2) continue; // finite differences are unreliable near the origin
        double fd = central_difference(f.h, t);
        double analytic = f.h_prime(t);
        double scale = std::max({std::abs(analytic), std::abs(fd), 1e-12});
        if (std::abs(fd - analytic) / scale > 1e-4) {
            consistent = false;
            cons_witness = t;
            break;
        }
    }
    record("derivative_consistency", consistent, cons_witness,
           consistent ? "" : "central difference disagrees with h' at t = " +
                                 std::to_string(cons_witness));

    diag.structurally_valid = true;
    for (const auto& c : diag.checks) diag.structurally_valid &= c.pass;

    if (diag.structurally_valid) {
        try {
            diag.keller_osserman = keller_osserman_check(f, p);
            record("keller_osserman", diag.keller_osserman->converges,
                   diag.keller_osserman->tail_exponent,
                   "fitted decay exponent " + std::to_string(diag.keller_osserman->tail_exponent));
        } catch (const Error& e) {
            record("keller_osserman", false, 0.0, e.what());
        }
    } else {
        record("keller_osserman", false, 0.0, "skipped: structural checks failed");
    }

    diag.admissible = diag.structurally_valid && diag.keller_osserman &&
                      diag.keller_osserman->converges;
    return diag;
}

} // namespace plaplab
