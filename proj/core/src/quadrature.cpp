#include "plaplab/quadrature.hpp"

#include "plaplab/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace plaplab {

namespace {

constexpr int kMaxDepth = 18;

struct BadAbscissa {
    double t;
};

// Wraps an integrand so that a non-finite value aborts the quadrature with
// the offending abscissa attached.
RealFn checked(const RealFn& f) {
    return [&f](double t) {
        double v = f(t);
        if (!std::isfinite(v)) throw BadAbscissa{t};
        return v;
    };
}

} // namespace

double integrate(const RealFn& f, double a, double b, double abs_tol) {
    if (!(b >= a)) throw DomainError("integrate: empty or reversed interval");
    if (a == b) return 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    double error = 0.0;
    // Termination inside boost is relative; derive it from the absolute goal
    // with a floor so smooth integrands do not over-subdivide.
    double rel = std::clamp(abs_tol * 1e-2, 1e-12, 1e-8);
    try {
        RealFn g = checked(f);
        // Relatively tiny intervals defeat the adaptive error estimator; a
        // midpoint rule is already accurate to O(rel_width^2) there.
        double scale = std::max(std::abs(a), std::abs(b));
        if (b - a <= 1e-8 * scale) return (b - a) * g(0.5 * (a + b));
        if (a > 0.0) {
            // Integrate in log coordinates: power-scale integrands become
            // mild exponentials, which keeps the error estimator honest on
            // intervals that are narrow in absolute terms.
            auto glog = [&g](double x) {
                double t = std::exp(x);
                return g(t) * t;
            };
            return GK::integrate(glog, std::log(a), std::log(b), kMaxDepth, rel, &error);
        }
        return GK::integrate(g, a, b, kMaxDepth, rel, &error);
    } catch (const BadAbscissa& bad) {
        throw NumericsError("integrand evaluated to a non-finite value at t = " +
                            std::to_string(bad.t));
    }
}

double largest_representable_abscissa(const RealFn& s, double t_max, double floor_value) {
    double t = 1.0;
    while (t < t_max) {
        double tn = std::min(t * 10.0, t_max);
        double v = s(tn);
        if (!std::isfinite(v) || !(std::abs(v) >= floor_value)) break;
        t = tn;
    }
    return t;
}

namespace {

// Single (non-adaptive) GK15 application in log coordinates. On intervals no
// wider than a quarter decade this is accurate to ~1e-19 relative for
// power-scale integrands, and, unlike the adaptive rule, the result is a
// smooth function of the endpoints — which keeps nested quadratures stable.
double gk15_fixed(const RealFn& f, double a, double b) {
    if (a == b) return 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    double scale = std::max(std::abs(a), std::abs(b));
    if (b - a <= 1e-8 * scale) return (b - a) * f(0.5 * (a + b));
    if (a > 0.0) {
        auto glog = [&f](double x) {
            double t = std::exp(x);
            return f(t) * t;
        };
        return GK::integrate(glog, std::log(a), std::log(b), 0);
    }
    return GK::integrate(f, a, b, 0);
}

constexpr double kAnchorStep = 1.7782794100389228; // 10^(1/4)

} // namespace

double integrate_split(const RealFn& f, double a, double b, double abs_tol) {
    if (!(b >= a)) throw DomainError("integrate_split: empty or reversed interval");
    if (a == b) return 0.0;
    if (a <= 0.0 || b / a < 10.0) return integrate(f, a, b, abs_tol);

    // Geometric breakpoints, half a decade each.
    std::vector<double> cuts{a};
    const double step = std::sqrt(10.0);
    for (double t = a * step; t < b / step; t *= step) cuts.push_back(t);
    cuts.push_back(b);

    double per_segment = abs_tol / static_cast<double>(cuts.size());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        total += integrate(f, cuts[k], cuts[k + 1], per_segment);
    return total;
}

CumulativeIntegral::CumulativeIntegral(RealFn f, double t_max, double abs_tol, double first_anchor)
    : f_(std::move(f)), t_max_(t_max), abs_tol_(abs_tol) {
    if (!(t_max > 0.0)) throw DomainError("CumulativeIntegral: t_max must be positive");
    anchors_.push_back(0.0);
    sums_.push_back(0.0);
    for (double t = std::min(first_anchor, t_max); t < t_max; t *= kAnchorStep) {
        anchors_.push_back(t);
        sums_.push_back(sums_.back() + integrate(f_, anchors_[anchors_.size() - 2], t, abs_tol_));
    }
    anchors_.push_back(t_max);
    sums_.push_back(sums_.back() +
                    integrate(f_, anchors_[anchors_.size() - 2], t_max, abs_tol_));
}

double CumulativeIntegral::value(double t) const {
    if (t < 0.0) throw DomainError("CumulativeIntegral: negative abscissa");
    if (t == 0.0) return 0.0;
    if (t > t_max_ * (1.0 + 1e-12))
        throw DomainError("CumulativeIntegral: abscissa beyond precomputed range");
    t = std::min(t, t_max_);
    auto it = std::upper_bound(anchors_.begin(), anchors_.end(), t);
    std::size_t k = static_cast<std::size_t>(it - anchors_.begin()) - 1;
    if (k == 0) return integrate(f_, 0.0, t, abs_tol_);
    return sums_[k] + gk15_fixed(f_, anchors_[k], t);
}

LogLogFit fit_log_log(const std::vector<double>& t, const std::vector<double>& s) {
    if (t.size() != s.size() || t.size() < 2)
        throw DomainError("fit_log_log: need at least two matching samples");
    const std::size_t n = t.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(t[i] > 0.0) || !(s[i] > 0.0))
            throw NumericsError("fit_log_log: nonpositive sample at index " + std::to_string(i));
        x[i] = std::log(t[i]);
        y[i] = std::log(s[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LogLogFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / static_cast<double>(n));
    return fit;
}

double PowerTail::value(double t) const { return coeff * std::pow(t, -q); }

double PowerTail::integral_beyond(double from) const {
    if (!decays()) throw NumericsError("power tail does not decay fast enough to integrate");
    if (from < T / 10.0)
        throw DomainError("power tail queried below its fitted range");
    return coeff * std::pow(from, 1.0 - q) / (q - 1.0);
}

double PowerTail::invert_integral(double z) const {
    if (!decays()) throw NumericsError("power tail does not decay fast enough to invert");
    if (!(z > 0.0)) throw DomainError("power tail inverse needs a positive value");
    return std::pow(z * (q - 1.0) / coeff, 1.0 / (1.0 - q));
}

PowerTail fit_power_tail(const RealFn& s, double T, int samples) {
    if (!(T > 0.0)) throw DomainError("fit_power_tail: T must be positive");
    if (samples < 4) throw DomainError("fit_power_tail: need at least 4 samples");
    std::vector<double> ts(static_cast<std::size_t>(samples));
    std::vector<double> vs(static_cast<std::size_t>(samples));
    const double lo = std::log(T / 10.0), hi = std::log(T);
    for (int i = 0; i < samples; ++i) {
        double t = std::exp(lo + (hi - lo) * static_cast<double>(i) / (samples - 1));
        double v = s(t);
        if (!std::isfinite(v))
            throw NumericsError("tail integrand non-finite at t = " + std::to_string(t));
        if (!(v > 0.0))
            throw NumericsError("tail integrand nonpositive at t = " + std::to_string(t));
        ts[static_cast<std::size_t>(i)] = t;
        vs[static_cast<std::size_t>(i)] = v;
    }
    LogLogFit fit = fit_log_log(ts, vs);
    PowerTail tail;
    tail.T = T;
    tail.q = -fit.slope;
    tail.fit_rms = fit.rms_residual;
    // Pin the model through the endpoint sample rather than the regression
    // intercept; keeps the finite part and the tail continuous at T.
    tail.coeff = vs.back() * std::pow(T, tail.q);
    return tail;
}

TailIntegralTransform::TailIntegralTransform(RealFn integrand, double T, double abs_tol,
                                             double w_min, double w_max)
    : s_(std::move(integrand)), T_(T), abs_tol_(abs_tol), w_min_(w_min), w_max_(w_max) {
    if (!(w_min > 0.0) || !(w_min < T) || !(T <= w_max))
        throw DomainError("TailIntegralTransform: need 0 < w_min < T <= w_max");
    tail_ = fit_power_tail(s_, T_);
    if (!tail_.decays())
        throw NumericsError("tail integral diverges: fitted decay exponent " +
                            std::to_string(tail_.q) + " <= 1");

    // Anchor partial sums downward from T so evaluations near T stay exact
    // and no cancellation occurs.
    anchors_.push_back(T_);
    sums_.push_back(0.0);
    for (double t = T_ / kAnchorStep; t > w_min_ * kAnchorStep; t /= kAnchorStep) {
        anchors_.push_back(t);
        sums_.push_back(sums_.back() + integrate(s_, t, anchors_[anchors_.size() - 2], abs_tol_));
    }
    anchors_.push_back(w_min_);
    sums_.push_back(sums_.back() +
                    integrate(s_, w_min_, anchors_[anchors_.size() - 2], abs_tol_));

    value_at_w_min_ = sums_.back() + tail_.integral_beyond(T_);
    value_at_w_max_ = tail_.integral_beyond(w_max_);
}

double TailIntegralTransform::value(double w) const {
    if (!(w > 0.0)) throw DomainError("transform argument must be positive");
    if (w < w_min_) throw DomainError("transform argument below configured minimum");
    if (w >= T_) return tail_.integral_beyond(w);
    // Largest anchor <= w; anchors_ are descending.
    auto it = std::lower_bound(anchors_.begin(), anchors_.end(), w, std::greater<double>());
    std::size_t k = static_cast<std::size_t>(it - anchors_.begin());
    // anchors_[k] <= w < anchors_[k-1]; sums_[k] = ∫_{anchors_[k]}^{T}.
    double from_anchor = sums_[k] - gk15_fixed(s_, anchors_[k], w);
    return from_anchor + tail_.integral_beyond(T_);
}

double TailIntegralTransform::invert(double z, double value_tol, double rel_width) const {
    if (!(z > 0.0)) throw DomainError("transform inverse needs a positive value");
    if (z > value_at_w_min_ || z < value_at_w_max_)
        throw DomainError("value " + std::to_string(z) + " outside attainable transform range [" +
                          std::to_string(value_at_w_max_) + ", " + std::to_string(value_at_w_min_) +
                          "] on [w_min, w_max]");

    // Bracket by doubling/halving from w = 1 (transform is decreasing).
    double lo = std::clamp(1.0, w_min_, w_max_);
    double hi = lo;
    if (value(lo) > z) {
        while (value(hi) > z) {
            lo = hi;
            hi = std::min(hi * 2.0, w_max_);
            if (hi == lo) break;
        }
    } else {
        while (value(lo) < z) {
            hi = lo;
            lo = std::max(lo / 2.0, w_min_);
            if (lo == hi) break;
        }
    }

    // Bisection to relative width.
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200 && (hi - lo) > rel_width * mid; ++iter) {
        mid = 0.5 * (lo + hi);
        if (value(mid) > z)
            lo = mid;
        else
            hi = mid;
    }
    mid = 0.5 * (lo + hi);
    double achieved = std::abs(value(mid) - z);
    if (achieved > value_tol * std::max(1.0, std::abs(z)) && achieved > value_tol)
        throw NumericsError("transform inverse did not reach requested accuracy at w = " +
                            std::to_string(mid));
    return mid;
}

} // namespace plaplab
