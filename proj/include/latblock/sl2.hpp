// Closed-form exponential, logarithm and one-parameter subgroups of SL(2,R),
// together with the modified-time reparameterisation lambda = sinh(t w)/sinh(w).

#pragma once

#include "latblock/error.hpp"
#include "latblock/mat2.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace latblock {

enum class TraceClass { hyperbolic, parabolic, elliptic, boundary, nonpositive };
enum class Branch { hyperbolic, parabolic, elliptic };

inline const char* to_string(TraceClass c) {
    switch (c) {
        case TraceClass::hyperbolic: return "hyperbolic";
        case TraceClass::parabolic: return "parabolic";
        case TraceClass::elliptic: return "elliptic";
        case TraceClass::boundary: return "boundary";
        case TraceClass::nonpositive: return "nonpositive";
    }
    return "?";
}

inline const char* to_string(Branch b) {
    switch (b) {
        case Branch::hyperbolic: return "hyperbolic";
        case Branch::parabolic: return "parabolic";
        case Branch::elliptic: return "elliptic";
    }
    return "?";
}

inline TraceClass classify_trace(double tr, double eps = kDefaultEpsilon) {
    if (std::abs(tr - 2.0) <= eps) return TraceClass::parabolic;
    if (std::abs(tr + 2.0) <= eps) return TraceClass::boundary;
    if (tr > 2.0) return TraceClass::hyperbolic;
    if (tr > -2.0) return TraceClass::elliptic;
    return TraceClass::nonpositive;
}

inline TraceClass classify_trace(const Rational& tr) {
    if (tr == Rational(2)) return TraceClass::parabolic;
    if (tr == Rational(-2)) return TraceClass::boundary;
    if (tr > Rational(2)) return TraceClass::hyperbolic;
    if (tr > Rational(-2)) return TraceClass::elliptic;
    return TraceClass::nonpositive;
}

/// Logarithm data for the principal branch: exp(X) = g.
struct LogDirection {
    Mat2d X;
    double omega = 0.0;
    Branch branch = Branch::parabolic;
};

namespace detail {

/// Below this omega the ratios sinh(t w)/sinh(w) and w/sinh(w) switch to
/// their Taylor expansions.
inline constexpr double kSeriesOmega = 1e-4;

/// sum_{k<5} u^k/(2k+1)!  ~ sinh(sqrt u)/sqrt u (u may be negative).
inline double sinhc_series(double u) {
    return 1.0 + u / 6.0 * (1.0 + u / 20.0 * (1.0 + u / 42.0 * (1.0 + u / 72.0)));
}

/// sum_{k<5} u^k/(2k)!  ~ cosh(sqrt u).
inline double cosh_series(double u) {
    return 1.0 + u / 2.0 * (1.0 + u / 12.0 * (1.0 + u / 30.0 * (1.0 + u / 56.0)));
}

/// exp(X) = C(delta) I + S(delta) X for traceless X with X^2 = delta I.
inline void exp_coefficients(double delta, double& c, double& s) {
    const double omega = std::sqrt(std::abs(delta));
    if (omega < kSeriesOmega) {
        c = cosh_series(delta);
        s = sinhc_series(delta);
    } else if (delta > 0) {
        c = std::cosh(omega);
        s = std::sinh(omega) / omega;
    } else {
        c = std::cos(omega);
        s = std::sin(omega) / omega;
    }
}

inline double traceless_delta(const Mat2d& X) {
    const double a = 0.5 * (X.x - X.w);
    return a * a + X.y * X.z;
}

}  // namespace detail

/// omega with cosh(omega) = tr/2, accurate near tr = 2. Traces below 2 give 0.
inline double omega_from_trace(double tr) {
    const double u = 0.5 * tr - 1.0;
    if (u <= 0.0) return 0.0;
    return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

inline Branch branch_of(const Mat2d& X) {
    const double delta = detail::traceless_delta(X);
    if (delta > 0) return Branch::hyperbolic;
    if (delta < 0) return Branch::elliptic;
    return Branch::parabolic;
}

inline double omega_of(const Mat2d& X) { return std::sqrt(std::abs(detail::traceless_delta(X))); }

inline Mat2d exp_sl2(const Mat2d& X, double eps = kDefaultEpsilon) {
    const double scale = std::max(1.0, frobenius(X));
    if (std::abs(X.trace()) > eps * scale)
        throw std::invalid_argument("exp_sl2 expects a traceless matrix, trace = " + std::to_string(X.trace()));
    double c = 0, s = 0;
    detail::exp_coefficients(detail::traceless_delta(X), c, s);
    return Mat2d{c + s * X.x, s * X.y, s * X.z, c + s * X.w};
}

/// Principal logarithm for trace >= 2. Traces within eps below 2 are treated
/// as parabolic (X = g - I).
inline LogDirection log_sl2(const Mat2d& g, double eps = kDefaultEpsilon) {
    const double tr = g.trace();
    if (tr < 2.0 - eps) {
        if (tr > -2.0)
            throw unsupported_branch("log_sl2: elliptic element (trace " + std::to_string(tr) +
                                     " < 2) has no unique logarithm");
        throw unsupported_branch("log_sl2: trace " + std::to_string(tr) +
                                 " <= -2 is outside the principal branch; negate the element first");
    }
    const Mat2d I = Mat2d::identity();
    const double omega = omega_from_trace(tr);
    if (omega == 0.0) return {g - I, 0.0, Branch::parabolic};
    const double factor =
        omega < detail::kSeriesOmega ? 1.0 / detail::sinhc_series(omega * omega) : omega / std::sinh(omega);
    const double half = 0.5 * tr;
    return {factor * Mat2d{g.x - half, g.y, g.z, g.w - half}, omega, Branch::hyperbolic};
}

/// lambda = sinh(t w)/sinh(w); the w = 0 limit is lambda = t.
inline double modified_time(double t, double omega) {
    omega = std::abs(omega);
    if (omega == 0.0) return t;
    if (omega < detail::kSeriesOmega)
        return t * detail::sinhc_series(t * t * omega * omega) / detail::sinhc_series(omega * omega);
    if (omega > 20.0)
        return std::exp((t - 1.0) * omega) * (-std::expm1(-2.0 * t * omega)) / (-std::expm1(-2.0 * omega));
    return std::sinh(t * omega) / std::sinh(omega);
}

/// Inverse of modified_time in t.
inline double time_from_lambda(double lambda, double omega) {
    omega = std::abs(omega);
    if (omega == 0.0 || lambda == 0.0) return lambda;
    if (omega <= 700.0) return std::asinh(lambda * std::sinh(omega)) / omega;
    // sinh(w) overflows; work with logarithms.
    const double log_y = std::log(lambda) + omega + std::log1p(-std::exp(-2.0 * omega)) - std::log(2.0);
    if (log_y > 20.0) return (log_y + std::log(2.0)) / omega;
    return std::asinh(std::exp(log_y)) / omega;
}

/// a(lambda) = (1 + (tr^2/4 - 1) lambda^2)^(1/2).
inline double a_of_lambda(double lambda, double trace, double eps = kDefaultEpsilon) {
    if (trace < 2.0 - eps) throw unsupported_branch("a_of_lambda requires trace >= 2");
    const double h = 0.5 * trace;
    const double k = std::max(0.0, (h - 1.0) * (h + 1.0));
    return std::sqrt(1.0 + k * lambda * lambda);
}

struct ModifiedTime {
    double lambda = 0.0;
    double a_lambda = 1.0;
    double trace = 2.0;

    /// a^2 - (tr^2/4 - 1) lambda^2 - 1, zero up to rounding.
    double invariant_residual() const {
        const double h = 0.5 * trace;
        return a_lambda * a_lambda - (h - 1.0) * (h + 1.0) * lambda * lambda - 1.0;
    }
};

inline ModifiedTime make_modified_time(double t, double trace, double eps = kDefaultEpsilon) {
    if (trace < 2.0 - eps) throw unsupported_branch("modified time requires trace >= 2");
    ModifiedTime m;
    m.trace = trace;
    m.lambda = modified_time(t, omega_from_trace(trace));
    m.a_lambda = a_of_lambda(m.lambda, trace, eps);
    return m;
}

/// g^t = exp(t log g) for trace(g) >= 2.
inline Mat2d power_t(const Mat2d& g, double t, double eps = kDefaultEpsilon) {
    const double tr = g.trace();
    if (tr < 2.0 - eps) throw unsupported_branch("power_t requires trace >= 2, got " + std::to_string(tr));
    const double omega = omega_from_trace(tr);
    const double lambda = modified_time(t, omega);
    const double c = omega == 0.0 ? 1.0 - t : std::cosh(t * omega) - lambda * 0.5 * tr;
    return Mat2d{c + lambda * g.x, lambda * g.y, lambda * g.z, c + lambda * g.w};
}

/// (g gamma)^t through the modified-time form [a(lambda) - tr/2 lambda] I + lambda g gamma.
inline Mat2d curve_point_from_target(const Mat2d& target, double t, double eps = kDefaultEpsilon) {
    const double tr = target.trace();
    if (tr < 2.0 - eps)
        throw unsupported_branch("curve_point: trace(g gamma) = " + std::to_string(tr) + " < 2");
    const ModifiedTime m = make_modified_time(t, tr, eps);
    const double c = m.a_lambda - 0.5 * tr * m.lambda;
    return Mat2d{c + m.lambda * target.x, m.lambda * target.y, m.lambda * target.z, c + m.lambda * target.w};
}

inline Mat2d curve_point(const Mat2d& g, const Mat2d& gamma, double t, double eps = kDefaultEpsilon) {
    return curve_point_from_target(g * gamma, t, eps);
}

/// Exact product first, then the floating evaluation.
inline Mat2d curve_point(const Mat2q& g, const Mat2z& gamma, double t, double eps = kDefaultEpsilon) {
    return curve_point_from_target(to_double(g * to_rational(gamma)), t, eps);
}

/// Replaces g by -g when trace(g) <= -2 (-I lies in the integer lattice).
inline Mat2d principal_target(const Mat2d& g, double eps = kDefaultEpsilon) {
    return g.trace() <= -2.0 + eps ? -g : g;
}

/// One-parameter connecting curve c(t) = target^t, 0 <= t <= 1.
struct Curve {
    Mat2d target;
    LogDirection direction;

    Mat2d point(double t) const { return curve_point_from_target(target, t); }
};

inline Curve make_curve(const Mat2d& target, double eps = kDefaultEpsilon) {
    Curve c;
    c.target = principal_target(target, eps);
    c.direction = log_sl2(c.target, eps);
    return c;
}

}  // namespace latblock
