// Exact SL(2,Z)-side algebra: membership, coset reduction, canonical
// representatives in SL(2,R)/SL(2,Z), and integer linear dependence of coset
// elements.

#pragma once

#include "latblock/mat2.hpp"
#include "latblock/numeric.hpp"
#include "latblock/polynomial.hpp"
#include "latblock/sl2.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace latblock {

using Mat2ll = Mat2<long long>;

// ---------------------------------------------------------------------------
// Membership

inline bool is_in_gamma(const Mat2q& m) { return is_integer_matrix(m) && m.det() == Rational(1); }

/// Tolerance mode: every entry within eps of an integer, and the rounded
/// matrix has determinant exactly one.
inline bool is_in_gamma(const Mat2d& m, double eps) {
    const double entries[4] = {m.x, m.y, m.z, m.w};
    long long r[4];
    for (int i = 0; i < 4; ++i) {
        if (!std::isfinite(entries[i]) || std::abs(entries[i]) > 1e15) return false;
        const double n = std::nearbyint(entries[i]);
        if (std::abs(entries[i] - n) > eps) return false;
        r[i] = static_cast<long long>(n);
    }
    const BigInt det = BigInt(std::to_string(r[0])) * BigInt(std::to_string(r[3])) -
                       BigInt(std::to_string(r[1])) * BigInt(std::to_string(r[2]));
    return det == 1;
}

inline bool same_coset(const Mat2q& p, const Mat2q& q) {
    if (p.det().is_zero() || q.det().is_zero()) throw std::domain_error("same_coset: singular input");
    return is_in_gamma(p.inverse() * q);
}

inline bool same_coset(const Mat2d& p, const Mat2d& q, double eps) {
    const double dp = p.det(), dq = q.det();
    if (std::abs(dp) < 1e-300 || std::abs(dq) < 1e-300) throw std::domain_error("same_coset: singular input");
    return is_in_gamma(p.inverse() * q, eps);
}

/// An element of SL(2,Z).
class GammaElement {
public:
    explicit GammaElement(Mat2z m) : m_(std::move(m)) {
        if (m_.det() != 1) throw std::invalid_argument("GammaElement requires determinant 1: " + format_mat(m_));
    }
    static GammaElement identity() { return GammaElement(Mat2z::identity(BigInt(0))); }

    const Mat2z& matrix() const { return m_; }
    Mat2q rational() const { return to_rational(m_); }
    GammaElement operator*(const GammaElement& o) const { return GammaElement(m_ * o.m_); }
    GammaElement inverse() const { return GammaElement(m_.adjugate()); }
    friend bool operator==(const GammaElement& a, const GammaElement& b) { return a.m_ == b.m_; }

private:
    Mat2z m_;
};

// ---------------------------------------------------------------------------
// Coset reduction to lower-triangular form

/// Representative [[x, 0], [z, 1/x]] with x > 0 of a rational coset.
struct CosetRep {
    Mat2q g;
    Mat2z gamma;  // input * gamma == g
    bool normalized = false;
};

/// Reduces g1 (rational, det 1) to g1*gamma = [[x,0],[z,1/x]] with x > 0.
/// gamma = [[p,q],[r,s]] with s/q = -x1/y1 in lowest terms, q > 0; among the
/// solutions of ps - rq = 1 the one with least |p| is used, ties to p >= 0.
inline CosetRep coset_reduce(const Mat2q& g1) {
    if (g1.det() != Rational(1)) throw std::invalid_argument("coset_reduce requires determinant 1");
    Mat2z gamma = Mat2z::identity(BigInt(0));
    if (!g1.y.is_zero()) {
        const Rational ratio = -g1.x / g1.y;
        const BigInt s = ratio.num();
        const BigInt q = ratio.den();
        BigInt u, v;
        ext_gcd(s, q, u, v);  // s*u + q*v = 1
        BigInt p = u;
        BigInt r = -v;
        // p is determined modulo q; r follows from p s - r q = 1.
        BigInt pm;
        mpz_fdiv_r(pm.get_mpz_t(), p.get_mpz_t(), q.get_mpz_t());  // 0 <= pm < q
        if (2 * pm > q) pm -= q;                                    // (-q/2, q/2]
        const BigInt k = (pm - p) / q;
        p = pm;
        r += k * s;
        gamma = Mat2z{p, q, r, s};
        if (gamma.det() != 1) throw consistency_error("coset_reduce: extended gcd produced det != 1");
    }
    Mat2q g = g1 * to_rational(gamma);
    if (g.x.sign() < 0) {
        gamma = -gamma;
        g = -g;
    }
    if (!g.y.is_zero() || g.x.sign() <= 0 || !is_in_gamma(g1.inverse() * g))
        throw consistency_error("coset_reduce: result failed verification");
    return {g, gamma, true};
}

// ---------------------------------------------------------------------------
// Canonical representatives of SL(2,R)/SL(2,Z)

namespace detail {

struct ReducedBasis {
    double u[2], v[2];  // columns of h*T
    Mat2ll T;
};

inline double dot2(const double* a, const double* b) { return a[0] * b[0] + a[1] * b[1]; }

/// Lagrange-Gauss reduction of the lattice spanned by the columns of h,
/// tracking the unimodular (det 1) change of basis.
inline ReducedBasis gauss_reduce_columns(const Mat2d& h) {
    ReducedBasis b{{h.x, h.z}, {h.y, h.w}, Mat2ll{1, 0, 0, 1}};
    for (int iter = 0; iter < 512; ++iter) {
        if (dot2(b.v, b.v) < dot2(b.u, b.u)) {
            // (u, v) -> (v, -u) keeps the orientation.
            const double nu[2] = {b.v[0], b.v[1]};
            b.v[0] = -b.u[0];
            b.v[1] = -b.u[1];
            b.u[0] = nu[0];
            b.u[1] = nu[1];
            b.T = Mat2ll{b.T.y, -b.T.x, b.T.w, -b.T.z};
        }
        const double mu = std::nearbyint(dot2(b.u, b.v) / dot2(b.u, b.u));
        if (mu == 0.0) break;
        if (std::abs(mu) > 9e15) throw std::domain_error("canonical_rep: reduction diverged");
        const long long m = static_cast<long long>(mu);
        b.v[0] -= mu * b.u[0];
        b.v[1] -= mu * b.u[1];
        b.T.y -= m * b.T.x;
        b.T.w -= m * b.T.z;
    }
    return b;
}

/// All det-one integer matrices with entries in [-2, 2].
inline const std::vector<Mat2ll>& small_window() {
    static const std::vector<Mat2ll> window = [] {
        std::vector<Mat2ll> out;
        for (long long a = -2; a <= 2; ++a)
            for (long long b = -2; b <= 2; ++b)
                for (long long c = -2; c <= 2; ++c)
                    for (long long d = -2; d <= 2; ++d)
                        if (a * d - b * c == 1) out.push_back({a, b, c, d});
        return out;
    }();
    return window;
}

inline long long ext_gcd_ll(long long a, long long b, long long& s, long long& t) {
    long long old_r = a, r = b, old_s = 1, s1 = 0, old_t = 0, t1 = 1;
    while (r != 0) {
        const long long q = old_r / r;
        long long tmp = old_r - q * r;
        old_r = r;
        r = tmp;
        tmp = old_s - q * s1;
        old_s = s1;
        s1 = tmp;
        tmp = old_t - q * t1;
        old_t = t1;
        t1 = tmp;
    }
    if (old_r < 0) {
        old_r = -old_r;
        old_s = -old_s;
        old_t = -old_t;
    }
    s = old_s;
    t = old_t;
    return old_r;
}

/// Lexicographic order on entries with a small tolerance; used to break
/// exact ties between minimisers.
inline bool lex_less(const Mat2d& a, const Mat2d& b, double tol = 1e-12) {
    const double ea[4] = {a.x, a.y, a.z, a.w}, eb[4] = {b.x, b.y, b.z, b.w};
    for (int i = 0; i < 4; ++i) {
        if (ea[i] < eb[i] - tol) return true;
        if (ea[i] > eb[i] + tol) return false;
    }
    return false;
}

/// a*p + b*q with both products and their sum carried error-free, rounded once.
inline double dot2_exact(double a, long long p, double b, long long q) {
    const double x = a * double(p), ex = std::fma(a, double(p), -x);
    const double y = b * double(q), ey = std::fma(b, double(q), -y);
    const double s = x + y, bb = s - x, es = (x - (s - bb)) + (y - bb);
    return s + (es + ex + ey);
}

/// g * m with the integer matrix applied through compensated dot products.
inline Mat2d mul_accurate(const Mat2d& g, const Mat2ll& m) {
    return {dot2_exact(g.x, m.x, g.y, m.z), dot2_exact(g.x, m.y, g.y, m.w), dot2_exact(g.z, m.x, g.w, m.z),
            dot2_exact(g.z, m.y, g.w, m.w)};
}

inline void check_conditioning(const Mat2d& g) {
    const double det = g.det();
    const double f2 = g.x * g.x + g.y * g.y + g.z * g.z + g.w * g.w;
    if (!std::isfinite(f2)) throw std::domain_error("canonical_rep: non-finite input");
    if (std::abs(det - 1.0) > 1e-6 * std::max(1.0, f2))
        throw std::domain_error("canonical_rep: determinant " + std::to_string(det) + " is not 1");
    const double disc = std::max(0.0, f2 * f2 - 4.0 * det * det);
    const double cond = 0.5 * (f2 + std::sqrt(disc)) / std::abs(det);
    if (cond > 1e12) throw std::domain_error("canonical_rep: condition number " + std::to_string(cond) + " > 1e12");
}

}  // namespace detail

struct CanonicalForm {
    Mat2d rep;    // g * gamma
    Mat2ll gamma;
    double distance_to_identity = 0.0;  // Frobenius norm of rep - I
};

/// Representative of g*SL(2,Z) closest to the identity in Frobenius norm.
///
/// The columns of g are Gauss-reduced; a +-2 window of unimodular changes of
/// the reduced basis gives an upper bound R, and then every primitive first
/// column within R of e1 is enumerated with its best completing second column.
/// The result is the exact minimiser (ties broken lexicographically on the
/// entries), hence idempotent and independent of the representative.
inline CanonicalForm canonical_rep(const Mat2d& g) {
    detail::check_conditioning(g);
    const auto basis = detail::gauss_reduce_columns(g);
    const double* u = basis.u;
    const double* v = basis.v;

    auto combine = [&](double a, double b) {
        return std::array<double, 2>{a * u[0] + b * v[0], a * u[1] + b * v[1]};
    };

    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : detail::small_window()) {
        const auto c1 = combine(double(e.x), double(e.z));
        const auto c2 = combine(double(e.y), double(e.w));
        const double d = (c1[0] - 1) * (c1[0] - 1) + c1[1] * c1[1] + c2[0] * c2[0] + (c2[1] - 1) * (c2[1] - 1);
        best = std::min(best, d);
    }
    const double radius2 = best * (1.0 + 1e-9) + 1e-12;

    // Gram-Schmidt data for enumerating lattice points near e1.
    const double uu = detail::dot2(u, u);
    const double mu = detail::dot2(u, v) / uu;
    const double vs[2] = {v[0] - mu * u[0], v[1] - mu * u[1]};
    const double vv = detail::dot2(vs, vs);
    const double e1[2] = {1.0, 0.0};
    const double tau_u = detail::dot2(e1, u) / uu;
    const double tau_v = detail::dot2(e1, vs) / vv;

    CanonicalForm out;
    out.distance_to_identity = std::numeric_limits<double>::infinity();
    double best_d2 = std::numeric_limits<double>::infinity();
    Mat2d best_rep{};
    long long best_coef[4] = {1, 0, 0, 1};

    const double beta_span = std::sqrt(radius2 / vv);
    const long long beta_lo = static_cast<long long>(std::ceil(tau_v - beta_span));
    const long long beta_hi = static_cast<long long>(std::floor(tau_v + beta_span));
    for (long long beta = beta_lo; beta <= beta_hi; ++beta) {
        const double db = (double(beta) - tau_v);
        const double rem = radius2 - db * db * vv;
        if (rem < 0) continue;
        const double center = tau_u - double(beta) * mu;
        const double alpha_span = std::sqrt(rem / uu);
        const long long alpha_lo = static_cast<long long>(std::ceil(center - alpha_span));
        const long long alpha_hi = static_cast<long long>(std::floor(center + alpha_span));
        for (long long alpha = alpha_lo; alpha <= alpha_hi; ++alpha) {
            long long s = 0, t = 0;
            if (detail::ext_gcd_ll(alpha, beta, s, t) != 1) continue;
            const auto c1 = combine(double(alpha), double(beta));
            const double d1 = (c1[0] - 1) * (c1[0] - 1) + c1[1] * c1[1];
            if (d1 > radius2) continue;
            // alpha*s + beta*t = 1, so (alpha2, beta2) = (-t, s) completes the basis.
            const long long alpha2 = -t, beta2 = s;
            const auto v0 = combine(double(alpha2), double(beta2));
            const double ww = c1[0] * c1[0] + c1[1] * c1[1];
            const double kstar = -((v0[0]) * c1[0] + (v0[1] - 1) * c1[1]) / ww;
            const long long k0 = static_cast<long long>(std::floor(kstar));
            for (long long k = k0; k <= k0 + 1; ++k) {
                const double c2x = v0[0] + double(k) * c1[0];
                const double c2y = v0[1] + double(k) * c1[1];
                const double d2 = d1 + c2x * c2x + (c2y - 1) * (c2y - 1);
                const Mat2d rep{c1[0], c2x, c1[1], c2y};
                const bool better = !std::isfinite(best_d2) || d2 < best_d2 - 1e-12 * std::max(1.0, best_d2) ||
                                    (std::abs(d2 - best_d2) <= 1e-12 * std::max(1.0, best_d2) &&
                                     detail::lex_less(rep, best_rep));
                if (better) {
                    best_d2 = d2;
                    best_rep = rep;
                    best_coef[0] = alpha;
                    best_coef[1] = alpha2 + k * alpha;
                    best_coef[2] = beta;
                    best_coef[3] = beta2 + k * beta;
                }
            }
        }
    }
    if (!std::isfinite(best_d2)) throw consistency_error("canonical_rep: enumeration found no candidate");
    const Mat2ll E{best_coef[0], best_coef[1], best_coef[2], best_coef[3]};
    out.gamma = basis.T * E;
    out.rep = detail::mul_accurate(g, out.gamma);
    const Mat2d diff = out.rep - Mat2d::identity();
    out.distance_to_identity = frobenius(diff);
    return out;
}

/// Exact input: gamma is found in floating point, then g*gamma is formed
/// exactly and rounded once, so representatives of one coset agree to the
/// last bit instead of carrying |gamma| ulps of input rounding.
inline CanonicalForm canonical_rep(const Mat2q& g) {
    if (g.det() != Rational(1)) throw std::domain_error("canonical_rep: determinant " + g.det().str() + " is not 1");
    CanonicalForm f = canonical_rep(to_double(g));
    const Mat2q gamma{Rational(f.gamma.x), Rational(f.gamma.y), Rational(f.gamma.z), Rational(f.gamma.w)};
    f.rep = to_double(g * gamma);
    f.distance_to_identity = frobenius(f.rep - Mat2d::identity());
    return f;
}

/// min over gamma of ||h gamma - I||_F.
inline double coset_gap(const Mat2d& h) { return canonical_rep(h).distance_to_identity; }

/// Symmetrised distance between the cosets pSL(2,Z) and qSL(2,Z) as seen from
/// the representative p: min(gap(p^-1 q), gap(q^-1 p)). Zero exactly when the
/// cosets coincide.
inline double coset_distance(const Mat2d& p, const Mat2d& q) {
    return std::min(coset_gap(p.inverse() * q), coset_gap(q.inverse() * p));
}

// ---------------------------------------------------------------------------
// Integer linear dependence of coset elements

inline std::array<Rational, 4> flatten(const Mat2q& m) { return {m.x, m.y, m.z, m.w}; }

/// 4 x n matrix whose columns are the flattened elements.
inline Matrix<Rational> flatten_columns(std::span<const Mat2q> elems) {
    Matrix<Rational> A(4, elems.size(), Rational(0));
    for (std::size_t j = 0; j < elems.size(); ++j) {
        const auto f = flatten(elems[j]);
        for (std::size_t i = 0; i < 4; ++i) A(i, j) = f[i];
    }
    return A;
}

struct DependenceWitness {
    std::vector<BigInt> coefficients;
    std::vector<Mat2q> elements;

    Mat2q combination() const {
        Mat2q acc = Mat2q::identity(Rational(0)) - Mat2q::identity(Rational(0));
        for (std::size_t i = 0; i < elements.size(); ++i) acc += Rational(coefficients[i]) * elements[i];
        return acc;
    }
    bool verifies() const {
        bool nonzero = false;
        for (const auto& c : coefficients) nonzero |= (c != 0);
        return nonzero && combination() == Mat2q{0, 0, 0, 0};
    }
};

/// Five 2x2 matrices always satisfy a non-trivial integer relation.
inline DependenceWitness five_dependence(std::span<const Mat2q> elems) {
    if (elems.size() != 5) throw std::invalid_argument("five_dependence expects exactly five elements");
    const auto kernel = rational_nullspace(flatten_columns(elems));
    if (kernel.empty()) throw consistency_error("five_dependence: empty kernel for a 4x5 system");
    DependenceWitness w{kernel.front(), {elems.begin(), elems.end()}};
    if (!w.verifies()) throw consistency_error("five_dependence: witness failed re-multiplication");
    return w;
}

/// Fixed multiplier m0 for the Q-span of independent coset elements: every
/// span element gamma has integers m with sum m_i basis_i = m0 gamma.
class SpanMultiplier {
public:
    explicit SpanMultiplier(std::vector<Mat2q> basis) : basis_(std::move(basis)) {
        const std::size_t n = basis_.size();
        if (n == 0 || n > 4) throw std::invalid_argument("span_multiplier expects 1..4 basis elements");
        A_ = flatten_columns(basis_);
        if (rational_rank(A_) != n) throw std::invalid_argument("span_multiplier: basis is linearly dependent");
        // First invertible n x n row-submatrix in lexicographic row order.
        std::vector<std::size_t> rows;
        if (!pick_rows(0, rows)) throw consistency_error("span_multiplier: no invertible row-submatrix");
        rows_ = rows;
        Matrix<Rational> sub(n, n, Rational(0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) sub(i, j) = A_(rows_[i], j);
        sub_det_ = determinant(sub);
        sub_inverse_ = inverse(sub);
        m0_ = 1;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m0_ = lcm(m0_, sub_inverse_(i, j).den());
    }

    const BigInt& m0() const { return m0_; }
    const std::vector<std::size_t>& rows() const { return rows_; }
    const Rational& submatrix_det() const { return sub_det_; }
    const std::vector<Mat2q>& basis() const { return basis_; }

    /// Integer coefficients m with sum m_i basis_i = m0 * gamma. Throws if
    /// gamma is outside the span.
    std::vector<BigInt> solve(const Mat2q& gamma) const {
        const std::size_t n = basis_.size();
        const auto f = flatten(gamma);
        std::vector<BigInt> m(n);
        for (std::size_t i = 0; i < n; ++i) {
            Rational acc(0);
            for (std::size_t k = 0; k < n; ++k) acc += sub_inverse_(i, k) * f[rows_[k]];
            acc *= Rational(m0_);
            if (!acc.is_integer()) throw consistency_error("span_multiplier: non-integer solution");
            m[i] = acc.num();
        }
        Mat2q lhs{0, 0, 0, 0};
        for (std::size_t i = 0; i < n; ++i) lhs += Rational(m[i]) * basis_[i];
        if (lhs != Rational(m0_) * gamma) throw std::invalid_argument("span_multiplier: element not in the span");
        return m;
    }

private:
    bool pick_rows(std::size_t from, std::vector<std::size_t>& rows) const {
        const std::size_t n = basis_.size();
        if (rows.size() == n) {
            Matrix<Rational> sub(n, n, Rational(0));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) sub(i, j) = A_(rows[i], j);
            return !determinant(sub).is_zero();
        }
        for (std::size_t r = from; r < 4; ++r) {
            rows.push_back(r);
            if (pick_rows(r + 1, rows)) return true;
            rows.pop_back();
        }
        return false;
    }

    std::vector<Mat2q> basis_;
    Matrix<Rational> A_;
    std::vector<std::size_t> rows_;
    Matrix<Rational> sub_inverse_;
    Rational sub_det_;
    BigInt m0_;
};

inline SpanMultiplier span_multiplier(std::vector<Mat2q> basis) { return SpanMultiplier(std::move(basis)); }

// ---------------------------------------------------------------------------
// From a dependence among curve points to relations among modified times

struct TimeProjectionReport {
    double lambda_residual = 0.0;  // sum m_i lambda_i
    double a_residual = 0.0;       // sum m_i a(lambda_i)
    double matrix_residual = 0.0;  // max-entry of sum m_i (g gamma_i)^{t_i}
    bool pass = false;
};

/// Given a relation sum m_i (g gamma_i)^{t_i} = 0 among curve points whose
/// targets share the upper-right entry, checks the projected relations
/// sum m_i lambda_i = 0 and sum m_i a(lambda_i) = 0.
inline TimeProjectionReport dependence_projects_to_times(std::span<const Mat2q> targets,
                                                         std::span<const double> lambdas,
                                                         std::span<const BigInt> coefficients,
                                                         double tol = kDefaultEpsilon) {
    if (targets.size() != lambdas.size() || targets.size() != coefficients.size())
        throw std::invalid_argument("dependence_projects_to_times: length mismatch");
    for (const auto& t : targets)
        if (t.y != targets.front().y)
            throw std::invalid_argument("dependence_projects_to_times: upper-right entries differ");
    TimeProjectionReport rep;
    Mat2d sum{0, 0, 0, 0};
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double m = coefficients[i].get_d();
        const Mat2d target = to_double(targets[i]);
        const double tr = target.trace();
        const double a = a_of_lambda(lambdas[i], tr);
        rep.lambda_residual += m * lambdas[i];
        rep.a_residual += m * a;
        const double c = a - 0.5 * tr * lambdas[i];
        sum += m * Mat2d{c + lambdas[i] * target.x, lambdas[i] * target.y, lambdas[i] * target.z,
                         c + lambdas[i] * target.w};
    }
    rep.matrix_residual = std::max({std::abs(sum.x), std::abs(sum.y), std::abs(sum.z), std::abs(sum.w)});
    rep.pass = std::abs(rep.lambda_residual) < tol && std::abs(rep.a_residual) < tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Subsequences avoiding the zero set of a polynomial

/// Greedy increasing index map f (0-based): f(0) = 0 and f(k+1) is the least
/// l > f(k) with R(y_l, y_f(i)) != 0 and R(y_f(i), y_l) != 0 for every i <= k.
/// R must have the form c x^n + (lower degree in x), c != 0, n > 0.
inline std::vector<std::size_t> subsequence_nonzero(const BivariatePoly& R, std::span<const Rational> ys,
                                                    std::size_t length) {
    const int n = R.degree_x();
    if (n <= 0) throw std::invalid_argument("subsequence_nonzero: polynomial must have positive degree in x");
    const BivariatePoly lead = R.leading_x();
    if (lead.terms().size() != 1 || lead.coefficient(0, 0).is_zero())
        throw std::invalid_argument("subsequence_nonzero: leading x-coefficient must be a non-zero constant");
    std::vector<std::size_t> f;
    if (length == 0) return f;
    if (ys.empty()) throw std::out_of_range("subsequence_nonzero: sequence exhausted");
    f.push_back(0);
    std::size_t l = 1;
    while (f.size() < length) {
        for (;; ++l) {
            if (l >= ys.size()) throw std::out_of_range("subsequence_nonzero: sequence exhausted");
            bool ok = true;
            for (auto i : f) {
                if (R(ys[l], ys[i]).is_zero() || R(ys[i], ys[l]).is_zero()) {
                    ok = false;
                    break;
                }
            }
            if (ok) break;
        }
        f.push_back(l++);
    }
    return f;
}

}  // namespace latblock
