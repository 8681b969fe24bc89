// Quaternion algebras H^{a,b} over Q: arithmetic, reduced norm, the
// isomorphism phi into 2x2 matrices over Q(sqrt a), the exponential, Pell
// families and the cocompact-lattice refuter.

#pragma once

#include "latblock/certificate.hpp"
#include "latblock/error.hpp"
#include "latblock/evade.hpp"
#include "latblock/mat2.hpp"
#include "latblock/numeric.hpp"
#include "latblock/sl2.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

namespace latblock {

struct QuatAlgebra {
    long long a = 1, b = 1;

    QuatAlgebra() = default;
    QuatAlgebra(long long a_, long long b_) : a(a_), b(b_) {
        if (a <= 0 || b <= 0) throw std::invalid_argument("quaternion algebra needs a, b > 0");
    }
    friend bool operator==(const QuatAlgebra& l, const QuatAlgebra& r) { return l.a == r.a && l.b == r.b; }
};

template <class T>
T scalar_of(long long v) {
    if constexpr (std::is_same_v<T, BigInt>)
        return BigInt(static_cast<long>(v));
    else
        return T(v);
}

/// x + y i + z j + w k with i^2 = a, j^2 = b, ij = k = -ji.
template <class T>
struct Quaternion {
    T x{}, y{}, z{}, w{};
    QuatAlgebra alg;

    static Quaternion one(QuatAlgebra alg) { return {scalar_of<T>(1), T(0), T(0), T(0), alg}; }

    Quaternion conj() const { return {x, -y, -z, -w, alg}; }

    /// x^2 - a y^2 - b z^2 + ab w^2.
    T nred() const {
        const T A = scalar_of<T>(alg.a), B = scalar_of<T>(alg.b);
        return x * x - A * y * y - B * z * z + A * B * w * w;
    }

    template <class F>
    auto map(F&& f) const -> Quaternion<decltype(f(x))> {
        return {f(x), f(y), f(z), f(w), alg};
    }

    friend Quaternion operator+(const Quaternion& g, const Quaternion& h) {
        check_same(g, h);
        return {g.x + h.x, g.y + h.y, g.z + h.z, g.w + h.w, g.alg};
    }
    friend Quaternion operator-(const Quaternion& g, const Quaternion& h) {
        check_same(g, h);
        return {g.x - h.x, g.y - h.y, g.z - h.z, g.w - h.w, g.alg};
    }
    friend Quaternion operator*(const T& s, const Quaternion& g) { return {s * g.x, s * g.y, s * g.z, s * g.w, g.alg}; }

    friend Quaternion operator*(const Quaternion& g, const Quaternion& h) {
        check_same(g, h);
        const T A = scalar_of<T>(g.alg.a), B = scalar_of<T>(g.alg.b);
        return {g.x * h.x + A * g.y * h.y + B * g.z * h.z - A * B * g.w * h.w,
                g.x * h.y + g.y * h.x - B * g.z * h.w + B * g.w * h.z,
                g.x * h.z + g.z * h.x + A * g.y * h.w - A * g.w * h.y,
                g.x * h.w + g.w * h.x + g.y * h.z - g.z * h.y,
                g.alg};
    }
    friend bool operator==(const Quaternion& g, const Quaternion& h) {
        return g.alg == h.alg && g.x == h.x && g.y == h.y && g.z == h.z && g.w == h.w;
    }

    static void check_same(const Quaternion& g, const Quaternion& h) {
        if (!(g.alg == h.alg)) throw std::invalid_argument("quaternions from different algebras");
    }
};

using Quatd = Quaternion<double>;
using Quatq = Quaternion<Rational>;
using Quatz = Quaternion<BigInt>;

template <class T>
Quaternion<T> quat_mul(const Quaternion<T>& g, const Quaternion<T>& h) {
    return g * h;
}
template <class T>
T nred(const Quaternion<T>& g) {
    return g.nred();
}

inline Quatq to_rational(const Quatz& g) {
    return g.map([](const BigInt& v) { return Rational(v); });
}
template <class T>
Quatd to_double(const Quaternion<T>& g) {
    return g.map([](const T& v) { return to_double(v); });
}
inline Quatd to_double(const Quatd& g) { return g; }

inline std::string format_quat(const Quatq& g) {
    auto term = [](const Rational& c, const char* unit) {
        std::string s = c.str();
        if (s[0] != '-') s = "+" + s;
        return s + unit;
    };
    return g.x.str() + term(g.y, "i") + term(g.z, "j") + term(g.w, "k");
}
inline std::string format_quat(const Quatz& g) { return format_quat(to_rational(g)); }

// ---------------------------------------------------------------------------
// The isomorphism phi and its tangent map

/// [[x + y sqrt a, z + w sqrt a], [b(z - w sqrt a), x - y sqrt a]], exact. Needs a non-square.
inline Mat2<QuadExt> phi_iso(const Quatq& g) {
    const BigInt d(static_cast<long>(g.alg.a));
    const Rational B(g.alg.b);
    return {QuadExt(g.x, g.y, d), QuadExt(g.z, g.w, d), QuadExt(B * g.z, -B * g.w, d), QuadExt(g.x, -g.y, d)};
}

inline Mat2d phi_iso(const Quatd& g) {
    const double r = std::sqrt(double(g.alg.a)), B = double(g.alg.b);
    return {g.x + g.y * r, g.z + g.w * r, B * (g.z - g.w * r), g.x - g.y * r};
}

/// Tangent vector u1 i + u2 j + u3 k of the norm-one group.
struct TangentVec {
    double u1 = 0, u2 = 0, u3 = 0;

    /// u1^2 a + u2^2 b - u3^2 ab, the square of u1 i + u2 j + u3 k.
    double delta(const QuatAlgebra& alg) const {
        return u1 * u1 * double(alg.a) + u2 * u2 * double(alg.b) - u3 * u3 * double(alg.a) * double(alg.b);
    }
    double omega(const QuatAlgebra& alg) const { return std::sqrt(std::abs(delta(alg))); }
    Branch branch(const QuatAlgebra& alg) const {
        const double d = delta(alg);
        return d > 0 ? Branch::hyperbolic : (d < 0 ? Branch::elliptic : Branch::parabolic);
    }
};

/// [[u1 sqrt a, u2 + u3 sqrt a], [b u2 - b sqrt a u3, -u1 sqrt a]].
inline Mat2d dphi1(const TangentVec& U, const QuatAlgebra& alg) {
    const double r = std::sqrt(double(alg.a)), B = double(alg.b);
    return {U.u1 * r, U.u2 + U.u3 * r, B * U.u2 - B * r * U.u3, -U.u1 * r};
}

/// Exact tangent map with rational coordinates; needs a non-square.
inline Mat2<QuadExt> dphi1(const Rational& u1, const Rational& u2, const Rational& u3, const QuatAlgebra& alg) {
    const BigInt d(static_cast<long>(alg.a));
    const Rational B(alg.b);
    return {QuadExt(Rational(0), u1, d), QuadExt(u2, u3, d), QuadExt(B * u2, -B * u3, d),
            QuadExt(Rational(0), -u1, d)};
}

inline Quatd exp_quat(const TangentVec& U, const QuatAlgebra& alg) {
    double c = 0, s = 0;
    detail::exp_coefficients(U.delta(alg), c, s);
    return {c, s * U.u1, s * U.u2, s * U.u3, alg};
}

/// g^t for real part x > 1: (cosh tw - lambda cosh w) + lambda g.
inline Quatd power_t_quat(const Quatd& g, double t) {
    if (!(g.x > 1.0)) throw unsupported_branch("power_t_quat requires real part > 1, got " + std::to_string(g.x));
    const double omega = std::acosh(g.x);
    const double lambda = modified_time(t, omega);
    const double c = std::cosh(t * omega) - lambda * g.x;
    return {c + lambda * g.x, lambda * g.y, lambda * g.z, lambda * g.w, g.alg};
}

/// (a(lambda) - x lambda) + lambda h for h = g gamma with x = Re h > 1.
inline Quatd curve_point_quat_from_target(const Quatd& h, double t) {
    if (!(h.x > 1.0)) throw unsupported_branch("curve_point_quat requires Re(g gamma) > 1, got " + std::to_string(h.x));
    const double lambda = modified_time(t, std::acosh(h.x));
    const double a = std::sqrt(1.0 + (h.x - 1.0) * (h.x + 1.0) * lambda * lambda);
    return {a - h.x * lambda + lambda * h.x, lambda * h.y, lambda * h.z, lambda * h.w, h.alg};
}

inline Quatd curve_point_quat(const Quatd& g, const Quatd& gamma, double t) {
    return curve_point_quat_from_target(g * gamma, t);
}
inline Quatd curve_point_quat(const Quatq& g, const Quatz& gamma, double t) {
    return curve_point_quat_from_target(to_double(g * to_rational(gamma)), t);
}

// ---------------------------------------------------------------------------
// Division algebra test

enum class AlgebraVerdict { division, split, unknown };

inline const char* to_string(AlgebraVerdict v) {
    switch (v) {
        case AlgebraVerdict::division: return "division";
        case AlgebraVerdict::split: return "split";
        case AlgebraVerdict::unknown: return "unknown";
    }
    return "?";
}

struct AlgebraReport {
    AlgebraVerdict verdict = AlgebraVerdict::unknown;
    std::array<long long, 3> witness{0, 0, 0};  // a x^2 + b y^2 = z^2 when split
    long long bound = 0;
    std::string reason;
};

namespace detail {

/// n = core * f^2 with core squarefree.
inline std::pair<long long, long long> squarefree_split(long long n) {
    long long core = 1, f = 1;
    for (long long p = 2; p * p <= n; ++p) {
        while (n % (p * p) == 0) {
            n /= p * p;
            f *= p;
        }
        if (n % p == 0) {
            n /= p;
            core *= p;
        }
    }
    return {core * n, f};
}

inline bool is_square_mod(long long v, long long m) {
    if (m == 1) return true;
    v %= m;
    for (long long r = 0; r < m; ++r)
        if ((r * r) % m == v) return true;
    return false;
}

inline std::optional<long long> exact_sqrt(__int128 v) {
    if (v < 0) return std::nullopt;
    long long r = static_cast<long long>(std::sqrt(static_cast<long double>(v)));
    while (static_cast<__int128>(r) * r > v) --r;
    while (static_cast<__int128>(r + 1) * (r + 1) <= v) ++r;
    if (static_cast<__int128>(r) * r == v) return r;
    return std::nullopt;
}

}  // namespace detail

/// Decides whether a x^2 + b y^2 = z^2 has only the trivial integer solution.
/// Squares give split; for coprime squarefree parts a failing residue
/// condition (b square mod a, a square mod b) proves division; otherwise a
/// bounded search either finds a witness or the verdict is unknown.
inline AlgebraReport is_division_algebra(long long a, long long b, long long search_bound = 1000) {
    if (a <= 0 || b <= 0) throw std::invalid_argument("is_division_algebra needs positive a, b");
    if (a > 1000000000LL || b > 1000000000LL) throw std::invalid_argument("is_division_algebra: a, b too large");
    AlgebraReport r;
    r.bound = search_bound;
    if (auto s = detail::exact_sqrt(a)) {
        r.verdict = AlgebraVerdict::split;
        r.witness = {1, 0, *s};
        r.reason = "a is a perfect square";
        return r;
    }
    if (auto s = detail::exact_sqrt(b)) {
        r.verdict = AlgebraVerdict::split;
        r.witness = {0, 1, *s};
        r.reason = "b is a perfect square";
        return r;
    }
    const auto [ca, fa] = detail::squarefree_split(a);
    const auto [cb, fb] = detail::squarefree_split(b);
    if (std::gcd(ca, cb) == 1) {
        const bool b_ok = detail::is_square_mod(cb, ca);
        const bool a_ok = detail::is_square_mod(ca, cb);
        if (!b_ok || !a_ok) {
            r.verdict = AlgebraVerdict::division;
            r.reason = !b_ok ? std::to_string(cb) + " is not a square mod " + std::to_string(ca)
                             : std::to_string(ca) + " is not a square mod " + std::to_string(cb);
            return r;
        }
    }
    for (long long x = 0; x <= search_bound; ++x) {
        for (long long y = 0; y <= search_bound; ++y) {
            if (x == 0 && y == 0) continue;
            const __int128 v = static_cast<__int128>(ca) * x * x + static_cast<__int128>(cb) * y * y;
            if (auto z = detail::exact_sqrt(v)) {
                r.verdict = AlgebraVerdict::split;
                r.witness = {x * fb, y * fa, *z * fa * fb};
                r.reason = "explicit isotropic vector";
                return r;
            }
        }
    }
    r.reason = "no witness with |x|, |y| <= " + std::to_string(search_bound) + " and no residue obstruction";
    return r;
}

// ---------------------------------------------------------------------------
// Pell equations

struct PellSolution {
    BigInt p, q, d, n;  // p^2 - d q^2 = n
    bool verifies() const { return p * p - d * q * q == n; }
};

/// Least positive solution of p^2 - d q^2 = 1 from the continued fraction of sqrt d.
inline PellSolution pell_fundamental(const BigInt& d) {
    if (d <= 0) throw std::invalid_argument("pell: d must be positive");
    if (is_perfect_square(d)) throw std::invalid_argument("pell: d = " + d.get_str() + " is a perfect square");
    static const BigInt kCap("1000000000000000000");
    const BigInt a0 = isqrt(d);
    BigInt m = 0, den = 1, ak = a0;
    BigInt h_prev = 1, h = a0, k_prev = 0, k = 1;
    for (int step = 1; step <= 2 * 64 + 2; ++step) {
        if (h * h - d * k * k == 1) return {h, k, d, BigInt(1)};
        m = den * ak - m;
        den = (d - m * m) / den;
        ak = (a0 + m) / den;
        if (ak > kCap) throw std::domain_error("pell: partial quotient exceeds 1e18");
        if (step > 64 && ak == 2 * a0) throw std::domain_error("pell: continued fraction period exceeds 64");
        BigInt h_next = ak * h + h_prev, k_next = ak * k + k_prev;
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
        if (h > kCap) throw std::domain_error("pell: convergents exceed 1e18 for d = " + d.get_str());
    }
    throw std::domain_error("pell: continued fraction period exceeds 64");
}

/// Compositions of the seed with successive powers of the fundamental unit,
/// seed excluded, seed sign-normalized to p, q >= 0.
inline std::vector<PellSolution> pell_family(const PellSolution& seed, std::size_t count) {
    if (!seed.verifies()) throw std::invalid_argument("pell_family: seed does not satisfy its equation");
    std::vector<PellSolution> out;
    if (count == 0) return out;
    const PellSolution unit = pell_fundamental(seed.d);
    BigInt p = abs(seed.p), q = abs(seed.q);
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        BigInt np = p * unit.p + seed.d * q * unit.q;
        BigInt nq = p * unit.q + q * unit.p;
        p = np;
        q = nq;
        PellSolution s{p, q, seed.d, seed.n};
        if (!s.verifies()) throw consistency_error("pell_family: composed solution fails its norm");
        if (!out.empty() && !(out.back().p < p)) throw consistency_error("pell_family: p not increasing");
        out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Quaternionic evasion family

struct QuatFamilyMember {
    Quatz gamma;
    Quatq target;  // g gamma
};

struct QuatFamily {
    Quatq g;
    Quatz gamma1;
    BigInt pell_n;  // p1^2 - a q1^2
    Rational zc, wc;  // constant j- and k-coordinates of g gamma_i
    std::vector<QuatFamilyMember> members;
};

namespace detail {

/// 0, 1, -1, 2, -2, ... up to |v| <= h.
inline std::vector<long long> height_order(long long h) {
    std::vector<long long> v{0};
    for (long long k = 1; k <= h; ++k) {
        v.push_back(k);
        v.push_back(-k);
    }
    return v;
}

}  // namespace detail

/// First norm-one integer quaternion with (r, s) != (0, 0), by increasing
/// height max(|p|,|q|,|r|,|s|), coordinates in the order 0, 1, -1, 2, ...
inline std::optional<Quatz> find_gamma1(const QuatAlgebra& alg, long long max_height) {
    const __int128 A = alg.a, B = alg.b;
    for (long long h = 1; h <= max_height; ++h) {
        const auto ord = detail::height_order(h);
        for (long long p : ord)
            for (long long q : ord)
                for (long long r : ord)
                    for (long long s : ord) {
                        if (std::max({std::llabs(p), std::llabs(q), std::llabs(r), std::llabs(s)}) != h) continue;
                        if (r == 0 && s == 0) continue;
                        const __int128 nr = __int128(p) * p - A * q * q - B * r * r + A * B * s * s;
                        if (nr == 1)
                            return Quatz{BigInt(static_cast<long>(p)), BigInt(static_cast<long>(q)),
                                         BigInt(static_cast<long>(r)), BigInt(static_cast<long>(s)), alg};
                    }
    }
    return std::nullopt;
}

/// Members gamma_i = p_i + q_i i + r1 j + s1 k, with (p_i, q_i) running over
/// gamma1's Pell class p^2 - a q^2 = n, signs chosen so x p_i, y q_i >= 0.
inline QuatFamily gen_family_quat(const Quatq& g, std::size_t count, long long search_height = 12) {
    const QuatAlgebra alg = g.alg;
    if (!g.z.is_zero() || !g.w.is_zero()) throw std::invalid_argument("gen_family_quat: g must be x + y i");
    if (g.nred() != Rational(1)) throw std::invalid_argument("gen_family_quat: x^2 - a y^2 must be 1");
    if (is_perfect_square(BigInt(static_cast<long>(alg.a))))
        throw std::invalid_argument("gen_family_quat: a must not be a perfect square");
    const auto g1 = find_gamma1(alg, search_height);
    if (!g1) throw std::domain_error("gen_family_quat: no norm-one gamma with (r,s) != (0,0) within height");
    QuatFamily fam;
    fam.g = g;
    fam.gamma1 = *g1;
    const BigInt A(static_cast<long>(alg.a));
    fam.pell_n = g1->x * g1->x - A * g1->y * g1->y;
    if (count == 0) return fam;

    auto oriented = [&](BigInt p, BigInt q) {
        if ((g.x.sign() < 0 && p > 0) || (g.x.sign() > 0 && p < 0)) p = -p;
        if ((g.y.sign() < 0 && q > 0) || (g.y.sign() > 0 && q < 0)) q = -q;
        return Quatz{p, q, g1->z, g1->w, alg};
    };
    std::vector<Quatz> gammas{oriented(g1->x, g1->y)};
    const PellSolution seed{g1->x, g1->y, A, fam.pell_n};
    for (const auto& s : pell_family(seed, count - 1)) gammas.push_back(oriented(s.p, s.q));

    const Rational r1(g1->z), s1(g1->w), a(A);
    fam.zc = g.x * r1 + a * g.y * s1;
    fam.wc = g.x * s1 + g.y * r1;
    const Rational invariant = g.nred() * (r1 * r1 - a * s1 * s1);
    for (const auto& gm : gammas) {
        if (gm.nred() != 1) throw consistency_error("gen_family_quat: member has reduced norm != 1");
        const Quatq t = g * to_rational(gm);
        if (t.z != fam.zc || t.w != fam.wc) throw consistency_error("gen_family_quat: j/k coordinates vary");
        if (t.z * t.z - a * t.w * t.w != invariant || invariant.is_zero())
            throw consistency_error("gen_family_quat: z^2 - a w^2 invariant fails");
        if (!fam.members.empty() && !(fam.members.back().target.x < t.x))
            throw consistency_error("gen_family_quat: real parts not increasing");
        fam.members.push_back({gm, t});
    }
    return fam;
}

/// The quaternionic B(i,j) from e = g gamma (coordinates y, z, w).
template <class T>
Matrix<T> build_B_quat(const Quaternion<T>& ei, const Quaternion<T>& ej) {
    const T A = scalar_of<T>(ei.alg.a), Bq = scalar_of<T>(ei.alg.b);
    const T zero = T(0), one = scalar_of<T>(1);
    Matrix<T> B(4, 4, zero);
    B(0, 0) = one;
    B(0, 3) = ei.w * ej.w * A * Bq - ei.y * ej.y * A - ei.z * ej.z * Bq;
    B(1, 1) = -ei.y;
    B(1, 2) = ej.y;
    B(1, 3) = (ei.z * ej.w - ei.w * ej.z) * Bq;
    B(2, 1) = -ei.z;
    B(2, 2) = ej.z;
    B(2, 3) = (ei.w * ej.y - ei.y * ej.w) * A;
    B(3, 1) = -ei.w;
    B(3, 2) = ej.w;
    B(3, 3) = ei.z * ej.y - ei.y * ej.z;
    return B;
}

/// -(w_i y_j - y_i w_j)^2 a - (w_i z_j - z_i w_j)^2 b + (z_i y_j - y_i z_j)^2.
inline Rational detB_quat(const Quatq& ei, const Quatq& ej) {
    const Rational A(ei.alg.a), B(ei.alg.b);
    const Rational p = ei.w * ej.y - ei.y * ej.w, q = ei.w * ej.z - ei.z * ej.w, r = ei.z * ej.y - ei.y * ej.z;
    return -p * p * A - q * q * B + r * r;
}

// ---------------------------------------------------------------------------
// Distances in SL(2,R) / phi(norm-one units of Z<i,j>)

namespace detail {

struct GramSchmidt4 {
    double bs[4][4];
    double mu[4][4];
    double bb[4];
};

inline GramSchmidt4 gram_schmidt4(const double B[4][4]) {
    GramSchmidt4 gs{};
    for (int i = 0; i < 4; ++i) {
        for (int c = 0; c < 4; ++c) gs.bs[i][c] = B[i][c];
        for (int j = 0; j < i; ++j) {
            double d = 0;
            for (int c = 0; c < 4; ++c) d += B[i][c] * gs.bs[j][c];
            gs.mu[i][j] = d / gs.bb[j];
            for (int c = 0; c < 4; ++c) gs.bs[i][c] -= gs.mu[i][j] * gs.bs[j][c];
        }
        double n = 0;
        for (int c = 0; c < 4; ++c) n += gs.bs[i][c] * gs.bs[i][c];
        gs.bb[i] = n;
        if (!(n > 0)) throw std::domain_error("quaternion lattice basis is degenerate");
    }
    return gs;
}

/// LLL (delta = 0.75) on the rows of B, tracking the integer transform U.
inline void lll4(double B[4][4], long long U[4][4]) {
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) U[i][j] = (i == j);
    int k = 1;
    for (int iter = 0; k < 4; ++iter) {
        if (iter > 10000) throw std::domain_error("LLL reduction did not converge");
        GramSchmidt4 gs = gram_schmidt4(B);
        for (int j = k - 1; j >= 0; --j) {
            const double q = std::nearbyint(gs.mu[k][j]);
            if (q == 0) continue;
            if (std::abs(q) > 1e15) throw std::domain_error("LLL coefficient overflow");
            const long long qi = static_cast<long long>(q);
            for (int c = 0; c < 4; ++c) {
                B[k][c] -= q * B[j][c];
                U[k][c] -= qi * U[j][c];
            }
            gs = gram_schmidt4(B);
        }
        if (gs.bb[k] < (0.75 - gs.mu[k][k - 1] * gs.mu[k][k - 1]) * gs.bb[k - 1]) {
            for (int c = 0; c < 4; ++c) {
                std::swap(B[k][c], B[k - 1][c]);
                std::swap(U[k][c], U[k - 1][c]);
            }
            k = std::max(k - 1, 1);
        } else {
            ++k;
        }
    }
}

}  // namespace detail

/// Default search radius for the quaternionic coset gap; larger gaps are
/// reported as this value (a lower bound).
inline constexpr double kQuatGapCap = 3.0;

/// min over norm-one integer gamma of ||h phi(gamma) - I||_F, capped at cap.
inline double quat_coset_gap(const Mat2d& h, const QuatAlgebra& alg, double cap = kQuatGapCap) {
    const double r = std::sqrt(double(alg.a)), Bv = double(alg.b);
    const Mat2d units[4] = {Mat2d::identity(), {r, 0, 0, -r}, {0, 1, Bv, 0}, {0, r, -Bv * r, 0}};
    double orig[4][4];
    for (int k = 0; k < 4; ++k) {
        const Mat2d m = h * units[k];
        orig[k][0] = m.x;
        orig[k][1] = m.y;
        orig[k][2] = m.z;
        orig[k][3] = m.w;
    }
    double B[4][4];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) B[i][j] = orig[i][j];
    long long U[4][4];
    detail::lll4(B, U);
    const auto gs = detail::gram_schmidt4(B);
    const double t[4] = {1, 0, 0, 1};
    double tau[4];
    for (int j = 0; j < 4; ++j) {
        double d = 0;
        for (int c = 0; c < 4; ++c) d += t[c] * gs.bs[j][c];
        tau[j] = d / gs.bb[j];
    }
    const double R2 = cap * cap;
    double best2 = R2;
    long long c[4] = {0, 0, 0, 0};
    long long nodes = 0;
    const __int128 A = alg.a, Bi = alg.b;

    auto visit_leaf = [&]() {
        long long o[4] = {0, 0, 0, 0};
        for (int k = 0; k < 4; ++k)
            for (int m = 0; m < 4; ++m) o[m] += c[k] * U[k][m];
        const __int128 nr = __int128(o[0]) * o[0] - A * o[1] * o[1] - Bi * o[2] * o[2] + A * Bi * o[3] * o[3];
        if (nr != 1) return;
        double d2 = 0;
        for (int col = 0; col < 4; ++col) {
            double v = -t[col];
            for (int m = 0; m < 4; ++m) v += double(o[m]) * orig[m][col];
            d2 += v * v;
        }
        best2 = std::min(best2, d2);
    };
    auto rec = [&](auto&& self, int j, double partial) -> void {
        if (++nodes > 2000000) throw std::domain_error("quaternion coset gap: enumeration too large");
        double center = tau[j];
        for (int k = j + 1; k < 4; ++k) center -= double(c[k]) * gs.mu[k][j];
        const double span = std::sqrt(std::max(0.0, (R2 - partial) / gs.bb[j]));
        const long long lo = static_cast<long long>(std::ceil(center - span));
        const long long hi = static_cast<long long>(std::floor(center + span));
        for (long long v = lo; v <= hi; ++v) {
            const double e = double(v) - center;
            const double np = partial + e * e * gs.bb[j];
            if (np > R2) continue;
            c[j] = v;
            if (j == 0)
                visit_leaf();
            else
                self(self, j - 1, np);
        }
        c[j] = 0;
    };
    rec(rec, 3, 0.0);
    return std::sqrt(best2);
}

inline double quat_coset_distance(const Mat2d& p, const Mat2d& q, const QuatAlgebra& alg,
                                  double cap = kQuatGapCap) {
    return std::min(quat_coset_gap(p.inverse() * q, alg, cap), quat_coset_gap(q.inverse() * p, alg, cap));
}

// ---------------------------------------------------------------------------
// Quaternionic refuter

namespace detail {

inline std::vector<Mat2d> prepare_quat_candidates(const std::vector<Quatd>& points, const Mat2d& target,
                                                  const QuatAlgebra& alg, double eps) {
    std::vector<Mat2d> out;
    const Mat2d I = Mat2d::identity();
    for (std::size_t k = 0; k < points.size(); ++k) {
        if (!(points[k].alg == alg)) throw std::invalid_argument("candidate quaternion from a different algebra");
        const Mat2d m = phi_iso(points[k]);
        if (std::abs(m.det() - 1.0) > 1e-6)
            throw std::invalid_argument("candidate point " + std::to_string(k + 1) + " does not have reduced norm 1");
        if (quat_coset_distance(m, I, alg) <= eps)
            throw std::invalid_argument("candidate point " + std::to_string(k + 1) + " lies on the identity coset");
        if (quat_coset_distance(m, target, alg) <= eps)
            throw std::invalid_argument("candidate point " + std::to_string(k + 1) + " lies on the target coset");
        out.push_back(m);
    }
    return out;
}

inline Probe quat_probe(const Quatd& h, std::size_t density, const std::vector<Mat2d>& cands, double eps,
                        bool stop_early) {
    const auto times = probe_times(density, std::acosh(h.x));
    const QuatAlgebra alg = h.alg;
    return probe_curve(
        times, [&](double t) { return phi_iso(curve_point_quat_from_target(h, t)); }, cands,
        [&](const Mat2d& a, const Mat2d& b) { return quat_coset_distance(a, b, alg); }, eps, stop_early);
}

}  // namespace detail

struct QuatBlockingCandidate {
    std::vector<Quatd> points;
    double epsilon = 1e-3;
};

inline EvasionCertificate refute_blocking_quat(const Quatq& g, const QuatBlockingCandidate& cand,
                                               const RefuteSettings& settings = {}) {
    detail::validate_settings(BlockingCandidate{{}, cand.epsilon}, settings);
    if (cand.points.size() > BlockingCandidate::max_points)
        throw std::invalid_argument("candidate blocking set has more than 64 points");
    const QuatAlgebra alg = g.alg;
    const AlgebraReport verdict = is_division_algebra(alg.a, alg.b);
    if (verdict.verdict != AlgebraVerdict::division)
        throw std::invalid_argument(std::string("refute: H^{a,b} must be a division algebra (verdict: ") +
                                    to_string(verdict.verdict) + ")");
    const QuatFamily fam = gen_family_quat(g, settings.budget);
    const auto cands = detail::prepare_quat_candidates(cand.points, phi_iso(to_double(g)), alg, cand.epsilon);

    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fam.members.size(); ++i) {
        const auto& m = fam.members[i];
        const Quatd h = to_double(m.target);
        const detail::Probe probe = detail::quat_probe(h, settings.density, cands, cand.epsilon, true);
        if (!probe.clear) {
            best = std::max(best, probe.min_clearance);
            continue;
        }
        EvasionCertificate cert;
        cert.kind = "quat";
        cert.target = exact_strings(g.x, g.y, g.z, g.w);
        cert.normalized = cert.target;
        cert.gamma = exact_strings(Rational(m.gamma.x), Rational(m.gamma.y), Rational(m.gamma.z), Rational(m.gamma.w));
        cert.family_params = {{"r1", fam.gamma1.z.get_str()},
                              {"s1", fam.gamma1.w.get_str()},
                              {"pell_n", fam.pell_n.get_str()},
                              {"z", fam.zc.fraction_str()},
                              {"w", fam.wc.fraction_str()}};
        cert.trace = (Rational(2) * m.target.x).fraction_str();
        const double omega = std::acosh(h.x);
        cert.t = 0.5;
        cert.lambda = modified_time(0.5, omega);
        cert.a_lambda = std::sqrt(1.0 + (h.x - 1.0) * (h.x + 1.0) * cert.lambda * cert.lambda);
        for (const auto& p : cand.points) cert.candidates.push_back({p.x, p.y, p.z, p.w});
        cert.clearances = probe.clearances;
        const Quatd end = curve_point_quat_from_target(h, 1.0);
        const Quatd start = curve_point_quat_from_target(h, 0.0);
        cert.attestations = {
            {"nred_gamma", m.gamma.nred().get_str()},
            {"nred_target", g.nred().fraction_str()},
            {"start_residual", std::max({std::abs(start.x - 1), std::abs(start.y), std::abs(start.z), std::abs(start.w)})},
            {"end_residual", std::max({std::abs(end.x - h.x), std::abs(end.y - h.y), std::abs(end.z - h.z),
                                       std::abs(end.w - h.w)})},
            {"members_tried", i + 1},
            {"algebra_verdict", to_string(verdict.verdict)},
        };
        cert.density = settings.density;
        cert.epsilon = cand.epsilon;
        cert.seed = settings.seed;
        cert.algebra_a = alg.a;
        cert.algebra_b = alg.b;
        return cert;
    }
    throw budget_exceeded("refute: no quaternionic family member within budget " + std::to_string(settings.budget) +
                              " evades the candidate set (best clearance " + std::to_string(best) + ")",
                          best, fam.members.size());
}

inline ReplayReport replay_quat(const EvasionCertificate& cert, double tol = 1e-12) {
    ReplayReport r;
    const QuatAlgebra alg(cert.algebra_a, cert.algebra_b);
    const auto te = parse_exact(cert.target);
    const auto ge = parse_exact(cert.gamma);
    const Quatq g{te[0], te[1], te[2], te[3], alg};
    const Quatq gq{ge[0], ge[1], ge[2], ge[3], alg};
    if (g.nred() != Rational(1)) r.fail("target reduced norm is not 1");
    for (const auto& c : ge)
        if (!c.is_integer()) r.fail("gamma has non-integer coordinates");
    if (gq.nred() != Rational(1)) r.fail("gamma reduced norm is not 1");
    if (is_division_algebra(alg.a, alg.b).verdict != AlgebraVerdict::division) r.fail("algebra is not division");
    const Rational A(alg.a);
    if (gq.x * gq.x - A * gq.y * gq.y != Rational(BigInt(cert.family_params.at("pell_n"), 10)))
        r.fail("gamma is not in the stated Pell class");
    if (gq.z != Rational(BigInt(cert.family_params.at("r1"), 10)) || gq.w != Rational(BigInt(cert.family_params.at("s1"), 10)))
        r.fail("gamma j/k coordinates differ from the family");
    const Quatq prod = g * gq;
    if ((Rational(2) * prod.x).fraction_str() != cert.trace) r.fail("stored trace does not match");
    if (!r.ok) return r;
    const Quatd h = to_double(prod);
    const double lambda = modified_time(cert.t, std::acosh(h.x));
    const double a = std::sqrt(1.0 + (h.x - 1.0) * (h.x + 1.0) * lambda * lambda);
    if (std::abs(lambda - cert.lambda) > tol) r.fail("lambda does not replay");
    if (std::abs(a - cert.a_lambda) > tol) r.fail("a(lambda) does not replay");

    std::vector<Quatd> pts;
    for (const auto& c : cert.candidates) pts.push_back({c[0], c[1], c[2], c[3], alg});
    const auto cands = detail::prepare_quat_candidates(pts, phi_iso(to_double(g)), alg, cert.epsilon);
    const auto probe = detail::quat_probe(h, cert.density, cands, cert.epsilon, false);
    if (probe.clearances.size() != cert.clearances.size()) {
        r.fail("clearance count mismatch");
        return r;
    }
    for (std::size_t k = 0; k < probe.clearances.size(); ++k) {
        r.max_clearance_diff = std::max(r.max_clearance_diff, std::abs(probe.clearances[k] - cert.clearances[k]));
        if (!(probe.clearances[k] > cert.epsilon)) r.fail("clearance " + std::to_string(k) + " is not above epsilon");
    }
    if (r.max_clearance_diff > tol) r.fail("clearances do not replay within tolerance");
    return r;
}

inline ReplayReport replay_certificate(const EvasionCertificate& cert, double tol = 1e-12) {
    return cert.kind == "quat" ? replay_quat(cert, tol) : replay_sl2(cert, tol);
}

}  // namespace latblock
