// Evasion sequences for rational cosets of SL(2,Z): the family gamma_n, the
// B(i,j) matrix and its determinant, the norm-square obstruction, the
// blocking refuter and the SL(n) block embedding.

#pragma once

#include "latblock/certificate.hpp"
#include "latblock/error.hpp"
#include "latblock/lattice.hpp"
#include "latblock/polynomial.hpp"
#include "latblock/sl2.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace latblock {

// ---------------------------------------------------------------------------
// The family gamma_n

/// Parameters of a normalized coset representative [[a/b, 0], [z, b/a]].
struct FamilyParams {
    BigInt a, b;  // x = a/b in lowest terms, a, b > 0
    Rational z;

    Rational x() const { return Rational(a, b); }

    static FamilyParams of(const Mat2q& g) {
        if (!g.y.is_zero() || g.x.sign() <= 0 || g.det() != Rational(1))
            throw std::invalid_argument("family requires a normalized representative [[x,0],[z,1/x]], x > 0");
        return {g.x.num(), g.x.den(), g.z};
    }
};

struct FamilyMember {
    BigInt n;
    BigInt p, s;
    Mat2z gamma;    // [[p, 1], [p s - 1, s]]
    Rational C;     // z + n b = trace(g gamma)
    Mat2q target;   // g gamma
};

struct EvasionFamily {
    Mat2q g;
    FamilyParams params;
    std::vector<FamilyMember> members;
};

/// Member with index n (any integer; n = 0 is the formal base case).
inline FamilyMember family_member(const Mat2q& g, const BigInt& n) {
    const FamilyParams fp = FamilyParams::of(g);
    FamilyMember m;
    m.n = n;
    m.p = 2 * n * fp.b * fp.b;
    m.s = (fp.a - 2 * fp.a * fp.a) * n;
    m.gamma = Mat2z{m.p, BigInt(1), BigInt(m.p * m.s - 1), m.s};
    m.C = fp.z + Rational(n * fp.b);
    m.target = g * to_rational(m.gamma);
    return m;
}

/// Least positive n with z + n b > 2.
inline BigInt first_family_index(const FamilyParams& fp) {
    const BigInt n = floor((Rational(2) - fp.z) / Rational(fp.b)) + 1;
    return n < 1 ? BigInt(1) : n;
}

/// Exact checks of det gamma = 1, trace = C, increasing C and a common
/// denominator. Throws consistency_error on failure.
inline void verify_family(const EvasionFamily& fam) {
    for (std::size_t i = 0; i < fam.members.size(); ++i) {
        const auto& m = fam.members[i];
        if (m.gamma.det() != 1) throw consistency_error("family: det gamma != 1 at n = " + m.n.get_str());
        if (m.target.trace() != m.C) throw consistency_error("family: trace != C at n = " + m.n.get_str());
        if (!(m.C > Rational(2))) throw consistency_error("family: C <= 2 at n = " + m.n.get_str());
        if (m.C.den() != fam.params.z.den()) throw consistency_error("family: denominators differ");
        if (i > 0 && !(fam.members[i - 1].C < m.C)) throw consistency_error("family: traces not increasing");
    }
}

inline EvasionFamily gen_family(const CosetRep& rep, std::size_t count) {
    if (count > 1000000) throw std::invalid_argument("gen_family: count too large");
    EvasionFamily fam{rep.g, FamilyParams::of(rep.g), {}};
    fam.members.reserve(count);
    BigInt n = first_family_index(fam.params);
    for (std::size_t i = 0; i < count; ++i, ++n) fam.members.push_back(family_member(rep.g, n));
    verify_family(fam);
    return fam;
}

// ---------------------------------------------------------------------------
// Entry closed forms and B(i,j)

struct EntryForms {
    Rational u;  // x_i - w_i
    Rational z;  // lower-left entry of g gamma_i
};

inline EntryForms entry_closed_forms(const FamilyParams& fp, const BigInt& n) {
    const Rational a(fp.a), b(fp.b), N(n);
    return {(Rational(4) * a * b - b) * N - fp.z,
            b * b * b * (Rational(2) - Rational(4) * a) * N * N + Rational(2) * fp.z * b * b * N - b / a};
}

/// Closed forms for member i, checked against the matrix entries.
inline EntryForms entry_closed_forms(const EvasionFamily& fam, std::size_t i) {
    const auto& m = fam.members.at(i);
    const EntryForms f = entry_closed_forms(fam.params, m.n);
    if (f.u != m.target.x - m.target.w)
        throw consistency_error("entry_closed_forms: u mismatch at n = " + m.n.get_str());
    if (f.z != m.target.z) throw consistency_error("entry_closed_forms: z mismatch at n = " + m.n.get_str());
    return f;
}

/// B(i,j) from the entries (x,y,z,w) of g gamma_i and g gamma_j, acting on
/// (a_i a_j, lambda_i a_j, a_i lambda_j, lambda_i lambda_j).
template <class T>
Matrix<T> build_B(const Mat2<T>& ei, const Mat2<T>& ej) {
    const T half = one_like(ei.x) / (one_like(ei.x) + one_like(ei.x));
    const T quarter = half * half;
    const T one = one_like(ei.x), zero = zero_like(ei.x);
    const T di = ei.w - ei.x;  // w_i - x_i
    const T dj = ej.x - ej.w;  // x_j - w_j
    Matrix<T> B(4, 4, zero);
    B(0, 0) = one;
    B(0, 1) = half * di;
    B(0, 2) = half * dj;
    B(0, 3) = quarter * di * dj - ei.y * ej.z;
    B(1, 1) = -ei.y;
    B(1, 2) = ej.y;
    B(1, 3) = half * ej.y * di - half * ei.y * (ej.w - ej.x);
    B(2, 1) = -ei.z;
    B(2, 2) = ej.z;
    B(2, 3) = half * ej.z * (ei.x - ei.w) - half * ei.z * dj;
    B(3, 0) = one;
    B(3, 1) = -half * di;
    B(3, 2) = -half * dj;
    B(3, 3) = quarter * di * dj - ei.z * ej.y;
    return B;
}

inline Matrix<Rational> build_B(const EvasionFamily& fam, std::size_t i, std::size_t j) {
    return build_B(fam.members.at(i).target, fam.members.at(j).target);
}

/// x (u_i^2 z_j + u_j^2 z_i - u_i u_j (z_i + z_j) - x (z_j - z_i)^2).
inline Rational detB_closed(const Rational& x, const EntryForms& ei, const EntryForms& ej) {
    const Rational dz = ej.z - ei.z;
    return x * (ei.u * ei.u * ej.z + ej.u * ej.u * ei.z - ei.u * ej.u * (ei.z + ej.z) - x * dz * dz);
}

inline Rational detB_closed(const EvasionFamily& fam, std::size_t i, std::size_t j) {
    return detB_closed(fam.params.x(), entry_closed_forms(fam, i), entry_closed_forms(fam, j));
}

/// det B(i,j) as a polynomial in (X, Y) = (n_j, n_i).
inline BivariatePoly detB_polynomial(const FamilyParams& fp) {
    const Rational a(fp.a), b(fp.b), x = fp.x();
    auto u_of = [&](const BivariatePoly& n) {
        return (Rational(4) * a * b - b) * n - BivariatePoly(fp.z);
    };
    auto z_of = [&](const BivariatePoly& n) {
        return (b * b * b * (Rational(2) - Rational(4) * a)) * (n * n) + (Rational(2) * fp.z * b * b) * n -
               BivariatePoly(b / a);
    };
    const BivariatePoly nj = BivariatePoly::x(), ni = BivariatePoly::y();
    const BivariatePoly ui = u_of(ni), uj = u_of(nj), zi = z_of(ni), zj = z_of(nj);
    const BivariatePoly dz = zj - zi;
    return x * (ui * ui * zj + uj * uj * zi - ui * uj * (zi + zj) - x * (dz * dz));
}

// ---------------------------------------------------------------------------
// Norm-square obstruction

struct ObstructionResult {
    BigInt K;        // (4kl - 4k^2) y^2
    BigInt bound;    // X*: no solution for x >= X*
    std::vector<std::pair<BigInt, BigInt>> solutions;  // (x, a~) with x >= 1, a~ > 0, below X*
};

/// For K = (4kl - 4k^2) y^2, bounds the x >= 1 for which K = (a~ + kx)(a~ - kx)
/// has a positive integer solution a~. Since a~ >= kx + 1 forces
/// a~^2 - (kx)^2 >= 2kx + 1, no solution exists once 2kx >= K.
inline ObstructionResult norm_square_obstruction(long long k, long long l, long long y) {
    if (k <= 0 || y <= 0) throw std::invalid_argument("norm_square_obstruction: k and y must be positive");
    if (k >= l) throw std::invalid_argument("norm_square_obstruction: requires k < l (lambda^2 = k/l < 1)");
    ObstructionResult r;
    const BigInt K4 = BigInt(4) * BigInt(std::to_string(k)) * BigInt(std::to_string(l - k));
    r.K = K4 * BigInt(std::to_string(y)) * BigInt(std::to_string(y));
    const BigInt twok = BigInt(std::to_string(2 * k));
    BigInt q;
    mpz_fdiv_q(q.get_mpz_t(), BigInt(r.K - 1).get_mpz_t(), twok.get_mpz_t());
    r.bound = q + 1;
    // Factor pairs d * e = K with d > e > 0 of equal parity.
    const BigInt kk(std::to_string(k));
    for (BigInt e = 1; e * e < r.K; ++e) {
        if (r.K % e != 0) continue;
        const BigInt d = r.K / e;
        if ((d - e) % 2 != 0) continue;
        const BigInt kx = (d - e) / 2;
        if (kx % kk != 0) continue;
        const BigInt x = kx / kk;
        if (x < 1) continue;
        r.solutions.emplace_back(x, (d + e) / 2);
    }
    std::sort(r.solutions.begin(), r.solutions.end());
    for (const auto& s : r.solutions)
        if (s.first >= r.bound) throw consistency_error("norm_square_obstruction: solution beyond the bound");
    return r;
}

// ---------------------------------------------------------------------------
// SL(2) -> SL(n) block embedding

/// Identity n x n with g written into rows and columns (i, i+1), i 1-based.
template <class T>
Matrix<T> embed_sln(const Mat2<T>& g, std::size_t n, std::size_t i) {
    if (n < 2) throw std::out_of_range("embed_sln: n must be at least 2");
    if (i < 1 || i > n - 1) throw std::out_of_range("embed_sln: index " + std::to_string(i) + " out of range");
    Matrix<T> m(n, n, zero_like(g.x));
    for (std::size_t k = 0; k < n; ++k) m(k, k) = one_like(g.x);
    m(i - 1, i - 1) = g.x;
    m(i - 1, i) = g.y;
    m(i, i - 1) = g.z;
    m(i, i) = g.w;
    return m;
}

// ---------------------------------------------------------------------------
// Blocking refuter

struct BlockingCandidate {
    std::vector<Mat2d> points;
    double epsilon = 1e-3;
    static constexpr std::size_t max_points = 64;
};

struct RefuteSettings {
    std::size_t budget = 100;     // family members to try
    std::size_t density = 10000;  // uniform samples along each curve
    std::uint64_t seed = 0;
};

namespace detail {

inline constexpr int kLambdaGrid = 32;

/// Curve parameters probed for one family member: the midpoint, the
/// lambda-grid j/32 mapped back to t, then the uniform grid.
inline std::vector<double> probe_times(std::size_t density, double omega) {
    if (density < 2) throw std::invalid_argument("sample density must be at least 2");
    std::vector<double> ts;
    ts.reserve(density + kLambdaGrid + 2);
    ts.push_back(0.5);
    for (int j = 0; j <= kLambdaGrid; ++j)
        ts.push_back(std::clamp(time_from_lambda(double(j) / kLambdaGrid, omega), 0.0, 1.0));
    for (std::size_t k = 0; k < density; ++k) ts.push_back(double(k) / double(density - 1));
    return ts;
}

struct Probe {
    std::vector<double> clearances;  // per candidate, minimum over probed samples
    bool clear = true;
    double min_clearance = std::numeric_limits<double>::infinity();
};

/// Minimum distance from each candidate to the sampled curve. With
/// stop_early the scan ends at the first sample within epsilon.
template <class PointFn, class DistFn>
Probe probe_curve(const std::vector<double>& times, PointFn&& point, const std::vector<Mat2d>& candidates,
                  DistFn&& dist, double epsilon, bool stop_early) {
    Probe p;
    p.clearances.assign(candidates.size(), std::numeric_limits<double>::infinity());
    for (double t : times) {
        const Mat2d c = point(t);
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            const double d = dist(c, candidates[k]);
            p.clearances[k] = std::min(p.clearances[k], d);
            if (d <= epsilon) {
                p.clear = false;
                if (stop_early) {
                    p.min_clearance = d;
                    return p;
                }
            }
        }
    }
    for (double c : p.clearances) p.min_clearance = std::min(p.min_clearance, c);
    return p;
}

inline std::array<double, 4> entries(const Mat2d& m) { return {m.x, m.y, m.z, m.w}; }

inline void validate_settings(const BlockingCandidate& cand, const RefuteSettings& s) {
    if (!(cand.epsilon > 0)) throw std::invalid_argument("blocking tolerance must be positive");
    if (cand.points.size() > BlockingCandidate::max_points)
        throw std::invalid_argument("candidate blocking set has more than 64 points");
    if (s.budget == 0) throw std::invalid_argument("budget must be positive");
    if (s.density < 2) throw std::invalid_argument("sample density must be at least 2");
}

}  // namespace detail

/// Exact target of the curve and its direction in the certificate's terms.
struct Sl2Evasion {
    Mat2q target;     // input representative
    Mat2z gamma;      // target * gamma = g gamma_n
    FamilyMember member;
};

/// Canonicalized candidate points; rejects points within epsilon of the
/// identity coset or of the target coset.
inline std::vector<Mat2d> prepare_candidates(const BlockingCandidate& cand, const Mat2d& target) {
    std::vector<Mat2d> out;
    out.reserve(cand.points.size());
    const Mat2d I = Mat2d::identity();
    for (std::size_t k = 0; k < cand.points.size(); ++k) {
        const Mat2d c = canonical_rep(cand.points[k]).rep;
        if (coset_distance(c, I) <= cand.epsilon)
            throw std::invalid_argument("candidate point " + std::to_string(k + 1) + " lies on the identity coset");
        if (coset_distance(c, target) <= cand.epsilon)
            throw std::invalid_argument("candidate point " + std::to_string(k + 1) + " lies on the target coset");
        out.push_back(c);
    }
    return out;
}

namespace detail {

inline std::vector<double> sl2_clearances(const Mat2d& curve_target, std::size_t density,
                                          const std::vector<Mat2d>& cands, double eps, bool stop_early,
                                          Probe* out = nullptr) {
    const double omega = omega_from_trace(curve_target.trace());
    const auto times = probe_times(density, omega);
    Probe p = probe_curve(
        times, [&](double t) { return curve_point_from_target(curve_target, t); }, cands,
        [](const Mat2d& a, const Mat2d& b) { return coset_distance(a, b); }, eps, stop_early);
    if (out) *out = p;
    return p.clearances;
}

}  // namespace detail

/// Searches the family of target for a curve from the identity coset to the
/// target coset that keeps every candidate point farther than epsilon.
/// Throws budget_exceeded when no member within budget works.
inline EvasionCertificate refute_blocking(const Mat2q& target, const BlockingCandidate& cand,
                                          const RefuteSettings& settings = {}) {
    detail::validate_settings(cand, settings);
    if (target.det() != Rational(1)) throw std::invalid_argument("refute: target must have determinant 1");
    const CosetRep rep = coset_reduce(target);
    const EvasionFamily fam = gen_family(rep, settings.budget);
    const auto cands = prepare_candidates(cand, to_double(target));

    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fam.members.size(); ++i) {
        const FamilyMember& m = fam.members[i];
        const Mat2d curve_target = to_double(m.target);
        detail::Probe probe;
        detail::sl2_clearances(curve_target, settings.density, cands, cand.epsilon, true, &probe);
        if (!probe.clear) {
            best = std::max(best, probe.min_clearance);
            continue;
        }
        EvasionCertificate cert;
        cert.kind = "sl2";
        cert.target = exact_strings(target.x, target.y, target.z, target.w);
        cert.normalized = exact_strings(rep.g.x, rep.g.y, rep.g.z, rep.g.w);
        const Mat2z gamma = rep.gamma * m.gamma;
        cert.gamma = exact_strings(Rational(gamma.x), Rational(gamma.y), Rational(gamma.z), Rational(gamma.w));
        cert.family_params = {{"a", fam.params.a.get_str()},
                              {"b", fam.params.b.get_str()},
                              {"z", fam.params.z.fraction_str()},
                              {"n", m.n.get_str()}};
        cert.trace = m.C.fraction_str();
        const ModifiedTime mt = make_modified_time(0.5, curve_target.trace());
        cert.t = 0.5;
        cert.lambda = mt.lambda;
        cert.a_lambda = mt.a_lambda;
        for (const auto& p : cand.points) cert.candidates.push_back(detail::entries(p));
        cert.clearances = probe.clearances;
        const Mat2d end = curve_point_from_target(curve_target, 1.0);
        cert.attestations = {
            {"det_gamma", gamma.det().get_str()},
            {"trace_exact", (target * to_rational(gamma)).trace() == m.C},
            {"start_residual", max_abs_diff(curve_point_from_target(curve_target, 0.0), Mat2d::identity())},
            {"end_residual", max_abs_diff(to_double(target).inverse() * end, to_double(gamma))},
            {"members_tried", i + 1},
        };
        cert.density = settings.density;
        cert.epsilon = cand.epsilon;
        cert.seed = settings.seed;
        return cert;
    }
    throw budget_exceeded("refute: no family member within budget " + std::to_string(settings.budget) +
                              " evades the candidate set (best clearance " + std::to_string(best) + ")",
                          best, fam.members.size());
}

/// Recomputes an sl2 certificate from its stored exact data.
inline ReplayReport replay_sl2(const EvasionCertificate& cert, double tol = 1e-12) {
    ReplayReport r;
    const auto te = parse_exact(cert.target);
    const auto ge = parse_exact(cert.gamma);
    const Mat2q target{te[0], te[1], te[2], te[3]};
    const Mat2q gq{ge[0], ge[1], ge[2], ge[3]};
    if (target.det() != Rational(1)) r.fail("target determinant is not 1");
    if (!is_in_gamma(gq)) r.fail("gamma is not an integer matrix of determinant 1");
    const Mat2q prod = target * gq;
    const Rational trace = prod.trace();
    if (trace.fraction_str() != cert.trace) r.fail("stored trace " + cert.trace + " != " + trace.fraction_str());
    if (!is_in_gamma(target.inverse() * prod)) r.fail("curve end is not in the target coset");
    const CosetRep rep = coset_reduce(target);
    const auto ne = parse_exact(cert.normalized);
    if (!(rep.g == Mat2q{ne[0], ne[1], ne[2], ne[3]})) r.fail("normalized target does not match");
    const FamilyParams fp = FamilyParams::of(rep.g);
    if (cert.family_params.at("a") != fp.a.get_str() || cert.family_params.at("b") != fp.b.get_str() ||
        cert.family_params.at("z") != fp.z.fraction_str())
        r.fail("family parameters do not match");
    const FamilyMember m = family_member(rep.g, BigInt(cert.family_params.at("n"), 10));
    if (is_integer_matrix(gq) && rep.gamma * m.gamma != to_integer(gq))
        r.fail("gamma is not the stated family member");
    if (!r.ok) return r;

    const Mat2d curve_target = to_double(prod);
    const ModifiedTime mt = make_modified_time(cert.t, curve_target.trace());
    if (std::abs(mt.lambda - cert.lambda) > tol) r.fail("lambda does not replay");
    if (std::abs(mt.a_lambda - cert.a_lambda) > tol) r.fail("a(lambda) does not replay");

    BlockingCandidate cand;
    cand.epsilon = cert.epsilon;
    for (const auto& c : cert.candidates) cand.points.push_back({c[0], c[1], c[2], c[3]});
    const auto cands = prepare_candidates(cand, to_double(target));
    const auto clear = detail::sl2_clearances(curve_target, cert.density, cands, cert.epsilon, false);
    if (clear.size() != cert.clearances.size()) {
        r.fail("clearance count mismatch");
        return r;
    }
    for (std::size_t k = 0; k < clear.size(); ++k) {
        r.max_clearance_diff = std::max(r.max_clearance_diff, std::abs(clear[k] - cert.clearances[k]));
        if (!(clear[k] > cert.epsilon)) r.fail("clearance " + std::to_string(k) + " is not above epsilon");
    }
    if (r.max_clearance_diff > tol) r.fail("clearances do not replay within tolerance");
    const double start = max_abs_diff(curve_point_from_target(curve_target, 0.0), Mat2d::identity());
    const double end = max_abs_diff(to_double(target).inverse() * curve_point_from_target(curve_target, 1.0),
                                    to_double(gq));
    if (start > 1e-9 || end > 1e-9) r.fail("curve endpoints are off their cosets");
    return r;
}

}  // namespace latblock
