#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace latblock;

namespace {

const Mat2q kG{1, 0, 1, 1};

EvasionFamily family_of(const Mat2q& g, std::size_t count) { return gen_family(coset_reduce(g), count); }

// Coefficient matrices of (a_i - lambda_i X_i)(a_j + lambda_j X_j) in the basis
// (a_i a_j, lambda_i a_j, a_i lambda_j, lambda_i lambda_j), X the traceless part.
Matrix<Rational> expanded_B(const Mat2q& ti, const Mat2q& tj) {
    const Rational half(1, 2);
    auto traceless = [&](const Mat2q& t) { return t - (half * t.trace()) * Mat2q::identity(); };
    const Mat2q Xi = traceless(ti), Xj = traceless(tj);
    const Mat2q cols[4] = {Mat2q::identity(), -Xi, Xj, -(Xi * Xj)};
    Matrix<Rational> B(4, 4, Rational(0));
    for (std::size_t c = 0; c < 4; ++c) {
        const Rational e[4] = {cols[c].x, cols[c].y, cols[c].z, cols[c].w};
        for (std::size_t r = 0; r < 4; ++r) B(r, c) = e[r];
    }
    return B;
}

std::array<double, 4> apply(const Matrix<double>& B, const std::array<double, 4>& v) {
    std::array<double, 4> out{};
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) out[r] += B(r, c) * v[c];
    return out;
}

Matrix<double> to_double(const Matrix<Rational>& m) {
    Matrix<double> d(m.rows(), m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) d(r, c) = m(r, c).to_double();
    return d;
}

}  // namespace

TEST(Family, Examples) {
    const EvasionFamily fam = family_of(kG, 3);
    ASSERT_EQ(fam.members.size(), 3u);
    const FamilyMember& m2 = fam.members[0];
    EXPECT_EQ(m2.n, 2);
    EXPECT_EQ(m2.gamma, (Mat2z{4, 1, -9, -2}));
    EXPECT_EQ(m2.gamma.det(), 1);
    EXPECT_EQ((kG * to_rational(m2.gamma)).trace(), Rational(3));
    EXPECT_EQ(fam.members[1].n, 3);
    EXPECT_EQ((kG * to_rational(fam.members[1].gamma)).trace(), Rational(4));
    EXPECT_TRUE(family_of(kG, 0).members.empty());
}

TEST(Family, InvariantsOverAThousandMembers) {
    const Mat2q g{Rational(2, 3), 0, Rational(-7, 5), Rational(3, 2)};
    const EvasionFamily fam = family_of(g, 1000);
    ASSERT_EQ(fam.members.size(), 1000u);
    EXPECT_GT(fam.members[0].C, Rational(2));
    for (std::size_t i = 0; i < fam.members.size(); ++i) {
        const auto& m = fam.members[i];
        EXPECT_EQ(m.gamma.x * m.gamma.w - m.gamma.y * m.gamma.z, 1);
        const Mat2q prod = g * to_rational(m.gamma);
        EXPECT_EQ(prod.trace(), m.C);
        EXPECT_EQ(prod.y, g.x);
        EXPECT_EQ(m.C.den(), fam.members[0].C.den());
        if (i > 0) { EXPECT_LT(fam.members[i - 1].C, m.C); }
    }
    // The first index is the least positive one with trace above 2.
    const BigInt n0 = fam.members[0].n;
    if (n0 > 1) { EXPECT_LE(family_member(g, n0 - 1).C, Rational(2)); }
}

TEST(EntryForms, Examples) {
    const EvasionFamily fam = family_of(kG, 5);
    const EntryForms f = entry_closed_forms(fam, 0);
    EXPECT_EQ(f.u, Rational(5));
    EXPECT_EQ(f.u, fam.members[0].target.x - fam.members[0].target.w);
    for (std::size_t i = 0; i < fam.members.size(); ++i) {
        const Rational n(fam.members[i].n);
        const EntryForms e = entry_closed_forms(fam, i);
        EXPECT_EQ(e.z, Rational(-2) * n * n + Rational(2) * n - Rational(1));
        EXPECT_EQ(e.z, fam.members[i].target.z);
    }
    const FamilyParams fp = FamilyParams::of(Mat2q{Rational(2, 3), 0, Rational(1, 5), Rational(3, 2)});
    EXPECT_EQ(entry_closed_forms(fp, BigInt(0)).u, -fp.z);
}

TEST(BuildB, ExactEntriesMatchExpansion) {
    const EvasionFamily fam = family_of(Mat2q{Rational(2, 3), 0, Rational(1, 5), Rational(3, 2)}, 6);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            EXPECT_EQ(build_B(fam, i, j), expanded_B(fam.members[i].target, fam.members[j].target));
}

TEST(BuildB, ProductRelation) {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> T(0, 1);
    const EvasionFamily fam = family_of(kG, 8);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t i = rng() % 8, j = rng() % 8;
        const double ti = T(rng), tj = (rep % 10 == 0 && i == j) ? ti : T(rng);
        const Mat2d Ti = to_double(fam.members[i].target), Tj = to_double(fam.members[j].target);
        const ModifiedTime mi = make_modified_time(ti, Ti.trace()), mj = make_modified_time(tj, Tj.trace());
        const auto v = apply(to_double(build_B(fam, i, j)),
                             {mi.a_lambda * mj.a_lambda, mi.lambda * mj.a_lambda, mi.a_lambda * mj.lambda,
                              mi.lambda * mj.lambda});
        const Mat2d ref = power_t(Ti, ti).inverse() * power_t(Tj, tj);
        const double scale = std::max(1.0, frobenius(ref));
        EXPECT_LT(max_abs_diff({v[0], v[1], v[2], v[3]}, ref), 1e-9 * scale);
        if (i == j && ti == tj) { EXPECT_LT(max_abs_diff({v[0], v[1], v[2], v[3]}, Mat2d::identity()), 1e-9); }
    }
}

TEST(DetB, Examples) {
    const EvasionFamily fam = family_of(kG, 20);
    EXPECT_TRUE(detB_closed(fam, 3, 3).is_zero());
    const Rational d = detB_closed(fam, 0, 1);
    EXPECT_FALSE(d.is_zero());
    EXPECT_EQ(d, oracle::cofactor_det(build_B(fam, 0, 1)));
    EXPECT_EQ(d, Rational(11));
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = i + 1; j < 20; ++j) EXPECT_EQ(detB_closed(fam, i, j), determinant(build_B(fam, i, j)));
}

TEST(DetB, LeadingCoefficient) {
    for (const Mat2q& g : {kG, Mat2q{Rational(2, 3), 0, Rational(1, 5), Rational(3, 2)},
                           Mat2q{Rational(5, 2), 0, Rational(-3, 7), Rational(2, 5)}}) {
        const FamilyParams fp = FamilyParams::of(coset_reduce(g).g);
        const BivariatePoly R = detB_polynomial(fp);
        const Rational a(fp.a), b(fp.b), k = Rational(2) - Rational(4) * a;
        EXPECT_EQ(R.degree_x(), 4);
        EXPECT_EQ(R.coefficient(4, 0), -(a * a * b * b * b * b * k * k));
        for (int dy = 1; dy <= 4; ++dy) EXPECT_TRUE(R.coefficient(4, dy).is_zero());
        const EvasionFamily fam = gen_family(coset_reduce(g), 6);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j)
                EXPECT_EQ(R(Rational(fam.members[j].n), Rational(fam.members[i].n)), detB_closed(fam, i, j));
    }
}

TEST(Obstruction, Examples) {
    const ObstructionResult r = norm_square_obstruction(1, 2, 1);
    EXPECT_EQ(r.K, 4);
    EXPECT_EQ(r.bound, 2);
    const auto brute = oracle::brute_obstruction(1, 2, 1);
    for (const auto& [x, a] : brute) EXPECT_LT(x, 2);
    EXPECT_THROW(norm_square_obstruction(1, 1, 1), std::invalid_argument);

    const ObstructionResult r2 = norm_square_obstruction(2, 3, 2);
    const auto b2 = oracle::brute_obstruction(2, 3, 2);
    for (const auto& [x, a] : b2) {
        if (x > 1000) continue;
        EXPECT_LT(BigInt(std::to_string(x)), r2.bound);
    }
}

TEST(Obstruction, AgreesWithBruteForce) {
    for (long long l = 2; l <= 12; ++l)
        for (long long k = 1; k < l; ++k)
            for (long long y = 1; y <= 6; ++y) {
                const ObstructionResult r = norm_square_obstruction(k, l, y);
                const auto brute = oracle::brute_obstruction(k, l, y, 20000);
                std::set<std::pair<long long, long long>> got;
                for (const auto& [x, a] : r.solutions) got.insert({x.get_si(), a.get_si()});
                EXPECT_EQ(got, brute) << "k=" << k << " l=" << l << " y=" << y;
                for (const auto& s : brute) EXPECT_LT(BigInt(std::to_string(s.first)), r.bound);
                // Just below the bound the gap between consecutive squares is still within reach.
                EXPECT_GE(BigInt(std::to_string(2 * k)) * r.bound, r.K);
            }
}

TEST(EmbedSln, Examples) {
    const auto m = embed_sln(Mat2q{1, 1, 0, 1}, 3, 1);
    EXPECT_EQ(m, (Matrix<Rational>{{1, 1, 0}, {0, 1, 0}, {0, 0, 1}}));
    EXPECT_EQ(embed_sln(Mat2q::identity(), 5, 3), Matrix<Rational>::identity(5));
    EXPECT_THROW(embed_sln(Mat2q::identity(), 3, 3), std::out_of_range);
    EXPECT_THROW(embed_sln(Mat2q::identity(), 3, 0), std::out_of_range);
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 100; ++rep) {
        const Mat2q g = to_rational(oracle::random_gamma(rng, 20)), h = to_rational(oracle::random_gamma(rng, 20));
        const std::size_t n = 2 + rng() % 4, i = 1 + rng() % (n - 1);
        EXPECT_EQ(embed_sln(g, n, i) * embed_sln(h, n, i), embed_sln(Mat2q(g * h), n, i));
        EXPECT_EQ(determinant(embed_sln(g, n, i)), Rational(1));
    }
}

TEST(Refute, EmptyCandidateSet) {
    const EvasionCertificate c = refute_blocking(kG, {}, {.budget = 10, .density = 500, .seed = 0});
    EXPECT_EQ(c.t, 0.5);
    EXPECT_EQ(c.family_params.at("n"), "2");
    EXPECT_EQ(c.gamma, (std::array<std::string, 4>{"4/1", "1/1", "-9/1", "-2/1"}));
    EXPECT_NEAR(c.lambda, 1 / std::sqrt(5.0), 1e-12);
    EXPECT_TRUE(c.clearances.empty());
    EXPECT_TRUE(replay_sl2(c).ok);
}

TEST(Refute, MidpointCandidateForcesLaterMember) {
    const Mat2d first = curve_point_from_target(to_double(kG * Mat2q{4, 1, -9, -2}), 0.5);
    BlockingCandidate cand{{first}, 1e-3};
    const EvasionCertificate c = refute_blocking(kG, cand, {.budget = 20, .density = 2000, .seed = 0});
    EXPECT_GT(BigInt(c.family_params.at("n")), 2);
    ASSERT_EQ(c.clearances.size(), 1u);
    EXPECT_GT(c.clearances[0], 1e-3);
    const ReplayReport r = replay_sl2(c);
    EXPECT_TRUE(r.ok);
    EXPECT_LE(r.max_clearance_diff, 1e-12);
}

TEST(Refute, TenRandomPoints) {
    std::mt19937_64 rng(43);
    BlockingCandidate cand;
    while (cand.points.size() < 10) {
        const Mat2d p = oracle::random_sl2(rng, 1.0);
        if (coset_distance(p, Mat2d::identity()) > 0.01 && coset_distance(p, to_double(kG)) > 0.01)
            cand.points.push_back(p);
    }
    const EvasionCertificate c = refute_blocking(kG, cand, {.budget = 100, .density = 10000, .seed = 7});
    ASSERT_EQ(c.clearances.size(), 10u);
    // Independent check of one clearance: brute-force distance at the stored probe t.
    const Mat2q gq{Rational::parse(c.gamma[0]), Rational::parse(c.gamma[1]), Rational::parse(c.gamma[2]),
                   Rational::parse(c.gamma[3])};
    EXPECT_TRUE(is_in_gamma(gq));
    const Mat2d mid = curve_point_from_target(to_double(kG * gq), c.t);
    for (std::size_t k = 0; k < 10; ++k) {
        EXPECT_GT(c.clearances[k], 1e-3);
        EXPECT_LE(c.clearances[k], oracle::brute_distance(mid, cand.points[k], 12) + 1e-9);
    }
    EXPECT_EQ(c.seed, 7u);
    EXPECT_TRUE(replay_sl2(c).ok);
}

TEST(Refute, BudgetExhaustionReportsBestClearance) {
    const Mat2d first = curve_point_from_target(to_double(kG * Mat2q{4, 1, -9, -2}), 0.5);
    try {
        refute_blocking(kG, {{first}, 1e-3}, {.budget = 1, .density = 200, .seed = 0});
        FAIL() << "expected budget_exceeded";
    } catch (const budget_exceeded& e) {
        EXPECT_EQ(e.members_tried(), 1u);
        EXPECT_LE(e.best_clearance(), 1e-3);
    }
}

TEST(Refute, RejectsInvalidCandidates) {
    EXPECT_THROW(refute_blocking(kG, {{Mat2d::identity()}, 1e-3}), std::invalid_argument);
    EXPECT_THROW(refute_blocking(kG, {{Mat2d{1, 0, 1, 1}}, 1e-3}), std::invalid_argument);
    EXPECT_THROW(refute_blocking(kG, {{}, 0.0}), std::invalid_argument);
    BlockingCandidate many;
    many.points.assign(65, Mat2d{2, 0, 0, 0.5});
    EXPECT_THROW(refute_blocking(kG, many), std::invalid_argument);
}

TEST(Certificate, TamperingIsDetected) {
    const Mat2d p{1.3, 0.2, 0.1, (1 + 0.02) / 1.3};
    const EvasionCertificate c = refute_blocking(Mat2q{1, 2, 1, 3}, {{p}, 1e-3}, {.budget = 10, .density = 1000});
    EXPECT_TRUE(replay_sl2(c).ok);
    const EvasionCertificate round = EvasionCertificate::parse(c.dump());
    EXPECT_EQ(round.dump(), c.dump());
    EXPECT_TRUE(replay_certificate(round).ok);

    EvasionCertificate bad = c;
    bad.clearances[0] += 1e-6;
    EXPECT_FALSE(replay_sl2(bad).ok);
    bad = c;
    bad.gamma[3] = "5/1";
    EXPECT_FALSE(replay_sl2(bad).ok);
    bad = c;
    bad.trace = "99/1";
    EXPECT_FALSE(replay_sl2(bad).ok);
    bad = c;
    bad.lambda += 1e-6;
    EXPECT_FALSE(replay_sl2(bad).ok);
}
