#include "anneal_ipm/bodies.hpp"

#include <gtest/gtest.h>

using namespace anneal_ipm;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

ConvexBody triangle_poly() {
    Matrix a(3, 2);
    a << 1, 1, -1, 0, 0, -1;
    return ConvexBody::hpolytope(a, vec({1, 0, 0}));
}

std::vector<ConvexBody> analytic_fixtures() {
    std::vector<ConvexBody> out;
    out.push_back(ConvexBody::box(vec({-1, -1}), vec({1, 1})));
    out.push_back(ConvexBody::unit_box(3));
    out.push_back(ConvexBody::ball(Vector::Zero(2), 1.0));
    out.push_back(ConvexBody::ball(vec({0.2, -0.1, 0.3}), 0.7));
    out.push_back(ConvexBody::simplex(2));
    out.push_back(ConvexBody::simplex(4));
    out.push_back(triangle_poly());
    return out;
}

/// Uniform point from the box [x0 - r, x0 + r] rejected into the body.
Vector random_interior(const ConvexBody& body, Rng& rng) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const double r = body.radius_bound();
    for (int tries = 0; tries < 100000; ++tries) {
        Vector x(body.dim());
        for (int i = 0; i < body.dim(); ++i) x(i) = unif(rng) * r;
        if (body.contains(x)) return x;
    }
    return body.interior_point();
}

}  // namespace

TEST(Contains, SpecExamples) {
    EXPECT_TRUE(ConvexBody::unit_box(2).contains(vec({0.5, 0.5})));
    EXPECT_FALSE(ConvexBody::ball(Vector::Zero(3), 1.0).contains(vec({0, 0, 1.0001})));
    // x1 + x2 ≤ 1, x ≥ 0 evaluated by hand at (0.3, 0.3): 0.6 ≤ 1, both coordinates ≥ 0.
    EXPECT_TRUE(triangle_poly().contains(vec({0.3, 0.3})));
    EXPECT_FALSE(triangle_poly().contains(vec({0.6, 0.6})));
}

TEST(Contains, DimensionMismatchIsInputError) {
    EXPECT_THROW(ConvexBody::unit_box(2).contains(vec({0.5})), InputError);
}

TEST(Contains, UserOracleDelegatesVerbatim) {
    int calls = 0;
    auto body = ConvexBody::user_oracle(2, 1.0, Vector::Zero(2), [&calls](const Vector& x) {
        ++calls;
        return x.norm() <= 0.5;
    });
    const int before = calls;
    EXPECT_TRUE(body.contains(vec({0.1, 0.1})));
    EXPECT_FALSE(body.contains(vec({0.5, 0.5})));
    EXPECT_EQ(calls - before, 2);
}

TEST(Construction, RejectsBadInput) {
    EXPECT_THROW(ConvexBody::box(vec({0, 1}), vec({1, 1})), InputError);
    EXPECT_THROW(ConvexBody::ball(Vector::Zero(2), -1.0), InputError);
    EXPECT_THROW(ConvexBody::user_oracle(2, 1.0, vec({3, 3}), [](const Vector& x) { return x.norm() < 1; }),
                 PreconditionError);
    // Unbounded: x ≥ 0 only.
    Matrix a = -Matrix::Identity(2, 2);
    EXPECT_THROW(ConvexBody::hpolytope(a, Vector::Zero(2)), InputError);
}

TEST(Construction, PolytopeDefaultsComeFromVertices) {
    auto tri = triangle_poly();
    EXPECT_NEAR(tri.radius_bound(), 1.0, 1e-12);
    EXPECT_NEAR(tri.interior_point()(0), 1.0 / 3, 1e-12);
    EXPECT_NEAR(tri.interior_point()(1), 1.0 / 3, 1e-12);
    EXPECT_EQ(enumerate_vertices(tri.halfspace_matrix(), tri.halfspace_rhs()).size(), 3u);
}

TEST(Chord, SpecExamples) {
    auto sym = ConvexBody::box(vec({-1, -1}), vec({1, 1}));
    auto c = chord(sym, vec({0, 0}), vec({1, 0}));
    EXPECT_DOUBLE_EQ(c.rho_lo, -1.0);
    EXPECT_DOUBLE_EQ(c.rho_hi, 1.0);

    auto ball = ConvexBody::ball(Vector::Zero(2), 1.0);
    c = chord(ball, vec({0.5, 0}), vec({1, 0}));
    EXPECT_NEAR(c.rho_lo, -1.5, 1e-15);
    EXPECT_NEAR(c.rho_hi, 0.5, 1e-15);

    // Σ(x + ρu) = 1 with x = (1/4, 1/4), u = (1,1)/√2 gives ρ = (1/2)/√2 = 0.25·√2.
    auto simplex = ConvexBody::simplex(2);
    c = chord(simplex, vec({0.25, 0.25}), vec({1, 1}) / std::sqrt(2.0));
    EXPECT_NEAR(c.rho_hi, 0.25 * std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(c.rho_hi, 0.35355, 1e-5);
    EXPECT_EQ(c.oracle_calls, 0);
}

TEST(Chord, Errors) {
    auto box = ConvexBody::unit_box(2);
    EXPECT_THROW(chord(box, vec({2, 2}), vec({1, 0})), PreconditionError);
    EXPECT_THROW(chord(box, vec({0.5, 0.5}), vec({0, 0})), InputError);
    EXPECT_THROW(chord(box, vec({0.5, 0.5}), vec({1e-16, 0})), InputError);
}

TEST(Chord, ConsistencyProperty) {
    Rng rng(2024);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (const auto& body : analytic_fixtures()) {
        for (int trial = 0; trial < 50; ++trial) {
            Vector x = random_interior(body, rng);
            Vector u = standard_normal(body.dim(), rng);
            for (bool bisect : {false, true}) {
                Chord c = bisect ? chord_by_bisection(body, x, u) : chord(body, x, u);
                ASSERT_LT(c.rho_lo, 0.0);
                ASSERT_GT(c.rho_hi, 0.0);
                for (int k = 0; k < 100; ++k) {
                    double rho = c.rho_lo + (0.001 + 0.998 * unif(rng)) * c.length();
                    ASSERT_TRUE(body.contains(c.at(rho))) << to_string(body.kind());
                }
                const double pad = 10 * kTolChord * c.length();
                EXPECT_FALSE(body.contains(c.at(c.rho_hi + pad))) << to_string(body.kind());
                EXPECT_FALSE(body.contains(c.at(c.rho_lo - pad))) << to_string(body.kind());
            }
        }
    }
}

TEST(Chord, BisectionAgreesWithAnalytic) {
    Rng rng(7);
    for (const auto& body : analytic_fixtures()) {
        for (int trial = 0; trial < 40; ++trial) {
            Vector x = random_interior(body, rng);
            Vector u = standard_normal(body.dim(), rng);
            Chord exact = chord(body, x, u);
            Chord approx = chord_by_bisection(body, x, u);
            EXPECT_NEAR(approx.rho_hi, exact.rho_hi, kTolChord * std::abs(exact.rho_hi) * 1.0001);
            EXPECT_NEAR(approx.rho_lo, exact.rho_lo, kTolChord * std::abs(exact.rho_lo) * 1.0001);
            EXPECT_LE(approx.rho_hi, exact.rho_hi);
            EXPECT_GE(approx.rho_lo, exact.rho_lo);
        }
    }
}

TEST(Chord, BisectionCallBudget) {
    const int per_endpoint = 2 * static_cast<int>(std::ceil(std::log2(1.0 / kTolChord))) + 4;
    auto body = ConvexBody::user_oracle(3, 1.0, Vector::Zero(3), [](const Vector& x) { return x.norm() <= 0.9; });
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        Vector x = 0.5 * standard_normal(3, rng).normalized() * std::uniform_real_distribution<double>(0, 0.85)(rng);
        Vector u = standard_normal(3, rng);
        Chord c = chord(body, x, u);
        EXPECT_LE(c.oracle_calls, 2 * per_endpoint);
        EXPECT_GT(c.oracle_calls, 0);
    }
}

TEST(Diameter, MetadataBound) {
    EXPECT_DOUBLE_EQ(estimate_diameter(ConvexBody::ball(Vector::Zero(4), 1.0)), 2.0);
    for (int n : {1, 2, 5}) EXPECT_NEAR(estimate_diameter(ConvexBody::unit_box(n)), 2.0 * std::sqrt(n), 1e-12);
    auto user = ConvexBody::user_oracle(2, 5.0, Vector::Zero(2), [](const Vector& x) { return x.norm() <= 1; });
    EXPECT_DOUBLE_EQ(estimate_diameter(user), 10.0);
}

TEST(SupportMin, MatchesVertexMinimum) {
    Rng rng(3);
    for (const auto& body : analytic_fixtures()) {
        std::vector<Vector> candidates;
        if (body.kind() == BodyKind::box) {
            for (int mask = 0; mask < (1 << body.dim()); ++mask) {
                Vector v(body.dim());
                for (int i = 0; i < body.dim(); ++i) v(i) = (mask >> i & 1) ? body.box_hi()(i) : body.box_lo()(i);
                candidates.push_back(v);
            }
        } else if (body.is_polyhedral()) {
            candidates = enumerate_vertices(body.halfspace_matrix(), body.halfspace_rhs());
        } else {
            for (int k = 0; k < 20000; ++k)
                candidates.push_back(body.ball_center() + body.ball_radius() * standard_normal(body.dim(), rng).normalized());
        }
        for (int trial = 0; trial < 10; ++trial) {
            Vector theta = standard_normal(body.dim(), rng);
            double brute = std::numeric_limits<double>::infinity();
            for (const auto& v : candidates) brute = std::min(brute, theta.dot(v));
            const double exact = support_min(body, theta);
            EXPECT_LE(exact, brute + 1e-12);
            const double slack = body.kind() == BodyKind::ball ? 1e-2 * theta.norm() : 1e-12;
            EXPECT_GE(exact, brute - slack) << to_string(body.kind());
        }
    }
}

TEST(SupportMin, UserOracleScanIsCloseForBall) {
    auto body = ConvexBody::user_oracle(2, 1.0, vec({0.1, 0.0}), [](const Vector& x) { return x.norm() <= 1; });
    Vector theta = vec({3, -4});
    EXPECT_NEAR(support_min(body, theta), -5.0, 0.05);
    EXPECT_GE(support_min(body, theta), -5.0 - 1e-9);
}
