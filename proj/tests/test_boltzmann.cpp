#include "anneal_ipm/boltzmann.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace anneal_ipm;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

ConvexBody triangle() {
    Matrix a(3, 2);
    a << 1, 1, -1, 0, 0, -1;
    return ConvexBody::hpolytope(a, vec({1, 0, 0}));
}

std::vector<ConvexBody> quadrature_fixtures() {
    return {ConvexBody::unit_box(1), ConvexBody::unit_box(2), ConvexBody::simplex(2), triangle(),
            ConvexBody::ball(vec({0.1, -0.2}), 0.8)};
}

const double kE = std::exp(1.0);

}  // namespace

TEST(LogPartition, SpecExamples) {
    for (int n : {1, 2, 5, 12}) EXPECT_NEAR(log_partition({ConvexBody::unit_box(n), Vector::Zero(n)}), 0.0, 1e-15);
    // ∫₀¹ e^{-x} dx = 1 − e^{-1}.
    const double a1 = std::log(1 - 1 / kE);
    EXPECT_NEAR(a1, -0.458675, 1e-6);
    EXPECT_NEAR(log_partition({ConvexBody::unit_box(1), vec({1})}), a1, 1e-14);
    EXPECT_NEAR(log_partition({ConvexBody::unit_box(2), vec({1, 1})}), 2 * a1, 1e-14);
}

TEST(LogPartition, QuadratureRouteMatchesBoxFormulas) {
    BoltzmannOptions quad{true, {}};
    for (int n : {1, 2, 3}) {
        Rng rng(n);
        ConvexBody body = ConvexBody::box(Vector::Constant(n, -0.5), Vector::LinSpaced(n, 0.7, 1.3));
        for (int trial = 0; trial < 3; ++trial) {
            Vector theta = 3.0 * standard_normal(n, rng);
            BoltzmannParams p(body, theta);
            auto exact = moments(p);
            auto numeric = moments(p, quad);
            EXPECT_NEAR(numeric.log_partition, exact.log_partition, 1e-8 * std::max(1.0, std::abs(exact.log_partition)));
            EXPECT_LT((numeric.mean - exact.mean).norm(), 1e-8);
            EXPECT_LT((numeric.covariance - exact.covariance).norm(), 1e-8);
        }
    }
}

TEST(LogPartition, UnsupportedAboveThreeDimensions) {
    EXPECT_THROW(log_partition({ConvexBody::simplex(4), Vector::Zero(4)}), UnsupportedError);
    EXPECT_THROW(moments({ConvexBody::ball(Vector::Zero(5), 1.0), Vector::Zero(5)}), UnsupportedError);
    EXPECT_NO_THROW(log_partition({ConvexBody::unit_box(40), Vector::Ones(40)}));
}

TEST(Moments, SpecExamples) {
    auto sym = ConvexBody::box(vec({-1, -1}), vec({1, 1}));
    auto m = moments({sym, Vector::Zero(2)});
    EXPECT_NEAR(m.mean.norm(), 0.0, 1e-15);
    EXPECT_NEAR(m.covariance(0, 0), 1.0 / 3, 1e-14);
    EXPECT_NEAR(m.covariance(1, 1), 1.0 / 3, 1e-14);
    EXPECT_NEAR(m.covariance(0, 1), 0.0, 1e-15);

    // ∫ x e^{-x} / ∫ e^{-x} on [0,1] = (1 − 2/e)/(1 − 1/e).
    const double expected = (1 - 2 / kE) / (1 - 1 / kE);
    EXPECT_NEAR(expected, 0.418023, 1e-6);
    EXPECT_NEAR(moments({ConvexBody::unit_box(1), vec({1})}).mean(0), expected, 1e-14);
    EXPECT_NEAR(moments({ConvexBody::unit_box(1), vec({1})}, {true, {}}).mean(0), expected, 1e-10);

    for (double t : {1e-2, 1e-4, 1e-8}) {
        auto cold = moments({ConvexBody::unit_box(2), vec({1 / t, 0})});
        EXPECT_NEAR(cold.mean(0), t, 1e-12 + t * 1e-6);
        EXPECT_NEAR(cold.mean(1), 0.5, 1e-15);
    }
}

TEST(Moments, FiniteDifferenceDerivatives) {
    const double h = 1e-4;
    for (const auto& body : quadrature_fixtures()) {
        const int n = body.dim();
        Rng rng(40 + n);
        for (int trial = 0; trial < 2; ++trial) {
            Vector theta = 2.0 * standard_normal(n, rng);
            auto m = moments({body, theta});
            Vector grad(n);
            Matrix hess(n, n);
            for (int i = 0; i < n; ++i) {
                Vector e = Vector::Zero(n);
                e(i) = h;
                const double ap = log_partition({body, Vector(theta + e)});
                const double am = log_partition({body, Vector(theta - e)});
                grad(i) = (ap - am) / (2 * h);
                Vector mp = moments({body, Vector(theta + e)}).mean;
                Vector mm = moments({body, Vector(theta - e)}).mean;
                // ∂²A/∂θ_i∂θ_j = −∂mean_j/∂θ_i
                hess.row(i) = -(mp - mm).transpose() / (2 * h);
            }
            EXPECT_LT((grad + m.mean).cwiseAbs().maxCoeff(), 1e-5) << to_string(body.kind());
            EXPECT_LT((hess - m.covariance).cwiseAbs().maxCoeff(), 1e-4) << to_string(body.kind());
            // Hessian from second differences of A as well.
            for (int i = 0; i < n; ++i) {
                Vector e = Vector::Zero(n);
                e(i) = 1e-3;
                const double d2 = (log_partition({body, Vector(theta + e)}) - 2 * m.log_partition +
                                   log_partition({body, Vector(theta - e)})) /
                                  1e-6;
                EXPECT_NEAR(d2, m.covariance(i, i), 1e-4) << to_string(body.kind());
            }
        }
    }
}

TEST(Moments, CovarianceIsPsdAndMeanInterior) {
    Rng rng(5);
    for (const auto& body : quadrature_fixtures()) {
        for (int trial = 0; trial < 3; ++trial) {
            Vector theta = 5.0 * standard_normal(body.dim(), rng);
            auto m = moments({body, theta});
            EXPECT_LT((m.covariance - m.covariance.transpose()).norm(), 1e-15);
            Eigen::SelfAdjointEigenSolver<Matrix> eig(m.covariance);
            EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
            EXPECT_TRUE(body.contains(m.mean));
        }
    }
}

TEST(Moments, NormalizationIntegratesToOne) {
    Rng rng(8);
    auto fixtures = quadrature_fixtures();
    fixtures.push_back(ConvexBody::simplex(3));
    fixtures.push_back(ConvexBody::unit_box(3));
    for (const auto& body : fixtures) {
        Vector theta = 2.0 * standard_normal(body.dim(), rng);
        EXPECT_NEAR(normalization_integral({body, theta}), 1.0, 1e-6) << to_string(body.kind());
    }
}

TEST(Moments, ThreeDimensionalSimplexMatchesClosedForm) {
    // Uniform on the standard 3-simplex: volume 1/6, mean 1/4 per axis,
    // variance 3/80, covariance −1/80.
    auto m = moments({ConvexBody::simplex(3), Vector::Zero(3)});
    EXPECT_NEAR(m.log_partition, std::log(1.0 / 6), 1e-9);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(m.mean(i), 0.25, 1e-9);
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(m.covariance(i, j), i == j ? 3.0 / 80 : -1.0 / 80, 1e-9);
    }
}

TEST(Moments, GoldenFixturesFromIndependentIntegrator) {
    std::ifstream in(ANNEAL_IPM_FIXTURE_DIR "/boltzmann_golden.json");
    ASSERT_TRUE(in.good());
    auto doc = nlohmann::json::parse(in);
    ASSERT_GE(doc.size(), 5u);
    for (const auto& item : doc) {
        const auto& b = item["body"];
        ConvexBody body = b["kind"] == "simplex"
                              ? ConvexBody::simplex(b["n"].get<int>())
                              : ConvexBody::ball(Eigen::Map<const Vector>(b["center"].get<std::vector<double>>().data(), 2),
                                                 b["radius"].get<double>());
        auto th = item["theta"].get<std::vector<double>>();
        auto m = moments({body, Eigen::Map<const Vector>(th.data(), 2)});
        auto em = item["expected_mean"].get<std::vector<double>>();
        EXPECT_NEAR(m.log_partition, item["expected_A"].get<double>(), 1e-8);
        EXPECT_NEAR(m.mean(0), em[0], 1e-8);
        EXPECT_NEAR(m.mean(1), em[1], 1e-8);
    }
}

TEST(Bregman, SpecExamples) {
    auto unit = ConvexBody::unit_box(1);
    EXPECT_NEAR(bregman_divergence({unit, vec({1.5})}, vec({1.5})), 0.0, 1e-15);

    const double breg = bregman_divergence({unit, vec({1})}, vec({2}));
    const double kl = kl_divergence_direct(unit, vec({1}), vec({2}));
    EXPECT_GT(breg, 0.0);
    EXPECT_NEAR(breg, kl, 1e-6);

    auto sq = ConvexBody::unit_box(2);
    const double forward = bregman_divergence({sq, Vector::Zero(2)}, vec({0.1, 0.1}));
    const double backward = bregman_divergence({sq, vec({0.1, 0.1})}, Vector::Zero(2));
    EXPECT_GT(forward, 0.0);
    EXPECT_GT(backward, 0.0);
    EXPECT_NE(forward, backward);
    EXPECT_NEAR(forward, kl_divergence_direct(sq, Vector::Zero(2), vec({0.1, 0.1})), 1e-9);
}

TEST(Bregman, EqualsDirectKlOnQuadratureFixtures) {
    Rng rng(21);
    for (const auto& body : quadrature_fixtures()) {
        for (int trial = 0; trial < 2; ++trial) {
            Vector t1 = 2.0 * standard_normal(body.dim(), rng);
            Vector t2 = t1 + standard_normal(body.dim(), rng);
            const double breg = bregman_divergence({body, t1}, t2);
            EXPECT_GE(breg, 0.0);
            EXPECT_NEAR(breg, kl_divergence_direct(body, t1, t2), 1e-6) << to_string(body.kind());
        }
    }
}

TEST(L2Norm, SpecExamples) {
    auto unit = ConvexBody::unit_box(1);
    EXPECT_NEAR(l2_ratio_norm({unit, vec({3})}, 0.0), 1.0, 1e-14);
    const double ident = l2_ratio_norm({unit, vec({4})}, 0.25);
    const double direct = l2_norm_direct(unit, vec({4}), vec({5}));
    EXPECT_NEAR(ident, direct, 1e-6 * ident);
    EXPECT_GT(ident, 1.0);
}

TEST(L2Norm, IdentityMatchesDirectIntegral) {
    Rng rng(33);
    for (const auto& body : quadrature_fixtures()) {
        for (int trial = 0; trial < 3; ++trial) {
            Vector ta = 3.0 * standard_normal(body.dim(), rng);
            Vector tb = ta * (1.0 + 0.3 * std::uniform_real_distribution<double>(-1, 1)(rng));
            const double ident = l2_norm(body, ta, tb);
            EXPECT_NEAR(ident, l2_norm_direct(body, ta, tb), 1e-6 * ident) << to_string(body.kind());
            EXPECT_GE(ident, 1.0 - 1e-12);
        }
    }
}

TEST(L2Norm, EntropicScheduleStepStaysBelowTen) {
    for (int n : {1, 2}) {
        auto body = ConvexBody::unit_box(n);
        const double nu = n;
        const double gamma = 1.0 / (4 * std::sqrt(nu));
        Vector dir = Vector::LinSpaced(n, 1.0, 0.5);
        for (double t : {2.0, 1.0, 0.3, 0.1, 0.03, 0.01}) {
            const double v = l2_ratio_norm({body, Vector(dir / t)}, gamma);
            EXPECT_LE(v, 10.0);
        }
    }
}

TEST(GapBound, ExpectedSuboptimalityAtMostNTimesTemperature) {
    std::vector<std::pair<ConvexBody, Vector>> cases = {
        {ConvexBody::unit_box(1), vec({1})},       {ConvexBody::unit_box(1), vec({-2})},
        {ConvexBody::unit_box(2), vec({1, 0})},    {ConvexBody::unit_box(2), vec({1, -1})},
        {ConvexBody::simplex(2), vec({1, 0})},     {ConvexBody::simplex(2), vec({-1, -1})},
        {ConvexBody::ball(Vector::Zero(2), 1.0), vec({0.6, 0.8})},
    };
    for (const auto& [body, obj] : cases) {
        const double opt = support_min(body, obj);
        for (double t : {1.0, 0.3, 0.1, 0.03}) {
            auto m = moments({body, Vector(obj / t)});
            // Vertex minimizers on intervals make the bound tight up to e^{-L/t}; only roundoff is allowed.
            const double roundoff = 8 * std::numeric_limits<double>::epsilon() * (std::abs(obj.dot(m.mean)) + std::abs(opt));
            EXPECT_LE(obj.dot(m.mean) - opt, body.dim() * t + roundoff) << to_string(body.kind()) << " t=" << t;
            EXPECT_GE(obj.dot(m.mean) - opt, 0.0);
        }
    }
}

TEST(Isotropy, SpecExamples) {
    Rng rng(12);
    Matrix ref(2, 2);
    ref << 2.0, 0.5, 0.5, 1.0;
    Matrix root = spd_sqrt(ref);
    std::vector<Vector> gauss;
    for (int i = 0; i < 200000; ++i) gauss.push_back(root * standard_normal(2, rng));
    EXPECT_LT(check_isotropy(gauss, ref), 1.02);

    std::uniform_real_distribution<double> unif(-1, 1);
    std::vector<Vector> flat;
    for (int i = 0; i < 200000; ++i) flat.push_back(vec({unif(rng)}));
    EXPECT_NEAR(check_isotropy(flat, Matrix::Identity(1, 1)), 3.0, 0.05);

    // Whitened by the true covariance diag(3, 1/3 + 1/12), m = 100n.
    std::vector<Vector> raw;
    for (int i = 0; i < 200; ++i) raw.push_back(vec({unif(rng) * 3, unif(rng) + 0.5 * unif(rng)}));
    Matrix truth = Matrix::Zero(2, 2);
    truth(0, 0) = 3.0;
    truth(1, 1) = 1.0 / 3 + 1.0 / 12;
    Matrix w = spd_inverse_sqrt(truth);
    std::vector<Vector> white;
    for (const auto& x : raw) white.push_back(w * x);
    EXPECT_LE(check_isotropy(white, Matrix::Identity(2, 2)), 2.0);
}

TEST(Isotropy, Errors) {
    std::vector<Vector> degenerate;
    for (int i = 0; i < 10; ++i) degenerate.push_back(vec({double(i), 2.0 * i}));
    EXPECT_THROW(check_isotropy(degenerate, Matrix::Identity(2, 2)), NumericalError);
    EXPECT_THROW(check_isotropy({vec({1, 2}), vec({2, 1})}, Matrix::Identity(2, 2)), InputError);
}
