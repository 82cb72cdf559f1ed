#pragma once

// Ground truth for the Boltzmann family P_θ(x) = exp(−θᵀx − A(θ)) on K:
// log-partition, mean and covariance, divergences and the ℓ₂ distribution
// norm. Boxes are handled analytically in any dimension (the density is a
// product of truncated exponentials); other bodies go through polar
// quadrature and are limited to n ≤ 3.

#include "anneal_ipm/quadrature.hpp"

namespace anneal_ipm {

struct BoltzmannParams {
    BoltzmannParams(const ConvexBody& b, Vector t) : body_(&b), theta(std::move(t)) {
        require_dim(theta, b.dim(), "theta");
    }
    const ConvexBody& body() const { return *body_; }

private:
    const ConvexBody* body_;

public:
    Vector theta;
};

struct MomentSummary {
    Vector mean;        // x(θ) = −∇A(θ)
    Matrix covariance;  // ∇²A(θ)
    double log_partition = 0.0;
};

struct BoltzmannOptions {
    /// Skip the analytic box formulas and integrate numerically.
    bool force_quadrature = false;
    QuadratureOptions quadrature{};
};

namespace detail {

struct IntervalMoments {
    double log_partition, mean, variance;
};

/// Truncated exponential on [lo, hi] with density ∝ exp(−θx).
inline IntervalMoments interval_moments(double theta, double lo, double hi) {
    const double len = hi - lo;
    const double s = std::abs(theta);
    const double u = 0.5 * s * len;
    double log_z, m, var;
    if (u < 1e-2) {
        // log(sinh u / u) = u²/6 − u⁴/180 + u⁶/2835 − …
        const double u2 = u * u;
        log_z = std::log(len) - s * len / 2 + u2 / 6 - u2 * u2 / 180 + u2 * u2 * u2 / 2835;
        m = 0.5 * len - 0.5 * len * (u / 3 - u * u2 / 45 + 2 * u * u2 * u2 / 945);
        var = 0.25 * len * len * (1.0 / 3 - u2 / 15 + 2 * u2 * u2 / 189);
    } else {
        const double e = std::exp(-s * len);
        const double em1 = -std::expm1(-s * len);  // 1 − e^{−sL}
        log_z = std::log(em1) - std::log(s);
        m = 1.0 / s - len * e / em1;
        var = 1.0 / (s * s) - len * len * e / (em1 * em1);
    }
    if (theta >= 0)
        return {-theta * lo + log_z, lo + m, var};
    return {-theta * hi + log_z, hi - m, var};
}

inline MomentSummary box_moments(const ConvexBody& body, const Vector& theta) {
    const int n = body.dim();
    MomentSummary s{Vector(n), Matrix::Zero(n, n), 0.0};
    for (int i = 0; i < n; ++i) {
        auto im = interval_moments(theta(i), body.box_lo()(i), body.box_hi()(i));
        s.log_partition += im.log_partition;
        s.mean(i) = im.mean;
        s.covariance(i, i) = im.variance;
    }
    return s;
}

inline bool use_box_formulas(const ConvexBody& body, const BoltzmannOptions& opt) {
    return body.kind() == BodyKind::box && !opt.force_quadrature;
}

inline void require_quadrature_dim(const ConvexBody& body) {
    if (body.dim() > 3)
        throw UnsupportedError("Boltzmann quadrature supports n <= 3 on non-box bodies (n = " +
                               std::to_string(body.dim()) + ")");
}

}  // namespace detail

/// A(θ) = log ∫_K exp(−θᵀx) dx.
inline double log_partition(const BoltzmannParams& p, const BoltzmannOptions& opt = {}) {
    const ConvexBody& body = p.body();
    if (detail::use_box_formulas(body, opt)) return detail::box_moments(body, p.theta).log_partition;
    detail::require_quadrature_dim(body);
    const double shift = support_min(body, p.theta);
    Vector z = integrate_over_body(
        body, 1,
        [&](const Vector& x) {
            Vector v(1);
            v(0) = std::exp(-p.theta.dot(x) + shift);
            return v;
        },
        opt.quadrature);
    return std::log(z(0)) - shift;
}

/// Mean, covariance and A(θ). The quadrature route makes two sweeps: the
/// first for the normalizer and mean, the second for moments centered at
/// that mean, which avoids cancellation when P_θ is concentrated.
inline MomentSummary moments(const BoltzmannParams& p, const BoltzmannOptions& opt = {}) {
    const ConvexBody& body = p.body();
    if (detail::use_box_formulas(body, opt)) return detail::box_moments(body, p.theta);
    detail::require_quadrature_dim(body);
    const int n = body.dim();
    const Vector& x0 = body.interior_point();
    const double shift = support_min(body, p.theta);

    Vector first = integrate_over_body(
        body, n + 1,
        [&](const Vector& x) {
            Vector v(n + 1);
            const double w = std::exp(-p.theta.dot(x) + shift);
            v(0) = w;
            v.tail(n) = w * (x - x0);
            return v;
        },
        opt.quadrature);
    MomentSummary s;
    s.log_partition = std::log(first(0)) - shift;
    s.mean = x0 + first.tail(n) / first(0);

    const int packed = n * (n + 1) / 2;
    Vector second = integrate_over_body(
        body, packed,
        [&](const Vector& x) {
            Vector v(packed);
            const double w = std::exp(-p.theta.dot(x) + shift);
            const Vector d = x - s.mean;
            int k = 0;
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) v(k++) = w * d(i) * d(j);
            return v;
        },
        opt.quadrature);
    s.covariance = Matrix(n, n);
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            s.covariance(i, j) = s.covariance(j, i) = second(k++) / first(0);
        }
    return s;
}

/// D_A(θ′, θ) = A(θ′) − A(θ) − ∇A(θ)ᵀ(θ′ − θ), which equals KL(P_θ ‖ P_θ′).
inline double bregman_divergence(const BoltzmannParams& p, const Vector& theta_prime,
                                 const BoltzmannOptions& opt = {}) {
    require_dim(theta_prime, p.body().dim(), "theta_prime");
    const MomentSummary m = moments(p, opt);
    const double a_prime = log_partition(BoltzmannParams(p.body(), theta_prime), opt);
    return a_prime - m.log_partition + m.mean.dot(theta_prime - p.theta);
}

/// KL(P_θ ‖ P_θ′) = ∫ P_θ log(P_θ/P_θ′), integrated pointwise by quadrature
/// (never through the box formulas), as an independent route to the Bregman form.
inline double kl_divergence_direct(const ConvexBody& body, const Vector& theta, const Vector& theta_prime,
                                   const QuadratureOptions& quad = {}) {
    detail::require_quadrature_dim(body);
    BoltzmannOptions forced{true, quad};
    const double a = log_partition(BoltzmannParams(body, theta), forced);
    const double a_prime = log_partition(BoltzmannParams(body, theta_prime), forced);
    Vector kl = integrate_over_body(
        body, 1,
        [&](const Vector& x) {
            const double log_p = -theta.dot(x) - a;
            const double log_q = -theta_prime.dot(x) - a_prime;
            Vector v(1);
            v(0) = std::exp(log_p) * (log_p - log_q);
            return v;
        },
        quad);
    return kl(0);
}

/// ‖P_a / P_b‖ = ∫ (dP_a/dP_b) dP_a = exp(A(2θ_a − θ_b) − 2A(θ_a) + A(θ_b)).
inline double l2_norm(const ConvexBody& body, const Vector& theta_a, const Vector& theta_b,
                      const BoltzmannOptions& opt = {}) {
    const double aa = log_partition(BoltzmannParams(body, theta_a), opt);
    const double ab = log_partition(BoltzmannParams(body, theta_b), opt);
    const double ac = log_partition(BoltzmannParams(body, Vector(2.0 * theta_a - theta_b)), opt);
    return std::exp(ac - 2.0 * aa + ab);
}

/// Same quantity as l2_norm by direct quadrature of the pointwise ratio
/// integrand P_a(x)²/P_b(x).
inline double l2_norm_direct(const ConvexBody& body, const Vector& theta_a, const Vector& theta_b,
                             const QuadratureOptions& quad = {}) {
    detail::require_quadrature_dim(body);
    BoltzmannOptions forced{true, quad};
    const double aa = log_partition(BoltzmannParams(body, theta_a), forced);
    const double ab = log_partition(BoltzmannParams(body, theta_b), forced);
    Vector r = integrate_over_body(
        body, 1,
        [&](const Vector& x) {
            const double log_pa = -theta_a.dot(x) - aa;
            const double log_pb = -theta_b.dot(x) - ab;
            Vector v(1);
            v(0) = std::exp(2.0 * log_pa - log_pb);
            return v;
        },
        quad);
    return r(0);
}

/// ‖P_θ / P_{(1+γ)θ}‖ = exp(A((1+γ)θ) − 2A(θ) + A((1−γ)θ)).
inline double l2_ratio_norm(const BoltzmannParams& p, double gamma, const BoltzmannOptions& opt = {}) {
    return l2_norm(p.body(), p.theta, Vector((1.0 + gamma) * p.theta), opt);
}

/// ∫_K P_θ dx, which should be 1.
inline double normalization_integral(const BoltzmannParams& p, const QuadratureOptions& quad = {}) {
    const double a = log_partition(p, BoltzmannOptions{false, quad});
    Vector r = integrate_over_body(
        p.body(), 1,
        [&](const Vector& x) {
            Vector v(1);
            v(0) = std::exp(-p.theta.dot(x) - a);
            return v;
        },
        quad);
    return r(0);
}

/// Smallest C ≥ 1 such that the centered empirical second moment in every
/// direction v lies within [1/C, C]·vᵀΣ_ref v. Computed from the generalized
/// eigenvalues of (Σ̂, Σ_ref), i.e. the supremum over all directions.
inline double check_isotropy(const std::vector<Vector>& samples, const Matrix& reference_cov) {
    if (samples.empty()) throw InputError("isotropy check needs samples");
    const Eigen::Index n = samples.front().size();
    if (reference_cov.rows() != n || reference_cov.cols() != n)
        throw InputError("reference covariance has the wrong shape");
    if (static_cast<Eigen::Index>(samples.size()) < n + 1)
        throw InputError("isotropy check needs at least n + 1 samples");
    const Matrix s = empirical_covariance(samples);
    Eigen::SelfAdjointEigenSolver<Matrix> own(s);
    const double top = own.eigenvalues().maxCoeff();
    if (!(own.eigenvalues().minCoeff() > 1e-12 * std::max(top, 1e-300)))
        throw NumericalError("sample set is rank deficient");
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> gen(s, reference_cov);
    if (gen.info() != Eigen::Success) throw NumericalError("reference covariance is not positive definite");
    const double lo = gen.eigenvalues().minCoeff();
    const double hi = gen.eigenvalues().maxCoeff();
    return std::max({1.0, hi, 1.0 / lo});
}

}  // namespace anneal_ipm
