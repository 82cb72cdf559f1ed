#pragma once

// Convex bodies behind a uniform membership oracle, with chord computation
// (the intersection of a line with the body) done analytically where the
// geometry is known and by bisection on the oracle otherwise.

#include "anneal_ipm/core.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace anneal_ipm {

enum class BodyKind { box, ball, simplex, hpolytope, user_oracle };

inline const char* to_string(BodyKind k) {
    switch (k) {
        case BodyKind::box: return "box";
        case BodyKind::ball: return "ball";
        case BodyKind::simplex: return "simplex";
        case BodyKind::hpolytope: return "hpolytope";
        case BodyKind::user_oracle: return "user-oracle";
    }
    return "unknown";
}

/// Relative tolerance of bisection chords.
inline constexpr double kTolChord = 1e-9;

/// Directions shorter than this are rejected.
inline constexpr double kDirectionFloor = 1e-14;

using MembershipOracle = std::function<bool(const Vector&)>;

/// Line segment {x + ρu : ρ ∈ [rho_lo, rho_hi]} = line ∩ K.
struct Chord {
    Vector x;
    Vector u;
    double rho_lo = 0.0;
    double rho_hi = 0.0;
    /// Membership queries spent locating the endpoints (zero when analytic).
    int oracle_calls = 0;

    double length() const { return rho_hi - rho_lo; }
    Vector at(double rho) const { return x + rho * u; }
};

/// Immutable convex body. Every body knows its dimension, an interior point
/// x0, and a radius bound R with K ⊂ {‖x‖ ≤ R}. Build one with the factory
/// functions below; user oracles must be thread-safe.
class ConvexBody {
public:
    static ConvexBody box(Vector lo, Vector hi, std::optional<Vector> x0 = std::nullopt);
    static ConvexBody unit_box(int n) { return box(Vector::Zero(n), Vector::Ones(n)); }
    static ConvexBody ball(Vector center, double radius);
    /// Standard simplex {x ≥ 0, Σx ≤ 1}.
    static ConvexBody simplex(int n);
    /// {x : A x ≤ b}. x0 and R default to the vertex centroid and the largest
    /// vertex norm (vertex enumeration; practical only for small instances).
    static ConvexBody hpolytope(Matrix a, Vector b, std::optional<Vector> x0 = std::nullopt,
                                std::optional<double> radius = std::nullopt);
    static ConvexBody user_oracle(int n, double radius, Vector x0, MembershipOracle oracle);

    BodyKind kind() const { return kind_; }
    int dim() const { return n_; }
    double radius_bound() const { return radius_; }
    const Vector& interior_point() const { return x0_; }

    const Matrix& halfspace_matrix() const { return a_; }
    const Vector& halfspace_rhs() const { return b_; }
    const Vector& box_lo() const { return lo_; }
    const Vector& box_hi() const { return hi_; }
    const Vector& ball_center() const { return center_; }
    double ball_radius() const { return ball_r_; }

    bool is_polyhedral() const { return kind_ == BodyKind::hpolytope || kind_ == BodyKind::simplex; }
    bool has_analytic_chord() const { return kind_ != BodyKind::user_oracle; }

    bool contains(const Vector& x) const;

private:
    ConvexBody() = default;
    void validate_interior() const;

    BodyKind kind_ = BodyKind::box;
    int n_ = 0;
    double radius_ = 0.0;
    Vector x0_;
    Matrix a_;
    Vector b_;
    Vector lo_, hi_;
    Vector center_;
    double ball_r_ = 0.0;
    std::shared_ptr<const MembershipOracle> oracle_;
};

inline bool contains(const ConvexBody& body, const Vector& x) { return body.contains(x); }

// ─── Vertex enumeration ────────────────────────────────────────────────────

namespace detail {

/// Calls visit(indices) for every k-subset of {0..m-1} in lexicographic order.
template <class Visit>
void for_each_subset(int m, int k, Visit&& visit) {
    if (k > m || k <= 0) return;
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
        visit(idx);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - k + i) --i;
        if (i < 0) return;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

inline double binomial(int m, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (m - k + i) / i;
    return r;
}

}  // namespace detail

/// Vertices of {A x ≤ b}: every n-subset of rows whose square system is
/// nonsingular and whose solution satisfies all rows to `tol`.
inline std::vector<Vector> enumerate_vertices(const Matrix& a, const Vector& b, double tol = 1e-9,
                                              double max_subsets = 5e6) {
    const int m = static_cast<int>(a.rows());
    const int n = static_cast<int>(a.cols());
    if (detail::binomial(m, n) > max_subsets)
        throw UnsupportedError("vertex enumeration: too many row subsets");
    std::vector<Vector> out;
    Matrix sub(n, n);
    Vector rhs(n);
    detail::for_each_subset(m, n, [&](const std::vector<int>& rows) {
        for (int i = 0; i < n; ++i) {
            sub.row(i) = a.row(rows[static_cast<std::size_t>(i)]);
            rhs(i) = b(rows[static_cast<std::size_t>(i)]);
        }
        Eigen::FullPivLU<Matrix> lu(sub);
        if (!lu.isInvertible()) return;
        Vector v = lu.solve(rhs);
        const double scale = 1.0 + b.cwiseAbs().maxCoeff();
        if (((a * v - b).array() <= tol * scale).all()) {
            for (const auto& w : out)
                if ((w - v).norm() <= 1e-9 * (1.0 + v.norm())) return;
            out.push_back(std::move(v));
        }
    });
    return out;
}

// ─── Factories ─────────────────────────────────────────────────────────────

inline void ConvexBody::validate_interior() const {
    if (x0_.size() != n_) throw InputError("interior point has wrong dimension");
    if (!contains(x0_)) throw PreconditionError("declared interior point is not in the body");
    if (!(radius_ > 0.0)) throw InputError("radius bound must be positive");
}

inline ConvexBody ConvexBody::box(Vector lo, Vector hi, std::optional<Vector> x0) {
    if (lo.size() != hi.size() || lo.size() == 0) throw InputError("box bounds must share a positive dimension");
    if (!((hi - lo).array() > 0.0).all()) throw InputError("box needs lo < hi on every axis");
    ConvexBody b;
    b.kind_ = BodyKind::box;
    b.n_ = static_cast<int>(lo.size());
    b.radius_ = lo.cwiseAbs().cwiseMax(hi.cwiseAbs()).norm();
    b.x0_ = x0 ? *x0 : Vector(0.5 * (lo + hi));
    b.lo_ = std::move(lo);
    b.hi_ = std::move(hi);
    b.validate_interior();
    return b;
}

inline ConvexBody ConvexBody::ball(Vector center, double radius) {
    if (center.size() == 0) throw InputError("ball needs a positive dimension");
    if (!(radius > 0.0)) throw InputError("ball radius must be positive");
    ConvexBody b;
    b.kind_ = BodyKind::ball;
    b.n_ = static_cast<int>(center.size());
    b.radius_ = center.norm() + radius;
    b.x0_ = center;
    b.center_ = std::move(center);
    b.ball_r_ = radius;
    b.validate_interior();
    return b;
}

inline ConvexBody ConvexBody::simplex(int n) {
    if (n <= 0) throw InputError("simplex needs a positive dimension");
    Matrix a(n + 1, n);
    a.topRows(n) = -Matrix::Identity(n, n);
    a.row(n).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    rhs(n) = 1.0;
    ConvexBody b;
    b.kind_ = BodyKind::simplex;
    b.n_ = n;
    b.a_ = std::move(a);
    b.b_ = std::move(rhs);
    b.radius_ = 1.0;
    b.x0_ = Vector::Constant(n, 1.0 / (n + 1));
    b.validate_interior();
    return b;
}

inline ConvexBody ConvexBody::hpolytope(Matrix a, Vector rhs, std::optional<Vector> x0,
                                        std::optional<double> radius) {
    if (a.rows() != rhs.size() || a.cols() == 0 || a.rows() == 0)
        throw InputError("halfspace matrix and rhs disagree in size");
    ConvexBody b;
    b.kind_ = BodyKind::hpolytope;
    b.n_ = static_cast<int>(a.cols());
    b.a_ = std::move(a);
    b.b_ = std::move(rhs);
    if (!x0 || !radius) {
        auto verts = enumerate_vertices(b.a_, b.b_);
        if (static_cast<int>(verts.size()) < b.n_ + 1)
            throw InputError("polytope is empty, unbounded or lower-dimensional");
        if (!radius) {
            double r = 0.0;
            for (const auto& v : verts) r = std::max(r, v.norm());
            radius = r;
        }
        if (!x0) {
            Vector c = Vector::Zero(b.n_);
            for (const auto& v : verts) c += v;
            x0 = Vector(c / static_cast<double>(verts.size()));
        }
    }
    b.radius_ = *radius;
    b.x0_ = *x0;
    b.validate_interior();
    if (((b.b_ - b.a_ * b.x0_).array() <= 0.0).any())
        throw PreconditionError("interior point lies on a facet");
    return b;
}

inline ConvexBody ConvexBody::user_oracle(int n, double radius, Vector x0, MembershipOracle oracle) {
    if (n <= 0) throw InputError("user oracle needs a positive dimension");
    if (!oracle) throw InputError("user oracle is empty");
    ConvexBody b;
    b.kind_ = BodyKind::user_oracle;
    b.n_ = n;
    b.radius_ = radius;
    b.x0_ = std::move(x0);
    b.oracle_ = std::make_shared<const MembershipOracle>(std::move(oracle));
    b.validate_interior();
    return b;
}

inline bool ConvexBody::contains(const Vector& x) const {
    require_dim(x, n_, "contains");
    switch (kind_) {
        case BodyKind::box:
            return ((x - lo_).array() >= 0.0).all() && ((hi_ - x).array() >= 0.0).all();
        case BodyKind::ball:
            return (x - center_).squaredNorm() <= ball_r_ * ball_r_;
        case BodyKind::simplex:
        case BodyKind::hpolytope:
            return ((a_ * x - b_).array() <= 0.0).all();
        case BodyKind::user_oracle:
            return (*oracle_)(x);
    }
    return false;
}

// ─── Chords ────────────────────────────────────────────────────────────────

namespace detail {

inline void check_chord_args(const ConvexBody& body, const Vector& x, const Vector& u) {
    require_dim(x, body.dim(), "chord point");
    require_dim(u, body.dim(), "chord direction");
    if (!(u.norm() > kDirectionFloor)) throw InputError("chord direction is degenerate");
    if (!body.contains(x)) throw PreconditionError("chord base point is not in the body");
}

/// Largest ρ ≥ 0 with x + ρu inside, located by bisection. The ball
/// {‖y‖ ≤ R} contains K, so ρ = (R + ‖x‖)/‖u‖ is outside without a query.
inline double bisect_endpoint(const ConvexBody& body, const Vector& x, const Vector& u, double tol,
                              int& calls) {
    const int budget = 2 * static_cast<int>(std::ceil(std::log2(1.0 / tol))) + 4;
    double in = 0.0;
    double out = (body.radius_bound() + x.norm()) / u.norm() * (1.0 + 1e-9) + 1e-300;
    int used = 0;
    while (used < budget && (out - in) > tol * in) {
        const double mid = 0.5 * (in + out);
        ++used;
        if (body.contains(x + mid * u))
            in = mid;
        else
            out = mid;
    }
    calls += used;
    return in;
}

}  // namespace detail

/// Chord located purely through membership queries; used for user oracles
/// and as the cross-check for the analytic routes.
inline Chord chord_by_bisection(const ConvexBody& body, const Vector& x, const Vector& u,
                                double tol = kTolChord) {
    detail::check_chord_args(body, x, u);
    Chord c{x, u, 0.0, 0.0, 0};
    c.rho_hi = detail::bisect_endpoint(body, x, u, tol, c.oracle_calls);
    c.rho_lo = -detail::bisect_endpoint(body, x, Vector(-u), tol, c.oracle_calls);
    return c;
}

inline Chord chord(const ConvexBody& body, const Vector& x, const Vector& u) {
    detail::check_chord_args(body, x, u);
    Chord c{x, u, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 0};
    switch (body.kind()) {
        case BodyKind::box: {
            for (int i = 0; i < body.dim(); ++i) {
                if (u(i) == 0.0) continue;
                double r1 = (body.box_lo()(i) - x(i)) / u(i);
                double r2 = (body.box_hi()(i) - x(i)) / u(i);
                if (r1 > r2) std::swap(r1, r2);
                c.rho_lo = std::max(c.rho_lo, r1);
                c.rho_hi = std::min(c.rho_hi, r2);
            }
            break;
        }
        case BodyKind::ball: {
            const Vector d = x - body.ball_center();
            const double qa = u.squaredNorm();
            const double qb = u.dot(d);
            const double qc = d.squaredNorm() - body.ball_radius() * body.ball_radius();
            const double disc = std::sqrt(std::max(qb * qb - qa * qc, 0.0));
            // Stable pairing of the two roots.
            const double q = -(qb + std::copysign(disc, qb));
            double r1 = q / qa;
            double r2 = q != 0.0 ? qc / q : -r1;
            if (r1 > r2) std::swap(r1, r2);
            c.rho_lo = std::min(r1, 0.0);
            c.rho_hi = std::max(r2, 0.0);
            break;
        }
        case BodyKind::simplex:
        case BodyKind::hpolytope: {
            const Vector slack = (body.halfspace_rhs() - body.halfspace_matrix() * x).cwiseMax(0.0);
            const Vector au = body.halfspace_matrix() * u;
            for (Eigen::Index i = 0; i < au.size(); ++i) {
                if (au(i) > 0.0)
                    c.rho_hi = std::min(c.rho_hi, slack(i) / au(i));
                else if (au(i) < 0.0)
                    c.rho_lo = std::max(c.rho_lo, slack(i) / au(i));
            }
            break;
        }
        case BodyKind::user_oracle:
            return chord_by_bisection(body, x, u);
    }
    if (!std::isfinite(c.rho_lo) || !std::isfinite(c.rho_hi)) throw InputError("body is unbounded along direction");
    return c;
}

/// Upper bound on diam(K) from the declared radius bound.
inline double estimate_diameter(const ConvexBody& body) { return 2.0 * body.radius_bound(); }

/// min over K of θᵀx. Exact for box, ball and small polytopes; otherwise a
/// directional scan from x0, which can only overestimate the minimum.
inline double support_min(const ConvexBody& body, const Vector& theta) {
    require_dim(theta, body.dim(), "support_min");
    switch (body.kind()) {
        case BodyKind::box:
            return theta.cwiseProduct(body.box_lo()).cwiseMin(theta.cwiseProduct(body.box_hi())).sum();
        case BodyKind::ball:
            return theta.dot(body.ball_center()) - body.ball_radius() * theta.norm();
        case BodyKind::simplex:
            return std::min(0.0, theta.minCoeff());
        case BodyKind::hpolytope:
            if (detail::binomial(static_cast<int>(body.halfspace_matrix().rows()), body.dim()) <= 2e5) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& v : enumerate_vertices(body.halfspace_matrix(), body.halfspace_rhs()))
                    best = std::min(best, theta.dot(v));
                return best;
            }
            [[fallthrough]];
        case BodyKind::user_oracle: {
            const Vector& x0 = body.interior_point();
            double best = theta.dot(x0);
            if (theta.norm() == 0.0) return best;
            Vector p = x0;
            // Greedy chords: along -θ, then along -θ projected off each axis.
            for (int sweep = 0; sweep < 4; ++sweep) {
                Chord c = chord(body, p, -theta);
                p = c.at(c.rho_hi * (1.0 - 1e-12));
                for (int i = 0; i < body.dim(); ++i) {
                    Vector e = Vector::Zero(body.dim());
                    e(i) = theta(i) > 0 ? -1.0 : 1.0;
                    if (theta(i) == 0.0) continue;
                    Chord ci = chord(body, p, e);
                    p = ci.at(ci.rho_hi * (1.0 - 1e-12));
                }
            }
            return std::min(best, theta.dot(p));
        }
    }
    return theta.dot(body.interior_point());
}

}  // namespace anneal_ipm
