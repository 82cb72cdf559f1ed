#pragma once

// Deterministic integration over low-dimensional convex bodies.
//
// The body is swept in polar coordinates about its interior point x0: every
// direction u contributes ∫_0^{r(u)} f(x0 + ρu) ρ^{n-1} dρ where r(u) is the
// chord endpoint, so the geometry enters only through exact (or bisection)
// chords and never through a clipped grid. Each level is a globally adaptive
// Gauss–Kronrod (7/15) rule on vector-valued integrands.

#include "anneal_ipm/bodies.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <array>
#include <queue>

namespace anneal_ipm {

struct QuadratureOptions {
    double rel_tol = 1e-11;
    double abs_tol = 1e-300;
    int max_segments = 4000;
    /// Per-component absolute tolerances; empty means abs_tol everywhere.
    Vector abs_floor{};
    /// A component also counts as converged once its error is below
    /// cross_rel_tol times the largest component magnitude.
    double cross_rel_tol = 0.0;
};

/// Relative size, against the largest component, below which a component is
/// resolved to an absolute rather than relative tolerance.
inline constexpr double kCrossComponentFloor = 1e-4;

namespace detail {

struct GkSegment {
    double a, b;
    Vector value;
    Vector error;
    double score;
    bool operator<(const GkSegment& o) const { return score < o.score; }
};

template <class F>
void gk15(const F& f, double a, double b, Vector& value, Vector& error) {
    using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
    using Gauss = boost::math::quadrature::gauss<double, 7>;
    const auto& xk = Kronrod::abscissa();
    const auto& wk = Kronrod::weights();
    const auto& wg = Gauss::weights();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    std::array<Vector, 15> fv;
    fv[0] = f(mid);
    for (std::size_t i = 1; i < xk.size(); ++i) {
        fv[2 * i - 1] = f(mid - half * xk[i]);
        fv[2 * i] = f(mid + half * xk[i]);
    }
    Vector kron = wk[0] * fv[0];
    Vector gauss = wg[0] * fv[0];
    for (std::size_t i = 1; i < xk.size(); ++i) {
        kron += wk[i] * (fv[2 * i - 1] + fv[2 * i]);
        if (i % 2 == 0) gauss += wg[i / 2] * (fv[2 * i - 1] + fv[2 * i]);
    }
    // QUADPACK error heuristic: |K − G| scaled against the mean absolute deviation.
    const Vector avg = 0.5 * kron;
    Vector resasc = wk[0] * (fv[0] - avg).cwiseAbs();
    for (std::size_t i = 1; i < xk.size(); ++i)
        resasc += wk[i] * ((fv[2 * i - 1] - avg).cwiseAbs() + (fv[2 * i] - avg).cwiseAbs());
    value = half * kron;
    error = (half * (kron - gauss)).cwiseAbs();
    resasc *= std::abs(half);
    for (Eigen::Index j = 0; j < error.size(); ++j)
        if (resasc(j) > 0 && error(j) > 0) error(j) = resasc(j) * std::min(1.0, std::pow(200 * error(j) / resasc(j), 1.5));
}

}  // namespace detail

/// Globally adaptive Gauss–Kronrod for f: ℝ → ℝ^k on [a, b], optionally
/// pre-split at `breaks` (kinks of the integrand). Converges when every
/// component's accumulated error is below max(abs_tol, rel_tol·|I_i|).
template <class F>
Vector integrate_adaptive(const F& f, double a, double b, const QuadratureOptions& opt,
                          const std::vector<double>& breaks = {}) {
    std::vector<double> cuts{a};
    for (double t : breaks)
        if (t > a && t < b) cuts.push_back(t);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());

    std::priority_queue<detail::GkSegment> heap;
    Vector total, err_total;
    auto push = [&](double lo, double hi) {
        detail::GkSegment s{lo, hi, {}, {}, 0.0};
        detail::gk15(f, lo, hi, s.value, s.error);
        if (total.size() == 0) {
            total = Vector::Zero(s.value.size());
            err_total = Vector::Zero(s.value.size());
        }
        total += s.value;
        err_total += s.error;
        s.score = opt.abs_floor.size() == s.error.size()
                      ? s.error.cwiseQuotient(opt.abs_floor.cwiseMax(1e-300)).maxCoeff()
                      : s.error.maxCoeff();
        heap.push(std::move(s));
    };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i + 1] > cuts[i]) push(cuts[i], cuts[i + 1]);
    if (heap.empty()) return Vector();

    const bool floors = opt.abs_floor.size() == total.size();
    auto converged = [&] {
        const double cross = opt.cross_rel_tol * total.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < total.size(); ++i) {
            const double tol = std::max({opt.abs_tol, floors ? opt.abs_floor(i) : 0.0,
                                         opt.rel_tol * std::abs(total(i)), cross});
            if (err_total(i) > tol) return false;
        }
        return true;
    };
    while (!converged() && static_cast<int>(heap.size()) < opt.max_segments) {
        detail::GkSegment worst = heap.top();
        heap.pop();
        total -= worst.value;
        err_total -= worst.error;
        const double m = 0.5 * (worst.a + worst.b);
        if (!(m > worst.a && m < worst.b)) {
            // Interval exhausted in floating point; keep it and stop refining.
            total += worst.value;
            err_total += worst.error;
            break;
        }
        push(worst.a, m);
        push(m, worst.b);
    }
    // Recompute the total from the segments to shed accumulated roundoff.
    Vector sum = Vector::Zero(total.size());
    while (!heap.empty()) {
        sum += heap.top().value;
        heap.pop();
    }
    return sum;
}

namespace detail {

/// (A, b) for boxes and polytopes.
inline std::pair<Matrix, Vector> polyhedral_hrep(const ConvexBody& body) {
    if (body.kind() != BodyKind::box) return {body.halfspace_matrix(), body.halfspace_rhs()};
    const int n = body.dim();
    Matrix a(2 * n, n);
    a << Matrix::Identity(n, n), -Matrix::Identity(n, n);
    Vector b(2 * n);
    b << body.box_hi(), -body.box_lo();
    return {a, b};
}

/// Tetrahedra coning x0 over a fan triangulation of every facet of a 3-D polytope.
inline std::vector<std::array<Vector, 4>> cone_tetrahedra(const ConvexBody& body) {
    auto [a, b] = polyhedral_hrep(body);
    std::vector<Vector> verts;
    for (const auto& v : enumerate_vertices(a, b)) {
        bool dup = false;
        for (const auto& w : verts) dup = dup || (v - w).norm() <= 1e-10 * (1.0 + v.norm());
        if (!dup) verts.push_back(v);
    }
    const Vector& x0 = body.interior_point();
    std::vector<std::array<Vector, 4>> tets;
    std::vector<std::vector<int>> seen;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double scale = a.row(i).norm();
        std::vector<int> on;
        for (int j = 0; j < static_cast<int>(verts.size()); ++j)
            if (std::abs(a.row(i).dot(verts[j]) - b(i)) <= 1e-9 * scale * (1.0 + verts[j].norm())) on.push_back(j);
        if (on.size() < 3 || std::find(seen.begin(), seen.end(), on) != seen.end()) continue;
        seen.push_back(on);
        Vector c = Vector::Zero(3);
        for (int j : on) c += verts[j];
        c /= static_cast<double>(on.size());
        const Vector normal = a.row(i).transpose() / scale;
        const Vector e1 = (verts[on[0]] - c).normalized();
        const Vector e2 = Eigen::Vector3d(normal).cross(Eigen::Vector3d(e1));
        std::sort(on.begin(), on.end(), [&](int p, int q) {
            return std::atan2((verts[p] - c).dot(e2), (verts[p] - c).dot(e1)) <
                   std::atan2((verts[q] - c).dot(e2), (verts[q] - c).dot(e1));
        });
        for (std::size_t j = 1; j + 1 < on.size(); ++j)
            tets.push_back({x0, verts[on[0]], verts[on[j]], verts[on[j + 1]]});
    }
    return tets;
}

/// ∫ f over the tetrahedron (p0, p1, p2, p3) through the collapsed map
/// x = p0 + u(p1 − p0) + uv(p2 − p1) + uvw(p3 − p2) on the unit cube, Jacobian 6V·u²v.
/// The collapsed vertex p0 is taken where |f| is largest, so a density
/// peaked at a corner is resolved by the outer level alone.
template <class F>
Vector integrate_tetrahedron(std::array<Vector, 4> p, const F& f, const QuadratureOptions& opt) {
    int peak = 0;
    double best = -1.0;
    for (int i = 0; i < 4; ++i) {
        const double v = f(p[i]).cwiseAbs().maxCoeff();
        if (v > best) best = v, peak = i;
    }
    std::swap(p[0], p[peak]);
    Matrix edges(3, 3);
    edges << p[1] - p[0], p[2] - p[1], p[3] - p[2];
    const double vol6 = std::abs(edges.determinant());
    QuadratureOptions outer_opt = opt;
    if (outer_opt.abs_floor.size() > 0) outer_opt.abs_floor /= std::max(vol6, 1e-300);
    QuadratureOptions inner = outer_opt;
    inner.rel_tol = opt.rel_tol * 0.1;
    inner.max_segments = 400;
    if (inner.abs_floor.size() > 0) inner.abs_floor *= 0.1;
    auto outer = [&](double u) -> Vector {
        auto middle = [&](double v) -> Vector {
            auto innermost = [&](double w) -> Vector {
                return f(Vector(p[0] + u * (edges.col(0) + v * (edges.col(1) + w * edges.col(2)))));
            };
            return Vector(v * integrate_adaptive(innermost, 0.0, 1.0, inner));
        };
        return Vector(u * u * integrate_adaptive(middle, 0.0, 1.0, inner));
    };
    return vol6 * integrate_adaptive(outer, 0.0, 1.0, outer_opt);
}

}  // namespace detail

namespace detail {

/// Splits an absolute floor across a level whose inner values are weighted by
/// a total measure of `measure`.
inline QuadratureOptions inner_level(const QuadratureOptions& opt, double rel_scale, int max_segments,
                                     double measure) {
    QuadratureOptions in = opt;
    in.rel_tol = opt.rel_tol * rel_scale;
    in.max_segments = max_segments;
    if (in.abs_floor.size() > 0) in.abs_floor = opt.abs_floor * (rel_scale / measure);
    return in;
}

template <class F>
Vector integrate_over_body_once(const ConvexBody& body, Eigen::Index k, const F& f, const QuadratureOptions& opt) {
    const int n = body.dim();
    if (n > 3) throw UnsupportedError("deterministic quadrature is limited to three dimensions");
    const Vector& x0 = body.interior_point();
    constexpr double pi = boost::math::constants::pi<double>();

    const double radial_measure = n == 1 ? 2.0 : n == 2 ? 2 * pi : 2 * pi * pi;
    const QuadratureOptions radial = inner_level(opt, 0.1, 400, radial_measure);

    auto ray = [&](const Vector& u) -> Vector {
        const double r = chord(body, x0, u).rho_hi;
        if (!(r > 0.0)) return Vector::Zero(k);
        auto g = [&](double rho) -> Vector {
            Vector v = f(Vector(x0 + rho * u));
            if (n == 2) v *= rho;
            if (n == 3) v *= rho * rho;
            return v;
        };
        return integrate_adaptive(g, 0.0, r, radial);
    };

    if (n == 1) {
        Vector up(1), down(1);
        up << 1.0;
        down << -1.0;
        return ray(up) + ray(down);
    }

    // Kinks of r(u) sit at vertex directions; splitting there keeps the
    // angular rule smooth on each piece.
    std::vector<double> angle_breaks;
    if (n == 2) {
        std::vector<Vector> verts;
        if (body.kind() == BodyKind::box) {
            for (int c = 0; c < 4; ++c) {
                Vector v(2);
                v << ((c & 1) ? body.box_hi()(0) : body.box_lo()(0)), ((c & 2) ? body.box_hi()(1) : body.box_lo()(1));
                verts.push_back(v);
            }
        } else if (body.is_polyhedral()) {
            verts = enumerate_vertices(body.halfspace_matrix(), body.halfspace_rhs());
        }
        for (const auto& v : verts) {
            double ang = std::atan2(v(1) - x0(1), v(0) - x0(0));
            if (ang < 0) ang += 2 * pi;
            angle_breaks.push_back(ang);
        }
        auto angular = [&](double phi) -> Vector {
            Vector u(2);
            u << std::cos(phi), std::sin(phi);
            return ray(u);
        };
        return integrate_adaptive(angular, 0.0, 2 * pi, opt, angle_breaks);
    }

    if (body.kind() == BodyKind::box || body.is_polyhedral()) {
        const auto tets = cone_tetrahedra(body);
        QuadratureOptions per = opt;
        if (per.abs_floor.size() > 0) per.abs_floor /= static_cast<double>(tets.size());
        Vector total = Vector::Zero(k);
        for (const auto& t : tets) total += integrate_tetrahedron(t, f, per);
        return total;
    }

    const QuadratureOptions middle = inner_level(opt, 0.3, 1000, pi);
    auto polar = [&](double psi) -> Vector {
        const double s = std::sin(psi), c = std::cos(psi);
        auto azimuthal = [&](double phi) -> Vector {
            Vector u(3);
            u << s * std::cos(phi), s * std::sin(phi), c;
            return ray(u);
        };
        return Vector(s * integrate_adaptive(azimuthal, 0.0, 2 * pi, middle));
    };
    return integrate_adaptive(polar, 0.0, pi, opt);
}

}  // namespace detail

/// Integrates f: K → ℝ^k over the body (n ≤ 3). Boxes and polytopes in 3-D
/// are split into tetrahedra coned from x0; everything else is swept in
/// polar coordinates. A loose pilot pass fixes the scale of each component so
/// that near-zero components and negligible regions get absolute tolerances.
template <class F>
Vector integrate_over_body(const ConvexBody& body, Eigen::Index k, const F& f, const QuadratureOptions& opt = {}) {
    if (body.dim() > 3) throw UnsupportedError("deterministic quadrature is limited to three dimensions");
    if (opt.abs_floor.size() > 0) return detail::integrate_over_body_once(body, k, f, opt);
    QuadratureOptions pilot = opt;
    pilot.rel_tol = std::max(opt.rel_tol, 1e-3);
    pilot.cross_rel_tol = std::max(opt.cross_rel_tol, 1e-3);
    const Vector first = detail::integrate_over_body_once(body, k, f, pilot);
    if (opt.rel_tol >= pilot.rel_tol) return first;
    const Vector scale = first.cwiseAbs();
    QuadratureOptions main = opt;
    main.abs_floor = opt.rel_tol * scale.cwiseMax(kCrossComponentFloor * scale.maxCoeff());
    main.abs_floor = main.abs_floor.cwiseMax(opt.abs_tol);
    return detail::integrate_over_body_once(body, k, f, main);
}

}  // namespace anneal_ipm
