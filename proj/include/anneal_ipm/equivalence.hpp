#pragma once

// Heat path vs central path. The heat path at annealing temperature τ is the
// mean of P_{θ̂/τ}; the central path of a barrier at IPM temperature t = 1/τ
// minimizes t·θ̂ᵀx + φ(x). For the entropic barrier the two coincide; for
// the log barrier they do not.

#include "anneal_ipm/ipm.hpp"

namespace anneal_ipm {

/// `count` temperatures log-spaced from 2R down to R/50.
inline std::vector<double> default_temperature_grid(const ConvexBody& body, int count = 7) {
    if (count < 1) throw InputError("temperature grid needs at least one point");
    const double r = body.radius_bound();
    const double hi = 2.0 * r, lo = r / 50.0;
    std::vector<double> grid;
    for (int i = 0; i < count; ++i) {
        const double w = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        grid.push_back(hi * std::pow(lo / hi, w));
    }
    return grid;
}

inline void require_temperatures(const std::vector<double>& temps) {
    if (temps.empty()) throw InputError("temperature list is empty");
    for (double t : temps)
        if (!(t > 0) || !std::isfinite(t)) throw InputError("temperatures must be positive and finite");
}

enum class HeatMode { quadrature, sampled };

struct HeatPathOptions {
    HeatMode mode = HeatMode::quadrature;
    BoltzmannOptions boltzmann{};
    /// Sampled mode: one chain per temperature, burn-in then `samples` steps
    /// averaged, standard error by batch means.
    std::uint64_t burn_in = 2000;
    std::uint64_t samples = 100000;
    int batches = 50;
    std::uint64_t seed = 0;
};

namespace detail {

inline Vector batch_means_se(const std::vector<Vector>& xs, int batches) {
    const Eigen::Index n = xs.front().size();
    const std::size_t len = xs.size() / static_cast<std::size_t>(batches);
    if (len < 1 || batches < 2) throw InputError("too few samples for batch means");
    std::vector<Vector> means;
    for (int b = 0; b < batches; ++b) {
        Vector s = Vector::Zero(n);
        for (std::size_t i = 0; i < len; ++i) s += xs[b * len + i];
        means.push_back(s / static_cast<double>(len));
    }
    const Matrix cov = empirical_covariance(means);
    return (cov.diagonal() / static_cast<double>(batches)).cwiseSqrt();
}

}  // namespace detail

/// HeatPath(τ) = E_{P_{θ̂/τ}}[X] per temperature.
inline std::vector<PathPoint> heat_path(const ConvexBody& body, const Vector& objective,
                                        const std::vector<double>& temps, const HeatPathOptions& opt = {}) {
    require_dim(objective, body.dim(), "objective");
    require_temperatures(temps);
    std::vector<PathPoint> out(temps.size());
    if (opt.mode == HeatMode::quadrature) {
        for (std::size_t i = 0; i < temps.size(); ++i) {
            const MomentSummary m = moments(BoltzmannParams(body, Vector(objective / temps[i])), opt.boltzmann);
            out[i] = PathPoint{temps[i], m.mean, PathSource::heat};
        }
        return out;
    }
    if (opt.samples < static_cast<std::uint64_t>(opt.batches)) throw InputError("too few samples for batch means");
    parallel_for(temps.size(), [&](std::size_t i) {
        BoltzmannParams p(body, Vector(objective / temps[i]));
        ChainState chain(body, body.interior_point(), Matrix::Identity(body.dim(), body.dim()),
                         make_stream(opt.seed, kReplicaStreamBase + i));
        if (opt.burn_in > 0) run_chain_inplace(chain, p, opt.burn_in);
        std::vector<Vector> xs;
        xs.reserve(opt.samples);
        for (std::uint64_t s = 0; s < opt.samples; ++s) {
            hit_and_run_step_inplace(chain, p);
            xs.push_back(chain.x);
        }
        PathPoint pt{temps[i], empirical_mean(xs), PathSource::sampled_heat};
        pt.standard_error = detail::batch_means_se(xs, opt.batches);
        out[i] = std::move(pt);
    });
    return out;
}

struct CentralPathOptions {
    double decrement_tol = 1e-8;
    int max_newton_iters = 500;
};

/// CentralPath(τ) = argmin{(1/τ)·θ̂ᵀx + φ(x)} by damped Newton, visiting the
/// temperatures in the given order and warm-starting from the previous point.
inline std::vector<PathPoint> central_path(const Barrier& barrier, const Vector& objective,
                                           const std::vector<double>& temps, const CentralPathOptions& opt = {}) {
    require_dim(objective, barrier.dim(), "objective");
    require_temperatures(temps);
    std::vector<PathPoint> out;
    NewtonState s;
    s.x_hat = barrier.start_point();
    for (std::size_t i = 0; i < temps.size(); ++i) {
        s.t = 1.0 / temps[i];
        s.k = static_cast<int>(i);
        double lambda = newton_decrement(barrier, s.x_hat, s.t, objective, s.dual.size() ? &s.dual : nullptr);
        int it = 0;
        while (lambda >= opt.decrement_tol) {
            if (++it > opt.max_newton_iters) throw PathLossError(static_cast<int>(i), lambda);
            NewtonStepResult r = damped_newton_step(barrier, s, objective);
            s = r.state;
            lambda = s.decrement;
        }
        PathPoint pt{temps[i], s.x_hat, PathSource::central};
        pt.decrement = lambda;
        out.push_back(std::move(pt));
    }
    return out;
}

struct PathComparison {
    std::vector<double> temperatures;
    std::vector<double> residuals;
    /// Residual over the combined standard error (sampled inputs only).
    std::vector<double> z_scores;
    double max_residual = 0.0;
};

/// Per-temperature ‖heat(τ) − central(τ)‖₂. Residuals are also written back
/// into both lists.
inline PathComparison compare_paths(std::vector<PathPoint>& heat, std::vector<PathPoint>& central) {
    if (heat.size() != central.size()) throw InputError("path lists have different lengths");
    PathComparison c;
    for (std::size_t i = 0; i < heat.size(); ++i) {
        const double th = heat[i].t, tc = central[i].t;
        if (std::abs(th - tc) > 1e-12 * std::max(std::abs(th), std::abs(tc)))
            throw InputError("temperature grids do not match at index " + std::to_string(i));
        if (heat[i].x.size() != central[i].x.size()) throw InputError("path points have different dimensions");
        const Vector diff = heat[i].x - central[i].x;
        const double r = diff.norm();
        heat[i].residual = central[i].residual = r;
        c.temperatures.push_back(th);
        c.residuals.push_back(r);
        Vector se = Vector::Zero(diff.size());
        if (heat[i].standard_error.size() == diff.size()) se += heat[i].standard_error.cwiseAbs2();
        if (central[i].standard_error.size() == diff.size()) se += central[i].standard_error.cwiseAbs2();
        double z = 0.0;
        for (Eigen::Index k = 0; k < diff.size(); ++k)
            z = std::max(z, se(k) > 0 ? std::abs(diff(k)) / std::sqrt(se(k)) : (diff(k) == 0 ? 0.0 : nan()));
        c.z_scores.push_back(z);
        c.max_residual = std::max(c.max_residual, r);
    }
    return c;
}

struct ReweightingResult {
    /// e^{−KL}·(x(θ) − Σ_θ(θ′ − θ)), the first-order estimate of x(θ′).
    Vector point;
    /// −Σ_θ(θ′ − θ), the linear correction before the factor.
    Vector correction;
    /// e^{−KL(P_θ ‖ P_θ′)}.
    double factor = 1.0;
    double kl = 0.0;
};

/// First-order reweighting estimate of x(θ′) from moments at θ. Exactly,
/// x(θ′) = e^{−KL}·E_θ[X·e^{−(θ′−θ)ᵀ(X − x(θ))}]; expanding the exponential
/// to first order gives the returned point, with error O(‖θ′ − θ‖²).
inline ReweightingResult reweighting_update(const ConvexBody& body, const Vector& theta, const Vector& theta_prime,
                                            const BoltzmannOptions& opt = {}) {
    require_dim(theta, body.dim(), "theta");
    require_dim(theta_prime, body.dim(), "theta_prime");
    if (body.kind() != BodyKind::box || opt.force_quadrature) detail::require_quadrature_dim(body);
    const BoltzmannParams p(body, theta);
    const MomentSummary m = moments(p, opt);
    const Vector delta = theta_prime - theta;
    ReweightingResult r;
    r.kl = delta.isZero(0.0) ? 0.0 : bregman_divergence(p, theta_prime, opt);
    r.factor = std::exp(-r.kl);
    r.correction = -(m.covariance * delta);
    r.point = r.factor * (m.mean + r.correction);
    return r;
}

}  // namespace anneal_ipm
