#pragma once

// Barrier path following. A barrier backend evaluates φ, ∇φ, ∇²φ; the
// damped Newton step and the short-step path follower work against that
// interface. Backends: the logarithmic barrier of an H-polytope, the
// entropic barrier φ(x) = sup_θ{−θᵀx − A(θ)} through quadrature moments, and
// a sampled variant of the entropic Newton step that only needs Hit-and-Run.
//
// Signs: ∇φ(x) = −θ(x) where mean(θ(x)) = x, and ∇²φ(x) = Cov(θ(x))⁻¹. The
// central point for temperature t minimizes t·θ̂ᵀx + φ(x), i.e. θ(x) = t·θ̂,
// which is the mean of P_{tθ̂}.

#include "anneal_ipm/walker.hpp"

#include <memory>
#include <optional>

namespace anneal_ipm {

inline constexpr double kBoundaryTol = 1e-12;
inline constexpr double kPathLossDecrement = 1.0 / 3.0;
inline constexpr double kDefaultPathC = 1.0 / 20.0;
inline constexpr double kEntropicNuSlack = 0.1;

struct BarrierEval {
    double value = 0.0;
    Vector gradient;
    Matrix hessian;
    /// ∇⁻²φ when the backend has it directly (the entropic barrier's covariance).
    std::optional<Matrix> inverse_hessian;
    /// θ(x) for entropic backends, reusable as a warm start.
    std::optional<Vector> dual;

    Vector solve(const Vector& g) const { return inverse_hessian ? Vector(*inverse_hessian * g) : spd_solve(hessian, g); }
    double local_norm(const Vector& v) const { return std::sqrt(std::max(0.0, quad_form(hessian, v))); }
    double dual_norm(const Vector& v) const { return std::sqrt(std::max(0.0, v.dot(solve(v)))); }
};

/// Distance from x to the complement of K (exact for analytic bodies).
/// User oracles only report 0 (outside) or +inf (inside).
inline double boundary_distance(const ConvexBody& body, const Vector& x) {
    switch (body.kind()) {
        case BodyKind::box:
            return std::min((x - body.box_lo()).minCoeff(), (body.box_hi() - x).minCoeff());
        case BodyKind::ball:
            return body.ball_radius() - (x - body.ball_center()).norm();
        case BodyKind::simplex:
        case BodyKind::hpolytope: {
            const Matrix& a = body.halfspace_matrix();
            const Vector slack = body.halfspace_rhs() - a * x;
            double d = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < a.rows(); ++i) d = std::min(d, slack(i) / a.row(i).norm());
            return d;
        }
        case BodyKind::user_oracle:
            return body.contains(x) ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return 0.0;
}

inline void require_interior(const ConvexBody& body, const Vector& x) {
    require_dim(x, body.dim(), "point");
    if (!(boundary_distance(body, x) > kBoundaryTol)) throw PreconditionError("point is not strictly interior");
}

class Barrier {
public:
    virtual ~Barrier() = default;
    virtual int dim() const = 0;
    virtual double nu() const = 0;
    virtual std::string name() const = 0;
    virtual bool interior(const Vector& x) const = 0;
    /// Evaluates φ at a strictly interior x. `dual_hint` may warm-start an inner solve.
    virtual BarrierEval eval(const Vector& x, const Vector* dual_hint = nullptr) const = 0;
    /// The exact minimizer of t·θ̂ᵀx + φ(x) when the backend knows it in closed form.
    virtual std::optional<Vector> exact_central_point(double, const Vector&) const { return std::nullopt; }
    /// A strictly interior starting point.
    virtual Vector start_point() const = 0;
};

/// φ(x) = −Σ log(b_i − a_iᵀx), ν = number of rows unless overridden.
class LogBarrier : public Barrier {
public:
    LogBarrier(Matrix a, Vector b, std::optional<double> nu = {}, std::optional<Vector> start = {})
        : a_(std::move(a)), b_(std::move(b)) {
        if (a_.rows() != b_.size() || a_.rows() == 0) throw InputError("log barrier needs matching A, b");
        nu_ = nu.value_or(static_cast<double>(a_.rows()));
        if (start) {
            start_ = *start;
        } else {
            start_ = ConvexBody::hpolytope(a_, b_).interior_point();
        }
        if (!interior(start_)) throw InputError("log barrier start point is not strictly interior");
    }

    /// Halfspace form of a box or polytope.
    static LogBarrier for_body(const ConvexBody& body, std::optional<double> nu = {}) {
        if (body.kind() == BodyKind::box) {
            const int n = body.dim();
            Matrix a(2 * n, n);
            a << Matrix::Identity(n, n), -Matrix::Identity(n, n);
            Vector b(2 * n);
            b << body.box_hi(), -body.box_lo();
            return LogBarrier(a, b, nu, body.interior_point());
        }
        if (!body.is_polyhedral()) throw UnsupportedError("the log barrier needs a box or an H-polytope");
        return LogBarrier(body.halfspace_matrix(), body.halfspace_rhs(), nu, body.interior_point());
    }

    int dim() const override { return static_cast<int>(a_.cols()); }
    double nu() const override { return nu_; }
    std::string name() const override { return "log"; }
    Vector start_point() const override { return start_; }

    bool interior(const Vector& x) const override {
        const Vector s = b_ - a_ * x;
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (!(s(i) > kBoundaryTol * a_.row(i).norm())) return false;
        return true;
    }

    BarrierEval eval(const Vector& x, const Vector* = nullptr) const override {
        require_dim(x, dim(), "point");
        if (!interior(x)) throw PreconditionError("log barrier evaluated at a non-interior point");
        const Vector s = b_ - a_ * x;
        const Vector inv = s.cwiseInverse();
        BarrierEval e;
        e.value = -s.array().log().sum();
        e.gradient = a_.transpose() * inv;
        e.hessian = a_.transpose() * inv.cwiseAbs2().asDiagonal() * a_;
        return e;
    }

    const Matrix& a() const { return a_; }
    const Vector& b() const { return b_; }

private:
    Matrix a_;
    Vector b_;
    double nu_;
    Vector start_;
};

// ─── Dual parameter solve ──────────────────────────────────────────────────

struct DualSolution {
    Vector theta;
    Vector mean;
    Matrix covariance;
    double log_partition = nan();
    int iterations = 0;
    /// ‖mean(θ) − x‖₂ at the returned θ.
    double residual = nan();
};

struct DualSolveOptions {
    double tol = 1e-8;
    int max_iters = 100;
    BoltzmannOptions boltzmann{};
};

/// θ(x) = argmax_θ {−θᵀx − A(θ)} by Newton on Ψ with Armijo backtracking.
/// ∇Ψ = mean(θ) − x and ∇²Ψ = −Cov(θ), so the step is θ += Cov⁻¹(mean − x).
/// Stops when both ‖mean − x‖₂ and its Cov⁻¹-norm are at most tol.
inline DualSolution dual_parameter_solve(const ConvexBody& body, const Vector& x, const Vector& theta_init,
                                         const DualSolveOptions& opt = {}) {
    require_interior(body, x);
    require_dim(theta_init, body.dim(), "theta_init");
    auto at = [&](const Vector& th) {
        const MomentSummary m = moments(BoltzmannParams(body, th), opt.boltzmann);
        DualSolution s{th, m.mean, m.covariance, m.log_partition, 0, (m.mean - x).norm()};
        return s;
    };
    auto psi = [&](const DualSolution& s) { return -s.theta.dot(x) - s.log_partition; };
    DualSolution cur = at(theta_init);
    DualSolution best = cur;
    for (int it = 0; it < opt.max_iters; ++it) {
        const Vector r = cur.mean - x;
        const Vector d = spd_solve(cur.covariance, r);
        const double slope = r.dot(d);
        if (cur.residual <= opt.tol && std::sqrt(std::max(0.0, slope)) <= opt.tol) {
            cur.iterations = it;
            return cur;
        }
        // Full steps once inside the quadratic region, where Ψ changes are at roundoff.
        const bool quadratic = std::sqrt(std::max(0.0, slope)) < 0.1;
        double alpha = 1.0;
        DualSolution trial = at(cur.theta + d);
        while (!quadratic && !(psi(trial) >= psi(cur) + 1e-4 * alpha * slope) && alpha > 1e-10) {
            alpha *= 0.5;
            trial = at(cur.theta + alpha * d);
        }
        cur = trial;
        if (cur.residual < best.residual) best = cur;
    }
    throw ConvergenceError("dual parameter solve did not converge", best.theta, best.residual);
}

// ─── Sampled moments ───────────────────────────────────────────────────────

struct SampledConfig {
    int replicas = 200;
    /// Hit-and-Run steps per chain between estimates; defaults to mix_steps(n, c_mix).
    std::optional<std::uint64_t> steps;
    double c_mix = 1.0;
    /// Extra steps (as a multiple of `steps`) on the first estimate.
    int burn_in_factor = 10;
    std::uint64_t seed = 0;
    /// Dual solve: stop once every |mean_i − x_i| ≤ z_stop·SE_i, then average
    /// the next `averaging` iterates.
    double z_stop = 3.0;
    int averaging = 5;
    int max_iters = 60;
    /// Substitute quadrature moments for samples (the exact-moment limit).
    bool exact_moments = false;
    BoltzmannOptions boltzmann{};
};

struct MomentEstimate {
    Vector mean;
    Matrix covariance;
    Vector standard_error;  // zero in the exact limit
};

/// Moment estimates of P_θ from m persistent Hit-and-Run chains. Chains are
/// warm-started across calls and directions follow the last covariance
/// estimate. Deterministic in (seed, call sequence).
class SampledMoments {
public:
    SampledMoments(const ConvexBody& body, SampledConfig cfg) : body_(&body), cfg_(std::move(cfg)) {
        if (cfg_.replicas < body.dim() + 1) throw InputError("sampled moments need at least n + 1 replicas");
        steps_ = cfg_.steps.value_or(mix_steps(body.dim(), cfg_.c_mix));
        if (steps_ < 1) throw InputError("sampled moments need at least one step");
    }

    MomentEstimate estimate(const Vector& theta) {
        require_dim(theta, body_->dim(), "theta");
        const int n = body_->dim();
        if (cfg_.exact_moments) {
            const MomentSummary m = moments(BoltzmannParams(*body_, theta), cfg_.boltzmann);
            return {m.mean, m.covariance, Vector::Zero(n)};
        }
        std::uint64_t steps = steps_;
        if (chains_.empty()) {
            for (int j = 0; j < cfg_.replicas; ++j)
                chains_.emplace_back(*body_, body_->interior_point(), Matrix::Identity(n, n),
                                     make_stream(cfg_.seed, kReplicaStreamBase + static_cast<std::uint64_t>(j)));
            steps *= static_cast<std::uint64_t>(std::max(1, cfg_.burn_in_factor));
        }
        BoltzmannParams p(*body_, theta);
        const auto pts = sample_batch(p, chains_, steps);
        MomentEstimate e{empirical_mean(pts), empirical_covariance(pts), Vector()};
        e.standard_error = (e.covariance.diagonal() / static_cast<double>(pts.size())).cwiseSqrt();
        for (auto& c : chains_) c.set_covariance(e.covariance);
        samples_drawn_ += static_cast<std::uint64_t>(pts.size()) * steps;
        return e;
    }

    const SampledConfig& config() const { return cfg_; }
    const ConvexBody& body() const { return *body_; }
    std::uint64_t steps_taken() const { return samples_drawn_; }

private:
    const ConvexBody* body_;
    SampledConfig cfg_;
    std::uint64_t steps_ = 1;
    std::vector<ChainState> chains_;
    std::uint64_t samples_drawn_ = 0;
};

/// Sampled-mode θ(x): damped Newton θ += Cov̂⁻¹(mean̂ − x)/(1 + δ̂) until every
/// coordinate of the residual is within z_stop standard errors, then the
/// average of `averaging` further iterates. The returned covariance is the
/// average of the estimates over the averaging window, and `mean` the
/// averaged estimate (noisy, evaluated along the window).
inline DualSolution dual_parameter_solve_sampled(SampledMoments& oracle, const Vector& x, const Vector& theta_init) {
    const ConvexBody& body = oracle.body();
    const SampledConfig& cfg = oracle.config();
    require_interior(body, x);
    require_dim(theta_init, body.dim(), "theta_init");
    if (cfg.exact_moments) {
        DualSolveOptions opt;
        opt.boltzmann = cfg.boltzmann;
        return dual_parameter_solve(body, x, theta_init, opt);
    }
    Vector theta = theta_init;
    Vector best = theta;
    double best_res = std::numeric_limits<double>::infinity();
    int averaged = 0;
    Vector theta_sum = Vector::Zero(body.dim());
    Matrix cov_sum = Matrix::Zero(body.dim(), body.dim());
    Vector mean_sum = Vector::Zero(body.dim());
    for (int it = 0; it < cfg.max_iters; ++it) {
        const MomentEstimate e = oracle.estimate(theta);
        const Vector r = e.mean - x;
        if (r.norm() < best_res) best_res = r.norm(), best = theta;
        bool inside = true;
        for (Eigen::Index i = 0; i < r.size(); ++i) inside = inside && std::abs(r(i)) <= cfg.z_stop * e.standard_error(i);
        if (averaged > 0 || inside) {
            theta_sum += theta;
            cov_sum += e.covariance;
            mean_sum += e.mean;
            if (++averaged >= std::max(1, cfg.averaging)) {
                DualSolution s;
                s.theta = theta_sum / averaged;
                s.covariance = cov_sum / averaged;
                s.mean = mean_sum / averaged;
                s.iterations = it + 1;
                s.residual = best_res;
                return s;
            }
        }
        const Vector d = spd_solve(e.covariance, r);
        theta += d / (1.0 + std::sqrt(std::max(0.0, r.dot(d))));
    }
    throw ConvergenceError("sampled dual parameter solve did not converge", best, best_res);
}

/// φ(x) = A*₋(x) through dual_parameter_solve on quadrature moments (n ≤ 3,
/// or any n on boxes). ν defaults to 1.1·n.
class EntropicBarrier : public Barrier {
public:
    explicit EntropicBarrier(const ConvexBody& body, std::optional<double> nu = {}, DualSolveOptions opt = {})
        : body_(&body), nu_(nu.value_or((1.0 + kEntropicNuSlack) * body.dim())), opt_(std::move(opt)) {
        if (body.kind() != BodyKind::box && body.dim() > 3)
            throw UnsupportedError("the quadrature entropic barrier supports n <= 3 off boxes");
    }

    int dim() const override { return body_->dim(); }
    double nu() const override { return nu_; }
    std::string name() const override { return "entropic"; }
    Vector start_point() const override { return body_->interior_point(); }
    bool interior(const Vector& x) const override { return boundary_distance(*body_, x) > kBoundaryTol; }

    BarrierEval eval(const Vector& x, const Vector* dual_hint = nullptr) const override {
        require_interior(*body_, x);
        const Vector init = dual_hint ? *dual_hint : Vector::Zero(dim());
        const DualSolution s = dual_parameter_solve(*body_, x, init, opt_);
        BarrierEval e;
        e.value = -s.theta.dot(x) - s.log_partition;
        e.gradient = -s.theta;
        e.inverse_hessian = s.covariance;
        e.hessian = spd_inverse_sqrt(s.covariance);
        e.hessian = e.hessian * e.hessian;
        e.dual = s.theta;
        return e;
    }

    std::optional<Vector> exact_central_point(double t, const Vector& objective) const override {
        return moments(BoltzmannParams(*body_, Vector(t * objective)), opt_.boltzmann).mean;
    }

    const ConvexBody& body() const { return *body_; }

private:
    const ConvexBody* body_;
    double nu_;
    DualSolveOptions opt_;
};

// ─── Newton machinery ──────────────────────────────────────────────────────

struct NewtonState {
    Vector x_hat;
    double t = 1.0;
    double decrement = nan();
    int k = 0;
    /// Last θ(x̂) for entropic backends (warm start); empty otherwise.
    Vector dual;
};

/// λ = √(gᵀH⁻¹g) with g = t·θ̂ + ∇φ(x).
inline double decrement_from(const BarrierEval& e, double t, const Vector& objective) {
    const Vector g = t * objective + e.gradient;
    return std::sqrt(std::max(0.0, g.dot(e.solve(g))));
}

inline double newton_decrement(const Barrier& barrier, const Vector& x, double t, const Vector& objective,
                               const Vector* dual_hint = nullptr) {
    require_dim(objective, barrier.dim(), "objective");
    const BarrierEval e = barrier.eval(x, dual_hint);
    const double lambda = decrement_from(e, t, objective);
    if (!std::isfinite(lambda)) throw NumericalError("Newton decrement is not finite");
    return lambda;
}

struct NewtonStepResult {
    NewtonState state;
    double entry_decrement = nan();
    /// H⁻¹g at the entry point (the undamped Newton direction).
    Vector direction;
    int halvings = 0;
};

/// x⁺ = x − H⁻¹g/(1 + λ) at temperature state.t, halving the step if it
/// would leave the domain. The returned decrement is evaluated at x⁺.
inline NewtonStepResult damped_newton_step(const Barrier& barrier, const NewtonState& state, const Vector& objective) {
    require_dim(objective, barrier.dim(), "objective");
    const Vector* hint = state.dual.size() ? &state.dual : nullptr;
    const BarrierEval e = barrier.eval(state.x_hat, hint);
    const Vector g = state.t * objective + e.gradient;
    NewtonStepResult r;
    r.direction = e.solve(g);
    r.entry_decrement = std::sqrt(std::max(0.0, g.dot(r.direction)));
    if (!std::isfinite(r.entry_decrement)) throw NumericalError("Newton decrement is not finite");
    double scale = 1.0 / (1.0 + r.entry_decrement);
    Vector next = state.x_hat - scale * r.direction;
    while (!barrier.interior(next)) {
        if (++r.halvings > 60) throw NumericalError("damped Newton step cannot stay interior");
        scale *= 0.5;
        next = state.x_hat - scale * r.direction;
    }
    r.state = state;
    r.state.x_hat = next;
    if (e.dual) r.state.dual = *e.dual;
    const BarrierEval after = barrier.eval(next, r.state.dual.size() ? &r.state.dual : nullptr);
    r.state.decrement = decrement_from(after, state.t, objective);
    if (after.dual) r.state.dual = *after.dual;
    return r;
}

/// Suboptimality certificate (ν + √ν/4)/t.
inline double ipm_gap_bound(double nu, double t) { return (nu + std::sqrt(nu) / 4.0) / t; }

/// Per-epoch record of the path follower.
struct PathStep {
    NewtonState state;
    double gap_bound = nan();
    /// λ(x̂_{k−1}, t_{k−1}), λ(x̂_{k−1}, t_k) and λ(x̂_k, t_k).
    double previous_decrement = nan();
    double entry_decrement = nan();
    double exit_decrement = nan();
    /// λ(x̂_k, t_k(1 + c/√ν)) ≤ (1 + c)λ(x̂_k, t_k) + c.
    bool bump_holds = true;
    double bumped_decrement = nan();
    /// exit ≤ 2·entry² (meaningful when entry ≤ 1/3).
    bool quadratic_holds = true;
};

struct FollowOptions {
    double c = kDefaultPathC;
    /// Centering tolerance used when the backend has no closed-form start.
    double centering_tol = 1e-10;
    int max_centering_iters = 200;
    int max_epochs = 1000000;
    /// Throw PathLossError when a recorded decrement reaches 1/3.
    bool strict = true;
    /// Evaluate the temperature-bump inequality at each recorded point.
    bool check_bump = true;
};

/// Centers at t = 1 from the backend start (or its closed-form central point).
inline NewtonState initial_state(const Barrier& barrier, const Vector& objective, const FollowOptions& opt = {}) {
    NewtonState s;
    s.t = 1.0;
    s.k = 0;
    if (auto exact = barrier.exact_central_point(1.0, objective)) {
        s.x_hat = *exact;
    } else {
        s.x_hat = barrier.start_point();
        for (int it = 0; it < opt.max_centering_iters; ++it) {
            auto r = damped_newton_step(barrier, s, objective);
            s = r.state;
            if (s.decrement <= opt.centering_tol) break;
        }
    }
    const BarrierEval e = barrier.eval(s.x_hat, s.dual.size() ? &s.dual : nullptr);
    s.decrement = decrement_from(e, 1.0, objective);
    if (e.dual) s.dual = *e.dual;
    return s;
}

/// Short-step path following: t_k = (1 + c/√ν)^k with one damped Newton step
/// per bump, until (ν + √ν/4)/t_k ≤ eps.
inline std::vector<PathStep> follow_path(const Barrier& barrier, const Vector& objective, double eps,
                                         const FollowOptions& opt = {},
                                         std::optional<NewtonState> start = std::nullopt) {
    require_dim(objective, barrier.dim(), "objective");
    if (!(eps > 0)) throw InputError("eps must be positive");
    if (!(opt.c > 0)) throw InputError("c must be positive");
    const double nu = barrier.nu();
    const double bump = 1.0 + opt.c / std::sqrt(nu);
    NewtonState s = start ? *start : initial_state(barrier, objective, opt);
    if (!(s.decrement < 0.5)) throw PreconditionError("initial decrement must be below 1/2");

    auto bumped = [&](const NewtonState& st) {
        const Vector* hint = st.dual.size() ? &st.dual : nullptr;
        return newton_decrement(barrier, st.x_hat, st.t * bump, objective, hint);
    };

    std::vector<PathStep> out;
    PathStep first;
    first.state = s;
    first.gap_bound = ipm_gap_bound(nu, s.t);
    first.exit_decrement = s.decrement;
    if (opt.check_bump) {
        first.bumped_decrement = bumped(s);
        first.bump_holds = first.bumped_decrement <= (1 + opt.c) * s.decrement + opt.c;
    }
    out.push_back(first);

    while (ipm_gap_bound(nu, s.t) > eps) {
        if (s.k >= opt.max_epochs) throw ConvergenceError("path following hit max_epochs", s.x_hat, s.decrement);
        NewtonState next = s;
        next.t = s.t * bump;
        next.k = s.k + 1;
        const NewtonStepResult r = damped_newton_step(barrier, next, objective);
        PathStep step;
        step.state = r.state;
        step.gap_bound = ipm_gap_bound(nu, r.state.t);
        step.previous_decrement = s.decrement;
        step.entry_decrement = r.entry_decrement;
        step.exit_decrement = r.state.decrement;
        step.quadratic_holds = r.entry_decrement > kPathLossDecrement ||
                               r.state.decrement <= 2 * r.entry_decrement * r.entry_decrement;
        if (opt.check_bump) {
            step.bumped_decrement = bumped(r.state);
            step.bump_holds = step.bumped_decrement <= (1 + opt.c) * r.state.decrement + opt.c;
        }
        out.push_back(step);
        if (opt.strict && !(r.state.decrement < kPathLossDecrement)) throw PathLossError(next.k, r.state.decrement);
        s = r.state;
    }
    return out;
}

// ─── Sampled Newton step ───────────────────────────────────────────────────

struct SampledStepResult {
    NewtonState state;
    /// λ̂ = √(gᵀΣ̂g) with g = t·θ̂ − θ̂(x̂).
    double decrement_estimate = nan();
    /// Σ̂·g, the undamped direction, so that x⁺ = x̂ − direction/(1 + λ̂).
    Vector direction;
    Vector dual;
    int halvings = 0;
};

/// Entropic Newton step from samples only: θ(x̂) from the sampled dual solve
/// (warm-started at state.dual), Σ̂ from the same samples, then
/// x̂ − Σ̂(t·θ̂ − θ(x̂))/(1 + λ̂). In the exact-moment limit this is the
/// quadrature entropic step.
inline SampledStepResult sampled_newton_step(SampledMoments& oracle, const Vector& objective, const NewtonState& state) {
    const ConvexBody& body = oracle.body();
    require_dim(objective, body.dim(), "objective");
    const Vector init = state.dual.size() ? state.dual : Vector(state.t * objective);
    const DualSolution dual = dual_parameter_solve_sampled(oracle, state.x_hat, init);
    const Matrix sigma = regularize_spd(dual.covariance);
    const Vector g = state.t * objective - dual.theta;
    SampledStepResult r;
    r.dual = dual.theta;
    r.direction = sigma * g;
    r.decrement_estimate = std::sqrt(std::max(0.0, g.dot(r.direction)));
    double scale = 1.0 / (1.0 + r.decrement_estimate);
    Vector next = state.x_hat - scale * r.direction;
    while (!(boundary_distance(body, next) > kBoundaryTol)) {
        if (++r.halvings > 60) throw NumericalError("sampled Newton step cannot stay interior");
        scale *= 0.5;
        next = state.x_hat - scale * r.direction;
    }
    r.state = state;
    r.state.x_hat = next;
    r.state.dual = dual.theta;
    r.state.decrement = r.decrement_estimate;
    return r;
}

/// Path following with sampled Newton steps. Decrements are estimates, so
/// they are recorded but never trigger a path-loss error.
inline std::vector<PathStep> follow_path_sampled(SampledMoments& oracle, const Vector& objective, double eps,
                                                 std::optional<double> nu = std::nullopt, double c = kDefaultPathC) {
    const ConvexBody& body = oracle.body();
    require_dim(objective, body.dim(), "objective");
    if (!(eps > 0)) throw InputError("eps must be positive");
    const double nu_eff = nu.value_or((1.0 + kEntropicNuSlack) * body.dim());
    const double bump = 1.0 + c / std::sqrt(nu_eff);
    NewtonState s;
    s.t = 1.0;
    s.x_hat = oracle.estimate(objective).mean;
    if (!(boundary_distance(body, s.x_hat) > kBoundaryTol)) s.x_hat = body.interior_point();
    s.dual = objective;
    std::vector<PathStep> out;
    PathStep first;
    first.state = s;
    first.gap_bound = ipm_gap_bound(nu_eff, s.t);
    out.push_back(first);
    while (ipm_gap_bound(nu_eff, s.t) > eps) {
        NewtonState next = s;
        next.t = s.t * bump;
        next.k = s.k + 1;
        const SampledStepResult r = sampled_newton_step(oracle, objective, next);
        PathStep step;
        step.state = r.state;
        step.gap_bound = ipm_gap_bound(nu_eff, r.state.t);
        step.entry_decrement = r.decrement_estimate;
        step.exit_decrement = r.decrement_estimate;
        out.push_back(step);
        s = r.state;
    }
    return out;
}

// ─── Self-concordance probe ────────────────────────────────────────────────

struct SelfConcordanceProbe {
    double first = nan();   // ∇φ[h]
    double second = nan();  // ∇²φ[h, h]
    double third = nan();   // ∇³φ[h, h, h] by central differences of ∇²φ
    /// |third| / (2·second^{3/2}); at most 1 for a self-concordant function.
    double ratio() const { return std::abs(third) / (2.0 * std::pow(second, 1.5)); }
    /// first² / second, which must stay below ν.
    double nu_estimate() const { return first * first / second; }
};

inline SelfConcordanceProbe probe_self_concordance(const Barrier& barrier, const Vector& x, const Vector& h,
                                                   double step = 1e-4) {
    const BarrierEval e = barrier.eval(x);
    const Vector* hint = e.dual ? &*e.dual : nullptr;
    const BarrierEval plus = barrier.eval(Vector(x + step * h), hint);
    const BarrierEval minus = barrier.eval(Vector(x - step * h), hint);
    SelfConcordanceProbe p;
    p.first = e.gradient.dot(h);
    p.second = quad_form(e.hessian, h);
    p.third = (quad_form(plus.hessian, h) - quad_form(minus.hessian, h)) / (2 * step);
    return p;
}

}  // namespace anneal_ipm
