#pragma once

// Hit-and-Run targeting P_θ restricted to K: Gaussian directions shaped by a
// covariance Σ, exact chords, and exact inverse-CDF sampling of the 1-D
// truncated exponential along the chord.

#include "anneal_ipm/boltzmann.hpp"

namespace anneal_ipm {

inline constexpr int kDirectionRetries = 16;

/// State of one chain. Single owner; carries its own RNG stream.
class ChainState {
public:
    ChainState(const ConvexBody& body, Vector x, const Matrix& sigma, Rng rng) : x(std::move(x)), rng(std::move(rng)) {
        require_dim(this->x, body.dim(), "chain point");
        if (!body.contains(this->x)) throw PreconditionError("chain start is outside the body");
        set_covariance(sigma);
    }

    /// Replaces Σ (regularized) and recomputes Σ^{1/2}.
    void set_covariance(const Matrix& s) {
        if (s.rows() != x.size() || s.cols() != x.size()) throw InputError("direction covariance has the wrong shape");
        sigma_ = regularize_spd(s);
        root_ = spd_sqrt(sigma_);
    }
    const Matrix& sigma() const { return sigma_; }
    const Matrix& sigma_root() const { return root_; }

    Vector x;
    Rng rng;
    std::uint64_t steps_taken = 0;
    std::uint64_t chord_calls = 0;       // chords computed, retries included
    std::uint64_t membership_calls = 0;  // oracle queries spent inside chords
    std::uint64_t retries = 0;

private:
    Matrix sigma_;
    Matrix root_;
};

/// Draws ρ ∈ [lo, hi] with density ∝ exp(−sρ) from a uniform variate u.
/// Written around the heavier endpoint so that large |s| stays finite.
inline double sample_chord_exponential(double s, double lo, double hi, double u) {
    const double len = hi - lo;
    if (std::abs(s) * len < 1e-12) return lo + u * len;
    double rho = s > 0 ? lo - std::log1p(u * std::expm1(-s * len)) / s
                       : hi - std::log1p((1.0 - u) * std::expm1(s * len)) / s;
    return std::clamp(rho, lo, hi);
}

/// CDF of the same law, used as the exactness reference.
inline double chord_exponential_cdf(double s, double lo, double hi, double rho) {
    const double len = hi - lo;
    if (std::abs(s) * len < 1e-12) return (rho - lo) / len;
    if (s > 0) return std::expm1(-s * (rho - lo)) / std::expm1(-s * len);
    return 1.0 - std::expm1(s * (hi - rho)) / std::expm1(s * len);
}

/// One Hit-and-Run step in place.
inline void hit_and_run_step_inplace(ChainState& state, const BoltzmannParams& p) {
    const ConvexBody& body = p.body();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int attempt = 0; attempt <= kDirectionRetries; ++attempt) {
        if (attempt > 0) ++state.retries;
        const Vector u = state.sigma_root() * standard_normal(body.dim(), state.rng);
        ++state.chord_calls;
        Chord c;
        try {
            c = chord(body, state.x, u);
        } catch (const PreconditionError&) {
            continue;
        } catch (const InputError&) {
            continue;
        }
        state.membership_calls += static_cast<std::uint64_t>(c.oracle_calls);
        if (!(c.length() > 0.0)) continue;
        const double rho = sample_chord_exponential(p.theta.dot(c.u), c.rho_lo, c.rho_hi, unif(state.rng));
        Vector next = c.at(rho);
        if (!body.contains(next)) continue;
        state.x = std::move(next);
        ++state.steps_taken;
        return;
    }
    throw ChainError("no usable direction after " + std::to_string(kDirectionRetries) + " retries");
}

inline ChainState hit_and_run_step(ChainState state, const BoltzmannParams& p) {
    hit_and_run_step_inplace(state, p);
    return state;
}

/// Thinned record of chain positions: rows (step, x).
struct ChainTrace {
    std::uint64_t thin = 1;
    std::vector<std::pair<std::uint64_t, Vector>> rows;
};

inline void run_chain_inplace(ChainState& state, const BoltzmannParams& p, std::uint64_t steps,
                              ChainTrace* trace = nullptr) {
    if (steps < 1) throw InputError("run_chain needs at least one step");
    if (trace && trace->thin < 1) throw InputError("trace thinning must be at least 1");
    for (std::uint64_t i = 0; i < steps; ++i) {
        hit_and_run_step_inplace(state, p);
        if (trace && state.steps_taken % trace->thin == 0) trace->rows.emplace_back(state.steps_taken, state.x);
    }
}

inline ChainState run_chain(ChainState state, const BoltzmannParams& p, std::uint64_t steps,
                            ChainTrace* trace = nullptr) {
    run_chain_inplace(state, p, steps, trace);
    return state;
}

/// Advances every chain by `steps` in parallel and returns the endpoints.
/// Chains own their streams, so the result does not depend on the worker count.
inline std::vector<Vector> sample_batch(const BoltzmannParams& p, std::vector<ChainState>& chains,
                                        std::uint64_t steps) {
    if (chains.empty()) throw InputError("sample_batch needs at least one warm start");
    parallel_for(chains.size(), [&](std::size_t j) { run_chain_inplace(chains[j], p, steps); });
    std::vector<Vector> out;
    out.reserve(chains.size());
    for (const auto& c : chains) out.push_back(c.x);
    return out;
}

/// N = ⌈c_mix·n³⌉.
inline std::uint64_t mix_steps(int n, double c_mix) {
    if (!(c_mix > 0)) throw InputError("c_mix must be positive");
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(c_mix * n * n * n)));
}

}  // namespace anneal_ipm
