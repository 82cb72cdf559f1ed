#pragma once

// Shared vocabulary: Eigen aliases, the error hierarchy, seeded random
// streams, a small parallel-for, and the dense linear algebra helpers that
// every other header leans on.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace anneal_ipm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ─── Errors ────────────────────────────────────────────────────────────────

/// Malformed arguments: dimension mismatches, degenerate directions, bad flags.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A documented precondition does not hold (e.g. point not interior).
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Factorization or conditioning failure that regularization did not fix.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested path is outside what the implementation supports
/// (e.g. deterministic quadrature above three dimensions).
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Hit-and-Run could not find a usable chord after all retries.
class ChainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Newton decrement left the 1/3 neighbourhood during path following.
class PathLossError : public std::runtime_error {
public:
    PathLossError(int epoch, double decrement)
        : std::runtime_error("path lost at epoch " + std::to_string(epoch) +
                             ": decrement " + std::to_string(decrement) + " >= 1/3"),
          epoch_(epoch), decrement_(decrement) {}
    int epoch() const noexcept { return epoch_; }
    double decrement() const noexcept { return decrement_; }

private:
    int epoch_;
    double decrement_;
};

/// An iterative solve ran out of iterations; carries the best iterate seen.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, Vector best, double residual)
        : std::runtime_error(what), best_(std::move(best)), residual_(residual) {}
    const Vector& best() const noexcept { return best_; }
    double residual() const noexcept { return residual_; }

private:
    Vector best_;
    double residual_;
};

inline void require_dim(const Vector& v, Eigen::Index n, const char* what) {
    if (v.size() != n)
        throw InputError(std::string(what) + ": expected dimension " + std::to_string(n) +
                         ", got " + std::to_string(v.size()));
}

// ─── Random streams ────────────────────────────────────────────────────────

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Human-readable statement of the substream rule, echoed into reports.
inline constexpr const char* kStreamSplittingRule =
    "stream(seed, id) = mt19937_64(splitmix64(seed XOR splitmix64(id)))";

/// Seed of the named substream `id` derived from a run seed. Pure function of
/// (seed, id), so chain results do not depend on scheduling or thread count.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t id) {
    return splitmix64(seed ^ splitmix64(id));
}

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t seed, std::uint64_t id) { return Rng(stream_seed(seed, id)); }

/// Stream ids used by the drivers. Replica j of epoch-independent chains
/// uses kReplicaStreamBase + j; the main annealing chain uses kMainStream.
inline constexpr std::uint64_t kMainStream = 0;
inline constexpr std::uint64_t kReplicaStreamBase = 1;

inline Vector standard_normal(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    return z;
}

// ─── Parallelism ───────────────────────────────────────────────────────────

/// Worker count: hardware concurrency capped by ANNEAL_IPM_THREADS when set.
inline unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ANNEAL_IPM_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0) hw = std::min(hw, static_cast<unsigned>(cap));
    }
    return hw;
}

/// Runs body(i) for i in [0, count) over a static partition. The body must
/// only touch state owned by index i. The first exception is rethrown.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < count; i += workers) body(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ─── Linear algebra ────────────────────────────────────────────────────────

/// Σ + scale·trace(Σ)/n·I. Keeps a sample covariance strictly positive definite.
inline Matrix regularize_spd(const Matrix& sigma, double scale = 1e-10) {
    const Eigen::Index n = sigma.rows();
    Matrix sym = 0.5 * (sigma + sigma.transpose());
    double ridge = scale * std::max(sym.trace(), 0.0) / static_cast<double>(n);
    if (ridge <= 0.0) ridge = scale;
    sym.diagonal().array() += ridge;
    return sym;
}

/// Symmetric square root via eigendecomposition (negative eigenvalues clipped).
inline Matrix spd_sqrt(const Matrix& sigma) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sigma + sigma.transpose()));
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    Vector d = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

inline Matrix spd_inverse_sqrt(const Matrix& sigma) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sigma + sigma.transpose()));
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    if (eig.eigenvalues().minCoeff() <= 0.0) throw NumericalError("matrix not positive definite");
    Vector d = eig.eigenvalues().cwiseSqrt().cwiseInverse();
    return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

/// Solves H x = g for symmetric H with a 1e-12·trace/n ridge.
inline Vector spd_solve(const Matrix& h, const Vector& g) {
    Matrix reg = regularize_spd(h, 1e-12);
    Eigen::LLT<Matrix> llt(reg);
    if (llt.info() != Eigen::Success) throw NumericalError("Hessian not positive definite");
    return llt.solve(g);
}

inline double quad_form(const Matrix& m, const Vector& v) { return v.dot(m * v); }

/// Centered sample covariance with the 1/(m-1) normalization.
inline Matrix empirical_covariance(const std::vector<Vector>& pts) {
    if (pts.size() < 2) throw InputError("covariance needs at least two samples");
    const Eigen::Index n = pts.front().size();
    Vector mu = Vector::Zero(n);
    for (const auto& p : pts) mu += p;
    mu /= static_cast<double>(pts.size());
    Matrix c = Matrix::Zero(n, n);
    for (const auto& p : pts) {
        Vector d = p - mu;
        c.noalias() += d * d.transpose();
    }
    return c / static_cast<double>(pts.size() - 1);
}

inline Vector empirical_mean(const std::vector<Vector>& pts) {
    if (pts.empty()) throw InputError("mean of an empty sample");
    Vector mu = Vector::Zero(pts.front().size());
    for (const auto& p : pts) mu += p;
    return mu / static_cast<double>(pts.size());
}

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

// ─── Path records ──────────────────────────────────────────────────────────

enum class PathSource { heat, central, sampled_heat, anneal, ipm };

inline const char* to_string(PathSource s) {
    switch (s) {
        case PathSource::heat: return "heat";
        case PathSource::central: return "central";
        case PathSource::sampled_heat: return "sampled-heat";
        case PathSource::anneal: return "anneal";
        case PathSource::ipm: return "ipm";
    }
    return "unknown";
}

/// One point of a temperature-indexed trajectory. Fields that a producer
/// does not compute stay NaN.
struct PathPoint {
    double t = nan();
    Vector x;
    PathSource source = PathSource::heat;
    double gap_bound = nan();
    double decrement = nan();
    double residual = nan();
    /// Monte Carlo standard error of x per coordinate (sampled sources only).
    Vector standard_error{};
};

}  // namespace anneal_ipm
