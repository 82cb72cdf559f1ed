#pragma once

// Simulated annealing over the Boltzmann family: per epoch the temperature
// shrinks, a main chain and m replica chains advance by Hit-and-Run from
// their previous positions, and the replicas re-estimate the direction
// covariance for the next epoch.

#include "anneal_ipm/walker.hpp"

#include <chrono>
#include <optional>

namespace anneal_ipm {

enum class ScheduleKind { classic, entropic, custom };

inline const char* to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::classic: return "classic";
        case ScheduleKind::entropic: return "entropic";
        case ScheduleKind::custom: return "custom";
    }
    return "unknown";
}

inline ScheduleKind parse_schedule_kind(const std::string& s) {
    if (s == "classic") return ScheduleKind::classic;
    if (s == "entropic") return ScheduleKind::entropic;
    if (s == "custom") return ScheduleKind::custom;
    throw InputError("unknown schedule kind '" + s + "'");
}

/// Epoch k = 1..epochs runs at t_k = t1·shrink^k, so t_T ≤ eps/ν_eff.
struct Schedule {
    ScheduleKind kind = ScheduleKind::classic;
    double t1 = 1.0;
    double shrink = 0.5;
    int epochs = 0;
    std::optional<double> nu;
    int dim = 1;

    double temperature(int k) const { return t1 * std::pow(shrink, k); }
    double nu_effective() const { return nu.value_or(static_cast<double>(dim)); }
    double gap_bound(int k) const { return nu_effective() * temperature(k); }
};

/// Least k ≥ 0 with t1·shrink^k ≤ target.
inline int epochs_to_reach(double t1, double shrink, double target) {
    if (t1 <= target) return 0;
    int k = static_cast<int>(std::ceil(std::log(t1 / target) / -std::log(shrink)));
    while (k > 0 && t1 * std::pow(shrink, k - 1) <= target) --k;
    while (t1 * std::pow(shrink, k) > target) ++k;
    return k;
}

/// Classic: shrink = 1 − 1/√n. Entropic: shrink = 1 − 1/(4√ν) with ν defaulting to n.
/// A warning is appended when eps already holds at t1 (zero epochs).
inline Schedule make_schedule(ScheduleKind kind, const ConvexBody& body, const Vector& objective, double eps,
                              std::optional<double> nu = std::nullopt, std::optional<double> t1 = std::nullopt,
                              std::vector<std::string>* warnings = nullptr) {
    require_dim(objective, body.dim(), "objective");
    if (!(eps > 0)) throw InputError("eps must be positive");
    if (nu && !(*nu > 0)) throw InputError("nu must be positive");
    if (t1 && !(*t1 > 0)) throw InputError("t1 must be positive");
    Schedule s;
    s.kind = kind;
    s.dim = body.dim();
    s.nu = nu;
    s.t1 = t1.value_or(estimate_diameter(body));
    const double n = body.dim();
    switch (kind) {
        case ScheduleKind::classic:
            if (body.dim() < 2) throw InputError("the classic schedule needs n >= 2 (shrink = 1 - 1/sqrt(n))");
            s.shrink = 1.0 - 1.0 / std::sqrt(n);
            break;
        case ScheduleKind::entropic:
            s.nu = nu.value_or(n);
            s.shrink = 1.0 - 1.0 / (4.0 * std::sqrt(*s.nu));
            break;
        case ScheduleKind::custom:
            throw InputError("custom schedules are built with make_custom_schedule");
    }
    s.epochs = epochs_to_reach(s.t1, s.shrink, eps / s.nu_effective());
    if (s.epochs == 0 && warnings) warnings->push_back("eps >= nu*t1: zero-epoch schedule");
    return s;
}

inline Schedule make_custom_schedule(int dim, double t1, double shrink, int epochs, std::optional<double> nu = {}) {
    if (!(t1 > 0) || !(shrink > 0 && shrink < 1) || epochs < 0 || dim < 1)
        throw InputError("custom schedule needs t1 > 0, 0 < shrink < 1, epochs >= 0");
    Schedule s;
    s.kind = ScheduleKind::custom;
    s.t1 = t1;
    s.shrink = shrink;
    s.epochs = epochs;
    s.nu = nu;
    s.dim = dim;
    return s;
}

struct SamplerConfig {
    double c_mix = 1.0;
    /// Steps per epoch; defaults to mix_steps(n, c_mix).
    std::optional<std::uint64_t> steps;
    /// Replica chains; defaults to max(2n, 64).
    std::optional<int> replicas;
    std::uint64_t seed = 0;

    std::uint64_t resolved_steps(int n) const { return steps.value_or(mix_steps(n, c_mix)); }
    int resolved_replicas(int n) const { return replicas.value_or(std::max(2 * n, 64)); }
};

/// Everything needed to re-examine one epoch afterwards.
struct EpochRecord {
    int k = 0;
    double t = 0.0;
    Vector theta;
    Matrix sigma;  // direction covariance used during the epoch
    Vector main_x;
    std::vector<Vector> replicas;
};

struct AnnealCounters {
    std::uint64_t steps = 0;
    std::uint64_t chord_calls = 0;
    std::uint64_t membership_calls = 0;
    std::uint64_t retries = 0;
    double wallclock_seconds = 0.0;
};

struct AnnealReport {
    Schedule schedule;
    Vector objective;
    std::vector<PathPoint> trajectory;
    std::vector<EpochRecord> epochs;
    Vector final_x;
    double final_gap_bound = 0.0;
    AnnealCounters counters;
    std::vector<std::string> warnings;
};

/// Runs the schedule. The main chain uses stream kMainStream and replica j
/// uses kReplicaStreamBase + j, so results do not depend on thread count.
inline AnnealReport anneal(const ConvexBody& body, const Vector& objective, const Schedule& schedule,
                           const SamplerConfig& config = {}) {
    require_dim(objective, body.dim(), "objective");
    if (schedule.dim != body.dim()) throw InputError("schedule dimension does not match the body");
    if (objective.isZero(0.0) && schedule.kind != ScheduleKind::custom)
        throw InputError("objective must be nonzero (a zero objective needs a custom schedule)");
    if (!body.contains(body.interior_point())) throw PreconditionError("body start point is not inside the body");
    const auto wall_start = std::chrono::steady_clock::now();
    const int n = body.dim();
    const std::uint64_t steps = config.resolved_steps(n);
    const int m = config.resolved_replicas(n);
    if (m < 2) throw InputError("at least two replicas are needed for covariance estimation");

    Matrix sigma = Matrix::Identity(n, n);
    std::vector<ChainState> chains;
    chains.reserve(static_cast<std::size_t>(m) + 1);
    chains.emplace_back(body, body.interior_point(), sigma, make_stream(config.seed, kMainStream));
    for (int j = 0; j < m; ++j)
        chains.emplace_back(body, body.interior_point(), sigma,
                            make_stream(config.seed, kReplicaStreamBase + static_cast<std::uint64_t>(j)));

    AnnealReport report;
    report.schedule = schedule;
    report.objective = objective;
    report.final_x = body.interior_point();
    report.final_gap_bound = schedule.gap_bound(0);
    if (schedule.epochs == 0) report.warnings.push_back("zero-epoch schedule: returning the start point");

    for (int k = 1; k <= schedule.epochs; ++k) {
        const double t = schedule.temperature(k);
        BoltzmannParams p(body, Vector(objective / t));
        for (auto& c : chains) c.set_covariance(sigma);
        EpochRecord rec{k, t, p.theta, chains.front().sigma(), {}, {}};
        auto ends = sample_batch(p, chains, steps);
        rec.main_x = ends.front();
        rec.replicas.assign(ends.begin() + 1, ends.end());

        const Matrix next = empirical_covariance(rec.replicas);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(next);
        const double top = eig.eigenvalues().maxCoeff();
        if (next.allFinite() && eig.eigenvalues().minCoeff() > 1e-12 * std::max(top, 1e-300)) {
            sigma = next;
        } else {
            report.warnings.push_back("epoch " + std::to_string(k) +
                                      ": replica covariance is rank deficient, keeping the previous one");
        }

        report.trajectory.push_back(PathPoint{t, rec.main_x, PathSource::anneal, schedule.gap_bound(k), nan(), nan()});
        report.final_x = rec.main_x;
        report.final_gap_bound = schedule.gap_bound(k);
        report.epochs.push_back(std::move(rec));
    }
    for (const auto& c : chains) {
        report.counters.steps += c.steps_taken;
        report.counters.chord_calls += c.chord_calls;
        report.counters.membership_calls += c.membership_calls;
        report.counters.retries += c.retries;
    }
    report.counters.wallclock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return report;
}

struct EpochDiagnostics {
    int k = 0;
    double t = 0.0;
    /// check_isotropy of the replicas against the exact covariance of P_θk.
    double isotropy = nan();
    /// ‖replica mean − exact mean‖₂ and the largest per-axis |error|/standard error.
    double mean_error = nan();
    double mean_z = nan();
    /// max(‖P_k/P_{k−1}‖, ‖P_{k−1}/P_k‖), with epoch 0 at t1.
    double l2_ratio = nan();
};

/// Per-epoch comparison against the exact Boltzmann moments. Best effort:
/// quantities the oracle cannot provide (n > 3 off boxes) stay NaN.
inline std::vector<EpochDiagnostics> epoch_diagnostics(const AnnealReport& report, const ConvexBody& body,
                                                       const BoltzmannOptions& opt = {}) {
    std::vector<EpochDiagnostics> out;
    Vector prev_theta = report.objective / report.schedule.temperature(0);
    for (const auto& rec : report.epochs) {
        EpochDiagnostics d;
        d.k = rec.k;
        d.t = rec.t;
        try {
            const MomentSummary truth = moments(BoltzmannParams(body, rec.theta), opt);
            const Vector mean = empirical_mean(rec.replicas);
            const Matrix cov = empirical_covariance(rec.replicas);
            d.mean_error = (mean - truth.mean).norm();
            double z = 0.0;
            for (Eigen::Index i = 0; i < mean.size(); ++i)
                z = std::max(z, std::abs(mean(i) - truth.mean(i)) /
                                    std::sqrt(cov(i, i) / static_cast<double>(rec.replicas.size())));
            d.mean_z = z;
            d.isotropy = check_isotropy(rec.replicas, truth.covariance);
        } catch (const std::exception&) {
        }
        try {
            d.l2_ratio = std::max(l2_norm(body, rec.theta, prev_theta, opt), l2_norm(body, prev_theta, rec.theta, opt));
        } catch (const std::exception&) {
        }
        prev_theta = rec.theta;
        out.push_back(d);
    }
    return out;
}

}  // namespace anneal_ipm
