#pragma once

// Run configuration, body loading, and the report/trace writers behind the
// command-line tool. Every run is a pure function of its resolved RunConfig.

#include "anneal_ipm/annealing.hpp"
#include "anneal_ipm/equivalence.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace anneal_ipm {

using nlohmann::json;

inline constexpr int kTraceVersion = 1;

struct BodySpec {
    std::string kind = "box";  // box | ball | simplex | hpoly
    int n = 0;
    /// Box bounds; a single entry is broadcast to all n axes.
    std::vector<double> lo{0.0};
    std::vector<double> hi{1.0};
    /// Ball; an empty center means the origin.
    std::vector<double> center;
    double radius = 1.0;
    /// H-polytope, given inline or loaded from `file`.
    std::string file;
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    std::optional<std::vector<double>> x0;
    std::optional<double> r;

    bool operator==(const BodySpec&) const = default;
};

struct RunConfig {
    std::string command = "anneal";  // anneal | ipm | heatpath | diagnose
    BodySpec body;
    std::vector<double> theta;
    double eps = 0.05;
    std::uint64_t seed = 0;
    std::string schedule = "entropic";  // classic | entropic
    std::optional<double> nu;
    std::optional<double> t1;
    double c_mix = 1.0;
    std::optional<int> replicas;
    std::optional<std::uint64_t> steps;
    std::string barrier = "log";  // log | entropic | sampled
    double path_c = kDefaultPathC;
    int grid = 7;
    std::vector<double> temperatures;
    std::string heat_mode = "quadrature";  // quadrature | sampled
    std::uint64_t heat_samples = 100000;
    std::string report;  // empty: stdout
    std::string trace;   // empty: no trace

    bool operator==(const RunConfig&) const = default;
};

// ─── JSON ──────────────────────────────────────────────────────────────────

namespace detail {

template <class T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
    j[key] = v ? json(*v) : json(nullptr);
}

template <class T>
void get_optional(const json& j, const char* key, std::optional<T>& v) {
    if (!j.contains(key) || j.at(key).is_null()) {
        v.reset();
    } else {
        v = j.at(key).get<T>();
    }
}

template <class T>
void get_if(const json& j, const char* key, T& v) {
    if (j.contains(key)) v = j.at(key).get<T>();
}

inline Vector to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline json to_json(const BodySpec& s) {
    json j{{"kind", s.kind}, {"n", s.n}, {"lo", s.lo}, {"hi", s.hi}, {"center", s.center}, {"radius", s.radius},
           {"file", s.file}, {"A", s.a}, {"b", s.b}};
    detail::put_optional(j, "x0", s.x0);
    detail::put_optional(j, "R", s.r);
    return j;
}

inline BodySpec body_spec_from_json(const json& j) {
    BodySpec s;
    detail::get_if(j, "kind", s.kind);
    detail::get_if(j, "n", s.n);
    detail::get_if(j, "lo", s.lo);
    detail::get_if(j, "hi", s.hi);
    detail::get_if(j, "center", s.center);
    detail::get_if(j, "radius", s.radius);
    detail::get_if(j, "file", s.file);
    detail::get_if(j, "A", s.a);
    detail::get_if(j, "b", s.b);
    detail::get_optional(j, "x0", s.x0);
    detail::get_optional(j, "R", s.r);
    return s;
}

inline json to_json(const RunConfig& c) {
    json j{{"command", c.command},
           {"body", to_json(c.body)},
           {"theta", c.theta},
           {"eps", c.eps},
           {"seed", c.seed},
           {"schedule", c.schedule},
           {"c_mix", c.c_mix},
           {"barrier", c.barrier},
           {"path_c", c.path_c},
           {"grid", c.grid},
           {"temperatures", c.temperatures},
           {"heat_mode", c.heat_mode},
           {"heat_samples", c.heat_samples},
           {"report", c.report},
           {"trace", c.trace}};
    detail::put_optional(j, "nu", c.nu);
    detail::put_optional(j, "t1", c.t1);
    detail::put_optional(j, "replicas", c.replicas);
    detail::put_optional(j, "steps", c.steps);
    return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline RunConfig run_config_from_json(const json& j) {
    static const std::vector<std::string> known = {
        "command", "body", "theta", "eps", "seed", "schedule", "nu", "t1", "c_mix", "replicas", "steps",
        "barrier", "path_c", "grid", "temperatures", "heat_mode", "heat_samples", "report", "trace"};
    if (!j.is_object()) throw InputError("run config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw InputError("unknown run config key '" + key + "'");
    RunConfig c;
    try {
        detail::get_if(j, "command", c.command);
        if (j.contains("body")) c.body = body_spec_from_json(j.at("body"));
        detail::get_if(j, "theta", c.theta);
        detail::get_if(j, "eps", c.eps);
        detail::get_if(j, "seed", c.seed);
        detail::get_if(j, "schedule", c.schedule);
        detail::get_optional(j, "nu", c.nu);
        detail::get_optional(j, "t1", c.t1);
        detail::get_if(j, "c_mix", c.c_mix);
        detail::get_optional(j, "replicas", c.replicas);
        detail::get_optional(j, "steps", c.steps);
        detail::get_if(j, "barrier", c.barrier);
        detail::get_if(j, "path_c", c.path_c);
        detail::get_if(j, "grid", c.grid);
        detail::get_if(j, "temperatures", c.temperatures);
        detail::get_if(j, "heat_mode", c.heat_mode);
        detail::get_if(j, "heat_samples", c.heat_samples);
        detail::get_if(j, "report", c.report);
        detail::get_if(j, "trace", c.trace);
    } catch (const json::exception& e) {
        throw InputError(std::string("run config: ") + e.what());
    }
    return c;
}

// ─── Bodies ────────────────────────────────────────────────────────────────

/// Reads an H-polytope file {n, A, b, x0?, R?} into the body description.
inline void load_polytope_file(BodySpec& s) {
    std::ifstream in(s.file);
    if (!in) throw InputError("cannot open polytope file '" + s.file + "'");
    json j;
    try {
        j = json::parse(in);
        s.a = j.at("A").get<std::vector<std::vector<double>>>();
        s.b = j.at("b").get<std::vector<double>>();
        s.n = j.contains("n") ? j.at("n").get<int>() : 0;
        detail::get_optional(j, "x0", s.x0);
        detail::get_optional(j, "R", s.r);
    } catch (const json::exception& e) {
        throw InputError("polytope file '" + s.file + "': " + e.what());
    }
}

namespace detail {

inline Vector broadcast(const std::vector<double>& v, int n, const char* what) {
    if (v.size() == 1) return Vector::Constant(n, v[0]);
    if (static_cast<int>(v.size()) != n)
        throw InputError(std::string(what) + ": expected 1 or " + std::to_string(n) + " values");
    return to_eigen(v);
}

}  // namespace detail

inline ConvexBody build_body(const BodySpec& s) {
    if (s.kind == "hpoly") {
        if (s.a.empty()) throw InputError("hpoly body needs A and b (inline or via a file)");
        const int n = static_cast<int>(s.a.front().size());
        if (s.n != 0 && s.n != n) throw InputError("hpoly: n does not match the columns of A");
        if (s.b.size() != s.a.size()) throw InputError("hpoly: A and b have different row counts");
        Matrix a(static_cast<Eigen::Index>(s.a.size()), n);
        for (std::size_t i = 0; i < s.a.size(); ++i) {
            if (static_cast<int>(s.a[i].size()) != n) throw InputError("hpoly: ragged A");
            for (int k = 0; k < n; ++k) a(static_cast<Eigen::Index>(i), k) = s.a[i][k];
        }
        std::optional<Vector> x0;
        if (s.x0) x0 = detail::to_eigen(*s.x0);
        return ConvexBody::hpolytope(a, detail::to_eigen(s.b), x0, s.r);
    }
    if (s.n < 1) throw InputError("body dimension n must be positive");
    if (s.kind == "box") return ConvexBody::box(detail::broadcast(s.lo, s.n, "lo"), detail::broadcast(s.hi, s.n, "hi"));
    if (s.kind == "ball") {
        const Vector c = s.center.empty() ? Vector::Zero(s.n) : detail::broadcast(s.center, s.n, "center");
        return ConvexBody::ball(c, s.radius);
    }
    if (s.kind == "simplex") return ConvexBody::simplex(s.n);
    throw InputError("unknown body kind '" + s.kind + "' (box, ball, simplex, hpoly)");
}

/// Materializes every default: loads the polytope file, fixes n, replica and
/// step counts, ν, t1 and the temperature grid.
inline RunConfig resolve(RunConfig c) {
    static const std::vector<std::string> commands = {"anneal", "ipm", "heatpath", "diagnose"};
    if (std::find(commands.begin(), commands.end(), c.command) == commands.end())
        throw InputError("unknown command '" + c.command + "'");
    if (c.body.kind == "hpoly" && c.body.a.empty() && !c.body.file.empty()) load_polytope_file(c.body);
    const ConvexBody body = build_body(c.body);
    const int n = body.dim();
    c.body.n = n;
    if (static_cast<int>(c.theta.size()) != n)
        throw InputError("theta: expected dimension " + std::to_string(n) + ", got " + std::to_string(c.theta.size()));
    if (!(c.eps > 0)) throw InputError("eps must be positive");
    if (c.command == "anneal" || c.command == "diagnose") {
        const ScheduleKind kind = parse_schedule_kind(c.schedule);
        if (kind == ScheduleKind::custom) throw InputError("the CLI supports the classic and entropic schedules");
        if (kind == ScheduleKind::entropic && !c.nu) c.nu = static_cast<double>(n);
        if (!c.t1) c.t1 = estimate_diameter(body);
        SamplerConfig sc;
        sc.c_mix = c.c_mix;
        if (!c.replicas) c.replicas = sc.resolved_replicas(n);
        if (!c.steps) c.steps = sc.resolved_steps(n);
    } else if (c.command == "ipm") {
        if (c.barrier != "log" && c.barrier != "entropic" && c.barrier != "sampled")
            throw InputError("unknown barrier '" + c.barrier + "' (log, entropic, sampled)");
        if (!c.nu) {
            if (c.barrier == "log") c.nu = LogBarrier::for_body(body).nu();
            else c.nu = (1.0 + kEntropicNuSlack) * n;
        }
        if (c.barrier == "sampled") {
            if (!c.replicas) c.replicas = SampledConfig{}.replicas;
            if (!c.steps) c.steps = mix_steps(n, c.c_mix);
        }
    } else {
        if (c.temperatures.empty()) c.temperatures = default_temperature_grid(body, c.grid);
        c.grid = static_cast<int>(c.temperatures.size());
        if (c.barrier != "log" && c.barrier != "entropic")
            throw InputError("heatpath compares against the log or entropic barrier");
        if (c.heat_mode != "quadrature" && c.heat_mode != "sampled")
            throw InputError("unknown heat mode '" + c.heat_mode + "' (quadrature, sampled)");
    }
    return c;
}

// ─── Traces ────────────────────────────────────────────────────────────────

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void csv_header(std::ostringstream& out, const std::string& command, std::initializer_list<const char*> lead,
                       int n, std::initializer_list<const char*> tail) {
    out << "# trace_version=" << kTraceVersion << " command=" << command << "\n";
    bool first = true;
    for (const char* c : lead) out << (first ? "" : ",") << c, first = false;
    for (int i = 1; i <= n; ++i) out << (first ? "" : ",") << "x" << i, first = false;
    for (const char* c : tail) out << (first ? "" : ",") << c, first = false;
    out << "\n";
}

inline void csv_vector(std::ostringstream& out, const Vector& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) out << "," << format_double(x(i));
}

}  // namespace detail

struct RunResult {
    json report;
    std::string trace;
};

inline json base_report(const RunConfig& c) {
    return json{{"config", to_json(c)},
                {"stream_splitting_rule", kStreamSplittingRule},
                {"trace_version", kTraceVersion}};
}

inline json vec_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(std::isfinite(v(i)) ? json(v(i)) : json(nullptr));
    return a;
}

inline json num_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

namespace detail {

inline AnnealReport run_annealing(const RunConfig& c, const ConvexBody& body) {
    const Vector theta = to_eigen(c.theta);
    const Schedule s = make_schedule(parse_schedule_kind(c.schedule), body, theta, c.eps, c.nu, c.t1);
    SamplerConfig sc;
    sc.c_mix = c.c_mix;
    sc.steps = c.steps;
    sc.replicas = c.replicas;
    sc.seed = c.seed;
    return anneal(body, theta, s, sc);
}

inline json schedule_json(const Schedule& s) {
    return json{{"kind", to_string(s.kind)}, {"t1", s.t1},           {"shrink", s.shrink},
                {"epochs", s.epochs},        {"nu", s.nu_effective()}, {"final_t", s.temperature(s.epochs)}};
}

inline RunResult run_anneal(const RunConfig& c, const ConvexBody& body) {
    const AnnealReport r = run_annealing(c, body);
    RunResult out;
    out.report = base_report(c);
    out.report["schedule"] = schedule_json(r.schedule);
    out.report["final_x"] = vec_json(r.final_x);
    out.report["final_objective"] = r.objective.dot(r.final_x);
    out.report["final_gap_bound"] = r.final_gap_bound;
    out.report["counters"] = json{{"steps", r.counters.steps},
                                  {"chord_calls", r.counters.chord_calls},
                                  {"membership_calls", r.counters.membership_calls},
                                  {"retries", r.counters.retries}};
    out.report["warnings"] = r.warnings;
    std::ostringstream csv;
    csv_header(csv, c.command, {"epoch", "t"}, body.dim(), {"gap_bound"});
    for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
        const PathPoint& p = r.trajectory[k];
        csv << (k + 1) << "," << format_double(p.t);
        csv_vector(csv, p.x);
        csv << "," << format_double(p.gap_bound) << "\n";
    }
    out.trace = csv.str();
    return out;
}

inline RunResult run_diagnose(const RunConfig& c, const ConvexBody& body) {
    const AnnealReport r = run_annealing(c, body);
    const auto diag = epoch_diagnostics(r, body);
    RunResult out;
    out.report = base_report(c);
    out.report["schedule"] = schedule_json(r.schedule);
    json rows = json::array();
    double worst_l2 = 0.0;
    for (const auto& d : diag) {
        rows.push_back(json{{"epoch", d.k},
                            {"t", d.t},
                            {"isotropy", num_json(d.isotropy)},
                            {"mean_error", num_json(d.mean_error)},
                            {"mean_z", num_json(d.mean_z)},
                            {"l2_ratio", num_json(d.l2_ratio)}});
        if (std::isfinite(d.l2_ratio)) worst_l2 = std::max(worst_l2, d.l2_ratio);
    }
    out.report["epochs"] = rows;
    out.report["max_l2_ratio"] = worst_l2;
    out.report["warnings"] = r.warnings;
    std::ostringstream csv;
    csv_header(csv, c.command, {"epoch", "t", "isotropy", "mean_error", "mean_z", "l2_ratio"}, 0, {});
    for (const auto& d : diag)
        csv << d.k << "," << format_double(d.t) << "," << format_double(d.isotropy) << ","
            << format_double(d.mean_error) << "," << format_double(d.mean_z) << "," << format_double(d.l2_ratio)
            << "\n";
    out.trace = csv.str();
    return out;
}

inline RunResult run_ipm(const RunConfig& c, const ConvexBody& body) {
    const Vector theta = to_eigen(c.theta);
    std::vector<PathStep> steps;
    if (c.barrier == "sampled") {
        SampledConfig sc;
        sc.replicas = *c.replicas;
        sc.steps = c.steps;
        sc.c_mix = c.c_mix;
        sc.seed = c.seed;
        SampledMoments oracle(body, sc);
        steps = follow_path_sampled(oracle, theta, c.eps, c.nu, c.path_c);
    } else {
        FollowOptions fo;
        fo.c = c.path_c;
        if (c.barrier == "log") {
            steps = follow_path(LogBarrier::for_body(body, c.nu), theta, c.eps, fo);
        } else {
            steps = follow_path(EntropicBarrier(body, c.nu), theta, c.eps, fo);
        }
    }
    const PathStep& last = steps.back();
    double max_decrement = 0.0;
    bool bump = true, quadratic = true;
    for (const auto& s : steps) {
        if (std::isfinite(s.exit_decrement)) max_decrement = std::max(max_decrement, s.exit_decrement);
        bump = bump && s.bump_holds;
        quadratic = quadratic && s.quadratic_holds;
    }
    RunResult out;
    out.report = base_report(c);
    out.report["epochs"] = static_cast<int>(steps.size()) - 1;
    out.report["final_t"] = last.state.t;
    out.report["final_x"] = vec_json(last.state.x_hat);
    out.report["final_objective"] = theta.dot(last.state.x_hat);
    out.report["final_gap_bound"] = last.gap_bound;
    out.report["max_decrement"] = max_decrement;
    out.report["bump_holds"] = bump;
    out.report["quadratic_holds"] = quadratic;
    std::ostringstream csv;
    csv_header(csv, c.command, {"k", "t", "lambda", "gap_bound"}, body.dim(), {});
    for (const auto& s : steps) {
        csv << s.state.k << "," << format_double(s.state.t) << "," << format_double(s.state.decrement) << ","
            << format_double(s.gap_bound);
        csv_vector(csv, s.state.x_hat);
        csv << "\n";
    }
    out.trace = csv.str();
    return out;
}

inline RunResult run_heatpath(const RunConfig& c, const ConvexBody& body) {
    const Vector theta = to_eigen(c.theta);
    HeatPathOptions ho;
    ho.mode = c.heat_mode == "sampled" ? HeatMode::sampled : HeatMode::quadrature;
    ho.samples = c.heat_samples;
    ho.seed = c.seed;
    auto heat = heat_path(body, theta, c.temperatures, ho);
    std::vector<PathPoint> central;
    if (c.barrier == "entropic") {
        central = central_path(EntropicBarrier(body, c.nu), theta, c.temperatures);
    } else {
        central = central_path(LogBarrier::for_body(body, c.nu), theta, c.temperatures);
    }
    const PathComparison cmp = compare_paths(heat, central);
    RunResult out;
    out.report = base_report(c);
    out.report["residuals"] = cmp.residuals;
    out.report["max_residual"] = cmp.max_residual;
    std::ostringstream csv;
    csv_header(csv, c.command, {"t", "source"}, body.dim(), {"residual"});
    for (const auto* path : {&heat, &central})
        for (const auto& p : *path) {
            csv << format_double(p.t) << "," << to_string(p.source);
            csv_vector(csv, p.x);
            csv << "," << format_double(p.residual) << "\n";
        }
    out.trace = csv.str();
    return out;
}

}  // namespace detail

/// Resolves the config and executes the selected pipeline. The returned
/// report echoes the resolved config.
inline RunResult run(const RunConfig& config) {
    const RunConfig c = resolve(config);
    const ConvexBody body = build_body(c.body);
    if (c.command == "anneal") return detail::run_anneal(c, body);
    if (c.command == "diagnose") return detail::run_diagnose(c, body);
    if (c.command == "ipm") return detail::run_ipm(c, body);
    return detail::run_heatpath(c, body);
}

/// Machine-readable error object and the process exit code for it.
inline std::pair<json, int> error_report(const std::exception& e) {
    std::string type = "error";
    int code = 1;
    if (dynamic_cast<const InputError*>(&e)) type = "input_error", code = 2;
    else if (dynamic_cast<const PreconditionError*>(&e)) type = "precondition_error", code = 2;
    else if (dynamic_cast<const UnsupportedError*>(&e)) type = "unsupported", code = 3;
    else if (dynamic_cast<const PathLossError*>(&e)) type = "path_loss", code = 4;
    else if (dynamic_cast<const ConvergenceError*>(&e)) type = "convergence_error", code = 4;
    else if (dynamic_cast<const NumericalError*>(&e)) type = "numerical_error", code = 4;
    else if (dynamic_cast<const ChainError*>(&e)) type = "chain_error", code = 4;
    return {json{{"error", {{"type", type}, {"message", e.what()}}}}, code};
}

}  // namespace anneal_ipm
