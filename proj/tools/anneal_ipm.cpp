#include "anneal_ipm/io.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace anneal_ipm;

namespace {

struct Flags {
    std::string config_file;
    bool dump_config = false;
    std::string body;
    int n = 0;
    std::vector<double> lo, hi, center;
    std::optional<double> radius;
    std::string file;
    std::vector<double> theta;
    std::optional<double> eps, nu, t1, c_mix, path_c;
    std::optional<std::uint64_t> seed, steps, heat_samples;
    std::optional<int> replicas, grid;
    std::string schedule, barrier, heat_mode, report, trace;
    std::vector<double> temperatures;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_file, "Run config JSON; flags given on the command line override it");
    cmd->add_flag("--dump-config", f.dump_config, "Print the resolved config and exit");
    cmd->add_option("--body", f.body, "Body kind")->check(CLI::IsMember({"box", "ball", "simplex", "hpoly"}));
    cmd->add_option("--n", f.n, "Dimension (box, ball, simplex)");
    cmd->add_option("--lo", f.lo, "Box lower bounds (one value or n)")->delimiter(',');
    cmd->add_option("--hi", f.hi, "Box upper bounds (one value or n)")->delimiter(',');
    cmd->add_option("--center", f.center, "Ball center")->delimiter(',');
    cmd->add_option("--radius", f.radius, "Ball radius");
    cmd->add_option("--file", f.file, "H-polytope JSON {n, A, b, x0?, R?}");
    cmd->add_option("--theta", f.theta, "Objective direction")->delimiter(',');
    cmd->add_option("--eps", f.eps, "Target accuracy");
    cmd->add_option("--seed", f.seed, "Run seed");
    cmd->add_option("--nu", f.nu, "Barrier parameter override");
    cmd->add_option("--report", f.report, "Write the JSON report here instead of stdout");
    cmd->add_option("--trace", f.trace, "Write the CSV trace here");
}

void add_sampler(CLI::App* cmd, Flags& f) {
    cmd->add_option("--c-mix", f.c_mix, "Mixing constant: steps = ceil(c_mix n^3)");
    cmd->add_option("--steps", f.steps, "Hit-and-Run steps per epoch or estimate");
    cmd->add_option("--replicas", f.replicas, "Replica chains");
}

RunConfig merge(const std::string& command, const Flags& f) {
    RunConfig c;
    if (!f.config_file.empty()) {
        std::ifstream in(f.config_file);
        if (!in) throw InputError("cannot open config file '" + f.config_file + "'");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw InputError(std::string("config file: ") + e.what());
        }
        c = run_config_from_json(j);
    }
    c.command = command;
    if (!f.body.empty()) {
        if (f.body != c.body.kind) c.body = BodySpec{};
        c.body.kind = f.body;
    }
    if (f.n) c.body.n = f.n;
    if (!f.lo.empty()) c.body.lo = f.lo;
    if (!f.hi.empty()) c.body.hi = f.hi;
    if (!f.center.empty()) c.body.center = f.center;
    if (f.radius) c.body.radius = *f.radius;
    if (!f.file.empty()) {
        c.body.file = f.file;
        c.body.a.clear();
        c.body.b.clear();
    }
    if (!f.theta.empty()) c.theta = f.theta;
    if (f.eps) c.eps = *f.eps;
    if (f.seed) c.seed = *f.seed;
    if (f.nu) c.nu = f.nu;
    if (f.t1) c.t1 = f.t1;
    if (f.c_mix) c.c_mix = *f.c_mix;
    if (f.steps) c.steps = f.steps;
    if (f.replicas) c.replicas = f.replicas;
    if (!f.schedule.empty()) c.schedule = f.schedule;
    if (!f.barrier.empty()) c.barrier = f.barrier;
    if (f.path_c) c.path_c = *f.path_c;
    if (f.grid) c.grid = *f.grid;
    if (!f.temperatures.empty()) c.temperatures = f.temperatures;
    if (!f.heat_mode.empty()) c.heat_mode = f.heat_mode;
    if (f.heat_samples) c.heat_samples = *f.heat_samples;
    if (!f.report.empty()) c.report = f.report;
    if (!f.trace.empty()) c.trace = f.trace;
    return c;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulated annealing and interior-point path following over convex bodies"};
    app.require_subcommand(1);
    Flags f;

    auto* anneal_cmd = app.add_subcommand("anneal", "Simulated annealing with Hit-and-Run");
    auto* diagnose_cmd = app.add_subcommand("diagnose", "Annealing with per-epoch comparison to exact moments");
    for (auto* cmd : {anneal_cmd, diagnose_cmd}) {
        add_common(cmd, f);
        add_sampler(cmd, f);
        cmd->add_option("--schedule", f.schedule, "Temperature schedule")
            ->check(CLI::IsMember({"classic", "entropic"}));
        cmd->add_option("--t1", f.t1, "Starting temperature (default: diameter bound)");
    }

    auto* ipm_cmd = app.add_subcommand("ipm", "Short-step barrier path following");
    add_common(ipm_cmd, f);
    add_sampler(ipm_cmd, f);
    ipm_cmd->add_option("--barrier", f.barrier, "Barrier backend")
        ->check(CLI::IsMember({"log", "entropic", "sampled"}));
    ipm_cmd->add_option("--c", f.path_c, "Temperature bump constant");

    auto* heat_cmd = app.add_subcommand("heatpath", "Heat path against a barrier central path");
    add_common(heat_cmd, f);
    heat_cmd->add_option("--barrier", f.barrier, "Barrier for the central path")
        ->check(CLI::IsMember({"log", "entropic"}));
    heat_cmd->add_option("--grid", f.grid, "Number of log-spaced temperatures");
    heat_cmd->add_option("--temperatures", f.temperatures, "Explicit temperatures")->delimiter(',');
    heat_cmd->add_option("--heat-mode", f.heat_mode, "Heat path backend")
        ->check(CLI::IsMember({"quadrature", "sampled"}));
    heat_cmd->add_option("--samples", f.heat_samples, "Chain steps per temperature in sampled mode");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << json{{"error", {{"type", "usage_error"}, {"message", e.what()}}}}.dump() << "\n";
        return 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const RunConfig config = merge(command, f);
        if (f.dump_config) {
            std::cout << to_json(resolve(config)).dump(2) << "\n";
            return 0;
        }
        const RunResult result = run(config);
        const std::string report = result.report.dump(2) + "\n";
        if (config.report.empty()) {
            std::cout << report;
        } else {
            write_file(config.report, report);
        }
        if (!config.trace.empty()) write_file(config.trace, result.trace);
    } catch (const std::exception& e) {
        auto [err, code] = error_report(e);
        std::cerr << err.dump() << "\n";
        return code;
    }
    return 0;
}
