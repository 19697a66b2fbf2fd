// dvtscan: scan-path fitting, sweep/optimize and pHRI replay on the simulated phantom.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dvtscan/io.hpp"
#include "dvtscan/metrics.hpp"
#include "dvtscan/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dvtscan;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_simulation = 3;
constexpr int exit_parse = 4;

struct Globals {
    std::string config;
    std::string out;
    long long seed{-1};
    int verbose{0};
};

int exit_code(const Error& e) {
    switch (e.error_class()) {
        case ErrorClass::config:
            return exit_config;
        case ErrorClass::simulation:
            return exit_simulation;
        case ErrorClass::parse:
        case ErrorClass::invalid_input:
            return exit_parse;
    }
    return exit_simulation;
}

fs::path out_dir(const Globals& g) {
    fs::path dir = ".";
    if (const char* env = std::getenv("DVTSCAN_OUT_DIR"); env != nullptr && *env != '\0') {
        dir = env;
    }
    if (!g.out.empty()) {
        dir = g.out;
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    return dir;
}

sim::ScenarioConfig load_config(const Globals& g) {
    if (g.config.empty()) {
        throw ConfigError("this command needs --config <scenario.json>");
    }
    sim::ScenarioConfig cfg = io::read_config(g.config);
    if (g.seed >= 0) {
        cfg.sensor.seed = static_cast<std::uint64_t>(g.seed);
        cfg.config_hash = io::config_hash(cfg);
    }
    return cfg;
}

void log(const Globals& g, const std::string& msg) {
    if (g.verbose > 0) {
        std::cerr << msg << '\n';
    }
}

std::string digest_file(const std::string& path) { return sim::hex64(sim::fnv1a(io::read_text(path))); }

int cmd_fit(const Globals& g, const std::string& input, std::string output, double delta_p) {
    const WaypointSet w = io::read_waypoints(input);
    const FittedPath path = fit_scan_path(w, delta_p);
    if (output.empty()) {
        output = (out_dir(g) / (fs::path(input).stem().string() + ".path.json")).string();
    }
    io::write_path(output, path);
    std::printf("waypoints %zu  s_N %.6f m  reconstruction RMS %.4f mm\n", w.size(), path.s_N,
                reconstruction_rms(path, w, delta_p) * 1e3);
    std::printf("wrote %s\n", output.c_str());
    return exit_ok;
}

int cmd_plan(const Globals& g) {
    const sim::ScenarioConfig cfg = load_config(g);
    const sim::Phantom ph(cfg.phantom);
    const CoarsePlan plan = plan_coarse(cfg, ph);
    const fs::path dir = out_dir(g);
    io::write_cloud((dir / "cloud.txt").string(), plan.cloud);
    io::write_waypoints((dir / "coarse_waypoints.txt").string(), plan.waypoints);
    io::write_path((dir / "coarse_path.json").string(), plan.path);
    std::printf("cloud %zu points  coarse waypoints %zu  s_N %.6f m  fit RMS %.4f mm\n", plan.cloud.points.size(),
                plan.waypoints.size(), plan.path.s_N, reconstruction_rms(plan.path, plan.waypoints) * 1e3);
    std::printf("wrote %s\n", dir.string().c_str());
    return exit_ok;
}

int cmd_sweep(const Globals& g, const std::string& path_file) {
    const sim::ScenarioConfig cfg = load_config(g);
    const sim::Phantom ph(cfg.phantom);
    CoarsePlan plan = plan_coarse(cfg, ph);
    std::string inputs = "coarse";
    if (!path_file.empty()) {
        plan.path = io::read_path(path_file);
        inputs = digest_file(path_file);
    }
    log(g, "sweeping " + std::to_string(plan.path.s_N) + " m at " + std::to_string(cfg.sweep.speed) + " m/s");
    SweepOutcome o;
    o.sweep = sim::run_sweep(cfg, ph, plan.path);
    try {
        OptimizeOptions opt;
        opt.delta_p = cfg.planner.delta_p;
        o.optimized = optimize_path_detailed(plan.path, o.sweep.samples, plan.cloud, opt);
    } catch (const Error& e) {
        if (e.error_class() == ErrorClass::invalid_input) {
            throw ScenarioError(std::string("path optimization failed: ") + e.what());
        }
        throw;
    }
    const std::string run_id = make_run_id("sweep", cfg.config_hash, inputs);
    const fs::path dir = out_dir(g);
    const std::string csv = sim::trace_to_csv(o.sweep.trace, run_id, cfg.config_hash);
    io::write_text((dir / "sweep_trace.csv").string(), csv);
    io::write_text((dir / "sweep_record.csv").string(), io::format_sweep_record(o.sweep.samples));
    io::write_path((dir / "optimized_path.json").string(), o.optimized.path);
    if (o.optimized.projection.gap_warning) {
        std::fprintf(stderr, "warning: some centerline points projected more than 10 mm horizontally\n");
    }

    std::istringstream in(csv);
    const MetricsReport m = compute_metrics(sim::parse_trace_csv(in, "sweep_trace.csv"));
    std::fputs(format_metrics(m).c_str(), stdout);
    std::printf("chained centroids %zu  optimized s_N %.6f m\n", o.optimized.centerline.points.size(),
                o.optimized.path.s_N);
    std::printf("wrote %s\n", dir.string().c_str());
    return exit_ok;
}

int cmd_phri(const Globals& g, const std::string& path_file, const std::string& profile_file) {
    const sim::ScenarioConfig cfg = load_config(g);
    const sim::Phantom ph(cfg.phantom);
    const FittedPath path = io::read_path(path_file);
    const sim::OperatorProfile profile = io::read_profile(profile_file);
    log(g, "replaying " + std::to_string(profile.rows.size()) + " profile rows over " +
               std::to_string(profile.duration()) + " s");
    const sim::PhriResult r = sim::run_phri(cfg, ph, path, profile);
    const std::string run_id = make_run_id("phri", cfg.config_hash, digest_file(path_file) + digest_file(profile_file));
    const fs::path dir = out_dir(g);
    const std::string csv = sim::trace_to_csv(r.trace, run_id, cfg.config_hash);
    io::write_text((dir / "phri_trace.csv").string(), csv);
    std::istringstream in(csv);
    const MetricsReport m = compute_metrics(sim::parse_trace_csv(in, "phri_trace.csv"));
    std::fputs(format_metrics(m).c_str(), stdout);
    std::printf("wrote %s\n", (dir / "phri_trace.csv").string().c_str());
    return exit_ok;
}

int cmd_metrics(const Globals& g, const std::string& trace_file, std::string json_out) {
    const MetricsReport m = compute_metrics(sim::read_trace_csv(trace_file));
    if (json_out.empty()) {
        json_out = (out_dir(g) / (fs::path(trace_file).stem().string() + ".metrics.json")).string();
    }
    io::write_text(json_out, metrics_to_json(m).dump(1) + "\n");
    std::fputs(format_metrics(m).c_str(), stdout);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robotic DVT scan simulation: path fitting, sweep optimization, pHRI replay"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("-c,--config", g.config, "Scenario configuration (JSON)");
    app.add_option("-o,--out", g.out, "Output directory (default: $DVTSCAN_OUT_DIR or .)");
    app.add_option("--seed", g.seed, "Seed for sensor noise (overrides sensor.seed)")->check(CLI::NonNegativeNumber);
    app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");

    std::string fit_in;
    std::string fit_out;
    double fit_delta = 1e-3;
    auto* fit = app.add_subcommand("fit", "Fit a scan path to a waypoint file");
    fit->add_option("waypoints", fit_in, "px py pz nx ny nz per line")->required();
    fit->add_option("--path-out", fit_out, "Output path file");
    fit->add_option("--delta-p", fit_delta, "Densification step, m")->check(CLI::PositiveNumber);

    auto* plan = app.add_subcommand("plan", "Build the scanner cloud and coarse path from the scenario");

    std::string sweep_path;
    auto* sweep = app.add_subcommand("sweep", "Sweep scan, then optimize the path from the vessel centroids");
    sweep->add_option("--path", sweep_path, "Path to sweep (default: coarse path from the scenario)");

    std::string phri_path;
    std::string phri_profile;
    auto* phri = app.add_subcommand("phri", "Replay an operator profile on a path virtual fixture");
    phri->add_option("--path", phri_path, "Fitted path (usually optimized_path.json)")->required();
    phri->add_option("--profile", phri_profile, "Operator profile CSV")->required();

    std::string metrics_in;
    std::string metrics_json;
    auto* metrics = app.add_subcommand("metrics", "Summarize a trace CSV");
    metrics->add_option("trace", metrics_in, "Trace CSV")->required();
    metrics->add_option("--json", metrics_json, "Metrics JSON output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    try {
        if (*fit) {
            return cmd_fit(g, fit_in, fit_out, fit_delta);
        }
        if (*plan) {
            return cmd_plan(g);
        }
        if (*sweep) {
            return cmd_sweep(g, sweep_path);
        }
        if (*phri) {
            return cmd_phri(g, phri_path, phri_profile);
        }
        if (*metrics) {
            return cmd_metrics(g, metrics_in, metrics_json);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_simulation;
    }
    return exit_ok;
}
