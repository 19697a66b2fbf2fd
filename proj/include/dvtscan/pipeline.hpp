#pragma once

#include <string>

#include "metrics.hpp"
#include "planner.hpp"
#include "sim/scenario.hpp"

namespace dvtscan {

struct CoarsePlan {
    SurfaceCloud cloud;
    WaypointSet waypoints;
    FittedPath path;
};

/// Scanner cloud of the phantom plus the biased coarse path fitted through it.
inline CoarsePlan plan_coarse(const sim::ScenarioConfig& cfg, const sim::Phantom& ph) {
    const auto& pl = cfg.planner;
    CoarsePlan out;
    out.cloud = ph.surface_cloud(pl.cloud_spacing, pl.cloud_margin);
    out.waypoints = coarse_path(out.cloud, pl.start, pl.end, pl.lateral_bias, pl.spacing);
    out.path = fit_scan_path(out.waypoints, pl.delta_p);
    return out;
}

struct SweepOutcome {
    sim::SweepResult sweep;
    OptimizeResult optimized;
};

inline SweepOutcome sweep_and_optimize(const sim::ScenarioConfig& cfg, const sim::Phantom& ph, const FittedPath& path,
                                       const SurfaceCloud& cloud) {
    SweepOutcome out;
    out.sweep = sim::run_sweep(cfg, ph, path);
    OptimizeOptions opt;
    opt.delta_p = cfg.planner.delta_p;
    out.optimized = optimize_path_detailed(path, out.sweep.samples, cloud, opt);
    return out;
}

/// Deterministic run identifier from the command, config and input digests.
inline std::string make_run_id(const std::string& command, const std::string& config_hash, const std::string& inputs) {
    return command + "-" + sim::hex64(sim::fnv1a(command + "|" + config_hash + "|" + inputs)).substr(0, 12);
}

}  // namespace dvtscan
