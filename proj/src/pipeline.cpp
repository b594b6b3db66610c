#include "qsflow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "qsflow/oracles.hpp"

namespace qsflow {

namespace {

using ordered_json = nlohmann::ordered_json;

void ensure_dir(const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::io_failure, "cannot create output directory: " + out_dir);
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void write_json(const ordered_json& j, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io_failure, "cannot open for writing: " + path);
    f << j.dump(2) << "\n";
    if (!f) fail(ErrorCode::io_failure, "write failed: " + path);
}

ordered_json grid_json(const RunConfig& c) {
    ordered_json j;
    j["mode"] = c.grid.mode;
    j["ntheta"] = c.grid.ntheta;
    if (c.grid.mode == "full2d") j["nphi"] = c.grid.nphi;
    j["dim"] = c.grid.dim;
    return j;
}

// stage runner: on failure, records the stage name in summary.json and rethrows
template <class F>
auto stage(ordered_json& summary, const std::string& out_dir, const char* name, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        summary["error"] = {{"stage", name}, {"message", e.what()},
                            {"code", static_cast<int>(e.code())}};
        summary["exit_status"] = static_cast<int>(e.code());
        write_json(summary, join(out_dir, "summary.json"));
        throw;
    }
}

ScalarField initial_lapse_from_config(const RunConfig& config, const FoliationRecord& record,
                                      const RadialSurface& surface) {
    if (config.lapse.kind.empty())
        fail(ErrorCode::config_error, "lapse.kind is required for this command");
    const BandLeaf leaf0 = record.segments.front().leaf(0);
    const std::size_t n = leaf0.eta.size();
    ScalarField u0(record.grid, std::vector<double>(n));

    if (config.lapse.kind == "match_mean_curvature" || config.lapse.kind == "schwarzschild") {
        ScalarField H_target(record.grid, std::vector<double>(n));
        const bool schw = config.lapse.kind == "schwarzschild" ||
                          config.lapse.h_target == "schwarzschild";
        for (std::size_t i = 0; i < n; ++i) {
            const double H_hat = leaf0.H1[i] / leaf0.eta[i];
            if (schw) {
                const double lapse = oracles::schwarzschild_lapse(
                    config.lapse.mass, surface.rho[i], record.grid->ambient_dim());
                H_target[i] = H_hat / lapse;
            } else {
                H_target[i] = H_hat;
            }
        }
        return initial_lapse(record, H_target);
    }
    if (config.lapse.kind == "eta_scale") {
        for (std::size_t i = 0; i < n; ++i) u0[i] = config.lapse.scale * leaf0.eta[i];
        return u0;
    }
    if (config.lapse.kind == "eta_perturbed") {
        const SphereGrid& g = *record.grid;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = g.cos_theta(g.row_of(i));
            u0[i] = leaf0.eta[i] * (1.0 + config.lapse.amplitude * c);
        }
        return u0;
    }
    fail(ErrorCode::config_error, "unsupported lapse.kind: " + config.lapse.kind);
}

SolveControls solve_controls_from_config(const RunConfig& config) {
    SolveControls sc;
    sc.rtol = config.solver.rtol;
    sc.atol = config.solver.atol;
    sc.fixed_substeps = config.solver.fixed_substeps;
    sc.cg_tol = config.solver.cg_tol;
    return sc;
}

FlowControls flow_controls_from_config(const RunConfig& config) {
    FlowControls fc;
    fc.t_max = config.flow.t_max;
    fc.until_convex = config.flow.stop == "until_convex";
    fc.cfl = config.flow.cfl;
    fc.record_dt = config.flow.record_dt;
    fc.dt_min = config.flow.dt_min;
    return fc;
}

} // namespace

std::shared_ptr<const SphereGrid> grid_from_config(const RunConfig& config) {
    if (config.grid.mode == "full2d")
        return SphereGrid::full2d(config.grid.ntheta, config.grid.nphi);
    return SphereGrid::axisymmetric(config.grid.dim, config.grid.ntheta);
}

RadialSurface surface_from_config(const RunConfig& config) {
    auto grid = grid_from_config(config);
    if (config.surface.kind == "sphere") return make_sphere(grid, config.surface.radius);
    if (config.surface.kind == "ellipsoid")
        return make_ellipsoid(grid, config.surface.equatorial_radius,
                              config.surface.polar_radius);
    if (config.surface.kind == "perturbed_sphere")
        return make_perturbed_sphere(grid, config.surface.base_radius,
                                     config.surface.amplitude, config.surface.mode);
    if (config.surface.kind == "snapshot") {
        RadialSurface s = load_surface(config.surface.file);
        if (!s.grid->same_layout(*grid))
            fail(ErrorCode::config_error,
                 "surface snapshot grid does not match the configured grid");
        return s;
    }
    fail(ErrorCode::config_error, "unsupported surface.kind: " + config.surface.kind);
}

void run_flow_cmd(const RunConfig& config, const std::string& out_dir) {
    ensure_dir(out_dir);
    ordered_json summary;
    summary["tool"] = "qsflow";
    summary["command"] = "flow";
    summary["grid"] = grid_json(config);

    const RadialSurface surface =
        stage(summary, out_dir, "surface", [&] { return surface_from_config(config); });
    const FlowTrajectory traj = stage(summary, out_dir, "flow", [&] {
        return run_flow(surface, flow_controls_from_config(config));
    });

    export_trajectory_csv(traj, join(out_dir, "trajectory.csv"));
    save_surface(traj.leaves.back().surface, join(out_dir, "surface_final.txt"));
    for (double ts : config.flow.snapshot_times) {
        // nearest recorded leaf at or after the requested time
        const FlowLeaf* pick = &traj.leaves.back();
        for (const auto& leaf : traj.leaves)
            if (leaf.t >= ts - 1e-12) {
                pick = &leaf;
                break;
            }
        char name[64];
        std::snprintf(name, sizeof name, "surface_t%.6f.txt", pick->t);
        save_surface(pick->surface, join(out_dir, name));
    }

    summary["stages"]["flow"] = {
        {"ran", true},
        {"leaves", traj.leaves.size()},
        {"reached_convexity", traj.reached_convexity},
        {"t_convex", traj.t_convex ? ordered_json(*traj.t_convex) : ordered_json(nullptr)},
        {"final_roundness", roundness(traj.leaves.back().surface)},
        {"final_radius_mean", mean_radius(traj.leaves.back().surface)},
    };
    summary["exit_status"] = 0;
    write_json(summary, join(out_dir, "summary.json"));
}

void run_foliate_cmd(const RunConfig& config, const std::string& out_dir) {
    ensure_dir(out_dir);
    ordered_json summary;
    summary["tool"] = "qsflow";
    summary["command"] = "foliate";
    summary["grid"] = grid_json(config);

    if (!(config.foliation.t_max > 0.0) || !(config.foliation.dt > 0.0))
        fail(ErrorCode::config_error, "foliate needs foliation.t_max and foliation.dt");

    const RadialSurface surface =
        stage(summary, out_dir, "surface", [&] { return surface_from_config(config); });
    const FoliationRecord record = stage(summary, out_dir, "foliation", [&] {
        return foliate_distance(surface, config.foliation.t_max, config.foliation.dt);
    });
    const ValidationReport rep = validate(record);

    export_band_csv(record, join(out_dir, "band.csv"));
    if (config.foliation.dump_fields)
        export_band_fields(record, join(out_dir, "band_fields.txt"));

    summary["stages"]["foliation"] = {
        {"segments", record.segments.size()}, {"leaves", record.total_leaves()},
        {"t_min", record.t_front()},          {"t_max", record.t_back()},
        {"min_K", rep.min_K},                 {"min_H1", rep.min_H1},
        {"gauss_residual", rep.max_gauss_residual},
        {"standing_assumption", rep.pass},
    };
    summary["exit_status"] = rep.pass ? 0 : 2;
    write_json(summary, join(out_dir, "summary.json"));
    if (!rep.pass) fail(ErrorCode::domain_failure, "foliate: " + rep.message);
}

namespace {

struct PipelineResult {
    FoliationRecord record;
    LapseSolution solution;
    MassSeries series;
    MonotonicityReport mono;
    std::optional<double> adm;
    bool flow_ran = false;
    FlowTrajectory traj;
};

PipelineResult run_pipeline_stages(const RunConfig& config, const std::string& out_dir,
                                   ordered_json& summary) {
    PipelineResult R;
    const RadialSurface surface =
        stage(summary, out_dir, "surface", [&] { return surface_from_config(config); });

    if (!(config.foliation.t_max > 0.0) || !(config.foliation.dt > 0.0))
        fail(ErrorCode::config_error, "pipeline needs foliation.t_max and foliation.dt");

    // flow to convexity when the input is not already strictly convex
    RadialSurface outer_surface = surface;
    const LeafGeometry geo0 =
        stage(summary, out_dir, "surface", [&] { return forms_from_radial(surface); });
    const bool convex0 = geo0.kappa_min() > tau_convex;
    stage(summary, out_dir, "flow", [&] {
        if (!convex0 && config.pipeline.flow == "off")
            fail(ErrorCode::domain_failure,
                 "pipeline: surface is not strictly convex and pipeline.flow = off");
        return 0;
    });

    std::optional<FoliationRecord> flow_record;
    if (!convex0) {
        R.flow_ran = true;
        // locate t_convex first, then re-run with a recording cadence dense
        // enough to resolve the flow transient in the band coefficients
        R.traj = stage(summary, out_dir, "flow", [&] {
            FlowControls fc = flow_controls_from_config(config);
            fc.until_convex = true;
            const FlowTrajectory probe = run_flow(surface, fc);
            fc.until_convex = false;
            fc.t_max = *probe.t_convex;
            const double fine = fc.t_max / 128.0;
            fc.record_dt = fc.record_dt > 0.0 ? std::min(fc.record_dt, fine) : fine;
            FlowTrajectory fine_traj = run_flow(surface, fc);
            fine_traj.reached_convexity = true;
            fine_traj.t_convex = probe.t_convex;
            return fine_traj;
        });
        flow_record = stage(summary, out_dir, "foliation", [&] {
            return foliate_from_flow(R.traj);
        });
    }

    R.record = stage(summary, out_dir, "foliation", [&] {
        return flow_record
                   ? extend_distance(*flow_record, config.foliation.t_max,
                                     config.foliation.dt)
                   : foliate_distance(outer_surface, config.foliation.t_max,
                                      config.foliation.dt);
    });

    const ValidationReport rep = validate(R.record);
    summary["stages"]["foliation"] = {
        {"segments", R.record.segments.size()}, {"leaves", R.record.total_leaves()},
        {"t_min", R.record.t_front()},          {"t_max", R.record.t_back()},
        {"min_K", rep.min_K},                   {"min_H1", rep.min_H1},
        {"gauss_residual", rep.max_gauss_residual},
        {"standing_assumption", rep.pass},
    };
    if (!rep.pass) {
        summary["exit_status"] = 2;
        write_json(summary, join(out_dir, "summary.json"));
        fail(ErrorCode::domain_failure, "pipeline: " + rep.message);
    }

    const ScalarField u0 = stage(summary, out_dir, "lapse", [&] {
        return initial_lapse_from_config(config, R.record, surface);
    });
    R.solution = stage(summary, out_dir, "lapse", [&] {
        return solve(R.record, u0, solve_controls_from_config(config));
    });

    R.series = stage(summary, out_dir, "mass", [&] {
        return mass_function(R.record, R.solution);
    });
    R.mono = stage(summary, out_dir, "mass", [&] { return monotonicity_report(R.series); });
    try {
        R.adm = adm_estimate(R.series);
    } catch (const Error&) {
        R.adm = std::nullopt; // band too short for an ADM extrapolation
    }
    return R;
}

} // namespace

void run_solve_cmd(const RunConfig& config, const std::string& out_dir) {
    ensure_dir(out_dir);
    ordered_json summary;
    summary["tool"] = "qsflow";
    summary["command"] = "solve";
    summary["grid"] = grid_json(config);

    if (!(config.foliation.t_max > 0.0) || !(config.foliation.dt > 0.0))
        fail(ErrorCode::config_error, "solve needs foliation.t_max and foliation.dt");

    const RadialSurface surface =
        stage(summary, out_dir, "surface", [&] { return surface_from_config(config); });
    const FoliationRecord record = stage(summary, out_dir, "foliation", [&] {
        return foliate_distance(surface, config.foliation.t_max, config.foliation.dt);
    });
    const ScalarField u0 = stage(summary, out_dir, "lapse", [&] {
        return initial_lapse_from_config(config, record, surface);
    });
    const LapseSolution sol = stage(summary, out_dir, "lapse", [&] {
        return solve(record, u0, solve_controls_from_config(config));
    });

    export_band_csv(record, join(out_dir, "band.csv"));
    export_lapse_csv(sol, join(out_dir, "lapse.csv"));

    ordered_json bounds = ordered_json::array();
    for (const auto& b : sol.bounds)
        bounds.push_back({{"C", b.upper_C}, {"beta", b.lower_beta}, {"gamma", b.decay_gamma}});
    summary["stages"]["lapse"] = {
        {"segments", sol.u.size()},
        {"bounds", bounds},
        {"u_min", *std::min_element(sol.leaf_min_u.begin(), sol.leaf_min_u.end())},
        {"u_max", *std::max_element(sol.leaf_max_u.begin(), sol.leaf_max_u.end())},
        {"certificate_ok", true},
    };
    summary["exit_status"] = 0;
    write_json(summary, join(out_dir, "summary.json"));
}

void run_pipeline_cmd(const RunConfig& config, const std::string& out_dir) {
    ensure_dir(out_dir);
    ordered_json summary;
    summary["tool"] = "qsflow";
    summary["command"] = "pipeline";
    summary["grid"] = grid_json(config);

    PipelineResult R = run_pipeline_stages(config, out_dir, summary);

    if (R.flow_ran) {
        export_trajectory_csv(R.traj, join(out_dir, "trajectory.csv"));
        save_surface(R.traj.leaves.back().surface, join(out_dir, "surface_convex.txt"));
        summary["stages"]["flow"] = {
            {"ran", true},
            {"leaves", R.traj.leaves.size()},
            {"reached_convexity", R.traj.reached_convexity},
            {"t_convex",
             R.traj.t_convex ? ordered_json(*R.traj.t_convex) : ordered_json(nullptr)},
        };
    } else {
        summary["stages"]["flow"] = {{"ran", false}};
    }

    export_band_csv(R.record, join(out_dir, "band.csv"));
    if (config.foliation.dump_fields)
        export_band_fields(R.record, join(out_dir, "band_fields.txt"));
    export_lapse_csv(R.solution, join(out_dir, "lapse.csv"));
    export_mass_csv(R.series, join(out_dir, "mass.csv"));

    ordered_json bounds = ordered_json::array();
    for (const auto& b : R.solution.bounds)
        bounds.push_back({{"C", b.upper_C}, {"beta", b.lower_beta}, {"gamma", b.decay_gamma}});
    summary["stages"]["lapse"] = {
        {"segments", R.solution.u.size()},
        {"bounds", bounds},
        {"u_min", *std::min_element(R.solution.leaf_min_u.begin(), R.solution.leaf_min_u.end())},
        {"u_max", *std::max_element(R.solution.leaf_max_u.begin(), R.solution.leaf_max_u.end())},
        {"certificate_ok", true},
    };
    summary["brown_york_raw"] = R.series.brown_york_raw;
    summary["brown_york_normalized"] = R.series.brown_york_normalized
                                           ? ordered_json(*R.series.brown_york_normalized)
                                           : ordered_json(nullptr);
    summary["adm_estimate"] = R.adm ? ordered_json(*R.adm) : ordered_json(nullptr);
    summary["monotonicity_pass"] = R.mono.pass;
    summary["mass_initial"] = R.series.m.front();
    summary["mass_final"] = R.series.m.back();
    summary["gates"] = {
        {"standing_assumption", true},
        {"bound_certificate", true},
        {"monotone_mass", R.mono.max_positive_jump <= R.mono.tau_mono},
        {"derivative_identity", R.mono.max_rel_mismatch},
    };
    summary["exit_status"] = 0;
    write_json(summary, join(out_dir, "summary.json"));
}

} // namespace qsflow
