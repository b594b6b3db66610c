#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsflow/errors.hpp"

namespace qsflow {

// Flat key-value run configuration ("section.key = value", '#' comments).
// Unknown keys are rejected so typos fail loudly at parse time.
struct RunConfig {
    struct Grid {
        std::string mode = "axisymmetric"; // axisymmetric | full2d
        int ntheta = 0;
        int nphi = 0;
        int dim = 3;
    } grid;

    struct Surface {
        std::string kind; // sphere | ellipsoid | perturbed_sphere | snapshot
        double radius = 1.0;
        double equatorial_radius = 1.0;
        double polar_radius = 1.0;
        double base_radius = 1.0;
        double amplitude = 0.0;
        int mode = 2;
        std::string file;
    } surface;

    struct Flow {
        std::string stop = "t_max"; // t_max | until_convex
        double t_max = 1.0;
        double cfl = 0.2;
        double record_dt = 0.0;
        double dt_min = 1e-10;
        std::vector<double> snapshot_times;
    } flow;

    struct Foliation {
        double t_max = 0.0;
        double dt = 0.0;
        bool dump_fields = false;
    } foliation;

    struct Lapse {
        std::string kind; // match_mean_curvature | schwarzschild | eta_scale | eta_perturbed
        double mass = 0.0;
        std::string h_target = "euclidean"; // euclidean | schwarzschild
        double scale = 1.0;
        double amplitude = 0.0;
    } lapse;

    struct Solver {
        double rtol = 1e-8;
        double atol = 1e-12;
        int fixed_substeps = 0;
        double cg_tol = 1e-10;
    } solver;

    struct Pipeline {
        std::string flow = "auto"; // auto | off
    } pipeline;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

} // namespace qsflow
