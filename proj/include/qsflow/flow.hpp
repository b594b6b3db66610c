#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qsflow/surface.hpp"

namespace qsflow {

// numerical margins for the curvature cone and convexity detection
inline constexpr double tau_cone = 1e-8;   // relative to the curvature scale
inline constexpr double tau_convex = 1e-6; // min principal curvature threshold
inline constexpr double tau_round = 1e-3;  // roundness target for convergence runs

// Gerhardt-Urbas speed f(kappa) = ((sum k)^2 - sum k^2) / sum k.
// Homogeneous of degree one, monotone and concave on Gamma, zero on its
// boundary; 1/f is the H/R expansion speed since (sum k)^2 - sum k^2 = 2K.
double speed_f(std::span<const double> kappa);

struct ConeMargins {
    double trace; // sum kappa_i
    double quad;  // (sum kappa_i)^2 - sum kappa_i^2
};

enum class ConeClass { inside, boundary, outside };

// Admissibility cone Gamma = { trace > 0 and quad > 0 }; open, convex,
// permutation-symmetric, contains the positive cone.
struct AdmissibleCone {
    int ambient_dim;
    bool contains(std::span<const double> kappa) const;
};

ConeClass cone_check(std::span<const double> kappa, ConeMargins* margins = nullptr,
                     double tol = tau_cone);

struct FlowControls {
    double t_max = 1.0;
    bool until_convex = false;
    double cfl = 0.2;
    double record_dt = 0.0; // 0: pick t_max/200
    double dt_min = 1e-10;
    double max_radial_fraction = 0.05; // per-step cap on |d rho| / rho
    double t_cap = 50.0;               // safety stop for until_convex
};

struct FlowLeaf {
    double t;
    RadialSurface surface;
    LeafGeometry geometry;
    ScalarField speed; // 1/f per node
};

struct FlowTrajectory {
    std::vector<FlowLeaf> leaves;
    bool reached_convexity = false;
    std::optional<double> t_convex;
};

// single explicit Euler update rho += dt * (1/f) / <nu, omega>
RadialSurface flow_step(const RadialSurface& surface, double dt);

// adaptive RK2 integration of the radial flow ODE system
FlowTrajectory run_flow(const RadialSurface& surface, const FlowControls& controls);

// trajectory CSV: t, min_kappa, max_kappa, min_f, roundness, radius_mean
void export_trajectory_csv(const FlowTrajectory& traj, const std::string& path);

} // namespace qsflow
