#pragma once

#include <vector>

#include "qsflow/foliation.hpp"

namespace qsflow {

// safety margin turning the strict barrier inequalities into checkable ones
inline constexpr double tau_margin = 0.05;

struct SolveControls {
    double rtol = 1e-8;
    double atol = 1e-12;
    double dt_min = 1e-12;
    // > 0: integrate each leaf interval with this many equal substeps instead
    // of the step-doubling controller (keeps the error smooth in t, which the
    // mass-identity diagnostics want)
    int fixed_substeps = 0;
    double cg_tol = 1e-10;
    int cg_max_iter = 20000;
};

// Barrier certificate of one segment: beta * exp(-gamma (t - t_seg0)) < u < C.
struct SegmentBounds {
    double upper_C = 0.0;
    double lower_beta = 0.0;
    double decay_gamma = 0.0;
};

struct LapseSolution {
    // u per segment per leaf, aligned with the record layout; u jumps across
    // junctions (mean-curvature matching reseeds it)
    std::vector<std::vector<ScalarField>> u;
    std::vector<SegmentBounds> bounds;

    // global leaf enumeration (junction leaves appear on both sides)
    std::vector<double> leaf_time;
    std::vector<double> leaf_min_u, leaf_max_u;
    std::vector<double> residual_norm; // max-norm PDE residual from differencing stored u

    const ScalarField& at(std::size_t segment, std::size_t leaf) const {
        return u[segment][leaf];
    }
};

// u0 = eta0 * H_hat / H_target, which gives the g_u metric mean curvature
// H_target on the first leaf (H_hat is the Euclidean mean curvature there).
ScalarField initial_lapse(const FoliationRecord& record, const ScalarField& H_target);

// A-priori barrier constants from the proof of the existence result:
// C bounds u above, beta e^{-gamma t} below. Record must pass validate().
SegmentBounds apriori_bounds(const FoliationRecord& record, const ScalarField& u0,
                             std::size_t segment = 0);

// Integrates u' = (u^2/H1) Lap_{g_t} u - u^3 K / H1 + (u / 2H1)(H1^2 + |h1|^2 + 2 H1')
// forward in t: diffusion implicit with lagged u^2 coefficient (one CG solve
// per substep on the symmetrized operator), reaction explicit, step-doubling
// Richardson control. u is stored at every leaf time; the barrier certificate
// is enforced at each stored leaf.
LapseSolution solve(const FoliationRecord& record, const ScalarField& u0,
                    const SolveControls& controls = {});

// H_u = H1 / u on the given global leaf
ScalarField mean_curvature_u(const FoliationRecord& record, const LapseSolution& solution,
                             std::size_t leaf_index);

// per-leaf CSV: t, min_u, max_u, residual_norm
void export_lapse_csv(const LapseSolution& solution, const std::string& path);

} // namespace qsflow
