#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qsflow/flow.hpp"
#include "qsflow/surface.hpp"

namespace qsflow {

inline constexpr double tau_glue = 1e-6; // relative metric agreement at a junction

// One stored band leaf: metric and lapse data of Sigma x {t} in the band
// metric eta^2 dt^2 + g_t. H1 and h1 are the mean curvature and second form
// taken with respect to unit lapse, so H1 = eta * H_eta. K is half the leaf
// scalar curvature, defined through the Gauss identity
// 2K = (H1^2 - |h1|^2) / eta^2 (exact for Euclidean bands).
struct BandLeaf {
    double t;
    MetricField g;
    ScalarField eta;
    ScalarField H1;
    ScalarField h1sq;
    ScalarField K;
    ScalarField H1p; // dH1/dt
};

// A segment is one smoothly parametrized sweep: leaf times strictly increase
// and coefficients may be interpolated between consecutive leaves. Distance
// sweeps are generated on demand from the base geometry (the offset transform
// is exact in t), flow sweeps store their leaves.
class FoliationSegment {
public:
    static FoliationSegment distance_sweep(const LeafGeometry& base, double t_max, double dt);
    static FoliationSegment from_leaves(std::vector<BandLeaf> leaves);

    // exact offset geometry of the sweep's outer boundary (distance sweeps only)
    LeafGeometry offset_geometry(double t) const;
    bool is_distance_sweep() const;

    std::size_t leaf_count() const { return times_.size(); }
    double time(std::size_t k) const { return times_[k]; }
    const std::vector<double>& times() const { return times_; }
    BandLeaf leaf(std::size_t k) const;

    void shift_times(double dt);

private:
    FoliationSegment() = default;

    struct DistanceGen {
        std::shared_ptr<const SphereGrid> grid;
        MetricField g0, h0;          // base first/second forms
        std::vector<double> q0;      // full2d: h g^{-1} h per node (tt, tp, pp interleaved)
        std::vector<double> kappa0;  // principal curvatures, 2 per node
        double origin;               // time label of the base leaf; offset = t - origin
    };
    struct Stored {
        std::vector<BandLeaf> leaves;
    };

    std::vector<double> times_;
    std::variant<DistanceGen, Stored> data_;
};

// Discrete band record. Segments share junction times: the leaf geometry is
// continuous across a junction while the lapse (and hence H1, h1, H1') may
// jump because the time parametrization changes; u is carried across by
// mean-curvature matching.
struct FoliationRecord {
    std::shared_ptr<const SphereGrid> grid;
    std::vector<FoliationSegment> segments;
    bool euclidean = true;
    // extrinsic geometry of the outermost leaf, in the band's own
    // parametrization; the anchor for distance-sweep continuations
    std::optional<LeafGeometry> final_geometry;

    std::size_t total_leaves() const;
    double t_front() const;
    double t_back() const;
};

// Euclidean distance surfaces of a strictly convex star-shaped surface;
// eta == 1, offset geometry exact in t, H1' = -|h1|^2.
FoliationRecord foliate_distance(const RadialSurface& surface, double t_max, double dt);
FoliationRecord foliate_distance(const LeafGeometry& base, double t_max, double dt);

// Band swept by a flow trajectory, sampled at the trajectory's recorded
// times: eta = 1/f per leaf, H1 = eta * H_eta, H1' by second-order
// differences in t. The flow is re-integrated here in the normal gauge
// (material points move with speed (1/f) nu), because the band metric
// eta^2 dt^2 + g_t presumes a shift-free parametrization; the radial gauge
// of run_flow would leave a tangential drift in the recorded coefficients.
// Axisymmetric grids only: full2d admissible surfaces (n = 3) are already
// convex, so their exteriors are banded by foliate_distance directly.
FoliationRecord foliate_from_flow(const FlowTrajectory& traj);

// Joins two records in time; b is shifted so its first leaf lands on a's last
// time, and the leaf metrics there must agree within tau_glue (relative).
FoliationRecord concatenate(const FoliationRecord& a, const FoliationRecord& b);

// Continues a record with the distance sweep of its final geometry; the
// junction matches exactly by construction.
FoliationRecord extend_distance(const FoliationRecord& a, double t_max, double dt);

struct ValidationReport {
    bool pass = false;
    std::string message;
    double min_K = 0.0;
    double min_H1 = 0.0;
    std::size_t argmin_leaf = 0;    // global leaf index of the failing/min-K leaf
    double max_gauss_residual = 0.0; // euclidean records; NaN when not computed
    std::size_t leaf_count = 0;
};

// Standing assumption check (K > 0 and H1 > 0 on every leaf) plus the Gauss
// residual against the intrinsic curvature of the stored leaf metrics.
ValidationReport validate(const FoliationRecord& record);

// per-leaf summary CSV: t, min/max of H1, K, eta
void export_band_csv(const FoliationRecord& record, const std::string& path);

// full text dump, one block per field per leaf (same layout as snapshots)
void export_band_fields(const FoliationRecord& record, const std::string& path);

} // namespace qsflow
