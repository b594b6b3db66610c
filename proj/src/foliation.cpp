#include "qsflow/foliation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace qsflow {

// ---------------------------------------------------------------------------
// FoliationSegment
// ---------------------------------------------------------------------------

FoliationSegment FoliationSegment::distance_sweep(const LeafGeometry& geo, double t_max,
                                                  double dt) {
    if (!(t_max > 0.0) || !(dt > 0.0))
        fail(ErrorCode::invalid_argument, "distance sweep needs t_max > 0 and dt > 0");
    if (!(geo.kappa_min() > tau_convex))
        fail(ErrorCode::domain_failure,
             "distance foliation requires a strictly convex surface (min kappa = " +
                 std::to_string(geo.kappa_min()) + ")");

    FoliationSegment seg;
    const std::size_t steps = std::max<std::size_t>(1, std::llround(t_max / dt));
    const double h = t_max / static_cast<double>(steps);
    seg.times_.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) seg.times_[k] = h * k;
    seg.times_.back() = t_max;

    DistanceGen gen;
    gen.origin = 0.0;
    gen.grid = geo.first_form.grid;
    gen.g0 = geo.first_form;
    gen.h0 = geo.second_form;
    gen.kappa0 = geo.kappa;
    if (gen.grid->mode() == GridMode::full2d) {
        // q0 = h g^{-1} h, needed for the exact offset metric
        const std::size_t n = gen.grid->node_count();
        gen.q0.resize(3 * n);
        for (std::size_t k = 0; k < n; ++k) {
            const double E = gen.g0.tt[k], F = gen.g0.tp[k], G = gen.g0.pp[k];
            const double P = gen.h0.tt[k], Q = gen.h0.tp[k], R = gen.h0.pp[k];
            const double det = E * G - F * F;
            // M = g^{-1} h
            const double m11 = (G * P - F * Q) / det, m12 = (G * Q - F * R) / det;
            const double m21 = (E * Q - F * P) / det, m22 = (E * R - F * Q) / det;
            gen.q0[3 * k] = P * m11 + Q * m21;
            gen.q0[3 * k + 2] = Q * m12 + R * m22;
            gen.q0[3 * k + 1] = 0.5 * ((P * m12 + Q * m22) + (Q * m11 + R * m21));
        }
    }
    seg.data_ = std::move(gen);
    return seg;
}

FoliationSegment FoliationSegment::from_leaves(std::vector<BandLeaf> leaves) {
    FoliationSegment seg;
    seg.times_.reserve(leaves.size());
    for (const auto& l : leaves) seg.times_.push_back(l.t);
    for (std::size_t k = 1; k < seg.times_.size(); ++k)
        if (!(seg.times_[k] > seg.times_[k - 1]))
            fail(ErrorCode::invalid_argument, "segment times must be strictly increasing");
    seg.data_ = Stored{std::move(leaves)};
    return seg;
}

void FoliationSegment::shift_times(double dt) {
    for (double& t : times_) t += dt;
    if (auto* st = std::get_if<Stored>(&data_))
        for (auto& l : st->leaves) l.t += dt;
    if (auto* gen = std::get_if<DistanceGen>(&data_)) gen->origin += dt;
}

BandLeaf FoliationSegment::leaf(std::size_t k) const {
    if (k >= times_.size())
        fail(ErrorCode::invalid_argument, "leaf index out of range");
    if (const auto* st = std::get_if<Stored>(&data_)) return st->leaves[k];

    const auto& gen = std::get<DistanceGen>(data_);
    const double t = times_[k] - gen.origin; // offset from the base surface
    const std::size_t n = gen.grid->node_count();
    const bool axi = gen.grid->mode() == GridMode::axisymmetric;
    const int dim = gen.grid->ambient_dim();

    BandLeaf leaf;
    leaf.t = times_[k];
    leaf.g.grid = gen.grid;
    leaf.g.tt.resize(n);
    leaf.g.pp.resize(n);
    if (!axi) leaf.g.tp.resize(n);
    leaf.eta = ScalarField::constant(gen.grid, 1.0);
    leaf.H1 = ScalarField(gen.grid, std::vector<double>(n));
    leaf.h1sq = ScalarField(gen.grid, std::vector<double>(n));
    leaf.K = ScalarField(gen.grid, std::vector<double>(n));
    leaf.H1p = ScalarField(gen.grid, std::vector<double>(n));

    for (std::size_t i = 0; i < n; ++i) {
        const double km = gen.kappa0[2 * i], kp = gen.kappa0[2 * i + 1];
        const double am = 1.0 + t * km, ap = 1.0 + t * kp;
        const double kmt = km / am, kpt = kp / ap;
        double H, h2;
        if (axi) {
            leaf.g.tt[i] = gen.g0.tt[i] * am * am;
            leaf.g.pp[i] = gen.g0.pp[i] * ap * ap;
            H = kmt + (dim - 2) * kpt;
            h2 = kmt * kmt + (dim - 2) * kpt * kpt;
        } else {
            leaf.g.tt[i] = gen.g0.tt[i] + 2.0 * t * gen.h0.tt[i] + t * t * gen.q0[3 * i];
            leaf.g.tp[i] = gen.g0.tp[i] + 2.0 * t * gen.h0.tp[i] + t * t * gen.q0[3 * i + 1];
            leaf.g.pp[i] = gen.g0.pp[i] + 2.0 * t * gen.h0.pp[i] + t * t * gen.q0[3 * i + 2];
            H = kmt + kpt;
            h2 = kmt * kmt + kpt * kpt;
        }
        leaf.H1[i] = H;
        leaf.h1sq[i] = h2;
        leaf.K[i] = 0.5 * (H * H - h2);
        leaf.H1p[i] = -h2; // exact for Euclidean distance sweeps
    }
    return leaf;
}

bool FoliationSegment::is_distance_sweep() const {
    return std::holds_alternative<DistanceGen>(data_);
}

LeafGeometry FoliationSegment::offset_geometry(double t) const {
    const auto& gen = std::get<DistanceGen>(data_);
    const std::size_t n = gen.grid->node_count();
    const bool axi = gen.grid->mode() == GridMode::axisymmetric;
    const int dim = gen.grid->ambient_dim();

    LeafGeometry out;
    out.first_form.grid = gen.grid;
    out.second_form.grid = gen.grid;
    out.first_form.tt.resize(n);
    out.first_form.pp.resize(n);
    out.second_form.tt.resize(n);
    out.second_form.pp.resize(n);
    if (!axi) {
        out.first_form.tp.resize(n);
        out.second_form.tp.resize(n);
    }
    out.normal = gen.h0.tt.empty() ? std::vector<double>() : std::vector<double>(3 * n, 0.0);
    out.mean_curvature = ScalarField(gen.grid, std::vector<double>(n));
    out.second_form_norm2 = ScalarField(gen.grid, std::vector<double>(n));
    out.scalar2 = ScalarField(gen.grid, std::vector<double>(n));
    // offsets keep the normal; the radial projection of the moved points is
    // not tracked here and stays unset
    out.radial_projection = ScalarField(gen.grid, std::vector<double>(n, 1.0));
    out.kappa.resize(2 * n);

    for (std::size_t i = 0; i < n; ++i) {
        const double km = gen.kappa0[2 * i], kp = gen.kappa0[2 * i + 1];
        const double kmt = km / (1.0 + t * km), kpt = kp / (1.0 + t * kp);
        out.kappa[2 * i] = kmt;
        out.kappa[2 * i + 1] = kpt;
        double H, h2;
        if (axi) {
            const double am = 1.0 + t * km, ap = 1.0 + t * kp;
            out.first_form.tt[i] = gen.g0.tt[i] * am * am;
            out.first_form.pp[i] = gen.g0.pp[i] * ap * ap;
            out.second_form.tt[i] = kmt * out.first_form.tt[i];
            out.second_form.pp[i] = kpt * out.first_form.pp[i];
            H = kmt + (dim - 2) * kpt;
            h2 = kmt * kmt + (dim - 2) * kpt * kpt;
        } else {
            out.first_form.tt[i] = gen.g0.tt[i] + 2.0 * t * gen.h0.tt[i] + t * t * gen.q0[3 * i];
            out.first_form.tp[i] =
                gen.g0.tp[i] + 2.0 * t * gen.h0.tp[i] + t * t * gen.q0[3 * i + 1];
            out.first_form.pp[i] =
                gen.g0.pp[i] + 2.0 * t * gen.h0.pp[i] + t * t * gen.q0[3 * i + 2];
            // h(t) = h + t h g^{-1} h
            out.second_form.tt[i] = gen.h0.tt[i] + t * gen.q0[3 * i];
            out.second_form.tp[i] = gen.h0.tp[i] + t * gen.q0[3 * i + 1];
            out.second_form.pp[i] = gen.h0.pp[i] + t * gen.q0[3 * i + 2];
            H = kmt + kpt;
            h2 = kmt * kmt + kpt * kpt;
        }
        out.mean_curvature[i] = H;
        out.second_form_norm2[i] = h2;
        out.scalar2[i] = H * H - h2;
    }
    return out;
}

// ---------------------------------------------------------------------------
// record builders
// ---------------------------------------------------------------------------

std::size_t FoliationRecord::total_leaves() const {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.leaf_count();
    return n;
}

double FoliationRecord::t_front() const { return segments.front().time(0); }

double FoliationRecord::t_back() const {
    const auto& s = segments.back();
    return s.time(s.leaf_count() - 1);
}

FoliationRecord foliate_distance(const RadialSurface& surface, double t_max, double dt) {
    return foliate_distance(forms_from_radial(surface), t_max, dt);
}

FoliationRecord foliate_distance(const LeafGeometry& base, double t_max, double dt) {
    FoliationRecord rec;
    rec.grid = base.first_form.grid;
    rec.euclidean = true;
    rec.segments.push_back(FoliationSegment::distance_sweep(base, t_max, dt));
    rec.final_geometry = rec.segments.back().offset_geometry(t_max);
    return rec;
}

namespace {

// normal-gauge flow integration for band recording: material points follow
// d X / dt = (1/f) nu along the meridian
struct MeridianFlow {
    std::shared_ptr<const SphereGrid> grid;
    std::vector<double> perp, axial;

    struct Rates {
        std::vector<double> dperp, daxial;
        LeafGeometry geo;
        ScalarField inv_f;
        double min_f;
        double mean_radius;
        double max_speed;
    };

    Rates rates() const {
        Rates r;
        r.geo = forms_from_meridian(grid, perp, axial);
        const std::size_t n = perp.size();
        r.inv_f = ScalarField(grid, std::vector<double>(n));
        r.dperp.resize(n);
        r.daxial.resize(n);
        r.min_f = std::numeric_limits<double>::infinity();
        r.max_speed = 0.0;
        r.mean_radius = 0.0;
        std::vector<double> kap;
        for (std::size_t k = 0; k < n; ++k) {
            r.geo.principal_curvatures(k, kap);
            ConeMargins m;
            if (cone_check(kap, &m) != ConeClass::inside)
                fail(ErrorCode::domain_failure,
                     "flow band: surface leaves the admissibility cone at node " +
                         std::to_string(k));
            const double f = m.quad / m.trace;
            const double s = 1.0 / f;
            r.inv_f[k] = s;
            r.min_f = std::min(r.min_f, f);
            r.max_speed = std::max(r.max_speed, s);
            r.dperp[k] = s * r.geo.normal[3 * k];
            r.daxial[k] = s * r.geo.normal[3 * k + 1];
            r.mean_radius += std::sqrt(perp[k] * perp[k] + axial[k] * axial[k]);
        }
        r.mean_radius /= n;
        return r;
    }
};

BandLeaf band_leaf_from_geometry(double t, const LeafGeometry& geo, const ScalarField& inv_f) {
    const auto grid = geo.first_form.grid;
    const std::size_t n = grid->node_count();
    BandLeaf leaf;
    leaf.t = t;
    leaf.g = geo.first_form;
    leaf.eta = inv_f;
    leaf.H1 = ScalarField(grid, std::vector<double>(n));
    leaf.h1sq = ScalarField(grid, std::vector<double>(n));
    leaf.K = ScalarField(grid, std::vector<double>(n));
    leaf.H1p = ScalarField(grid, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
        const double eta = inv_f[k];
        leaf.H1[k] = eta * geo.mean_curvature[k];
        leaf.h1sq[k] = eta * eta * geo.second_form_norm2[k];
        leaf.K[k] = 0.5 * geo.scalar2[k]; // Gauss: 2K = H_eta^2 - |h_eta|^2
    }
    return leaf;
}

} // namespace

FoliationRecord foliate_from_flow(const FlowTrajectory& traj) {
    if (traj.leaves.size() < 2)
        fail(ErrorCode::domain_failure,
             "foliate_from_flow: need at least two recorded leaves (H1' undefined)");
    const auto grid = traj.leaves.front().surface.grid;
    if (grid->mode() != GridMode::axisymmetric)
        fail(ErrorCode::invalid_argument,
             "foliate_from_flow: flow bands are recorded on axisymmetric grids only "
             "(full2d admissible surfaces are already convex; use foliate_distance)");

    const std::size_t n = grid->node_count();
    const RadialSurface& start = traj.leaves.front().surface;
    MeridianFlow flow;
    flow.grid = grid;
    flow.perp.resize(n);
    flow.axial.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const int i = grid->row_of(k);
        flow.perp[k] = start.rho[k] * grid->sin_theta(i);
        flow.axial[k] = start.rho[k] * grid->cos_theta(i);
    }

    std::vector<BandLeaf> leaves;
    leaves.reserve(traj.leaves.size());
    LeafGeometry final_geo;

    double t = traj.leaves.front().t;
    MeridianFlow::Rates rates = flow.rates();
    leaves.push_back(band_leaf_from_geometry(t, rates.geo, rates.inv_f));
    const double dtheta = grid->dtheta();

    for (std::size_t target = 1; target < traj.leaves.size(); ++target) {
        const double t_goal = traj.leaves[target].t;
        while (t < t_goal - 1e-13 * std::max(1.0, t_goal)) {
            double dt = 0.2 * dtheta * dtheta * std::max(rates.min_f * rates.mean_radius, 1e-12);
            dt = std::min(dt, 0.05 * rates.mean_radius / rates.max_speed);
            dt = std::min(dt, t_goal - t);
            // midpoint RK2 on the meridian positions
            MeridianFlow mid = flow;
            for (std::size_t k = 0; k < n; ++k) {
                mid.perp[k] += 0.5 * dt * rates.dperp[k];
                mid.axial[k] += 0.5 * dt * rates.daxial[k];
            }
            const MeridianFlow::Rates rmid = mid.rates();
            for (std::size_t k = 0; k < n; ++k) {
                flow.perp[k] += dt * rmid.dperp[k];
                flow.axial[k] += dt * rmid.daxial[k];
            }
            t += dt;
            rates = flow.rates();
        }
        t = t_goal;
        leaves.push_back(band_leaf_from_geometry(t, rates.geo, rates.inv_f));
        if (target + 1 == traj.leaves.size()) final_geo = rates.geo;
    }

    // H1' by second-order differences on the (possibly non-uniform) times
    const std::size_t m = leaves.size();
    if (m == 2) {
        for (std::size_t i = 0; i < n; ++i) {
            const double slope =
                (leaves[1].H1[i] - leaves[0].H1[i]) / (leaves[1].t - leaves[0].t);
            leaves[0].H1p[i] = slope;
            leaves[1].H1p[i] = slope;
        }
    }
    for (std::size_t k = 0; m >= 3 && k < m; ++k) {
        const std::size_t c = std::min(std::max<std::size_t>(k, 1), m - 2);
        const double t0 = leaves[c - 1].t, t1 = leaves[c].t, t2 = leaves[c + 1].t;
        const double tk = leaves[k].t;
        // derivative of the quadratic through (t0,t1,t2) evaluated at tk
        const double w0 = (2.0 * tk - t1 - t2) / ((t0 - t1) * (t0 - t2));
        const double w1 = (2.0 * tk - t0 - t2) / ((t1 - t0) * (t1 - t2));
        const double w2 = (2.0 * tk - t0 - t1) / ((t2 - t0) * (t2 - t1));
        for (std::size_t i = 0; i < n; ++i)
            leaves[k].H1p[i] = w0 * leaves[c - 1].H1[i] + w1 * leaves[c].H1[i] +
                               w2 * leaves[c + 1].H1[i];
    }

    FoliationRecord rec;
    rec.grid = grid;
    rec.euclidean = true;
    rec.segments.push_back(FoliationSegment::from_leaves(std::move(leaves)));
    rec.final_geometry = std::move(final_geo);
    return rec;
}

FoliationRecord concatenate(const FoliationRecord& a, const FoliationRecord& b) {
    if (!a.grid->same_layout(*b.grid))
        fail(ErrorCode::invalid_argument, "concatenate: records live on different grids");

    const auto& last_seg = a.segments.back();
    const BandLeaf left = last_seg.leaf(last_seg.leaf_count() - 1);
    const BandLeaf right = b.segments.front().leaf(0);

    double scale = 0.0;
    for (std::size_t k = 0; k < left.g.tt.size(); ++k)
        scale = std::max({scale, std::abs(left.g.tt[k]), std::abs(left.g.pp[k])});
    double mismatch = 0.0;
    for (std::size_t k = 0; k < left.g.tt.size(); ++k) {
        mismatch = std::max(mismatch, std::abs(left.g.tt[k] - right.g.tt[k]));
        mismatch = std::max(mismatch, std::abs(left.g.pp[k] - right.g.pp[k]));
        if (!left.g.tp.empty())
            mismatch = std::max(mismatch, std::abs(left.g.tp[k] - right.g.tp[k]));
    }
    if (mismatch > tau_glue * scale)
        fail(ErrorCode::domain_failure,
             "concatenate: leaf metrics disagree at the junction (relative mismatch " +
                 std::to_string(mismatch / scale) + ")");

    FoliationRecord out;
    out.grid = a.grid;
    out.euclidean = a.euclidean && b.euclidean;
    out.final_geometry = b.final_geometry;
    out.segments = a.segments;
    const double shift = a.t_back() - b.t_front();
    for (const auto& seg : b.segments) {
        FoliationSegment s = seg;
        s.shift_times(shift);
        out.segments.push_back(std::move(s));
    }
    return out;
}

FoliationRecord extend_distance(const FoliationRecord& a, double t_max, double dt) {
    if (!a.final_geometry)
        fail(ErrorCode::invalid_argument,
             "extend_distance: record carries no final-leaf geometry");
    return concatenate(a, foliate_distance(*a.final_geometry, t_max, dt));
}

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

ValidationReport validate(const FoliationRecord& record) {
    ValidationReport rep;
    rep.leaf_count = record.total_leaves();
    rep.min_K = std::numeric_limits<double>::infinity();
    rep.min_H1 = std::numeric_limits<double>::infinity();
    rep.max_gauss_residual = std::numeric_limits<double>::quiet_NaN();

    if (rep.leaf_count < 2) {
        rep.pass = false;
        rep.message = "record has fewer than two leaves (H1' undefined)";
        return rep;
    }

    const bool axi = record.grid->mode() == GridMode::axisymmetric;
    double max_res = 0.0;
    std::size_t gk = 0;
    for (const auto& seg : record.segments) {
        for (std::size_t k = 0; k < seg.leaf_count(); ++k, ++gk) {
            const BandLeaf leaf = seg.leaf(k);
            for (std::size_t i = 0; i < leaf.K.size(); ++i) {
                if (leaf.K[i] < rep.min_K) {
                    rep.min_K = leaf.K[i];
                    rep.argmin_leaf = gk;
                }
                rep.min_H1 = std::min(rep.min_H1, leaf.H1[i]);
            }
            if (record.euclidean) {
                const ScalarField intr = axi ? intrinsic_scalar2_axisymmetric(leaf.g)
                                             : intrinsic_scalar2_full2d(leaf.g);
                for (std::size_t i = 0; i < intr.size(); ++i) {
                    const double extr =
                        (leaf.H1[i] * leaf.H1[i] - leaf.h1sq[i]) / (leaf.eta[i] * leaf.eta[i]);
                    max_res = std::max(max_res, std::abs(intr[i] - extr));
                }
            }
        }
    }
    if (record.euclidean) rep.max_gauss_residual = max_res;

    if (!(rep.min_K > 0.0) || !(rep.min_H1 > 0.0)) {
        rep.pass = false;
        rep.message = "standing assumption violated: min K = " + std::to_string(rep.min_K) +
                      ", min H1 = " + std::to_string(rep.min_H1) + " at leaf " +
                      std::to_string(rep.argmin_leaf);
    } else {
        rep.pass = true;
        rep.message = "ok";
    }
    return rep;
}

// ---------------------------------------------------------------------------
// export
// ---------------------------------------------------------------------------

void export_band_csv(const FoliationRecord& record, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io_failure, "cannot open for writing: " + path);
    f << "t,H1_min,H1_max,K_min,K_max,eta_min,eta_max\n";
    char buf[256];
    for (const auto& seg : record.segments)
        for (std::size_t k = 0; k < seg.leaf_count(); ++k) {
            const BandLeaf leaf = seg.leaf(k);
            std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g\n",
                          leaf.t, leaf.H1.min(), leaf.H1.max(), leaf.K.min(), leaf.K.max(),
                          leaf.eta.min(), leaf.eta.max());
            f << buf;
        }
    if (!f) fail(ErrorCode::io_failure, "write failed: " + path);
}

void export_band_fields(const FoliationRecord& record, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io_failure, "cannot open for writing: " + path);
    char buf[40];
    auto dump = [&](const char* name, double t, const std::vector<double>& v) {
        f << "leaf t=" << t << " field=" << name << "\n";
        for (double x : v) {
            std::snprintf(buf, sizeof buf, "%.17g", x);
            f << buf << "\n";
        }
    };
    for (const auto& seg : record.segments)
        for (std::size_t k = 0; k < seg.leaf_count(); ++k) {
            const BandLeaf leaf = seg.leaf(k);
            dump("g_tt", leaf.t, leaf.g.tt);
            if (!leaf.g.tp.empty()) dump("g_tp", leaf.t, leaf.g.tp);
            dump("g_pp", leaf.t, leaf.g.pp);
            dump("eta", leaf.t, leaf.eta.values);
            dump("H1", leaf.t, leaf.H1.values);
            dump("h1_sq", leaf.t, leaf.h1sq.values);
            dump("K", leaf.t, leaf.K.values);
            dump("H1_prime", leaf.t, leaf.H1p.values);
        }
    if (!f) fail(ErrorCode::io_failure, "write failed: " + path);
}

} // namespace qsflow
