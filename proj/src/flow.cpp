#include "qsflow/flow.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace qsflow {

double speed_f(std::span<const double> kappa) {
    double s1 = 0.0, s2 = 0.0;
    for (double k : kappa) {
        s1 += k;
        s2 += k * k;
    }
    if (!(s1 > 0.0))
        fail(ErrorCode::domain_failure, "speed_f: curvature vector outside cone (sum <= 0)");
    return (s1 * s1 - s2) / s1;
}

bool AdmissibleCone::contains(std::span<const double> kappa) const {
    return cone_check(kappa) == ConeClass::inside;
}

ConeClass cone_check(std::span<const double> kappa, ConeMargins* margins, double tol) {
    double s1 = 0.0, s2 = 0.0, scale = 0.0;
    for (double k : kappa) {
        s1 += k;
        s2 += k * k;
        scale = std::max(scale, std::abs(k));
    }
    const double quad = s1 * s1 - s2;
    if (margins) *margins = {s1, quad};
    if (scale == 0.0) return ConeClass::boundary; // zero vector sits on the vertex
    const double t1 = tol * scale, t2 = tol * scale * scale;
    if (s1 < -t1 || quad < -t2) return ConeClass::outside;
    if (s1 <= t1 || quad <= t2) return ConeClass::boundary;
    return ConeClass::inside;
}

namespace {

// per-node 1/f and admissibility; throws with the first violating node
struct SpeedField {
    ScalarField inv_f;  // 1/f
    ScalarField f;      // f itself, for diagnostics
    double min_f;
};

SpeedField evaluate_speed(const LeafGeometry& geo, const char* what) {
    const std::size_t n = geo.node_count();
    SpeedField out;
    out.inv_f = ScalarField(geo.first_form.grid, std::vector<double>(n));
    out.f = ScalarField(geo.first_form.grid, std::vector<double>(n));
    out.min_f = std::numeric_limits<double>::infinity();
    std::vector<double> kap;
    for (std::size_t k = 0; k < n; ++k) {
        geo.principal_curvatures(k, kap);
        ConeMargins m;
        if (cone_check(kap, &m) != ConeClass::inside)
            fail(ErrorCode::domain_failure,
                 std::string(what) + ": surface leaves the admissibility cone at node " +
                     std::to_string(k) + " (margins " + std::to_string(m.trace) + ", " +
                     std::to_string(m.quad) + ")");
        const double f = m.quad / m.trace;
        out.f[k] = f;
        out.inv_f[k] = 1.0 / f;
        out.min_f = std::min(out.min_f, f);
    }
    return out;
}

// radial velocity of the normal flow: d rho / dt = (1/f) / <nu, omega>
std::vector<double> radial_velocity(const LeafGeometry& geo, const SpeedField& sp,
                                    const char* what) {
    const std::size_t n = geo.node_count();
    std::vector<double> vel(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double proj = geo.radial_projection[k];
        if (!(proj > 0.0))
            fail(ErrorCode::numerical_failure,
                 std::string(what) + ": star-shapedness lost (<nu, omega> <= 0 at node " +
                     std::to_string(k) + ")");
        vel[k] = sp.inv_f[k] / proj;
    }
    return vel;
}

} // namespace

RadialSurface flow_step(const RadialSurface& surface, double dt) {
    const LeafGeometry geo = forms_from_radial(surface);
    const SpeedField sp = evaluate_speed(geo, "flow_step");
    const std::vector<double> vel = radial_velocity(geo, sp, "flow_step");
    RadialSurface next = surface;
    for (std::size_t k = 0; k < vel.size(); ++k) next.rho[k] += dt * vel[k];
    next.check_valid();
    return next;
}

FlowTrajectory run_flow(const RadialSurface& surface, const FlowControls& controls) {
    surface.check_valid();
    const SphereGrid& grid = *surface.grid;
    const double t_end = controls.until_convex ? controls.t_cap : controls.t_max;
    const double record_dt =
        controls.record_dt > 0.0 ? controls.record_dt : std::max(t_end, 1e-6) / 200.0;

    FlowTrajectory traj;
    RadialSurface cur = surface;
    double t = 0.0;
    double next_record = 0.0;

    LeafGeometry geo = forms_from_radial(cur);
    SpeedField sp = evaluate_speed(geo, "run_flow");

    auto convex_now = [&](const LeafGeometry& g) { return g.kappa_min() > tau_convex; };
    auto record_leaf = [&](double tt) {
        traj.leaves.push_back({tt, cur, geo, sp.inv_f});
    };

    if (convex_now(geo)) {
        traj.reached_convexity = true;
        traj.t_convex = 0.0;
    }
    record_leaf(0.0);
    next_record += record_dt;

    if (controls.until_convex && traj.reached_convexity) return traj;

    const double dtheta = grid.dtheta();
    while (t < t_end - 1e-14) {
        // CFL-like bound: the normalized shape modes relax at a rate set by
        // f * rho near round, so dt ~ cfl * dtheta^2 * (f_min * mean radius)
        const double rmean = mean_radius(cur);
        double dt = controls.cfl * dtheta * dtheta * std::max(sp.min_f * rmean, 1e-12);
        double vmax = 0.0;
        const std::vector<double> vel = radial_velocity(geo, sp, "run_flow");
        for (double v : vel) vmax = std::max(vmax, v);
        dt = std::min(dt, controls.max_radial_fraction * cur.rho.min() / vmax);
        dt = std::min(dt, t_end - t);
        dt = std::min(dt, next_record - t > 1e-14 ? next_record - t : dt);

        bool accepted = false;
        while (!accepted) {
            if (dt < controls.dt_min)
                fail(ErrorCode::numerical_failure, "run_flow: step size underflow at t=" +
                                                       std::to_string(t));
            try {
                // midpoint RK2 on the radial system
                RadialSurface mid = cur;
                for (std::size_t k = 0; k < vel.size(); ++k)
                    mid.rho[k] += 0.5 * dt * vel[k];
                mid.check_valid();
                const LeafGeometry geo_mid = forms_from_radial(mid);
                const SpeedField sp_mid = evaluate_speed(geo_mid, "run_flow (stage)");
                const std::vector<double> vel_mid =
                    radial_velocity(geo_mid, sp_mid, "run_flow (stage)");
                RadialSurface next = cur;
                for (std::size_t k = 0; k < vel.size(); ++k)
                    next.rho[k] += dt * vel_mid[k];
                next.check_valid();
                LeafGeometry geo_next = forms_from_radial(next);
                SpeedField sp_next = evaluate_speed(geo_next, "run_flow (stage)");
                cur = std::move(next);
                geo = std::move(geo_next);
                sp = std::move(sp_next);
                accepted = true;
            } catch (const Error& e) {
                // stage failure inside an admissible run: retry with smaller dt
                if (e.code() != ErrorCode::domain_failure &&
                    e.code() != ErrorCode::numerical_failure &&
                    e.code() != ErrorCode::invalid_argument)
                    throw;
                dt *= 0.5;
            }
        }
        t += dt;

        if (!traj.reached_convexity && convex_now(geo)) {
            traj.reached_convexity = true;
            traj.t_convex = t;
        }
        if (t >= next_record - 1e-12 || t >= t_end - 1e-14 ||
            (controls.until_convex && traj.reached_convexity)) {
            record_leaf(t);
            while (next_record <= t + 1e-12) next_record += record_dt;
        }
        if (controls.until_convex && traj.reached_convexity) return traj;
    }

    if (controls.until_convex && !traj.reached_convexity)
        fail(ErrorCode::numerical_failure,
             "run_flow: convexity not reached by t_cap=" + std::to_string(controls.t_cap));
    return traj;
}

void export_trajectory_csv(const FlowTrajectory& traj, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io_failure, "cannot open for writing: " + path);
    f << "t,min_kappa,max_kappa,min_f,roundness,radius_mean\n";
    char buf[256];
    for (const auto& leaf : traj.leaves) {
        double min_f = std::numeric_limits<double>::infinity();
        for (double inv : leaf.speed.values) min_f = std::min(min_f, 1.0 / inv);
        std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g,%.15g,%.15g,%.15g\n", leaf.t,
                      leaf.geometry.kappa_min(), leaf.geometry.kappa_max(), min_f,
                      roundness(leaf.surface), mean_radius(leaf.surface));
        f << buf;
    }
    if (!f) fail(ErrorCode::io_failure, "write failed: " + path);
}

} // namespace qsflow
