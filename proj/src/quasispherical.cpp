#include "qsflow/quasispherical.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace qsflow {

namespace {

// ---------------------------------------------------------------------------
// preconditioned conjugate gradient for (diag(d) + h S) x = b
// ---------------------------------------------------------------------------

struct CgWork {
    std::vector<double> r, z, p, q;
};

void cg_solve(const LaplaceBeltrami& op, const std::vector<double>& dvec, double h,
              const std::vector<double>& b, std::vector<double>& x, double tol, int max_iter,
              CgWork& w) {
    const std::size_t n = b.size();
    w.r.resize(n);
    w.z.resize(n);
    w.p.resize(n);
    w.q.resize(n);

    auto matvec = [&](const std::vector<double>& in, std::vector<double>& out) {
        op.apply_stiffness(in, out);
        for (std::size_t i = 0; i < n; ++i) out[i] = dvec[i] * in[i] + h * out[i];
    };

    double bnorm2 = 0.0;
    for (double v : b) bnorm2 += v * v;
    if (bnorm2 == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return;
    }

    matvec(x, w.q);
    for (std::size_t i = 0; i < n; ++i) w.r[i] = b[i] - w.q[i];

    const auto sdiag = op.stiffness_diagonal();
    auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
        for (std::size_t i = 0; i < n; ++i) out[i] = in[i] / (dvec[i] + h * sdiag[i]);
    };

    precond(w.r, w.z);
    w.p = w.z;
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz += w.r[i] * w.z[i];

    const double stop2 = tol * tol * bnorm2;
    for (int it = 0; it < max_iter; ++it) {
        double r2 = 0.0;
        for (double v : w.r) r2 += v * v;
        if (r2 <= stop2) return;

        matvec(w.p, w.q);
        double pq = 0.0;
        for (std::size_t i = 0; i < n; ++i) pq += w.p[i] * w.q[i];
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * w.p[i];
            w.r[i] -= alpha * w.q[i];
        }
        precond(w.r, w.z);
        double rz_next = 0.0;
        for (std::size_t i = 0; i < n; ++i) rz_next += w.r[i] * w.z[i];
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) w.p[i] = w.z[i] + beta * w.p[i];
    }
    fail(ErrorCode::numerical_failure, "quasispherical solve: CG did not converge");
}

// ---------------------------------------------------------------------------
// coefficient snapshots: linear interpolation between two leaves; K is derived
// from the Gauss identity pointwise so the equality case stays exact
// ---------------------------------------------------------------------------

struct Coeffs {
    std::vector<double> eta, H1, h1sq, H1p, K;
    MetricField metric;
};

void lerp_coeffs(const BandLeaf& a, const BandLeaf& b, double t, Coeffs& c) {
    const double span = b.t - a.t;
    const double s = span > 0.0 ? (t - a.t) / span : 0.0;
    const double s0 = 1.0 - s;
    const std::size_t n = a.H1.size();
    c.eta.resize(n);
    c.H1.resize(n);
    c.h1sq.resize(n);
    c.H1p.resize(n);
    c.K.resize(n);
    c.metric.grid = a.g.grid;
    c.metric.tt.resize(n);
    c.metric.pp.resize(n);
    if (!a.g.tp.empty()) c.metric.tp.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        c.eta[i] = s0 * a.eta[i] + s * b.eta[i];
        c.H1[i] = s0 * a.H1[i] + s * b.H1[i];
        c.h1sq[i] = s0 * a.h1sq[i] + s * b.h1sq[i];
        c.H1p[i] = s0 * a.H1p[i] + s * b.H1p[i];
        c.K[i] = 0.5 * (c.H1[i] * c.H1[i] - c.h1sq[i]) / (c.eta[i] * c.eta[i]);
        c.metric.tt[i] = s0 * a.g.tt[i] + s * b.g.tt[i];
        c.metric.pp[i] = s0 * a.g.pp[i] + s * b.g.pp[i];
        if (!a.g.tp.empty()) c.metric.tp[i] = s0 * a.g.tp[i] + s * b.g.tp[i];
    }
}

double reaction(const Coeffs& c, double u, std::size_t i) {
    return -u * u * u * c.K[i] / c.H1[i] +
           (u / (2.0 * c.H1[i])) * (c.H1[i] * c.H1[i] + c.h1sq[i] + 2.0 * c.H1p[i]);
}

struct Stepper {
    const BandLeaf* leaf_a = nullptr;
    const BandLeaf* leaf_b = nullptr;
    LaplaceBeltrami* op = nullptr;
    const SolveControls* controls = nullptr;
    Coeffs coeffs;
    CgWork cg;
    std::vector<double> rhs, dvec, lap;

    // one IMEX substep t -> t + h: coefficients frozen at the midpoint,
    // reaction explicit at u_in, diffusion implicit with lagged u^2/H1
    void substep(double t, double h, const std::vector<double>& u_in,
                 std::vector<double>& u_out) {
        lerp_coeffs(*leaf_a, *leaf_b, t + 0.5 * h, coeffs);
        op->rebuild(coeffs.metric);
        const auto& m = op->dsigma();
        const std::size_t n = u_in.size();
        rhs.resize(n);
        dvec.resize(n);
        lap.resize(n);
        op->apply(u_in, lap); // for the explicit predictor below
        bool guess_ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = u_in[i];
            const double cdiff = u * u / coeffs.H1[i]; // lagged diffusion coefficient
            const double d = m[i] / cdiff;
            const double react = reaction(coeffs, u, i);
            dvec[i] = d;
            rhs[i] = d * (u + h * react);
            lap[i] = u + h * (cdiff * lap[i] + react);
            guess_ok = guess_ok && lap[i] > 0.0 && std::isfinite(lap[i]);
        }
        u_out = guess_ok ? lap : u_in; // forward-Euler predictor as CG seed
        cg_solve(*op, dvec, h, rhs, u_out, controls->cg_tol, controls->cg_max_iter, cg);
        for (double v : u_out)
            if (!std::isfinite(v) || v <= 0.0)
                fail(ErrorCode::numerical_failure,
                     "quasispherical solve: positivity lost during a substep");
    }

    // Richardson step doubling: full step vs two halves, extrapolate;
    // returns the max-norm error estimate
    double double_step(double t, double h, const std::vector<double>& u_in,
                       std::vector<double>& u_out, std::vector<double>& big,
                       std::vector<double>& half) {
        substep(t, h, u_in, big);
        substep(t, 0.5 * h, u_in, half);
        substep(t + 0.5 * h, 0.5 * h, half, u_out);
        double err = 0.0;
        const std::size_t n = u_in.size();
        for (std::size_t i = 0; i < n; ++i) {
            err = std::max(err, std::abs(u_out[i] - big[i]));
            u_out[i] = 2.0 * u_out[i] - big[i];
        }
        for (double v : u_out)
            if (!std::isfinite(v) || v <= 0.0)
                fail(ErrorCode::numerical_failure,
                     "quasispherical solve: positivity lost after extrapolation");
        return err;
    }
};

} // namespace

// ---------------------------------------------------------------------------
// public operations
// ---------------------------------------------------------------------------

ScalarField initial_lapse(const FoliationRecord& record, const ScalarField& H_target) {
    if (record.segments.empty() || record.segments.front().leaf_count() == 0)
        fail(ErrorCode::invalid_argument, "initial_lapse: empty record");
    const BandLeaf leaf0 = record.segments.front().leaf(0);
    if (!H_target.grid->same_layout(*record.grid))
        fail(ErrorCode::invalid_argument, "initial_lapse: H_target grid mismatch");
    ScalarField u0(record.grid, std::vector<double>(H_target.size()));
    for (std::size_t i = 0; i < u0.size(); ++i) {
        if (!(H_target[i] > 0.0))
            fail(ErrorCode::domain_failure,
                 "initial_lapse: H_target must be positive (mean convexity), node " +
                     std::to_string(i));
        const double H_hat = leaf0.H1[i] / leaf0.eta[i]; // Euclidean mean curvature
        u0[i] = leaf0.eta[i] * H_hat / H_target[i];
    }
    return u0;
}

SegmentBounds apriori_bounds(const FoliationRecord& record, const ScalarField& u0,
                             std::size_t segment) {
    if (segment >= record.segments.size())
        fail(ErrorCode::invalid_argument, "apriori_bounds: segment index out of range");
    const ValidationReport rep = validate(record);
    if (!rep.pass)
        fail(ErrorCode::domain_failure, "apriori_bounds: record invalid: " + rep.message);

    const FoliationSegment& seg = record.segments[segment];
    double band_ratio = 0.0; // max of (H1^2 + |h1|^2 + 2 H1')_+ / (2K)
    double gamma_arg = -std::numeric_limits<double>::infinity();
    const double beta = (1.0 - tau_margin) * u0.min();
    for (std::size_t k = 0; k < seg.leaf_count(); ++k) {
        const BandLeaf leaf = seg.leaf(k);
        for (std::size_t i = 0; i < leaf.H1.size(); ++i) {
            const double num = leaf.H1[i] * leaf.H1[i] + leaf.h1sq[i] + 2.0 * leaf.H1p[i];
            band_ratio = std::max(band_ratio, std::max(num, 0.0) / (2.0 * leaf.K[i]));
            gamma_arg = std::max(gamma_arg, beta * beta * leaf.K[i] / leaf.H1[i] -
                                                num / (2.0 * leaf.H1[i]));
        }
    }
    SegmentBounds b;
    b.upper_C = (1.0 + tau_margin) * std::max(u0.max(), std::sqrt(band_ratio));
    b.lower_beta = beta;
    b.decay_gamma = (1.0 + tau_margin) * std::max(0.0, gamma_arg);
    return b;
}

LapseSolution solve(const FoliationRecord& record, const ScalarField& u0,
                    const SolveControls& controls) {
    const ValidationReport rep = validate(record);
    if (!rep.pass)
        fail(ErrorCode::domain_failure, "quasispherical solve: record invalid: " + rep.message);
    if (!u0.grid->same_layout(*record.grid) || !u0.finite() || !(u0.min() > 0.0))
        fail(ErrorCode::invalid_argument, "quasispherical solve: u0 must be positive on the record grid");

    LapseSolution sol;
    sol.u.resize(record.segments.size());
    ScalarField u_seed = u0;

    LaplaceBeltrami op(record.segments.front().leaf(0).g);
    Stepper stepper;
    stepper.op = &op;
    stepper.controls = &controls;

    std::vector<double> big, half, u_next;

    for (std::size_t s = 0; s < record.segments.size(); ++s) {
        const FoliationSegment& seg = record.segments[s];

        if (s > 0) {
            // mean-curvature matching across the junction: H1/u continuous,
            // so u picks up the lapse reparametrization factor eta_b / eta_a
            const auto& prev = record.segments[s - 1];
            const BandLeaf left = prev.leaf(prev.leaf_count() - 1);
            const BandLeaf right = seg.leaf(0);
            const ScalarField& u_end = sol.u[s - 1].back();
            ScalarField reseed(record.grid, std::vector<double>(u_end.size()));
            for (std::size_t i = 0; i < u_end.size(); ++i)
                reseed[i] = u_end[i] * right.H1[i] / left.H1[i];
            u_seed = std::move(reseed);
        }

        sol.bounds.push_back(apriori_bounds(record, u_seed, s));
        const SegmentBounds& bounds = sol.bounds.back();
        const double t0 = seg.time(0);

        std::vector<double> u = u_seed.values;
        sol.u[s].push_back(ScalarField(record.grid, u));

        BandLeaf leaf_a = seg.leaf(0);
        auto check_certificate = [&](const std::vector<double>& uu, double t) {
            double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
            for (double v : uu) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            const double barrier = bounds.lower_beta * std::exp(-bounds.decay_gamma * (t - t0));
            if (!(hi < bounds.upper_C) || !(lo > barrier))
                fail(ErrorCode::numerical_failure,
                     "quasispherical solve: bound certificate violated at t=" +
                         std::to_string(t) + " (u in [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "], C=" + std::to_string(bounds.upper_C) +
                         ", barrier=" + std::to_string(barrier) + ")");
        };
        check_certificate(u, t0);

        double h_suggest = 0.0;
        for (std::size_t k = 0; k + 1 < seg.leaf_count(); ++k) {
            BandLeaf leaf_b = seg.leaf(k + 1);
            stepper.leaf_a = &leaf_a;
            stepper.leaf_b = &leaf_b;
            double t = leaf_a.t;
            const double t_goal = leaf_b.t;

            if (controls.fixed_substeps > 0) {
                const int q = controls.fixed_substeps;
                const double h = (t_goal - t) / q;
                for (int j = 0; j < q; ++j) {
                    stepper.double_step(t, h, u, u_next, big, half);
                    u.swap(u_next);
                    t += h;
                }
            } else {
                if (h_suggest <= 0.0) h_suggest = (t_goal - t) / 8.0;
                while (t < t_goal - 1e-13 * std::max(1.0, std::abs(t_goal))) {
                    double h = std::min(h_suggest, t_goal - t);
                    if (h < controls.dt_min)
                        fail(ErrorCode::numerical_failure,
                             "quasispherical solve: step size underflow at t=" +
                                 std::to_string(t));
                    const double err = stepper.double_step(t, h, u, u_next, big, half);
                    double umax = 0.0;
                    for (double v : u_next) umax = std::max(umax, std::abs(v));
                    const double tol = controls.atol + controls.rtol * umax;
                    if (err <= tol) {
                        u.swap(u_next);
                        t += h;
                        const double grow = err > 0.0 ? 0.9 * std::sqrt(tol / err) : 2.0;
                        h_suggest = h * std::min(2.0, std::max(0.5, grow));
                    } else {
                        h_suggest = h * std::max(0.2, 0.9 * std::sqrt(tol / err));
                    }
                }
            }

            sol.u[s].push_back(ScalarField(record.grid, u));
            check_certificate(u, t_goal);
            leaf_a = std::move(leaf_b);
        }
    }

    // monitors and PDE residual by differencing the stored solution in t
    LaplaceBeltrami res_op(record.segments.front().leaf(0).g);
    for (std::size_t s = 0; s < record.segments.size(); ++s) {
        const FoliationSegment& seg = record.segments[s];
        const std::size_t m = seg.leaf_count();
        for (std::size_t k = 0; k < m; ++k) {
            const auto& uk = sol.u[s][k];
            sol.leaf_time.push_back(seg.time(k));
            sol.leaf_min_u.push_back(uk.min());
            sol.leaf_max_u.push_back(uk.max());

            double res = std::numeric_limits<double>::quiet_NaN();
            if (m >= 3) {
                const std::size_t c = std::min(std::max<std::size_t>(k, 1), m - 2);
                const BandLeaf la = seg.leaf(c - 1), lb = seg.leaf(c), lc = seg.leaf(c + 1);
                const double t0 = la.t, t1 = lb.t, t2 = lc.t, tk = seg.time(k);
                const double w0 = (2.0 * tk - t1 - t2) / ((t0 - t1) * (t0 - t2));
                const double w1 = (2.0 * tk - t0 - t2) / ((t1 - t0) * (t1 - t2));
                const double w2 = (2.0 * tk - t0 - t1) / ((t2 - t0) * (t2 - t1));
                const BandLeaf lk = seg.leaf(k);
                res_op.rebuild(lk.g);
                std::vector<double> lap(uk.size());
                res_op.apply(uk.values, lap);
                res = 0.0;
                for (std::size_t i = 0; i < uk.size(); ++i) {
                    const double udot = w0 * sol.u[s][c - 1][i] + w1 * sol.u[s][c][i] +
                                        w2 * sol.u[s][c + 1][i];
                    const double u = uk[i];
                    const double rhs = u * u / lk.H1[i] * lap[i] -
                                       u * u * u * lk.K[i] / lk.H1[i] +
                                       (u / (2.0 * lk.H1[i])) *
                                           (lk.H1[i] * lk.H1[i] + lk.h1sq[i] + 2.0 * lk.H1p[i]);
                    res = std::max(res, std::abs(udot - rhs));
                }
            }
            sol.residual_norm.push_back(res);
        }
    }
    return sol;
}

ScalarField mean_curvature_u(const FoliationRecord& record, const LapseSolution& solution,
                             std::size_t leaf_index) {
    std::size_t s = 0, k = leaf_index;
    while (s < record.segments.size() && k >= record.segments[s].leaf_count()) {
        k -= record.segments[s].leaf_count();
        ++s;
    }
    if (s >= record.segments.size())
        fail(ErrorCode::invalid_argument, "mean_curvature_u: leaf index out of range");
    const BandLeaf leaf = record.segments[s].leaf(k);
    const ScalarField& u = solution.u[s][k];
    ScalarField out(record.grid, std::vector<double>(u.size()));
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = leaf.H1[i] / u[i];
    return out;
}

void export_lapse_csv(const LapseSolution& solution, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io_failure, "cannot open for writing: " + path);
    f << "t,min_u,max_u,residual_norm\n";
    char buf[160];
    for (std::size_t k = 0; k < solution.leaf_time.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g,%.15g\n", solution.leaf_time[k],
                      solution.leaf_min_u[k], solution.leaf_max_u[k],
                      solution.residual_norm[k]);
        f << buf;
    }
    if (!f) fail(ErrorCode::io_failure, "write failed: " + path);
}

} // namespace qsflow
