#include "qsflow/mass.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

namespace qsflow {

MassSeries mass_function(const FoliationRecord& record, const LapseSolution& solution) {
    if (solution.u.size() != record.segments.size())
        fail(ErrorCode::invalid_argument, "mass_function: solution does not match record");
    MassSeries out;
    out.ambient_dim = record.grid->ambient_dim();
    const double fullvol = unit_sphere_volume(out.ambient_dim);

    for (std::size_t s = 0; s < record.segments.size(); ++s) {
        const FoliationSegment& seg = record.segments[s];
        if (solution.u[s].size() != seg.leaf_count())
            fail(ErrorCode::invalid_argument, "mass_function: solution does not match record");
        for (std::size_t k = 0; k < seg.leaf_count(); ++k) {
            const BandLeaf leaf = seg.leaf(k);
            const ScalarField& u = solution.u[s][k];
            const std::vector<double> w = dsigma_weights(leaf.g);
            double mval = 0.0, dval = 0.0, area = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                mval += leaf.H1[i] * (1.0 / leaf.eta[i] - 1.0 / u[i]) * w[i];
                const double diff = leaf.eta[i] - u[i];
                dval -= leaf.K[i] * diff * diff / u[i] * w[i];
                area += w[i];
            }
            if (s > 0 && k == 0) {
                // junction: the leaf is already represented by the previous
                // segment; record the (tiny) jump and keep the left value
                out.junction_jump.push_back(std::abs(mval - out.m.back()));
                continue;
            }
            out.t.push_back(seg.time(k));
            out.m.push_back(mval);
            out.dissipation.push_back(dval);
            out.area_radius.push_back(
                std::pow(area / fullvol, 1.0 / (out.ambient_dim - 1)));
        }
    }

    // discrete derivative of m: centered on the interior, one-sided ends
    const std::size_t n = out.t.size();
    out.m_dot.assign(n, 0.0);
    if (n >= 3) {
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t c = std::min(std::max<std::size_t>(k, 1), n - 2);
            const double t0 = out.t[c - 1], t1 = out.t[c], t2 = out.t[c + 1], tk = out.t[k];
            const double w0 = (2.0 * tk - t1 - t2) / ((t0 - t1) * (t0 - t2));
            const double w1 = (2.0 * tk - t0 - t2) / ((t1 - t0) * (t1 - t2));
            const double w2 = (2.0 * tk - t0 - t1) / ((t2 - t0) * (t2 - t1));
            out.m_dot[k] = w0 * out.m[c - 1] + w1 * out.m[c] + w2 * out.m[c + 1];
        }
    } else if (n == 2) {
        const double slope = (out.m[1] - out.m[0]) / (out.t[1] - out.t[0]);
        out.m_dot[0] = out.m_dot[1] = slope;
    }

    out.brown_york_raw = out.m.front();
    if (out.ambient_dim == 3)
        out.brown_york_normalized = out.brown_york_raw / (8.0 * std::numbers::pi);
    return out;
}

MonotonicityReport monotonicity_report(const MassSeries& series, double mismatch_tol,
                                       double dissipation_floor) {
    if (series.t.size() < 3)
        fail(ErrorCode::invalid_argument, "monotonicity_report: need at least three times");
    MonotonicityReport rep;
    rep.tau_mono = 1e-6 * std::abs(series.m.front()) + 1e-10;
    rep.dissipation_floor = dissipation_floor;

    double max_jump = -std::numeric_limits<double>::infinity();
    double max_mismatch = 0.0;
    std::size_t checked = 0;
    for (std::size_t k = 0; k + 1 < series.t.size(); ++k) {
        const double dt = series.t[k + 1] - series.t[k];
        max_jump = std::max(max_jump, series.m[k + 1] - series.m[k]);
        const double mdot_mid = (series.m[k + 1] - series.m[k]) / dt;
        const double d_mid = 0.5 * (series.dissipation[k] + series.dissipation[k + 1]);
        if (std::abs(d_mid) > dissipation_floor) {
            max_mismatch = std::max(max_mismatch, std::abs(mdot_mid - d_mid) / std::abs(d_mid));
            ++checked;
        }
    }
    for (double j : series.junction_jump) max_jump = std::max(max_jump, j);

    rep.max_positive_jump = max_jump;
    rep.max_rel_mismatch = max_mismatch;
    rep.intervals_checked = checked;
    rep.pass = max_jump <= rep.tau_mono && max_mismatch <= mismatch_tol;
    return rep;
}

BrownYork brown_york(const ScalarField& H_hat, const ScalarField& H, const MetricField& metric,
                     int ambient_dim) {
    if (!H_hat.grid->same_layout(*H.grid) || !H_hat.grid->same_layout(*metric.grid))
        fail(ErrorCode::invalid_argument, "brown_york: fields live on different grids");
    const std::vector<double> w = dsigma_weights(metric);
    BrownYork out;
    for (std::size_t i = 0; i < w.size(); ++i)
        out.raw += (H_hat[i] - H[i]) * w[i];
    if (ambient_dim == 3) out.normalized = out.raw / (8.0 * std::numbers::pi);
    return out;
}

double adm_estimate(const MassSeries& series) {
    const std::size_t n = series.t.size();
    if (n < 6)
        fail(ErrorCode::domain_failure, "adm_estimate: band too short (too few leaves)");
    const double r_in = series.area_radius.front(), r_out = series.area_radius.back();
    // the 10x rule with rounding slack: the acceptance band [2, 20] sits
    // exactly on the boundary
    if (!(r_out >= 10.0 * r_in * (1.0 - 1e-9)))
        fail(ErrorCode::domain_failure,
             "adm_estimate: band too short (outer radius " + std::to_string(r_out) +
                 " < 10x inner " + std::to_string(r_in) + ")");

    const double tau_mono = 1e-6 * std::abs(series.m.front()) + 1e-10;
    const std::size_t k0 = (2 * n) / 3;
    for (std::size_t k = k0; k + 1 < n; ++k)
        if (series.m[k + 1] - series.m[k] > tau_mono)
            fail(ErrorCode::numerical_failure, "adm_estimate: non-monotone tail");

    // least squares m = m_inf + a / r over the last third
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t cnt = 0;
    for (std::size_t k = k0; k < n; ++k) {
        const double x = 1.0 / series.area_radius[k];
        const double y = series.m[k];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    const double det = cnt * sxx - sx * sx;
    const double m_inf = (sxx * sy - sx * sxy) / det;
    return series.ambient_dim == 3 ? m_inf / (8.0 * std::numbers::pi) : m_inf;
}

void export_mass_csv(const MassSeries& series, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io_failure, "cannot open for writing: " + path);
    f << "t,area_radius,m,dissipation,m_discrete_derivative\n";
    char buf[200];
    for (std::size_t k = 0; k < series.t.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g,%.15g,%.15g\n", series.t[k],
                      series.area_radius[k], series.m[k], series.dissipation[k],
                      series.m_dot[k]);
        f << buf;
    }
    if (!f) fail(ErrorCode::io_failure, "write failed: " + path);
}

} // namespace qsflow
