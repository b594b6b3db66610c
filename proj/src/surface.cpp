#include "qsflow/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qsflow/parallel.hpp"

namespace qsflow {

void RadialSurface::check_valid() const {
    if (!grid || rho.size() != grid->node_count())
        fail(ErrorCode::invalid_argument, "radial surface: field size does not match grid");
    for (std::size_t k = 0; k < rho.size(); ++k)
        if (!std::isfinite(rho[k]) || rho[k] <= 0.0)
            fail(ErrorCode::invalid_argument,
                 "radial surface: rho must be finite and positive (node " + std::to_string(k) + ")");
}

RadialSurface make_sphere(std::shared_ptr<const SphereGrid> grid, double radius) {
    RadialSurface s;
    s.rho = ScalarField::constant(grid, radius);
    s.grid = std::move(grid);
    s.check_valid();
    return s;
}

RadialSurface make_ellipsoid(std::shared_ptr<const SphereGrid> grid, double a, double c) {
    RadialSurface s;
    s.rho = ScalarField(grid, std::vector<double>(grid->node_count()));
    for (std::size_t k = 0; k < s.rho.size(); ++k) {
        const int i = grid->row_of(k);
        const double st = grid->sin_theta(i), ct = grid->cos_theta(i);
        s.rho[k] = a * c / std::sqrt(c * c * st * st + a * a * ct * ct);
    }
    s.grid = std::move(grid);
    s.check_valid();
    return s;
}

RadialSurface make_perturbed_sphere(std::shared_ptr<const SphereGrid> grid, double base,
                                    double amplitude, int mode) {
    RadialSurface s;
    s.rho = ScalarField(grid, std::vector<double>(grid->node_count()));
    for (std::size_t k = 0; k < s.rho.size(); ++k) {
        const int i = grid->row_of(k);
        // T_mode(cos theta) = cos(mode * theta): polynomial in cos theta, so
        // smooth across the poles
        s.rho[k] = base * (1.0 + amplitude * std::cos(mode * grid->theta(i)));
    }
    s.grid = std::move(grid);
    s.check_valid();
    return s;
}

double roundness(const RadialSurface& surface) {
    return (surface.rho.max() - surface.rho.min()) / mean_radius(surface);
}

double mean_radius(const RadialSurface& surface) {
    double s = 0.0;
    for (double v : surface.rho.values) s += v;
    return s / surface.rho.size();
}

// ---------------------------------------------------------------------------
// finite differences with smooth continuation through the poles
// ---------------------------------------------------------------------------

namespace {

// Axisymmetric scalars extend evenly across theta = 0 and theta = pi
// (staggered nodes mirror onto themselves).
inline double ghost_even(const std::vector<double>& v, int i, int nt) {
    if (i < 0) return v[-1 - i];
    if (i >= nt) return v[2 * nt - 1 - i];
    return v[i];
}
inline double ghost_odd(const std::vector<double>& v, int i, int nt) {
    if (i < 0) return -v[-1 - i];
    if (i >= nt) return -v[2 * nt - 1 - i];
    return v[i];
}

// full2d: the point (-theta, phi) is (theta, phi + pi); sign = -1 for
// components that flip orientation across the pole (g_theta_phi).
struct Full2dGhost {
    const SphereGrid* g;
    const std::vector<double>* v;
    double sign;
    double operator()(int i, int j) const {
        const int nt = g->ntheta(), np = g->nphi();
        double s = 1.0;
        if (i < 0) {
            i = -1 - i;
            j += np / 2;
            s = sign;
        } else if (i >= nt) {
            i = 2 * nt - 1 - i;
            j += np / 2;
            s = sign;
        }
        j %= np;
        if (j < 0) j += np;
        return s * (*v)[g->node(i, j)];
    }
};

} // namespace

// ---------------------------------------------------------------------------
// forms_from_radial
// ---------------------------------------------------------------------------

static LeafGeometry forms_axisymmetric(const RadialSurface& surface) {
    const SphereGrid& g = *surface.grid;
    const int nt = g.ntheta();
    const int n = g.ambient_dim();
    const double dt = g.dtheta();
    const auto& rho = surface.rho.values;

    LeafGeometry out;
    out.first_form.grid = surface.grid;
    out.second_form.grid = surface.grid;
    out.first_form.tt.resize(nt);
    out.first_form.pp.resize(nt);
    out.second_form.tt.resize(nt);
    out.second_form.pp.resize(nt);
    out.normal.resize(3 * nt);
    out.mean_curvature = ScalarField(surface.grid, std::vector<double>(nt));
    out.second_form_norm2 = ScalarField(surface.grid, std::vector<double>(nt));
    out.scalar2 = ScalarField(surface.grid, std::vector<double>(nt));
    out.radial_projection = ScalarField(surface.grid, std::vector<double>(nt));
    out.kappa.resize(2 * nt);

    for (int i = 0; i < nt; ++i) {
        const double r = rho[i];
        const double rp = (ghost_even(rho, i + 1, nt) - ghost_even(rho, i - 1, nt)) / (2.0 * dt);
        const double rpp =
            (ghost_even(rho, i + 1, nt) - 2.0 * r + ghost_even(rho, i - 1, nt)) / (dt * dt);
        if (!std::isfinite(rp) || !std::isfinite(rpp))
            fail(ErrorCode::invalid_argument, "degenerate surface: non-finite derivatives");
        const double st = g.sin_theta(i), ct = g.cos_theta(i);
        const double A = r * r + rp * rp;
        const double v = std::sqrt(A) / r;
        const double B = r * r * st * st;

        const double km = (r * r + 2.0 * rp * rp - r * rpp) / (r * v * A);
        const double kp = (r * st - rp * ct) / (v * r * r * st);

        out.first_form.tt[i] = A;
        out.first_form.pp[i] = B;
        out.second_form.tt[i] = km * A;
        out.second_form.pp[i] = kp * B;
        const double H = km + (n - 2) * kp;
        const double h2 = km * km + (n - 2) * kp * kp;
        out.mean_curvature[i] = H;
        out.second_form_norm2[i] = h2;
        out.scalar2[i] = H * H - h2;
        out.radial_projection[i] = 1.0 / v;
        out.kappa[2 * i] = km;
        out.kappa[2 * i + 1] = kp;
        const double q = rp / r;
        out.normal[3 * i] = (st - q * ct) / v;
        out.normal[3 * i + 1] = (ct + q * st) / v;
        out.normal[3 * i + 2] = 0.0;
    }
    return out;
}

static LeafGeometry forms_full2d(const RadialSurface& surface) {
    const SphereGrid& g = *surface.grid;
    const int nt = g.ntheta(), np = g.nphi();
    const std::size_t N = g.node_count();
    const double dt = g.dtheta(), dp = g.dphi();
    Full2dGhost R{&g, &surface.rho.values, 1.0};

    LeafGeometry out;
    out.first_form.grid = surface.grid;
    out.second_form.grid = surface.grid;
    out.first_form.tt.resize(N);
    out.first_form.tp.resize(N);
    out.first_form.pp.resize(N);
    out.second_form.tt.resize(N);
    out.second_form.tp.resize(N);
    out.second_form.pp.resize(N);
    out.normal.resize(3 * N);
    out.mean_curvature = ScalarField(surface.grid, std::vector<double>(N));
    out.second_form_norm2 = ScalarField(surface.grid, std::vector<double>(N));
    out.scalar2 = ScalarField(surface.grid, std::vector<double>(N));
    out.radial_projection = ScalarField(surface.grid, std::vector<double>(N));
    out.kappa.resize(2 * N);

    // theta-derivative field first, so the mixed partial is a plain periodic
    // phi-difference of it
    std::vector<double> rt_field(N);
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < np; ++j)
            rt_field[g.node(i, j)] = (R(i + 1, j) - R(i - 1, j)) / (2.0 * dt);

    parallel_for(N, [&](std::size_t kb, std::size_t ke) {
        for (std::size_t k = kb; k < ke; ++k) {
            const int i = g.row_of(k), j = g.col_of(k);
            const double r = surface.rho[k];
            const double st = g.sin_theta(i), ct = g.cos_theta(i);
            const double ph = g.phi(j);

            const double rt = rt_field[k];
            const double rp = (R(i, j + 1) - R(i, j - 1)) / (2.0 * dp);
            const double rtt = (R(i + 1, j) - 2.0 * r + R(i - 1, j)) / (dt * dt);
            const double rrpp = (R(i, j + 1) - 2.0 * r + R(i, j - 1)) / (dp * dp);
            const double rtp = (rt_field[g.node(i, (j + 1) % np)] -
                                rt_field[g.node(i, (j + np - 1) % np)]) /
                               (2.0 * dp);
            if (!std::isfinite(rt) || !std::isfinite(rtt) || !std::isfinite(rrpp))
                fail(ErrorCode::invalid_argument, "degenerate surface: non-finite derivatives");

            const double grad2 = rt * rt + rp * rp / (st * st);
            const double v = std::sqrt(r * r + grad2) / r;

            const double E = r * r + rt * rt;
            const double F = rt * rp;
            const double G = r * r * st * st + rp * rp;

            // round-metric Hessian of rho
            const double Htt = rtt;
            const double Htp = rtp - (ct / st) * rp;
            const double Hpp = rrpp + st * ct * rt;

            const double hp = 1.0 / (r * v);
            const double htt = (r * r + 2.0 * rt * rt - r * Htt) * hp;
            const double htp = (2.0 * rt * rp - r * Htp) * hp;
            const double hpp = (r * r * st * st + 2.0 * rp * rp - r * Hpp) * hp;

            const double det_g = E * G - F * F;
            const double trM = (G * htt - 2.0 * F * htp + E * hpp) / det_g;
            const double detM = (htt * hpp - htp * htp) / det_g;
            const double disc = std::sqrt(std::max(trM * trM - 4.0 * detM, 0.0));
            const double k1 = 0.5 * (trM - disc);
            const double k2 = 0.5 * (trM + disc);

            out.first_form.tt[k] = E;
            out.first_form.tp[k] = F;
            out.first_form.pp[k] = G;
            out.second_form.tt[k] = htt;
            out.second_form.tp[k] = htp;
            out.second_form.pp[k] = hpp;
            const double H = trM;
            const double h2 = k1 * k1 + k2 * k2;
            out.mean_curvature[k] = H;
            out.second_form_norm2[k] = h2;
            out.scalar2[k] = H * H - h2;
            out.radial_projection[k] = 1.0 / v;
            out.kappa[2 * k] = k1;
            out.kappa[2 * k + 1] = k2;

            const double cph = std::cos(ph), sph = std::sin(ph);
            const double omega[3] = {st * cph, st * sph, ct};
            const double etheta[3] = {ct * cph, ct * sph, -st};
            const double ephi[3] = {-st * sph, st * cph, 0.0};
            const double ca = rt / r, cb = rp / (r * st * st);
            for (int d = 0; d < 3; ++d)
                out.normal[3 * k + d] = (omega[d] - ca * etheta[d] - cb * ephi[d]) / v;
        }
    });
    return out;
}

LeafGeometry forms_from_radial(const RadialSurface& surface) {
    surface.check_valid();
    return surface.grid->mode() == GridMode::axisymmetric ? forms_axisymmetric(surface)
                                                          : forms_full2d(surface);
}

LeafGeometry forms_from_meridian(const std::shared_ptr<const SphereGrid>& grid,
                                 const std::vector<double>& perp,
                                 const std::vector<double>& axial) {
    if (grid->mode() != GridMode::axisymmetric)
        fail(ErrorCode::invalid_argument, "forms_from_meridian: axisymmetric grids only");
    const int nt = grid->ntheta();
    const int n = grid->ambient_dim();
    const double dt = grid->dtheta();
    if (perp.size() != static_cast<std::size_t>(nt) || axial.size() != perp.size())
        fail(ErrorCode::invalid_argument, "forms_from_meridian: field size mismatch");

    LeafGeometry out;
    out.first_form.grid = grid;
    out.second_form.grid = grid;
    out.first_form.tt.resize(nt);
    out.first_form.pp.resize(nt);
    out.second_form.tt.resize(nt);
    out.second_form.pp.resize(nt);
    out.normal.resize(3 * nt);
    out.mean_curvature = ScalarField(grid, std::vector<double>(nt));
    out.second_form_norm2 = ScalarField(grid, std::vector<double>(nt));
    out.scalar2 = ScalarField(grid, std::vector<double>(nt));
    out.radial_projection = ScalarField(grid, std::vector<double>(nt));
    out.kappa.resize(2 * nt);

    // the meridian continues across the poles with perp odd and axial even
    for (int i = 0; i < nt; ++i) {
        const double P = perp[i], Z = axial[i];
        if (!(P > 0.0) || !std::isfinite(P) || !std::isfinite(Z))
            fail(ErrorCode::invalid_argument,
                 "forms_from_meridian: degenerate meridian at node " + std::to_string(i));
        const double Pp = (ghost_odd(perp, i + 1, nt) - ghost_odd(perp, i - 1, nt)) / (2.0 * dt);
        const double Zp =
            (ghost_even(axial, i + 1, nt) - ghost_even(axial, i - 1, nt)) / (2.0 * dt);
        const double Ppp =
            (ghost_odd(perp, i + 1, nt) - 2.0 * P + ghost_odd(perp, i - 1, nt)) / (dt * dt);
        const double Zpp =
            (ghost_even(axial, i + 1, nt) - 2.0 * Z + ghost_even(axial, i - 1, nt)) / (dt * dt);

        const double w2 = Pp * Pp + Zp * Zp;
        const double w = std::sqrt(w2);
        const double nu_perp = -Zp / w, nu_axial = Pp / w; // outward

        const double km = (Zp * Ppp - Pp * Zpp) / (w2 * w);
        const double kp = nu_perp / P;

        out.first_form.tt[i] = w2;
        out.first_form.pp[i] = P * P;
        out.second_form.tt[i] = km * w2;
        out.second_form.pp[i] = kp * P * P;
        const double H = km + (n - 2) * kp;
        const double h2 = km * km + (n - 2) * kp * kp;
        out.mean_curvature[i] = H;
        out.second_form_norm2[i] = h2;
        out.scalar2[i] = H * H - h2;
        out.kappa[2 * i] = km;
        out.kappa[2 * i + 1] = kp;
        out.normal[3 * i] = nu_perp;
        out.normal[3 * i + 1] = nu_axial;
        out.normal[3 * i + 2] = 0.0;
        const double radius = std::sqrt(P * P + Z * Z);
        out.radial_projection[i] = (nu_perp * P + nu_axial * Z) / radius;
    }
    return out;
}

void LeafGeometry::principal_curvatures(std::size_t node, std::vector<double>& out) const {
    const int n = ambient_dim();
    out.assign(n - 1, 0.0);
    if (first_form.grid->mode() == GridMode::axisymmetric) {
        out[0] = kappa[2 * node];
        for (int d = 1; d < n - 1; ++d) out[d] = kappa[2 * node + 1];
        std::sort(out.begin(), out.end());
    } else {
        out[0] = kappa[2 * node];
        out[1] = kappa[2 * node + 1];
    }
}

double LeafGeometry::kappa_min() const {
    double m = kappa[0];
    for (double v : kappa) m = std::min(m, v);
    return m;
}

double LeafGeometry::kappa_max() const {
    double m = kappa[0];
    for (double v : kappa) m = std::max(m, v);
    return m;
}

// ---------------------------------------------------------------------------
// intrinsic curvature
// ---------------------------------------------------------------------------

ScalarField intrinsic_scalar2_axisymmetric(const MetricField& g) {
    const SphereGrid& grid = *g.grid;
    if (grid.mode() != GridMode::axisymmetric)
        fail(ErrorCode::invalid_argument, "intrinsic_scalar2_axisymmetric: wrong grid mode");
    const int nt = grid.ntheta();
    const int n = grid.ambient_dim();
    const double dt = grid.dtheta();

    // g = A dtheta^2 + phi(s)^2 * round(S^{n-2}), ds = sqrt(A) dtheta.
    // R = (n-2)(n-3)(1 - phi_s^2)/phi^2 - 2(n-2) phi_ss / phi.
    std::vector<double> phi(nt), psi(nt);
    for (int i = 0; i < nt; ++i) phi[i] = std::sqrt(g.pp[i]);
    for (int i = 0; i < nt; ++i) {
        const double dphi = (ghost_odd(phi, i + 1, nt) - ghost_odd(phi, i - 1, nt)) / (2.0 * dt);
        psi[i] = dphi / std::sqrt(g.tt[i]); // phi_s, even across poles
    }
    ScalarField out(g.grid, std::vector<double>(nt));
    for (int i = 0; i < nt; ++i) {
        const double dpsi = (ghost_even(psi, i + 1, nt) - ghost_even(psi, i - 1, nt)) / (2.0 * dt);
        const double phi_ss = dpsi / std::sqrt(g.tt[i]);
        double r = -2.0 * (n - 2) * phi_ss / phi[i];
        if (n > 3)
            r += (n - 2) * (n - 3) * (1.0 - psi[i] * psi[i]) / g.pp[i];
        out[i] = r;
    }
    return out;
}

ScalarField intrinsic_scalar2_full2d(const MetricField& g, double pole_margin) {
    const SphereGrid& grid = *g.grid;
    if (grid.mode() != GridMode::full2d)
        fail(ErrorCode::invalid_argument, "intrinsic_scalar2_full2d: wrong grid mode");
    const int nt = grid.ntheta(), np = grid.nphi();
    const double dt = grid.dtheta(), dp = grid.dphi();
    int pole_skip = 0;
    while (pole_skip < nt / 2 && grid.theta(pole_skip) < pole_margin) ++pole_skip;

    Full2dGhost E{&grid, &g.tt, 1.0};
    Full2dGhost F{&grid, &g.tp, -1.0};
    Full2dGhost G{&grid, &g.pp, 1.0};

    std::vector<double> Fu(grid.node_count());
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < np; ++j)
            Fu[grid.node(i, j)] = (F(i + 1, j) - F(i - 1, j)) / (2.0 * dt);

    ScalarField out(g.grid, std::vector<double>(grid.node_count(), 0.0));
    const int lo = pole_skip, hi = nt - pole_skip;
    for (int i = lo; i < hi; ++i) {
        for (int j = 0; j < np; ++j) {
            const std::size_t k = grid.node(i, j);
            const double e = g.tt[k], f = g.tp[k], gg = g.pp[k];
            const double Eu = (E(i + 1, j) - E(i - 1, j)) / (2.0 * dt);
            const double Ev = (E(i, j + 1) - E(i, j - 1)) / (2.0 * dp);
            const double Gu = (G(i + 1, j) - G(i - 1, j)) / (2.0 * dt);
            const double Gv = (G(i, j + 1) - G(i, j - 1)) / (2.0 * dp);
            const double fu = Fu[k];
            const double Fv = (F(i, j + 1) - F(i, j - 1)) / (2.0 * dp);
            const double Evv = (E(i, j + 1) - 2.0 * e + E(i, j - 1)) / (dp * dp);
            const double Guu = (G(i + 1, j) - 2.0 * gg + G(i - 1, j)) / (dt * dt);
            const double Fuv = (Fu[grid.node(i, (j + 1) % np)] -
                                Fu[grid.node(i, (j + np - 1) % np)]) /
                               (2.0 * dp);

            const double a11 = -0.5 * Evv + Fuv - 0.5 * Guu;
            const double det1 = a11 * (e * gg - f * f) -
                                0.5 * Eu * ((Fv - 0.5 * Gu) * gg - f * 0.5 * Gv) +
                                (fu - 0.5 * Ev) * ((Fv - 0.5 * Gu) * f - e * 0.5 * Gv);
            const double det2 = -0.5 * Ev * (0.5 * Ev * gg - f * 0.5 * Gu) +
                                0.5 * Gu * (0.5 * Ev * f - e * 0.5 * Gu);
            const double det_g = e * gg - f * f;
            out[k] = 2.0 * (det1 - det2) / (det_g * det_g);
        }
    }
    // pole bands: nearest trusted row
    for (int i = 0; i < lo && hi > lo; ++i)
        for (int j = 0; j < np; ++j) out[grid.node(i, j)] = out[grid.node(lo, j)];
    for (int i = hi; i < nt && hi > lo; ++i)
        for (int j = 0; j < np; ++j) out[grid.node(i, j)] = out[grid.node(hi - 1, j)];
    return out;
}

// ---------------------------------------------------------------------------
// snapshot io
// ---------------------------------------------------------------------------

void save_surface(const RadialSurface& surface, const std::string& path) {
    surface.check_valid();
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io_failure, "cannot open for writing: " + path);
    const SphereGrid& g = *surface.grid;
    f << "qsflow-surface mode="
      << (g.mode() == GridMode::full2d ? "full2d" : "axisymmetric")
      << " dim=" << g.ambient_dim() << " ntheta=" << g.ntheta()
      << " nphi=" << (g.mode() == GridMode::full2d ? g.nphi() : 0) << " center=";
    char buf[40];
    for (int d = 0; d < g.ambient_dim(); ++d) {
        std::snprintf(buf, sizeof buf, "%.17g", d < 4 ? surface.center[d] : 0.0);
        f << (d ? "," : "") << buf;
    }
    f << "\n";
    for (double v : surface.rho.values) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        f << buf << "\n";
    }
    if (!f) fail(ErrorCode::io_failure, "write failed: " + path);
}

RadialSurface load_surface(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io_failure, "cannot open surface snapshot: " + path);
    std::string header;
    if (!std::getline(f, header))
        fail(ErrorCode::io_failure, "empty surface snapshot: " + path);

    std::istringstream hs(header);
    std::string tag;
    hs >> tag;
    if (tag != "qsflow-surface")
        fail(ErrorCode::io_failure, "not a surface snapshot: " + path);
    std::string mode;
    int dim = 0, ntheta = 0, nphi = 0;
    std::array<double, 4> center{0, 0, 0, 0};
    std::string kv;
    while (hs >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::io_failure, "malformed snapshot header: " + kv);
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (key == "mode") mode = value;
        else if (key == "dim") dim = std::stoi(value);
        else if (key == "ntheta") ntheta = std::stoi(value);
        else if (key == "nphi") nphi = std::stoi(value);
        else if (key == "center") {
            std::istringstream cs(value);
            std::string tok;
            int d = 0;
            while (std::getline(cs, tok, ',') && d < 4) center[d++] = std::stod(tok);
        } else
            fail(ErrorCode::io_failure, "unknown snapshot header key: " + key);
    }

    RadialSurface s;
    s.grid = mode == "full2d" ? SphereGrid::full2d(ntheta, nphi)
                              : SphereGrid::axisymmetric(dim, ntheta);
    s.center = center;
    std::vector<double> vals;
    vals.reserve(s.grid->node_count());
    double v;
    while (f >> v) vals.push_back(v);
    if (vals.size() != s.grid->node_count())
        fail(ErrorCode::io_failure, "surface snapshot value count mismatch: expected " +
                                        std::to_string(s.grid->node_count()) + ", got " +
                                        std::to_string(vals.size()));
    s.rho = ScalarField(s.grid, std::move(vals));
    s.check_valid();
    return s;
}

} // namespace qsflow
