#include "qsflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qsflow/parallel.hpp"

namespace qsflow {

namespace {
constexpr double pi = std::numbers::pi;

std::shared_ptr<SphereGrid> allocate_grid() {
    struct Make : SphereGrid {};
    return std::make_shared<Make>();
}
} // namespace

double unit_sphere_volume(int dim) {
    // |S^{dim-1}| = 2 pi^{dim/2} / Gamma(dim/2)
    return 2.0 * std::pow(pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

std::shared_ptr<const SphereGrid> SphereGrid::full2d(int ntheta, int nphi) {
    if (ntheta < 8)
        fail(ErrorCode::invalid_argument, "full2d grid needs ntheta >= 8, got " + std::to_string(ntheta));
    if (nphi < 8 || nphi % 2 != 0)
        fail(ErrorCode::invalid_argument, "full2d grid needs even nphi >= 8, got " + std::to_string(nphi));

    auto g = allocate_grid();
    g->mode_ = GridMode::full2d;
    g->dim_ = 3;
    g->ntheta_ = ntheta;
    g->nphi_ = nphi;
    g->dtheta_ = pi / ntheta;
    g->dphi_ = 2.0 * pi / nphi;
    g->fiber_volume_ = 2.0 * pi;

    g->theta_.resize(ntheta);
    g->sin_theta_.resize(ntheta);
    g->cos_theta_.resize(ntheta);
    for (int i = 0; i < ntheta; ++i) {
        g->theta_[i] = (i + 0.5) * g->dtheta_;
        g->sin_theta_[i] = std::sin(g->theta_[i]);
        g->cos_theta_[i] = std::cos(g->theta_[i]);
    }
    g->weight_.resize(static_cast<std::size_t>(ntheta) * nphi);
    for (int i = 0; i < ntheta; ++i)
        for (int j = 0; j < nphi; ++j)
            g->weight_[g->node(i, j)] = g->sin_theta_[i] * g->dtheta_ * g->dphi_;
    return g;
}

std::shared_ptr<const SphereGrid> SphereGrid::axisymmetric(int ambient_dim, int ntheta) {
    if (ambient_dim < 3)
        fail(ErrorCode::invalid_argument, "ambient dimension must be >= 3, got " + std::to_string(ambient_dim));
    if (ntheta < 8)
        fail(ErrorCode::invalid_argument, "axisymmetric grid needs ntheta >= 8, got " + std::to_string(ntheta));

    auto g = allocate_grid();
    g->mode_ = GridMode::axisymmetric;
    g->dim_ = ambient_dim;
    g->ntheta_ = ntheta;
    g->nphi_ = 1;
    g->dtheta_ = pi / ntheta;
    g->dphi_ = 0.0;
    g->fiber_volume_ = unit_sphere_volume(ambient_dim - 1);

    g->theta_.resize(ntheta);
    g->sin_theta_.resize(ntheta);
    g->cos_theta_.resize(ntheta);
    g->weight_.resize(ntheta);
    for (int i = 0; i < ntheta; ++i) {
        g->theta_[i] = (i + 0.5) * g->dtheta_;
        g->sin_theta_[i] = std::sin(g->theta_[i]);
        g->cos_theta_[i] = std::cos(g->theta_[i]);
        g->weight_[i] = g->fiber_volume_ *
                        std::pow(g->sin_theta_[i], ambient_dim - 2) * g->dtheta_;
    }
    return g;
}

double SphereGrid::total_weight() const {
    double s = 0.0;
    for (double w : weight_) s += w;
    return s;
}

bool SphereGrid::same_layout(const SphereGrid& other) const {
    return mode_ == other.mode_ && dim_ == other.dim_ &&
           ntheta_ == other.ntheta_ && nphi_ == other.nphi_;
}

ScalarField ScalarField::constant(std::shared_ptr<const SphereGrid> g, double value) {
    std::vector<double> v(g->node_count(), value);
    return ScalarField(std::move(g), std::move(v));
}

double ScalarField::min() const {
    return *std::min_element(values.begin(), values.end());
}

double ScalarField::max() const {
    return *std::max_element(values.begin(), values.end());
}

bool ScalarField::finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

MetricField MetricField::round_metric(std::shared_ptr<const SphereGrid> g, double radius) {
    MetricField m;
    const std::size_t n = g->node_count();
    const double r2 = radius * radius;
    m.tt.assign(n, r2);
    m.pp.resize(n);
    if (g->mode() == GridMode::full2d) m.tp.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = g->sin_theta(g->row_of(k));
        m.pp[k] = r2 * s * s;
    }
    m.grid = std::move(g);
    return m;
}

bool MetricField::positive_definite() const {
    if (grid->mode() == GridMode::full2d) {
        for (std::size_t k = 0; k < tt.size(); ++k)
            if (!(tt[k] > 0.0) || !(tt[k] * pp[k] - tp[k] * tp[k] > 0.0)) return false;
    } else {
        for (std::size_t k = 0; k < tt.size(); ++k)
            if (!(tt[k] > 0.0) || !(pp[k] > 0.0)) return false;
    }
    return true;
}

double MetricField::volume_ratio(std::size_t node) const {
    const int i = grid->row_of(node);
    const double s = grid->sin_theta(i);
    if (grid->mode() == GridMode::full2d) {
        const double det = tt[node] * pp[node] - tp[node] * tp[node];
        return std::sqrt(det) / s;
    }
    const int n = grid->ambient_dim();
    return std::sqrt(tt[node]) * std::pow(pp[node] / (s * s), 0.5 * (n - 2));
}

std::vector<double> dsigma_weights(const MetricField& g) {
    const SphereGrid& grid = *g.grid;
    std::vector<double> m(grid.node_count());
    if (grid.mode() == GridMode::full2d) {
        const double cell = grid.dtheta() * grid.dphi();
        for (std::size_t k = 0; k < m.size(); ++k) {
            const double det = g.tt[k] * g.pp[k] - g.tp[k] * g.tp[k];
            m[k] = std::sqrt(det) * cell;
        }
    } else {
        const int n = grid.ambient_dim();
        const double cell = grid.fiber_volume() * grid.dtheta();
        for (std::size_t k = 0; k < m.size(); ++k)
            m[k] = std::sqrt(g.tt[k]) * std::pow(g.pp[k], 0.5 * (n - 2)) * cell;
    }
    return m;
}

double integrate(const ScalarField& field, const MetricField& metric) {
    if (!field.grid || !metric.grid || !field.grid->same_layout(*metric.grid))
        fail(ErrorCode::invalid_argument, "integrate: field and metric live on different grids");
    const std::vector<double> m = dsigma_weights(metric);
    double s = 0.0; // fixed summation order, independent of thread count
    for (std::size_t k = 0; k < m.size(); ++k) s += field.values[k] * m[k];
    return s;
}

// ---------------------------------------------------------------------------
// LaplaceBeltrami
// ---------------------------------------------------------------------------

LaplaceBeltrami::LaplaceBeltrami(const MetricField& metric) : grid_(metric.grid) {
    build_pattern();
    rebuild(metric);
}

void LaplaceBeltrami::build_pattern() {
    const SphereGrid& g = *grid_;
    const std::size_t n = g.node_count();
    std::vector<std::vector<int>> adj(n);
    auto link = [&adj](int a, int b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    };

    theta_faces_.clear();
    phi_faces_.clear();
    cross_.clear();

    if (g.mode() == GridMode::axisymmetric) {
        for (int i = 0; i + 1 < g.ntheta(); ++i) {
            link(i, i + 1);
            theta_faces_.push_back({i, i + 1, -1, -1});
        }
    } else {
        const int nt = g.ntheta(), np = g.nphi(), half = g.nphi() / 2;
        for (int i = 0; i + 1 < nt; ++i)
            for (int j = 0; j < np; ++j) {
                const int a = static_cast<int>(g.node(i, j));
                const int b = static_cast<int>(g.node(i + 1, j));
                link(a, b);
                theta_faces_.push_back({a, b, -1, -1});
            }
        for (int i = 0; i < nt; ++i)
            for (int j = 0; j < np; ++j) {
                const int a = static_cast<int>(g.node(i, j));
                const int b = static_cast<int>(g.node(i, (j + 1) % np));
                link(a, b);
                phi_faces_.push_back({a, b, -1, -1});
            }
        // cross-derivative stencils; centered in theta via the antipodal
        // continuation through the poles
        cross_.resize(n);
        for (int i = 0; i < nt; ++i)
            for (int j = 0; j < np; ++j) {
                Cross c{};
                c.up = i + 1 < nt ? static_cast<int>(g.node(i + 1, j))
                                  : static_cast<int>(g.node(nt - 1, (j + half) % np));
                c.dn = i > 0 ? static_cast<int>(g.node(i - 1, j))
                             : static_cast<int>(g.node(0, (j + half) % np));
                c.left = static_cast<int>(g.node(i, (j + np - 1) % np));
                c.right = static_cast<int>(g.node(i, (j + 1) % np));
                link(c.right, c.up);
                link(c.right, c.dn);
                link(c.left, c.up);
                link(c.left, c.dn);
                cross_[g.node(i, j)] = c;
            }
    }

    row_ptr_.assign(n + 1, 0);
    for (std::size_t r = 0; r < n; ++r) {
        auto& nb = adj[r];
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        row_ptr_[r + 1] = row_ptr_[r] + static_cast<int>(nb.size());
    }
    col_.resize(row_ptr_[n]);
    for (std::size_t r = 0; r < n; ++r)
        std::copy(adj[r].begin(), adj[r].end(), col_.begin() + row_ptr_[r]);
    val_.assign(col_.size(), 0.0);
    diag_.assign(n, 0.0);
    mass_.assign(n, 0.0);

    auto slot = [this](int r, int c) {
        auto first = col_.begin() + row_ptr_[r];
        auto last = col_.begin() + row_ptr_[r + 1];
        return static_cast<int>(std::lower_bound(first, last, c) - col_.begin());
    };
    for (auto& f : theta_faces_) {
        f.slot_ab = slot(f.a, f.b);
        f.slot_ba = slot(f.b, f.a);
    }
    for (auto& f : phi_faces_) {
        f.slot_ab = slot(f.a, f.b);
        f.slot_ba = slot(f.b, f.a);
    }
    for (auto& c : cross_) {
        c.slot[0] = slot(c.right, c.up);
        c.slot[1] = slot(c.right, c.dn);
        c.slot[2] = slot(c.left, c.up);
        c.slot[3] = slot(c.left, c.dn);
        c.slot[4] = slot(c.up, c.right);
        c.slot[5] = slot(c.up, c.left);
        c.slot[6] = slot(c.dn, c.right);
        c.slot[7] = slot(c.dn, c.left);
    }
}

void LaplaceBeltrami::rebuild(const MetricField& metric) {
    if (!metric.grid->same_layout(*grid_))
        fail(ErrorCode::invalid_argument, "LaplaceBeltrami::rebuild: grid layout changed");
    const SphereGrid& g = *grid_;
    const std::size_t n = g.node_count();
    std::fill(val_.begin(), val_.end(), 0.0);

    if (g.mode() == GridMode::axisymmetric) {
        const int dim = g.ambient_dim();
        const double fib = g.fiber_volume();
        std::vector<double> q(n);
        for (std::size_t k = 0; k < n; ++k) {
            if (!(metric.tt[k] > 0.0) || !(metric.pp[k] > 0.0))
                fail(ErrorCode::invalid_argument,
                     "metric not positive-definite at node " + std::to_string(k));
            const double warp = std::pow(metric.pp[k], 0.5 * (dim - 2));
            q[k] = warp / std::sqrt(metric.tt[k]);
            mass_[k] = fib * std::sqrt(metric.tt[k]) * warp * g.dtheta();
        }
        const double scale = fib / g.dtheta();
        for (const auto& f : theta_faces_) {
            const double c = 0.5 * (q[f.a] + q[f.b]) * scale;
            val_[f.slot_ab] -= c;
            val_[f.slot_ba] -= c;
        }
    } else {
        std::vector<double> qt(n), qp(n), s(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double det = metric.tt[k] * metric.pp[k] - metric.tp[k] * metric.tp[k];
            if (!(metric.tt[k] > 0.0) || !(det > 0.0))
                fail(ErrorCode::invalid_argument,
                     "metric not positive-definite at node " + std::to_string(k));
            const double J = std::sqrt(det);
            qt[k] = metric.pp[k] / J;
            qp[k] = metric.tt[k] / J;
            s[k] = -metric.tp[k] / J;
            mass_[k] = J * g.dtheta() * g.dphi();
        }
        const double ct = g.dphi() / g.dtheta();
        const double cp = g.dtheta() / g.dphi();
        for (const auto& f : theta_faces_) {
            const double c = 0.5 * (qt[f.a] + qt[f.b]) * ct;
            val_[f.slot_ab] -= c;
            val_[f.slot_ba] -= c;
        }
        for (const auto& f : phi_faces_) {
            const double c = 0.5 * (qp[f.a] + qp[f.b]) * cp;
            val_[f.slot_ab] -= c;
            val_[f.slot_ba] -= c;
        }
        for (std::size_t k = 0; k < n; ++k) {
            const double c = 0.25 * s[k];
            if (c == 0.0) continue;
            const Cross& x = cross_[k];
            val_[x.slot[0]] += c;
            val_[x.slot[1]] -= c;
            val_[x.slot[2]] -= c;
            val_[x.slot[3]] += c;
            val_[x.slot[4]] += c;
            val_[x.slot[5]] -= c;
            val_[x.slot[6]] -= c;
            val_[x.slot[7]] += c;
        }
    }

    // diagonal = negative row sum in storage order, so S * 1 == 0 exactly
    for (std::size_t r = 0; r < n; ++r) {
        double s_row = 0.0;
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s_row += val_[k];
        diag_[r] = -s_row;
    }
}

void LaplaceBeltrami::apply_stiffness(std::span<const double> u, std::span<double> out) const {
    const std::size_t n = diag_.size();
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            double s = 0.0;
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                s += val_[k] * u[col_[k]];
            out[r] = s + diag_[r] * u[r];
        }
    });
}

void LaplaceBeltrami::apply(std::span<const double> u, std::span<double> out) const {
    apply_stiffness(u, out);
    const std::size_t n = diag_.size();
    for (std::size_t r = 0; r < n; ++r) out[r] = -out[r] / mass_[r];
}

ScalarField LaplaceBeltrami::apply(const ScalarField& u) const {
    if (!u.grid->same_layout(*grid_))
        fail(ErrorCode::invalid_argument, "laplace_beltrami: field grid mismatch");
    ScalarField out(grid_, std::vector<double>(u.size()));
    apply(u.values, out.values);
    return out;
}

} // namespace qsflow
