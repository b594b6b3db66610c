#include "qsflow/qsflow.h"

#include <cstring>
#include <memory>
#include <string>

#include "qsflow/config.hpp"
#include "qsflow/mass.hpp"
#include "qsflow/oracles.hpp"
#include "qsflow/parallel.hpp"
#include "qsflow/pipeline.hpp"
#include "qsflow/verify.hpp"

using namespace qsflow;

// handle definitions: each owns its C++ value plus whatever it must keep alive
struct qsf_grid {
    std::shared_ptr<const SphereGrid> grid;
};
struct qsf_surface {
    RadialSurface surface;
};
struct qsf_trajectory {
    FlowTrajectory traj;
};
struct qsf_foliation {
    FoliationRecord record;
};
struct qsf_lapse {
    LapseSolution solution;
};
struct qsf_mass_series {
    MassSeries series;
};
struct qsf_config {
    RunConfig config;
};

namespace {

thread_local std::string g_last_error;

qsf_status to_status(ErrorCode c) { return static_cast<qsf_status>(static_cast<int>(c)); }

static_assert(static_cast<int>(ErrorCode::verify_failed) == QSF_ERROR_VERIFY);
static_assert(static_cast<int>(ErrorCode::domain_failure) == QSF_ERROR_DOMAIN);
static_assert(static_cast<int>(ErrorCode::invalid_argument) == QSF_ERROR_INVALID);
static_assert(static_cast<int>(ErrorCode::io_failure) == QSF_ERROR_IO);
static_assert(static_cast<int>(ErrorCode::numerical_failure) == QSF_ERROR_NUMERICAL);
static_assert(static_cast<int>(ErrorCode::config_error) == QSF_ERROR_CONFIG);

template <class F>
qsf_status guarded(F&& body) {
    try {
        g_last_error.clear();
        return body();
    } catch (const Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return QSF_ERROR_NUMERICAL;
    }
}

qsf_status need(bool ok, const char* message) {
    if (!ok) {
        g_last_error = message;
        return QSF_ERROR_INVALID;
    }
    return QSF_OK;
}

// resolve a global leaf index into (segment, leaf) for a solution
bool locate_leaf(const LapseSolution& sol, size_t leaf, size_t* s_out, size_t* k_out) {
    size_t s = 0, k = leaf;
    while (s < sol.u.size() && k >= sol.u[s].size()) {
        k -= sol.u[s].size();
        ++s;
    }
    if (s >= sol.u.size()) return false;
    *s_out = s;
    *k_out = k;
    return true;
}

} // namespace

extern "C" {

const char* qsf_version(void) { return "0.1.0"; }

const char* qsf_status_name(qsf_status s) {
    switch (s) {
        case QSF_OK: return "ok";
        case QSF_ERROR_VERIFY: return "verification-failure";
        case QSF_ERROR_DOMAIN: return "domain-failure";
        case QSF_ERROR_INVALID: return "invalid-argument";
        case QSF_ERROR_IO: return "io-failure";
        case QSF_ERROR_NUMERICAL: return "numerical-failure";
        case QSF_ERROR_CONFIG: return "config-error";
    }
    return "unknown";
}

const char* qsf_last_error(void) { return g_last_error.c_str(); }

void qsf_set_threads(int n) { set_thread_count(n); }

/* ---- grids ---- */

qsf_status qsf_grid_create_full2d(int ntheta, int nphi, qsf_grid** out) {
    if (qsf_status s = need(out != nullptr, "null output handle")) return s;
    return guarded([&] {
        *out = new qsf_grid{SphereGrid::full2d(ntheta, nphi)};
        return QSF_OK;
    });
}

qsf_status qsf_grid_create_axisymmetric(int ambient_dim, int ntheta, qsf_grid** out) {
    if (qsf_status s = need(out != nullptr, "null output handle")) return s;
    return guarded([&] {
        *out = new qsf_grid{SphereGrid::axisymmetric(ambient_dim, ntheta)};
        return QSF_OK;
    });
}

void qsf_grid_destroy(qsf_grid* g) { delete g; }

size_t qsf_grid_node_count(const qsf_grid* g) { return g ? g->grid->node_count() : 0; }

int qsf_grid_ambient_dim(const qsf_grid* g) { return g ? g->grid->ambient_dim() : 0; }

double qsf_grid_total_weight(const qsf_grid* g) { return g ? g->grid->total_weight() : 0.0; }

/* ---- surfaces ---- */

qsf_status qsf_surface_create_sphere(const qsf_grid* g, double radius, qsf_surface** out) {
    if (qsf_status s = need(g && out, "null handle")) return s;
    return guarded([&] {
        *out = new qsf_surface{make_sphere(g->grid, radius)};
        return QSF_OK;
    });
}

qsf_status qsf_surface_create_ellipsoid(const qsf_grid* g, double equatorial, double polar,
                                        qsf_surface** out) {
    if (qsf_status s = need(g && out, "null handle")) return s;
    return guarded([&] {
        *out = new qsf_surface{make_ellipsoid(g->grid, equatorial, polar)};
        return QSF_OK;
    });
}

qsf_status qsf_surface_create_perturbed_sphere(const qsf_grid* g, double base,
                                               double amplitude, int mode, qsf_surface** out) {
    if (qsf_status s = need(g && out, "null handle")) return s;
    return guarded([&] {
        *out = new qsf_surface{make_perturbed_sphere(g->grid, base, amplitude, mode)};
        return QSF_OK;
    });
}

qsf_status qsf_surface_create_from_values(const qsf_grid* g, const double* rho, size_t count,
                                          qsf_surface** out) {
    if (qsf_status s = need(g && rho && out, "null handle")) return s;
    return guarded([&] {
        if (count != g->grid->node_count())
            fail(ErrorCode::invalid_argument, "rho length does not match grid node count");
        RadialSurface surf;
        surf.grid = g->grid;
        surf.rho = ScalarField(g->grid, std::vector<double>(rho, rho + count));
        surf.check_valid();
        *out = new qsf_surface{std::move(surf)};
        return QSF_OK;
    });
}

qsf_status qsf_surface_load(const char* path, qsf_surface** out) {
    if (qsf_status s = need(path && out, "null argument")) return s;
    return guarded([&] {
        *out = new qsf_surface{load_surface(path)};
        return QSF_OK;
    });
}

qsf_status qsf_surface_save(const qsf_surface* s, const char* path) {
    if (qsf_status st = need(s && path, "null argument")) return st;
    return guarded([&] {
        save_surface(s->surface, path);
        return QSF_OK;
    });
}

void qsf_surface_destroy(qsf_surface* s) { delete s; }

size_t qsf_surface_node_count(const qsf_surface* s) {
    return s ? s->surface.rho.size() : 0;
}

qsf_status qsf_surface_get_rho(const qsf_surface* s, double* buffer, size_t count) {
    if (qsf_status st = need(s && buffer, "null argument")) return st;
    return guarded([&] {
        if (count != s->surface.rho.size())
            fail(ErrorCode::invalid_argument, "buffer length does not match node count");
        std::memcpy(buffer, s->surface.rho.values.data(), count * sizeof(double));
        return QSF_OK;
    });
}

double qsf_surface_roundness(const qsf_surface* s) { return s ? roundness(s->surface) : 0.0; }

double qsf_surface_mean_radius(const qsf_surface* s) {
    return s ? mean_radius(s->surface) : 0.0;
}

qsf_status qsf_surface_curvature_range(const qsf_surface* s, double* kappa_min,
                                       double* kappa_max) {
    if (qsf_status st = need(s && kappa_min && kappa_max, "null argument")) return st;
    return guarded([&] {
        const LeafGeometry geo = forms_from_radial(s->surface);
        *kappa_min = geo.kappa_min();
        *kappa_max = geo.kappa_max();
        return QSF_OK;
    });
}

/* ---- speed and cone ---- */

qsf_status qsf_speed_f(const double* kappa, int count, double* out) {
    if (qsf_status st = need(kappa && out && count > 0, "need kappa values")) return st;
    return guarded([&] {
        *out = speed_f(std::span<const double>(kappa, count));
        return QSF_OK;
    });
}

qsf_status qsf_cone_classify(const double* kappa, int count, qsf_cone_class* cls,
                             double margins[2]) {
    if (qsf_status st = need(kappa && cls && count > 0, "need kappa values")) return st;
    return guarded([&] {
        ConeMargins m;
        const ConeClass c = cone_check(std::span<const double>(kappa, count), &m);
        *cls = c == ConeClass::inside ? QSF_CONE_INSIDE
               : c == ConeClass::boundary ? QSF_CONE_BOUNDARY
                                          : QSF_CONE_OUTSIDE;
        if (margins) {
            margins[0] = m.trace;
            margins[1] = m.quad;
        }
        return QSF_OK;
    });
}

/* ---- flow ---- */

qsf_status qsf_flow_run(const qsf_surface* s, const qsf_flow_controls* controls,
                        qsf_trajectory** out) {
    if (qsf_status st = need(s && out, "null handle")) return st;
    return guarded([&] {
        FlowControls fc;
        if (controls) {
            fc.t_max = controls->t_max;
            fc.until_convex = controls->until_convex != 0;
            if (controls->cfl > 0.0) fc.cfl = controls->cfl;
            if (controls->record_dt > 0.0) fc.record_dt = controls->record_dt;
            if (controls->dt_min > 0.0) fc.dt_min = controls->dt_min;
        }
        *out = new qsf_trajectory{run_flow(s->surface, fc)};
        return QSF_OK;
    });
}

void qsf_trajectory_destroy(qsf_trajectory* t) { delete t; }

size_t qsf_trajectory_leaf_count(const qsf_trajectory* t) {
    return t ? t->traj.leaves.size() : 0;
}

qsf_status qsf_trajectory_times(const qsf_trajectory* t, double* buffer, size_t count) {
    if (qsf_status st = need(t && buffer, "null argument")) return st;
    return guarded([&] {
        if (count != t->traj.leaves.size())
            fail(ErrorCode::invalid_argument, "buffer length does not match leaf count");
        for (size_t k = 0; k < count; ++k) buffer[k] = t->traj.leaves[k].t;
        return QSF_OK;
    });
}

qsf_status qsf_trajectory_convexity(const qsf_trajectory* t, int* reached, double* t_convex) {
    if (qsf_status st = need(t && reached, "null argument")) return st;
    *reached = t->traj.reached_convexity ? 1 : 0;
    if (t_convex) *t_convex = t->traj.t_convex.value_or(-1.0);
    return QSF_OK;
}

qsf_status qsf_trajectory_final_surface(const qsf_trajectory* t, qsf_surface** out) {
    if (qsf_status st = need(t && out, "null argument")) return st;
    return guarded([&] {
        *out = new qsf_surface{t->traj.leaves.back().surface};
        return QSF_OK;
    });
}

qsf_status qsf_trajectory_export_csv(const qsf_trajectory* t, const char* path) {
    if (qsf_status st = need(t && path, "null argument")) return st;
    return guarded([&] {
        export_trajectory_csv(t->traj, path);
        return QSF_OK;
    });
}

/* ---- foliation ---- */

qsf_status qsf_foliate_distance(const qsf_surface* s, double t_max, double dt,
                                qsf_foliation** out) {
    if (qsf_status st = need(s && out, "null handle")) return st;
    return guarded([&] {
        *out = new qsf_foliation{foliate_distance(s->surface, t_max, dt)};
        return QSF_OK;
    });
}

qsf_status qsf_foliate_from_flow(const qsf_trajectory* t, qsf_foliation** out) {
    if (qsf_status st = need(t && out, "null handle")) return st;
    return guarded([&] {
        *out = new qsf_foliation{foliate_from_flow(t->traj)};
        return QSF_OK;
    });
}

qsf_status qsf_foliation_concatenate(const qsf_foliation* a, const qsf_foliation* b,
                                     qsf_foliation** out) {
    if (qsf_status st = need(a && b && out, "null handle")) return st;
    return guarded([&] {
        *out = new qsf_foliation{concatenate(a->record, b->record)};
        return QSF_OK;
    });
}

qsf_status qsf_foliation_extend_distance(const qsf_foliation* f, double t_max, double dt,
                                         qsf_foliation** out) {
    if (qsf_status st = need(f && out, "null handle")) return st;
    return guarded([&] {
        *out = new qsf_foliation{extend_distance(f->record, t_max, dt)};
        return QSF_OK;
    });
}

void qsf_foliation_destroy(qsf_foliation* f) { delete f; }

size_t qsf_foliation_leaf_count(const qsf_foliation* f) {
    return f ? f->record.total_leaves() : 0;
}

qsf_status qsf_foliation_validate(const qsf_foliation* f, int* pass, double* min_K,
                                  double* min_H1, double* gauss_residual) {
    if (qsf_status st = need(f && pass, "null argument")) return st;
    return guarded([&] {
        const ValidationReport rep = validate(f->record);
        *pass = rep.pass ? 1 : 0;
        if (min_K) *min_K = rep.min_K;
        if (min_H1) *min_H1 = rep.min_H1;
        if (gauss_residual) *gauss_residual = rep.max_gauss_residual;
        return QSF_OK;
    });
}

qsf_status qsf_foliation_export_csv(const qsf_foliation* f, const char* path) {
    if (qsf_status st = need(f && path, "null argument")) return st;
    return guarded([&] {
        export_band_csv(f->record, path);
        return QSF_OK;
    });
}

/* ---- lapse ---- */

qsf_status qsf_initial_lapse(const qsf_foliation* f, const double* h_target, size_t count,
                             double* u0_out) {
    if (qsf_status st = need(f && h_target && u0_out, "null argument")) return st;
    return guarded([&] {
        if (count != f->record.grid->node_count())
            fail(ErrorCode::invalid_argument, "h_target length does not match node count");
        ScalarField H(f->record.grid, std::vector<double>(h_target, h_target + count));
        const ScalarField u0 = initial_lapse(f->record, H);
        std::memcpy(u0_out, u0.values.data(), count * sizeof(double));
        return QSF_OK;
    });
}

qsf_status qsf_apriori_bounds(const qsf_foliation* f, const double* u0, size_t count,
                              double* upper_C, double* lower_beta, double* decay_gamma) {
    if (qsf_status st = need(f && u0 && upper_C && lower_beta && decay_gamma, "null argument"))
        return st;
    return guarded([&] {
        if (count != f->record.grid->node_count())
            fail(ErrorCode::invalid_argument, "u0 length does not match node count");
        ScalarField u(f->record.grid, std::vector<double>(u0, u0 + count));
        const SegmentBounds b = apriori_bounds(f->record, u);
        *upper_C = b.upper_C;
        *lower_beta = b.lower_beta;
        *decay_gamma = b.decay_gamma;
        return QSF_OK;
    });
}

qsf_status qsf_lapse_solve(const qsf_foliation* f, const double* u0, size_t count,
                           const qsf_solve_controls* controls, qsf_lapse** out) {
    if (qsf_status st = need(f && out, "null handle")) return st;
    return guarded([&] {
        ScalarField seed;
        if (u0) {
            if (count != f->record.grid->node_count())
                fail(ErrorCode::invalid_argument, "u0 length does not match node count");
            seed = ScalarField(f->record.grid, std::vector<double>(u0, u0 + count));
        } else {
            seed = f->record.segments.front().leaf(0).eta;
            seed.grid = f->record.grid;
        }
        SolveControls sc;
        if (controls) {
            if (controls->rtol > 0.0) sc.rtol = controls->rtol;
            if (controls->atol > 0.0) sc.atol = controls->atol;
            if (controls->fixed_substeps > 0) sc.fixed_substeps = controls->fixed_substeps;
            if (controls->cg_tol > 0.0) sc.cg_tol = controls->cg_tol;
        }
        *out = new qsf_lapse{solve(f->record, seed, sc)};
        return QSF_OK;
    });
}

void qsf_lapse_destroy(qsf_lapse* l) { delete l; }

size_t qsf_lapse_leaf_count(const qsf_lapse* l) {
    return l ? l->solution.leaf_time.size() : 0;
}

qsf_status qsf_lapse_leaf_range(const qsf_lapse* l, size_t leaf, double* t, double* u_min,
                                double* u_max) {
    if (qsf_status st = need(l != nullptr, "null handle")) return st;
    if (leaf >= l->solution.leaf_time.size()) {
        g_last_error = "leaf index out of range";
        return QSF_ERROR_INVALID;
    }
    if (t) *t = l->solution.leaf_time[leaf];
    if (u_min) *u_min = l->solution.leaf_min_u[leaf];
    if (u_max) *u_max = l->solution.leaf_max_u[leaf];
    return QSF_OK;
}

qsf_status qsf_lapse_get_u(const qsf_lapse* l, size_t leaf, double* buffer, size_t count) {
    if (qsf_status st = need(l && buffer, "null argument")) return st;
    size_t s, k;
    if (!locate_leaf(l->solution, leaf, &s, &k)) {
        g_last_error = "leaf index out of range";
        return QSF_ERROR_INVALID;
    }
    const auto& u = l->solution.u[s][k];
    if (count != u.size()) {
        g_last_error = "buffer length does not match node count";
        return QSF_ERROR_INVALID;
    }
    std::memcpy(buffer, u.values.data(), count * sizeof(double));
    return QSF_OK;
}

size_t qsf_lapse_segment_count(const qsf_lapse* l) { return l ? l->solution.u.size() : 0; }

qsf_status qsf_lapse_bounds(const qsf_lapse* l, size_t segment, double* upper_C,
                            double* lower_beta, double* decay_gamma) {
    if (qsf_status st = need(l != nullptr, "null handle")) return st;
    if (segment >= l->solution.bounds.size()) {
        g_last_error = "segment index out of range";
        return QSF_ERROR_INVALID;
    }
    const SegmentBounds& b = l->solution.bounds[segment];
    if (upper_C) *upper_C = b.upper_C;
    if (lower_beta) *lower_beta = b.lower_beta;
    if (decay_gamma) *decay_gamma = b.decay_gamma;
    return QSF_OK;
}

qsf_status qsf_lapse_export_csv(const qsf_lapse* l, const char* path) {
    if (qsf_status st = need(l && path, "null argument")) return st;
    return guarded([&] {
        export_lapse_csv(l->solution, path);
        return QSF_OK;
    });
}

/* ---- mass ---- */

qsf_status qsf_mass_compute(const qsf_foliation* f, const qsf_lapse* l,
                            qsf_mass_series** out) {
    if (qsf_status st = need(f && l && out, "null handle")) return st;
    return guarded([&] {
        *out = new qsf_mass_series{mass_function(f->record, l->solution)};
        return QSF_OK;
    });
}

void qsf_mass_destroy(qsf_mass_series* m) { delete m; }

size_t qsf_mass_count(const qsf_mass_series* m) { return m ? m->series.t.size() : 0; }

qsf_status qsf_mass_values(const qsf_mass_series* m, double* t, double* mass,
                           double* dissipation, size_t count) {
    if (qsf_status st = need(m != nullptr, "null handle")) return st;
    if (count != m->series.t.size()) {
        g_last_error = "buffer length does not match series length";
        return QSF_ERROR_INVALID;
    }
    for (size_t k = 0; k < count; ++k) {
        if (t) t[k] = m->series.t[k];
        if (mass) mass[k] = m->series.m[k];
        if (dissipation) dissipation[k] = m->series.dissipation[k];
    }
    return QSF_OK;
}

qsf_status qsf_mass_brown_york(const qsf_mass_series* m, double* raw, double* normalized,
                               int* has_normalized) {
    if (qsf_status st = need(m && raw, "null argument")) return st;
    *raw = m->series.brown_york_raw;
    if (has_normalized) *has_normalized = m->series.brown_york_normalized ? 1 : 0;
    if (normalized) *normalized = m->series.brown_york_normalized.value_or(0.0);
    return QSF_OK;
}

qsf_status qsf_mass_adm_estimate(const qsf_mass_series* m, double* out) {
    if (qsf_status st = need(m && out, "null argument")) return st;
    return guarded([&] {
        *out = adm_estimate(m->series);
        return QSF_OK;
    });
}

qsf_status qsf_mass_monotonicity(const qsf_mass_series* m, int* pass,
                                 double* max_positive_jump, double* max_rel_mismatch) {
    if (qsf_status st = need(m && pass, "null argument")) return st;
    return guarded([&] {
        const MonotonicityReport rep = monotonicity_report(m->series);
        *pass = rep.pass ? 1 : 0;
        if (max_positive_jump) *max_positive_jump = rep.max_positive_jump;
        if (max_rel_mismatch) *max_rel_mismatch = rep.max_rel_mismatch;
        return QSF_OK;
    });
}

qsf_status qsf_mass_export_csv(const qsf_mass_series* m, const char* path) {
    if (qsf_status st = need(m && path, "null argument")) return st;
    return guarded([&] {
        export_mass_csv(m->series, path);
        return QSF_OK;
    });
}

/* ---- oracles ---- */

qsf_status qsf_schwarzschild_lapse(double m, double r, int ambient_dim, double* out) {
    if (qsf_status st = need(out != nullptr, "null output")) return st;
    return guarded([&] {
        *out = oracles::schwarzschild_lapse(m, r, ambient_dim);
        return QSF_OK;
    });
}

qsf_status qsf_sphere_flow_radius(double r0, double t, int ambient_dim, double* out) {
    if (qsf_status st = need(out != nullptr, "null output")) return st;
    return guarded([&] {
        *out = oracles::sphere_flow_radius(r0, t, ambient_dim);
        return QSF_OK;
    });
}

/* ---- config-driven runs ---- */

qsf_status qsf_config_load(const char* path, qsf_config** out) {
    if (qsf_status st = need(path && out, "null argument")) return st;
    return guarded([&] {
        *out = new qsf_config{load_config(path)};
        return QSF_OK;
    });
}

qsf_status qsf_config_parse(const char* text, qsf_config** out) {
    if (qsf_status st = need(text && out, "null argument")) return st;
    return guarded([&] {
        *out = new qsf_config{parse_config(text)};
        return QSF_OK;
    });
}

void qsf_config_destroy(qsf_config* c) { delete c; }

qsf_status qsf_run_flow(const qsf_config* c, const char* out_dir) {
    if (qsf_status st = need(c && out_dir, "null argument")) return st;
    return guarded([&] {
        run_flow_cmd(c->config, out_dir);
        return QSF_OK;
    });
}

qsf_status qsf_run_foliate(const qsf_config* c, const char* out_dir) {
    if (qsf_status st = need(c && out_dir, "null argument")) return st;
    return guarded([&] {
        run_foliate_cmd(c->config, out_dir);
        return QSF_OK;
    });
}

qsf_status qsf_run_solve(const qsf_config* c, const char* out_dir) {
    if (qsf_status st = need(c && out_dir, "null argument")) return st;
    return guarded([&] {
        run_solve_cmd(c->config, out_dir);
        return QSF_OK;
    });
}

qsf_status qsf_run_pipeline(const qsf_config* c, const char* out_dir) {
    if (qsf_status st = need(c && out_dir, "null argument")) return st;
    return guarded([&] {
        run_pipeline_cmd(c->config, out_dir);
        return QSF_OK;
    });
}

qsf_status qsf_run_verify(const char* out_dir, uint64_t seed, qsf_emit_line emit, void* user) {
    return guarded([&] {
        EmitLine line;
        if (emit)
            line = [emit, user](const std::string& s) { emit(s.c_str(), user); };
        const bool ok = run_verify(out_dir ? out_dir : "", seed, line);
        if (!ok) {
            g_last_error = "one or more acceptance checks failed";
            return QSF_ERROR_VERIFY;
        }
        return QSF_OK;
    });
}

} /* extern "C" */
