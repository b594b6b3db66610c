/*
 * qsflow C API: quasi-spherical flow toolkit behind an extern-C shared
 * library. All handles are opaque; every fallible call returns a qsf_status
 * and leaves a human-readable message in qsf_last_error() (thread-local).
 *
 * Status values double as CLI exit codes: 0 ok, 1 verification failure,
 * 2 mathematical-domain failure, 64 configuration error.
 */
#ifndef QSFLOW_H
#define QSFLOW_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QSF_API __declspec(dllexport)
#else
#define QSF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qsf_status {
    QSF_OK = 0,
    QSF_ERROR_VERIFY = 1,
    QSF_ERROR_DOMAIN = 2,
    QSF_ERROR_INVALID = 3,
    QSF_ERROR_IO = 4,
    QSF_ERROR_NUMERICAL = 5,
    QSF_ERROR_CONFIG = 64
} qsf_status;

QSF_API const char* qsf_version(void);
QSF_API const char* qsf_status_name(qsf_status s);
QSF_API const char* qsf_last_error(void);
QSF_API void qsf_set_threads(int n);

/* ---- opaque handles ---------------------------------------------------- */

typedef struct qsf_grid qsf_grid;
typedef struct qsf_surface qsf_surface;
typedef struct qsf_trajectory qsf_trajectory;
typedef struct qsf_foliation qsf_foliation;
typedef struct qsf_lapse qsf_lapse;
typedef struct qsf_mass_series qsf_mass_series;
typedef struct qsf_config qsf_config;

/* ---- grids ------------------------------------------------------------- */

QSF_API qsf_status qsf_grid_create_full2d(int ntheta, int nphi, qsf_grid** out);
QSF_API qsf_status qsf_grid_create_axisymmetric(int ambient_dim, int ntheta, qsf_grid** out);
QSF_API void qsf_grid_destroy(qsf_grid* g);
QSF_API size_t qsf_grid_node_count(const qsf_grid* g);
QSF_API int qsf_grid_ambient_dim(const qsf_grid* g);
QSF_API double qsf_grid_total_weight(const qsf_grid* g);

/* ---- surfaces ---------------------------------------------------------- */

QSF_API qsf_status qsf_surface_create_sphere(const qsf_grid* g, double radius,
                                             qsf_surface** out);
QSF_API qsf_status qsf_surface_create_ellipsoid(const qsf_grid* g, double equatorial,
                                                double polar, qsf_surface** out);
QSF_API qsf_status qsf_surface_create_perturbed_sphere(const qsf_grid* g, double base,
                                                       double amplitude, int mode,
                                                       qsf_surface** out);
QSF_API qsf_status qsf_surface_create_from_values(const qsf_grid* g, const double* rho,
                                                  size_t count, qsf_surface** out);
QSF_API qsf_status qsf_surface_load(const char* path, qsf_surface** out);
QSF_API qsf_status qsf_surface_save(const qsf_surface* s, const char* path);
QSF_API void qsf_surface_destroy(qsf_surface* s);
QSF_API size_t qsf_surface_node_count(const qsf_surface* s);
QSF_API qsf_status qsf_surface_get_rho(const qsf_surface* s, double* buffer, size_t count);
QSF_API double qsf_surface_roundness(const qsf_surface* s);
QSF_API double qsf_surface_mean_radius(const qsf_surface* s);
QSF_API qsf_status qsf_surface_curvature_range(const qsf_surface* s, double* kappa_min,
                                               double* kappa_max);

/* ---- speed function and cone ------------------------------------------- */

QSF_API qsf_status qsf_speed_f(const double* kappa, int count, double* out);

typedef enum qsf_cone_class {
    QSF_CONE_INSIDE = 0,
    QSF_CONE_BOUNDARY = 1,
    QSF_CONE_OUTSIDE = 2
} qsf_cone_class;

/* margins[0] = sum kappa, margins[1] = (sum kappa)^2 - sum kappa^2 */
QSF_API qsf_status qsf_cone_classify(const double* kappa, int count, qsf_cone_class* cls,
                                     double margins[2]);

/* ---- H/R flow ----------------------------------------------------------- */

typedef struct qsf_flow_controls {
    double t_max;        /* ignored when until_convex != 0 */
    int until_convex;
    double cfl;          /* <= 0: default 0.2 */
    double record_dt;    /* <= 0: t_max / 200 */
    double dt_min;       /* <= 0: default 1e-10 */
} qsf_flow_controls;

QSF_API qsf_status qsf_flow_run(const qsf_surface* s, const qsf_flow_controls* controls,
                                qsf_trajectory** out);
QSF_API void qsf_trajectory_destroy(qsf_trajectory* t);
QSF_API size_t qsf_trajectory_leaf_count(const qsf_trajectory* t);
QSF_API qsf_status qsf_trajectory_times(const qsf_trajectory* t, double* buffer, size_t count);
QSF_API qsf_status qsf_trajectory_convexity(const qsf_trajectory* t, int* reached,
                                            double* t_convex);
QSF_API qsf_status qsf_trajectory_final_surface(const qsf_trajectory* t, qsf_surface** out);
QSF_API qsf_status qsf_trajectory_export_csv(const qsf_trajectory* t, const char* path);

/* ---- foliated bands ------------------------------------------------------ */

QSF_API qsf_status qsf_foliate_distance(const qsf_surface* s, double t_max, double dt,
                                        qsf_foliation** out);
QSF_API qsf_status qsf_foliate_from_flow(const qsf_trajectory* t, qsf_foliation** out);
QSF_API qsf_status qsf_foliation_concatenate(const qsf_foliation* a, const qsf_foliation* b,
                                             qsf_foliation** out);
/* appends the distance sweep of the record's outermost leaf geometry */
QSF_API qsf_status qsf_foliation_extend_distance(const qsf_foliation* f, double t_max,
                                                 double dt, qsf_foliation** out);
QSF_API void qsf_foliation_destroy(qsf_foliation* f);
QSF_API size_t qsf_foliation_leaf_count(const qsf_foliation* f);
QSF_API qsf_status qsf_foliation_validate(const qsf_foliation* f, int* pass, double* min_K,
                                          double* min_H1, double* gauss_residual);
QSF_API qsf_status qsf_foliation_export_csv(const qsf_foliation* f, const char* path);

/* ---- quasi-spherical lapse ------------------------------------------------ */

typedef struct qsf_solve_controls {
    double rtol;        /* <= 0: default 1e-8 */
    double atol;        /* <= 0: default 1e-12 */
    int fixed_substeps; /* 0: adaptive step doubling */
    double cg_tol;      /* <= 0: default 1e-10 */
} qsf_solve_controls;

/* u0 = eta0 * H_hat / H_target on the first leaf; h_target has node count */
QSF_API qsf_status qsf_initial_lapse(const qsf_foliation* f, const double* h_target,
                                     size_t count, double* u0_out);
QSF_API qsf_status qsf_apriori_bounds(const qsf_foliation* f, const double* u0, size_t count,
                                      double* upper_C, double* lower_beta,
                                      double* decay_gamma);
/* u0 == NULL seeds with the reference lapse eta of the first leaf */
QSF_API qsf_status qsf_lapse_solve(const qsf_foliation* f, const double* u0, size_t count,
                                   const qsf_solve_controls* controls, qsf_lapse** out);
QSF_API void qsf_lapse_destroy(qsf_lapse* l);
QSF_API size_t qsf_lapse_leaf_count(const qsf_lapse* l);
QSF_API qsf_status qsf_lapse_leaf_range(const qsf_lapse* l, size_t leaf, double* t,
                                        double* u_min, double* u_max);
QSF_API qsf_status qsf_lapse_get_u(const qsf_lapse* l, size_t leaf, double* buffer,
                                   size_t count);
QSF_API size_t qsf_lapse_segment_count(const qsf_lapse* l);
QSF_API qsf_status qsf_lapse_bounds(const qsf_lapse* l, size_t segment, double* upper_C,
                                    double* lower_beta, double* decay_gamma);
QSF_API qsf_status qsf_lapse_export_csv(const qsf_lapse* l, const char* path);

/* ---- mass diagnostics ----------------------------------------------------- */

QSF_API qsf_status qsf_mass_compute(const qsf_foliation* f, const qsf_lapse* l,
                                    qsf_mass_series** out);
QSF_API void qsf_mass_destroy(qsf_mass_series* m);
QSF_API size_t qsf_mass_count(const qsf_mass_series* m);
QSF_API qsf_status qsf_mass_values(const qsf_mass_series* m, double* t, double* mass,
                                   double* dissipation, size_t count);
QSF_API qsf_status qsf_mass_brown_york(const qsf_mass_series* m, double* raw,
                                       double* normalized, int* has_normalized);
QSF_API qsf_status qsf_mass_adm_estimate(const qsf_mass_series* m, double* out);
QSF_API qsf_status qsf_mass_monotonicity(const qsf_mass_series* m, int* pass,
                                         double* max_positive_jump, double* max_rel_mismatch);
QSF_API qsf_status qsf_mass_export_csv(const qsf_mass_series* m, const char* path);

/* ---- closed-form oracles --------------------------------------------------- */

QSF_API qsf_status qsf_schwarzschild_lapse(double m, double r, int ambient_dim, double* out);
QSF_API qsf_status qsf_sphere_flow_radius(double r0, double t, int ambient_dim, double* out);

/* ---- configuration-driven runs (what the CLI calls) ------------------------- */

QSF_API qsf_status qsf_config_load(const char* path, qsf_config** out);
QSF_API qsf_status qsf_config_parse(const char* text, qsf_config** out);
QSF_API void qsf_config_destroy(qsf_config* c);

QSF_API qsf_status qsf_run_flow(const qsf_config* c, const char* out_dir);
QSF_API qsf_status qsf_run_foliate(const qsf_config* c, const char* out_dir);
QSF_API qsf_status qsf_run_solve(const qsf_config* c, const char* out_dir);
QSF_API qsf_status qsf_run_pipeline(const qsf_config* c, const char* out_dir);

/* Runs the acceptance suite twice (determinism check included), writing
 * verify_table.csv and verify_artifacts.txt under out_dir. emit, when
 * non-NULL, receives one progress line per check. Returns QSF_OK when all
 * checks pass, QSF_ERROR_VERIFY otherwise. */
typedef void (*qsf_emit_line)(const char* line, void* user);
QSF_API qsf_status qsf_run_verify(const char* out_dir, uint64_t seed, qsf_emit_line emit,
                                  void* user);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* QSFLOW_H */
