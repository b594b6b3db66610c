#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "qsflow/qsflow.h"

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() / "qsflow_capi_test";
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("status names and versioning") {
    CHECK(std::string(qsf_version()) == "0.1.0");
    CHECK(std::string(qsf_status_name(QSF_OK)) == "ok");
    CHECK(std::string(qsf_status_name(QSF_ERROR_DOMAIN)) == "domain-failure");
    CHECK(std::string(qsf_status_name(QSF_ERROR_CONFIG)) == "config-error");
}

TEST_CASE("grid handles and argument validation") {
    qsf_grid* g = nullptr;
    REQUIRE(qsf_grid_create_axisymmetric(3, 64, &g) == QSF_OK);
    CHECK(qsf_grid_node_count(g) == 64);
    CHECK(qsf_grid_ambient_dim(g) == 3);
    CHECK(qsf_grid_total_weight(g) == doctest::Approx(4.0 * 3.14159265358979).epsilon(1e-3));
    qsf_grid_destroy(g);

    qsf_grid* bad = nullptr;
    CHECK(qsf_grid_create_axisymmetric(2, 64, &bad) == QSF_ERROR_INVALID);
    CHECK(std::strlen(qsf_last_error()) > 0);
    CHECK(qsf_grid_create_full2d(64, 127, &bad) == QSF_ERROR_INVALID);
    CHECK(qsf_grid_create_full2d(64, 128, nullptr) == QSF_ERROR_INVALID);
}

TEST_CASE("speed function and cone through the C surface") {
    double f = 0.0;
    const double k1[2] = {1.0, 1.0};
    REQUIRE(qsf_speed_f(k1, 2, &f) == QSF_OK);
    CHECK(f == doctest::Approx(1.0));

    const double k2[3] = {2.0, 2.0, -0.5};
    REQUIRE(qsf_speed_f(k2, 3, &f) == QSF_OK);
    CHECK(f == doctest::Approx(8.0 / 7.0));

    const double bad[2] = {-1.0, -1.0};
    CHECK(qsf_speed_f(bad, 2, &f) == QSF_ERROR_DOMAIN);

    qsf_cone_class cls;
    double margins[2];
    const double kb[3] = {2.0, 2.0, -1.0};
    REQUIRE(qsf_cone_classify(kb, 3, &cls, margins) == QSF_OK);
    CHECK(cls == QSF_CONE_BOUNDARY);
    CHECK(margins[0] == doctest::Approx(3.0));
    CHECK(margins[1] == doctest::Approx(0.0));
}

TEST_CASE("oracles through the C surface") {
    double v = 0.0;
    REQUIRE(qsf_schwarzschild_lapse(0.1, 2.0, 3, &v) == QSF_OK);
    CHECK(v == doctest::Approx(1.0540925533894598).epsilon(1e-12));
    CHECK(qsf_schwarzschild_lapse(0.1, 0.2, 3, &v) == QSF_ERROR_DOMAIN);
    REQUIRE(qsf_sphere_flow_radius(1.0, 1.0, 3, &v) == QSF_OK);
    CHECK(v == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("full pipeline through opaque handles") {
    TempDir tmp;
    qsf_grid* g = nullptr;
    REQUIRE(qsf_grid_create_axisymmetric(3, 64, &g) == QSF_OK);

    qsf_surface* sphere = nullptr;
    REQUIRE(qsf_surface_create_sphere(g, 2.0, &sphere) == QSF_OK);
    CHECK(qsf_surface_roundness(sphere) == 0.0);
    CHECK(qsf_surface_mean_radius(sphere) == doctest::Approx(2.0));

    double kmin = 0.0, kmax = 0.0;
    REQUIRE(qsf_surface_curvature_range(sphere, &kmin, &kmax) == QSF_OK);
    CHECK(kmin == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(kmax == doctest::Approx(0.5).epsilon(1e-10));

    // snapshot round trip
    REQUIRE(qsf_surface_save(sphere, tmp.file("s.txt").c_str()) == QSF_OK);
    qsf_surface* loaded = nullptr;
    REQUIRE(qsf_surface_load(tmp.file("s.txt").c_str(), &loaded) == QSF_OK);
    std::vector<double> rho(qsf_surface_node_count(loaded));
    REQUIRE(qsf_surface_get_rho(loaded, rho.data(), rho.size()) == QSF_OK);
    for (double r : rho) CHECK(r == 2.0);
    qsf_surface_destroy(loaded);
    CHECK(qsf_surface_load("/nonexistent/file.txt", &loaded) == QSF_ERROR_IO);

    // distance band + lapse solve + mass
    qsf_foliation* band = nullptr;
    REQUIRE(qsf_foliate_distance(sphere, 18.0, 0.05, &band) == QSF_OK);
    CHECK(qsf_foliation_leaf_count(band) == 361);

    int pass = 0;
    double minK = 0.0, minH1 = 0.0, gauss = 0.0;
    REQUIRE(qsf_foliation_validate(band, &pass, &minK, &minH1, &gauss) == QSF_OK);
    CHECK(pass == 1);
    CHECK(minK > 0.0);
    CHECK(minH1 > 0.0);

    const size_t n = qsf_grid_node_count(g);
    double u_seed = 0.0;
    REQUIRE(qsf_schwarzschild_lapse(0.1, 2.0, 3, &u_seed) == QSF_OK);
    std::vector<double> u0(n, u_seed);

    double C = 0.0, beta = 0.0, gamma = 0.0;
    REQUIRE(qsf_apriori_bounds(band, u0.data(), n, &C, &beta, &gamma) == QSF_OK);
    CHECK(C > u_seed);
    CHECK(beta < u_seed);
    CHECK(gamma >= 0.0);

    qsf_solve_controls sc{};
    sc.fixed_substeps = 3;
    qsf_lapse* lapse = nullptr;
    REQUIRE(qsf_lapse_solve(band, u0.data(), n, &sc, &lapse) == QSF_OK);
    CHECK(qsf_lapse_segment_count(lapse) == 1);
    REQUIRE(qsf_lapse_bounds(lapse, 0, &C, &beta, &gamma) == QSF_OK);

    double t = 0.0, umin = 0.0, umax = 0.0;
    const size_t leaves = qsf_lapse_leaf_count(lapse);
    REQUIRE(qsf_lapse_leaf_range(lapse, leaves - 1, &t, &umin, &umax) == QSF_OK);
    CHECK(t == doctest::Approx(18.0));
    double uref = 0.0;
    REQUIRE(qsf_schwarzschild_lapse(0.1, 20.0, 3, &uref) == QSF_OK);
    CHECK(umin == doctest::Approx(uref).epsilon(1e-4));

    std::vector<double> ubuf(n);
    REQUIRE(qsf_lapse_get_u(lapse, leaves - 1, ubuf.data(), n) == QSF_OK);
    CHECK(ubuf[7] == doctest::Approx(uref).epsilon(1e-4));
    CHECK(qsf_lapse_get_u(lapse, leaves + 5, ubuf.data(), n) == QSF_ERROR_INVALID);

    qsf_mass_series* mass = nullptr;
    REQUIRE(qsf_mass_compute(band, lapse, &mass) == QSF_OK);
    double raw = 0.0, normalized = 0.0;
    int has = 0;
    REQUIRE(qsf_mass_brown_york(mass, &raw, &normalized, &has) == QSF_OK);
    CHECK(has == 1);

    double adm = 0.0;
    REQUIRE(qsf_mass_adm_estimate(mass, &adm) == QSF_OK);
    CHECK(adm == doctest::Approx(0.1).epsilon(0.02));

    int mono = 0;
    double jump = 0.0, mismatch = 0.0;
    REQUIRE(qsf_mass_monotonicity(mass, &mono, &jump, &mismatch) == QSF_OK);
    CHECK(mono == 1);

    REQUIRE(qsf_mass_export_csv(mass, tmp.file("mass.csv").c_str()) == QSF_OK);
    CHECK(std::filesystem::file_size(tmp.file("mass.csv")) > 1000);

    qsf_mass_destroy(mass);
    qsf_lapse_destroy(lapse);
    qsf_foliation_destroy(band);
    qsf_surface_destroy(sphere);
    qsf_grid_destroy(g);
}

TEST_CASE("flow and composite band through the C surface") {
    qsf_grid* g = nullptr;
    REQUIRE(qsf_grid_create_axisymmetric(4, 64, &g) == QSF_OK);
    qsf_surface* dumbbell = nullptr;
    REQUIRE(qsf_surface_create_perturbed_sphere(g, 1.3, 0.3 / 1.3, 2, &dumbbell) == QSF_OK);

    double kmin = 0.0, kmax = 0.0;
    REQUIRE(qsf_surface_curvature_range(dumbbell, &kmin, &kmax) == QSF_OK);
    CHECK(kmin < 0.0); // non-convex start

    qsf_flow_controls fc{};
    fc.until_convex = 1;
    fc.record_dt = 0.000125; // band leaves must resolve the flow transient
    qsf_trajectory* traj = nullptr;
    REQUIRE(qsf_flow_run(dumbbell, &fc, &traj) == QSF_OK);
    int reached = 0;
    double t_convex = -1.0;
    REQUIRE(qsf_trajectory_convexity(traj, &reached, &t_convex) == QSF_OK);
    CHECK(reached == 1);
    CHECK(t_convex > 0.0);

    qsf_foliation* flow_band = nullptr;
    REQUIRE(qsf_foliate_from_flow(traj, &flow_band) == QSF_OK);

    qsf_foliation* composite = nullptr;
    REQUIRE(qsf_foliation_extend_distance(flow_band, 2.0, 0.02, &composite) == QSF_OK);
    CHECK(qsf_foliation_leaf_count(composite) > qsf_foliation_leaf_count(flow_band));

    // mean-convex seed H_target = 0.9 * euclidean H, i.e. u0 = eta0 / 0.9.
    // eta0 is read back from leaf 0 of an eta-seeded solve (u0 == NULL).
    const size_t n = qsf_grid_node_count(g);
    std::vector<double> eta0(n), u0(n);
    {
        qsf_solve_controls sc0{};
        sc0.fixed_substeps = 1;
        qsf_lapse* eta_solve = nullptr;
        REQUIRE(qsf_lapse_solve(composite, nullptr, 0, &sc0, &eta_solve) == QSF_OK);
        REQUIRE(qsf_lapse_get_u(eta_solve, 0, eta0.data(), n) == QSF_OK);
        qsf_lapse_destroy(eta_solve);
    }
    for (size_t i = 0; i < n; ++i) u0[i] = eta0[i] / 0.9;

    qsf_solve_controls sc{};
    sc.fixed_substeps = 2;
    qsf_lapse* lapse = nullptr;
    REQUIRE(qsf_lapse_solve(composite, u0.data(), n, &sc, &lapse) == QSF_OK);
    CHECK(qsf_lapse_segment_count(lapse) == 2);

    qsf_mass_series* mass = nullptr;
    REQUIRE(qsf_mass_compute(composite, lapse, &mass) == QSF_OK);
    int mono = 0;
    double jump = 0.0, mismatch = 0.0;
    REQUIRE(qsf_mass_monotonicity(mass, &mono, &jump, &mismatch) == QSF_OK);

    // monotone across the junction, and the band-start value dominates the end
    const size_t cnt = qsf_mass_count(mass);
    std::vector<double> tt(cnt), mm(cnt);
    REQUIRE(qsf_mass_values(mass, tt.data(), mm.data(), nullptr, cnt) == QSF_OK);
    CHECK(jump <= 1e-6 * std::abs(mm.front()) + 1e-10);
    CHECK(mm.front() >= mm.back());
    CHECK(mm.front() > 0.0); // mean-convex seed carries positive quasi-local mass
    // the derivative-identity mismatch stays bounded through the transient
    CHECK(mismatch < 3.0);

    qsf_mass_destroy(mass);
    qsf_lapse_destroy(lapse);
    qsf_foliation_destroy(composite);
    qsf_foliation_destroy(flow_band);
    qsf_trajectory_destroy(traj);
    qsf_surface_destroy(dumbbell);
    qsf_grid_destroy(g);
}

TEST_CASE("config parsing and error codes through the C surface") {
    qsf_config* cfg = nullptr;
    CHECK(qsf_config_parse("definitely not a config", &cfg) == QSF_ERROR_CONFIG);
    CHECK(qsf_config_load("/nonexistent/qsflow.cfg", &cfg) == QSF_ERROR_CONFIG);

    const char* good =
        "grid.mode = axisymmetric\ngrid.ntheta = 48\n"
        "surface.kind = sphere\nsurface.radius = 1.0\n"
        "flow.t_max = 0.2\nflow.record_dt = 0.05\n";
    REQUIRE(qsf_config_parse(good, &cfg) == QSF_OK);

    TempDir tmp;
    REQUIRE(qsf_run_flow(cfg, tmp.file("flow_out").c_str()) == QSF_OK);
    CHECK(std::filesystem::exists(tmp.file("flow_out") + "/trajectory.csv"));
    CHECK(std::filesystem::exists(tmp.file("flow_out") + "/surface_final.txt"));
    CHECK(std::filesystem::exists(tmp.file("flow_out") + "/summary.json"));
    qsf_config_destroy(cfg);
}
