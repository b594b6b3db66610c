// End-to-end checks of the command-line driver: exit-code convention,
// artifact layout, and determinism of repeated runs. The binary path comes
// in as argv[1] from CTest.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    if (!ok) {
        std::printf("FAIL: %s\n", what.c_str());
        ++failures;
    } else {
        std::printf("ok:   %s\n", what.c_str());
    }
}

int run(const std::string& cmd) {
    const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::printf("usage: test_cli <qsflow-binary>\n");
        return 2;
    }
    const std::string bin = argv[1];
    const fs::path work = fs::temp_directory_path() / "qsflow_cli_test";
    fs::remove_all(work);
    fs::create_directories(work);

    // flow subcommand: sphere to t = 0.3
    write_file(work / "flow.cfg",
               "grid.mode = axisymmetric\n"
               "grid.ntheta = 48\n"
               "surface.kind = sphere\n"
               "surface.radius = 1.0\n"
               "flow.t_max = 0.3\n"
               "flow.record_dt = 0.1\n");
    int rc = run(bin + " flow --config " + (work / "flow.cfg").string() + " --out " +
                 (work / "flow_out").string());
    check(rc == 0, "flow exits 0");
    check(fs::exists(work / "flow_out/trajectory.csv"), "trajectory.csv written");
    check(fs::exists(work / "flow_out/surface_final.txt"), "surface snapshot written");
    check(fs::exists(work / "flow_out/summary.json"), "summary.json written");
    {
        std::ifstream f(work / "flow_out/trajectory.csv");
        std::string header;
        std::getline(f, header);
        check(header == "t,min_kappa,max_kappa,min_f,roundness,radius_mean",
              "trajectory.csv header");
    }

    // pipeline subcommand on a short schwarzschild band, run twice for
    // bitwise-identical outputs
    write_file(work / "pipe.cfg",
               "grid.mode = axisymmetric\n"
               "grid.ntheta = 64\n"
               "surface.kind = sphere\n"
               "surface.radius = 2.0\n"
               "foliation.t_max = 18.0\n"
               "foliation.dt = 0.05\n"
               "lapse.kind = schwarzschild\n"
               "lapse.mass = 0.1\n"
               "solver.fixed_substeps = 2\n");
    rc = run(bin + " pipeline --config " + (work / "pipe.cfg").string() + " --out " +
             (work / "pipe_a").string());
    check(rc == 0, "pipeline exits 0");
    rc = run(bin + " pipeline --config " + (work / "pipe.cfg").string() + " --out " +
             (work / "pipe_b").string());
    check(rc == 0, "pipeline re-run exits 0");
    for (const char* name : {"mass.csv", "lapse.csv", "band.csv", "summary.json"}) {
        check(fs::exists(work / "pipe_a" / name), std::string(name) + " written");
        check(slurp(work / "pipe_a" / name) == slurp(work / "pipe_b" / name),
              std::string(name) + " identical across runs");
    }
    {
        const std::string summary = slurp(work / "pipe_a/summary.json");
        check(summary.find("\"adm_estimate\"") != std::string::npos, "summary carries adm");
        check(summary.find("\"monotonicity_pass\": true") != std::string::npos,
              "summary monotonicity gate");
        std::ifstream f(work / "pipe_a/mass.csv");
        std::string header;
        std::getline(f, header);
        check(header == "t,area_radius,m,dissipation,m_discrete_derivative",
              "mass.csv header");
    }

    // solve subcommand
    write_file(work / "solve.cfg",
               "grid.mode = axisymmetric\n"
               "grid.ntheta = 48\n"
               "surface.kind = sphere\n"
               "surface.radius = 1.0\n"
               "foliation.t_max = 2.0\n"
               "foliation.dt = 0.1\n"
               "lapse.kind = match_mean_curvature\n"
               "lapse.h_target = euclidean\n"
               "solver.fixed_substeps = 2\n");
    rc = run(bin + " solve --config " + (work / "solve.cfg").string() + " --out " +
             (work / "solve_out").string());
    check(rc == 0, "solve exits 0");
    check(fs::exists(work / "solve_out/lapse.csv"), "lapse.csv written");

    // foliate subcommand with field dumps
    write_file(work / "fol.cfg",
               "grid.mode = axisymmetric\n"
               "grid.ntheta = 48\n"
               "surface.kind = ellipsoid\n"
               "surface.equatorial_radius = 1.0\n"
               "surface.polar_radius = 1.5\n"
               "foliation.t_max = 1.0\n"
               "foliation.dt = 0.25\n"
               "foliation.dump_fields = true\n");
    rc = run(bin + " foliate --config " + (work / "fol.cfg").string() + " --out " +
             (work / "fol_out").string());
    check(rc == 0, "foliate exits 0");
    check(fs::exists(work / "fol_out/band.csv"), "band.csv written");
    check(fs::exists(work / "fol_out/band_fields.txt"), "band_fields.txt written");

    // error conventions: config error -> 64
    write_file(work / "bad.cfg", "grid.mode = axisymmetric\nmystery.key = 1\n");
    rc = run(bin + " flow --config " + (work / "bad.cfg").string() + " --out " +
             (work / "bad_out").string());
    check(rc == 64, "config error exits 64");
    rc = run(bin + " flow --config " + (work / "missing.cfg").string() + " --out " +
             (work / "bad_out").string());
    check(rc == 64, "missing config exits 64");

    // mathematical-domain failure -> 2 (outside-cone initial surface)
    write_file(work / "cone.cfg",
               "grid.mode = axisymmetric\n"
               "grid.ntheta = 48\n"
               "surface.kind = perturbed_sphere\n"
               "surface.base_radius = 1.0\n"
               "surface.amplitude = 0.8\n"
               "surface.mode = 2\n"
               "flow.t_max = 0.1\n");
    rc = run(bin + " flow --config " + (work / "cone.cfg").string() + " --out " +
             (work / "cone_out").string());
    check(rc == 2, "cone violation exits 2");

    // non-convex surface with pipeline.flow = off -> 2
    write_file(work / "noflow.cfg",
               "grid.mode = axisymmetric\n"
               "grid.dim = 4\n"
               "grid.ntheta = 48\n"
               "surface.kind = perturbed_sphere\n"
               "surface.base_radius = 1.3\n"
               "surface.amplitude = 0.23076923076923078\n"
               "surface.mode = 2\n"
               "foliation.t_max = 1.0\n"
               "foliation.dt = 0.1\n"
               "lapse.kind = eta_scale\n"
               "lapse.scale = 1.1\n"
               "pipeline.flow = off\n");
    rc = run(bin + " pipeline --config " + (work / "noflow.cfg").string() + " --out " +
             (work / "noflow_out").string());
    check(rc == 2, "non-convex with flow disabled exits 2");
    {
        const std::string summary = slurp(work / "noflow_out/summary.json");
        check(summary.find("\"error\"") != std::string::npos &&
                  summary.find("\"stage\"") != std::string::npos,
              "failed stage recorded in summary.json");
    }

    // composite pipeline: non-convex n=4 surface, flow then distance band
    write_file(work / "composite.cfg",
               "grid.mode = axisymmetric\n"
               "grid.dim = 4\n"
               "grid.ntheta = 48\n"
               "surface.kind = perturbed_sphere\n"
               "surface.base_radius = 1.3\n"
               "surface.amplitude = 0.23076923076923078\n"
               "surface.mode = 2\n"
               "foliation.t_max = 2.0\n"
               "foliation.dt = 0.05\n"
               "lapse.kind = eta_scale\n"
               "lapse.scale = 1.1\n"
               "solver.fixed_substeps = 2\n");
    rc = run(bin + " pipeline --config " + (work / "composite.cfg").string() + " --out " +
             (work / "comp_out").string());
    check(rc == 0, "composite pipeline exits 0");
    check(fs::exists(work / "comp_out/trajectory.csv"), "composite wrote trajectory");
    {
        const std::string summary = slurp(work / "comp_out/summary.json");
        check(summary.find("\"monotone_mass\": true") != std::string::npos,
              "composite mass is monotone");
    }

    fs::remove_all(work);
    std::printf(failures == 0 ? "all cli checks passed\n" : "%d cli checks FAILED\n",
                failures);
    return failures == 0 ? 0 : 1;
}
