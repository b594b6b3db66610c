// qsflow command-line driver. Talks to the core exclusively through the
// extern-C shared-library API.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "qsflow/qsflow.h"

namespace {

int exit_code_for(qsf_status s) {
    switch (s) {
        case QSF_OK: return 0;
        case QSF_ERROR_VERIFY: return 1;
        case QSF_ERROR_DOMAIN: return 2;
        case QSF_ERROR_CONFIG: return 64;
        default: return 70; // internal failure
    }
}

int finish(qsf_status s) {
    if (s != QSF_OK)
        std::fprintf(stderr, "qsflow: %s: %s\n", qsf_status_name(s), qsf_last_error());
    return exit_code_for(s);
}

struct ConfigHandle {
    qsf_config* cfg = nullptr;
    ~ConfigHandle() { qsf_config_destroy(cfg); }
};

void print_line(const char* line, void*) { std::printf("%s\n", line); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qsflow: star-shaped curvature flows, quasi-spherical lapse construction, "
                 "and quasi-local mass diagnostics"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    int threads = 1;
    std::uint64_t seed = 12345;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config)
            cmd->add_option("--config", config_path, "run configuration file")->required();
        cmd->add_option("--out", out_dir, "output directory (default: out)");
        cmd->add_option("--threads", threads, "worker threads for node loops (default: 1)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--seed", seed, "seed for sampled property checks");
    };

    CLI::App* cmd_flow = app.add_subcommand("flow", "run the H/R expansion flow");
    CLI::App* cmd_foliate =
        app.add_subcommand("foliate", "build the distance-surface band of a convex surface");
    CLI::App* cmd_solve =
        app.add_subcommand("solve", "solve the quasi-spherical lapse equation on a band");
    CLI::App* cmd_pipeline = app.add_subcommand(
        "pipeline", "flow -> foliate -> lapse solve -> mass diagnostics");
    CLI::App* cmd_verify =
        app.add_subcommand("verify", "run the oracle-based acceptance checks");
    add_common(cmd_flow, true);
    add_common(cmd_foliate, true);
    add_common(cmd_solve, true);
    add_common(cmd_pipeline, true);
    add_common(cmd_verify, false);

    CLI11_PARSE(app, argc, argv);
    qsf_set_threads(threads);

    if (cmd_verify->parsed()) {
        const qsf_status s = qsf_run_verify(out_dir.c_str(), seed, print_line, nullptr);
        if (s == QSF_OK) std::printf("all checks passed\n");
        return finish(s);
    }

    ConfigHandle cfg;
    if (qsf_status s = qsf_config_load(config_path.c_str(), &cfg.cfg); s != QSF_OK)
        return finish(s);

    qsf_status s = QSF_OK;
    if (cmd_flow->parsed()) s = qsf_run_flow(cfg.cfg, out_dir.c_str());
    else if (cmd_foliate->parsed()) s = qsf_run_foliate(cfg.cfg, out_dir.c_str());
    else if (cmd_solve->parsed()) s = qsf_run_solve(cfg.cfg, out_dir.c_str());
    else if (cmd_pipeline->parsed()) s = qsf_run_pipeline(cfg.cfg, out_dir.c_str());
    if (s == QSF_OK) std::printf("done; artifacts in %s\n", out_dir.c_str());
    return finish(s);
}
