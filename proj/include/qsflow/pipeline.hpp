#pragma once

#include <memory>
#include <string>

#include "qsflow/config.hpp"
#include "qsflow/foliation.hpp"
#include "qsflow/mass.hpp"

namespace qsflow {

// Configuration-driven runs behind the CLI subcommands. Each writes its
// artifacts under out_dir (created if missing) and throws qsflow::Error on
// failure; a summary.json is written either way, carrying the failing stage
// when a stage throws.

RadialSurface surface_from_config(const RunConfig& config);
std::shared_ptr<const SphereGrid> grid_from_config(const RunConfig& config);

void run_flow_cmd(const RunConfig& config, const std::string& out_dir);
void run_foliate_cmd(const RunConfig& config, const std::string& out_dir);
void run_solve_cmd(const RunConfig& config, const std::string& out_dir);
void run_pipeline_cmd(const RunConfig& config, const std::string& out_dir);

} // namespace qsflow
