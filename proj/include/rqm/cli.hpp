#pragma once

// Subcommand dispatch for the rqm tool. Every subcommand writes report.txt
// plus its CSV files into the output directory and returns
//   0  success
//   2  hypotheses not satisfied or negative verdict
//   1  error (malformed config, numeric failure)

#include <ostream>
#include <string>
#include <vector>

#include "rqm/config.hpp"

namespace rqm::cli {

const std::vector<std::string>& subcommands();

/// Loads config_path, applies the section.key=value overrides in order and runs.
int run(const std::string& subcommand, const std::string& config_path, const std::vector<std::string>& overrides,
        std::ostream& out, std::ostream& err);

/// Runs on an already assembled configuration; throws on errors.
int execute(const std::string& subcommand, const config::ExperimentConfig& cfg, std::ostream& out);

}  // namespace rqm::cli
