#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rqm/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Random logistic map experiments"};
  std::string subcommand;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  unsigned threads = 0;

  app.add_option("subcommand", subcommand, "Workflow to run")
      ->required()
      ->check(CLI::IsMember(rqm::cli::subcommands()));
  app.add_option("--config", config_path, "Experiment config file")->required();
  app.add_option("--set", overrides, "Override section.key=value (repeatable)")->allow_extra_args(false);
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*out_opt) overrides.push_back("output.dir=" + out_dir);
  if (*threads_opt) overrides.push_back("sim.threads=" + std::to_string(threads));
  return rqm::cli::run(subcommand, config_path, overrides, std::cout, std::cerr);
}
