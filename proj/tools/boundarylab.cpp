// boundarylab <command> --config path [--out dir] [--no-timestamp]

#include <algorithm>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "boundarylab/cli.hpp"

namespace bl = boundarylab;

int main(int argc, char** argv) {
  CLI::App app{"Random walks on triangular rational matrices: boundaries, gauges, entropy"};
  app.set_version_flag("--version", bl::kVersion);
  std::string command, config_path, out_dir;
  bool no_timestamp = false;
  std::size_t workers = 0;
  std::string names;
  for (const auto& n : bl::command_names()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("command", command, "one of: " + names)->required();
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (overrides BOUNDARYLAB_OUT and the config)");
  app.add_flag("--no-timestamp", no_timestamp, "omit the generated_at field");
  app.add_option("--workers", workers, "worker threads, 0 = all cores");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : bl::kExitUsage;
  }

  const auto known = bl::command_names();
  if (std::find(known.begin(), known.end(), command) == known.end()) {
    std::cerr << "boundarylab: unknown command \"" << command << "\" (expected one of: " << names << ")\n";
    return bl::kExitUsage;
  }
  bl::ExperimentConfig config;
  try {
    config = bl::load_config(config_path);
  } catch (const bl::ConfigError& e) {
    std::cerr << "boundarylab: config error: " << e.what() << "\n";
    return bl::kExitConfig;
  }
  bl::RunOptions options;
  options.out_dir = out_dir;
  options.timestamp = !no_timestamp;
  options.workers = workers;
  bl::RunOutcome outcome;
  try {
    outcome = bl::run(command, config, options);
  } catch (const std::exception& e) {
    std::cerr << "boundarylab: " << e.what() << "\n";
    return bl::kExitConfig;
  }
  std::ostream& s = outcome.exit_code == bl::kExitPass ? std::cout : std::cerr;
  s << "boundarylab " << command << ": " << outcome.message << "\n";
  for (const auto& f : outcome.files) std::cout << "  wrote " << f << "\n";
  return outcome.exit_code;
}
