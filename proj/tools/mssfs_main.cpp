// mssfs command-line front end. Thin wrapper over the shared-library C API:
// parses flags, loads the configuration, dispatches the command, and prints
// a structured error report on failure.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "mssfs/mssfs.h"

namespace {

int fail(const std::string& command, mssfs_status status) {
  std::fprintf(stderr,
               "{\"error\":{\"command\":\"%s\",\"code\":\"%s\","
               "\"message\":\"%s\"}}\n",
               command.c_str(), mssfs_status_name(status),
               mssfs_last_error());
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiprocess state space model with feedback and switching"};
  app.set_version_flag("--version", mssfs_version());

  std::string command;
  std::string config_path;
  std::string data_path;
  std::string out_dir = ".";
  int64_t seed = -1;
  int threads = 0;

  app.add_option("--command", command,
                 "One of: simulate, fit, filter, smooth, predict, bootstrap, "
                 "bench")
      ->required();
  app.add_option("--config", config_path, "Configuration file (INI)");
  app.add_option("--data", data_path, "Dataset file (long-format CSV)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Seed override (>= 0)");
  app.add_option("--threads", threads, "Worker threads (0 = configured)");

  CLI11_PARSE(app, argc, argv);

  mssfs_config* config = nullptr;
  mssfs_status status = config_path.empty()
                            ? mssfs_config_create(&config)
                            : mssfs_config_load(config_path.c_str(), &config);
  if (status != MSSFS_OK) return fail(command, status);

  status = mssfs_run_command(command.c_str(), config,
                             data_path.empty() ? nullptr : data_path.c_str(),
                             out_dir.c_str(), seed, threads);
  mssfs_config_free(config);
  if (status != MSSFS_OK) return fail(command, status);
  return 0;
}
