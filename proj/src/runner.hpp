#ifndef MSSFS_RUNNER_HPP
#define MSSFS_RUNNER_HPP

#include <optional>
#include <string>
#include <vector>

#include "bootstrap.hpp"
#include "em.hpp"
#include "io.hpp"

namespace mssfs {

// Commands exposed by the CLI and the C API. Artifacts are delimited text
// tables plus a run_metadata.json document in the output directory.
//   simulate  -> dataset.csv, truth.csv
//   fit       -> params.csv, trace.csv, series.csv
//   filter    -> series.csv (filtered columns)
//   smooth    -> series.csv (smoothed columns)
//   predict   -> predict.csv (one-step-ahead states and probabilities)
//   bootstrap -> params.csv, intervals.csv
//   bench     -> timing.csv
struct CommandOutcome {
  std::vector<std::string> artifacts;  // paths written
};

CommandOutcome run_command(const std::string& command, const RunConfig& config,
                           const std::string& data_path,
                           const std::string& out_dir,
                           std::optional<uint64_t> seed_override,
                           std::optional<int> threads_override);

// Pieces reused by the C API.
FitResult fit_dataset(const Dataset& data, const RunConfig& config);
Dataset simulate_dataset(const RunConfig& config);

// Fitted/smoothed per-time table for every series (the Figure-1/Figure-4
// style export).
Table series_table(const Dataset& data, const std::vector<FilterOutput>& filt,
                   const std::vector<SmootherOutput>& smooth);
Table parameter_table(const ParameterSet& params);
Table interval_table(const ParameterSet& params, const BootstrapResult& boot);

}  // namespace mssfs

#endif  // MSSFS_RUNNER_HPP
