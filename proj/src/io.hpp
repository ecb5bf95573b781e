#ifndef MSSFS_IO_HPP
#define MSSFS_IO_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "data.hpp"
#include "em.hpp"
#include "model.hpp"
#include "simulate.hpp"

namespace mssfs {

// Dataset files are comma-delimited long format with a header row:
//   subject_id[,arm],time,y1[,y2,...],<covariate columns>
// Empty y fields are missing; a time absent from [min, max] of a series is
// densified to a fully missing step. Covariates must be complete and
// constant within a series.
Dataset load_dataset(const std::string& path);
Dataset parse_dataset(const std::string& text, const std::string& origin);
void save_dataset(const Dataset& data, const std::string& path);
std::string format_dataset(const Dataset& data);

// Run configuration: an INI-style document with [model], [init], [em],
// [optimizer], [bootstrap], [simulate], [bench] and [run] sections. All
// defaults follow the real-data settings (N_max=30, D_EM=0.001, kappa=1e-6,
// lambda=0.01, L=3, rho=0.5, B=300).
struct RunConfig {
  // [model]
  std::string preset = "temperature";
  int covariates = 2;
  FeedbackSpec feedback{};
  std::optional<ModelSpec> general_model;

  // [init] starting values on the constrained scale, keyed by parameter name
  std::map<std::string, double> init_values;

  // [em] + [optimizer]
  EmConfig em{};

  // [bootstrap]
  int bootstrap_b = 300;
  double bootstrap_level = 0.95;

  // [simulate]
  StudyDesign sim{};

  // [bench]
  std::vector<int> bench_m{100, 200, 400};
  int bench_repeats = 3;
  int bench_iterations = 3;

  // [run]
  uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
};

RunConfig default_config();
RunConfig parse_config(const std::string& text, const std::string& origin);
RunConfig load_config(const std::string& path);
std::string format_config(const RunConfig& config);

// Generic key access used by the C API ("section.key" form).
void config_set(RunConfig& config, const std::string& key,
                const std::string& value);
std::string config_get(const RunConfig& config, const std::string& key);

// Starting parameters for the configured model.
ParameterSet initial_parameters(const RunConfig& config);
ModelBuilder model_builder(const RunConfig& config);

// Minimal delimited table: header + rows of formatted numbers/strings.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(const std::string& path) const;
  std::string format() const;
};

Table parse_table(const std::string& text);

std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace mssfs

#endif  // MSSFS_IO_HPP
