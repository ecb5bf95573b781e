#include "mssfs/mssfs.h"

#include <cstring>
#include <limits>
#include <string>

#include "em.hpp"
#include "io.hpp"
#include "runner.hpp"
#include "simulate.hpp"
#include "version.hpp"

// Opaque handle definitions: each wraps one library value.
struct mssfs_config {
  mssfs::RunConfig value;
};

struct mssfs_dataset {
  mssfs::Dataset value;
};

struct mssfs_fit {
  mssfs::ParameterSet params;
  std::vector<std::string> names;  // free parameters, declaration order
  std::vector<double> values;
  std::vector<double> loglik_trace;
  std::vector<double> d_em_trace;
  int iterations = 0;
  bool converged = false;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
mssfs_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MSSFS_OK;
  } catch (const mssfs::ParseError& e) {
    set_error(e.what());
    return MSSFS_ERR_PARSE;
  } catch (const mssfs::ConfigError& e) {
    set_error(e.what());
    return MSSFS_ERR_CONFIG;
  } catch (const mssfs::DomainError& e) {
    set_error(e.what());
    return MSSFS_ERR_DOMAIN;
  } catch (const mssfs::NumericError& e) {
    set_error(e.what());
    return MSSFS_ERR_NUMERIC;
  } catch (const mssfs::CapacityError& e) {
    set_error(e.what());
    return MSSFS_ERR_CAPACITY;
  } catch (const mssfs::FitError& e) {
    set_error(e.what());
    return MSSFS_ERR_FIT;
  } catch (const mssfs::BootstrapError& e) {
    set_error(e.what());
    return MSSFS_ERR_BOOTSTRAP;
  } catch (const mssfs::IoError& e) {
    set_error(e.what());
    return MSSFS_ERR_IO;
  } catch (const std::exception& e) {
    set_error(e.what());
    return MSSFS_ERR_INTERNAL;
  } catch (...) {
    set_error("unknown error");
    return MSSFS_ERR_INTERNAL;
  }
}

mssfs_status require(bool ok, const char* msg) {
  if (ok) return MSSFS_OK;
  set_error(msg);
  return MSSFS_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* mssfs_version(void) { return mssfs::kVersion; }

const char* mssfs_status_name(mssfs_status status) {
  switch (status) {
    case MSSFS_OK: return "MSSFS_OK";
    case MSSFS_ERR_INVALID_ARGUMENT: return "MSSFS_ERR_INVALID_ARGUMENT";
    case MSSFS_ERR_PARSE: return "MSSFS_ERR_PARSE";
    case MSSFS_ERR_CONFIG: return "MSSFS_ERR_CONFIG";
    case MSSFS_ERR_DOMAIN: return "MSSFS_ERR_DOMAIN";
    case MSSFS_ERR_NUMERIC: return "MSSFS_ERR_NUMERIC";
    case MSSFS_ERR_CAPACITY: return "MSSFS_ERR_CAPACITY";
    case MSSFS_ERR_FIT: return "MSSFS_ERR_FIT";
    case MSSFS_ERR_BOOTSTRAP: return "MSSFS_ERR_BOOTSTRAP";
    case MSSFS_ERR_IO: return "MSSFS_ERR_IO";
    case MSSFS_ERR_INTERNAL: return "MSSFS_ERR_INTERNAL";
  }
  return "MSSFS_ERR_UNKNOWN";
}

const char* mssfs_last_error(void) { return g_last_error.c_str(); }

mssfs_status mssfs_config_create(mssfs_config** out) {
  if (auto s = require(out != nullptr, "out is NULL")) return s;
  return guarded([&] { *out = new mssfs_config{mssfs::default_config()}; });
}

mssfs_status mssfs_config_load(const char* path, mssfs_config** out) {
  if (auto s = require(path && out, "path or out is NULL")) return s;
  return guarded([&] { *out = new mssfs_config{mssfs::load_config(path)}; });
}

mssfs_status mssfs_config_set(mssfs_config* config, const char* key,
                              const char* value) {
  if (auto s = require(config && key && value, "NULL argument")) return s;
  return guarded([&] { mssfs::config_set(config->value, key, value); });
}

mssfs_status mssfs_config_get(const mssfs_config* config, const char* key,
                              char* buf, size_t buflen) {
  if (auto s = require(config && key && buf && buflen > 0, "NULL argument"))
    return s;
  return guarded([&] {
    const std::string v = mssfs::config_get(config->value, key);
    std::strncpy(buf, v.c_str(), buflen - 1);
    buf[buflen - 1] = '\0';
  });
}

mssfs_status mssfs_config_save(const mssfs_config* config, const char* path) {
  if (auto s = require(config && path, "NULL argument")) return s;
  return guarded(
      [&] { mssfs::write_text_file(path, mssfs::format_config(config->value)); });
}

void mssfs_config_free(mssfs_config* config) { delete config; }

mssfs_status mssfs_dataset_load(const char* path, mssfs_dataset** out) {
  if (auto s = require(path && out, "path or out is NULL")) return s;
  return guarded([&] { *out = new mssfs_dataset{mssfs::load_dataset(path)}; });
}

mssfs_status mssfs_dataset_save(const mssfs_dataset* data, const char* path) {
  if (auto s = require(data && path, "NULL argument")) return s;
  return guarded([&] { mssfs::save_dataset(data->value, path); });
}

int mssfs_dataset_num_series(const mssfs_dataset* data) {
  return data ? data->value.num_series() : 0;
}

int mssfs_dataset_num_subjects(const mssfs_dataset* data) {
  return data ? static_cast<int>(data->value.subject_ids().size()) : 0;
}

void mssfs_dataset_free(mssfs_dataset* data) { delete data; }

mssfs_status mssfs_simulate(const mssfs_config* config, uint64_t seed,
                            mssfs_dataset** out) {
  if (auto s = require(config && out, "NULL argument")) return s;
  return guarded([&] {
    mssfs::RunConfig cfg = config->value;
    cfg.seed = seed;
    *out = new mssfs_dataset{mssfs::simulate_dataset(cfg)};
  });
}

mssfs_status mssfs_fit_run(const mssfs_config* config,
                           const mssfs_dataset* data, int threads,
                           mssfs_fit** out) {
  if (auto s = require(config && data && out, "NULL argument")) return s;
  return guarded([&] {
    mssfs::RunConfig cfg = config->value;
    if (threads > 0) cfg.threads = threads;
    const mssfs::FitResult r = mssfs::fit_dataset(data->value, cfg);
    auto* handle = new mssfs_fit;
    handle->params = r.params;
    for (const auto& e : r.params.entries()) {
      if (e.fixed) continue;
      handle->names.push_back(e.name);
      handle->values.push_back(e.value);
    }
    handle->loglik_trace = r.loglik_trace;
    handle->d_em_trace = r.d_em_trace;
    handle->iterations = r.iterations;
    handle->converged = r.converged;
    *out = handle;
  });
}

int mssfs_fit_num_params(const mssfs_fit* fit) {
  return fit ? static_cast<int>(fit->names.size()) : 0;
}

const char* mssfs_fit_param_name(const mssfs_fit* fit, int i) {
  if (!fit || i < 0 || i >= static_cast<int>(fit->names.size())) return "";
  return fit->names[static_cast<size_t>(i)].c_str();
}

double mssfs_fit_param_value(const mssfs_fit* fit, int i) {
  if (!fit || i < 0 || i >= static_cast<int>(fit->values.size()))
    return std::numeric_limits<double>::quiet_NaN();
  return fit->values[static_cast<size_t>(i)];
}

double mssfs_fit_param_by_name(const mssfs_fit* fit, const char* name) {
  if (!fit || !name) return std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < fit->names.size(); ++i)
    if (fit->names[i] == name) return fit->values[i];
  set_error("unknown parameter: " + std::string(name));
  return std::numeric_limits<double>::quiet_NaN();
}

int mssfs_fit_iterations(const mssfs_fit* fit) {
  return fit ? fit->iterations : 0;
}

int mssfs_fit_converged(const mssfs_fit* fit) {
  return fit && fit->converged ? 1 : 0;
}

int mssfs_fit_trace_len(const mssfs_fit* fit) {
  return fit ? static_cast<int>(fit->loglik_trace.size()) : 0;
}

double mssfs_fit_loglik_at(const mssfs_fit* fit, int i) {
  if (!fit || i < 0 || i >= static_cast<int>(fit->loglik_trace.size()))
    return std::numeric_limits<double>::quiet_NaN();
  return fit->loglik_trace[static_cast<size_t>(i)];
}

double mssfs_fit_dem_at(const mssfs_fit* fit, int i) {
  if (!fit || i < 0 || i >= static_cast<int>(fit->d_em_trace.size()))
    return std::numeric_limits<double>::quiet_NaN();
  return fit->d_em_trace[static_cast<size_t>(i)];
}

void mssfs_fit_free(mssfs_fit* fit) { delete fit; }

mssfs_status mssfs_run_command(const char* command, const mssfs_config* config,
                               const char* data_path, const char* out_dir,
                               int64_t seed, int threads) {
  if (auto s = require(command && config && out_dir, "NULL argument"))
    return s;
  return guarded([&] {
    std::optional<uint64_t> seed_opt;
    if (seed >= 0) seed_opt = static_cast<uint64_t>(seed);
    std::optional<int> threads_opt;
    if (threads > 0) threads_opt = threads;
    mssfs::run_command(command, config->value,
                       data_path ? std::string(data_path) : std::string(),
                       out_dir, seed_opt, threads_opt);
  });
}

}  // extern "C"
