#include "runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "filter.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "smoother.hpp"
#include "version.hpp"

namespace mssfs {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

ParameterSet start_parameters(const RunConfig& cfg) {
  if (cfg.preset == "general") return ParameterSet{};
  return initial_parameters(cfg);
}

// Filter/smoother sweep at fixed parameters with one plug-in refinement:
// a no-feedback pass supplies smoothed states, whose feedback averages
// drive the reported pass.
struct ModelSweep {
  std::vector<FilterOutput> filtered;
  std::vector<SmootherOutput> smoothed;
  double loglik = 0.0;
};

ModelSweep sweep_at_params(const Dataset& data, const RunConfig& cfg,
                           int threads) {
  const ModelBuilder builder = model_builder(cfg);
  const ModelSpec model = builder(start_parameters(cfg));

  ModelSweep out;
  out.filtered.resize(data.subjects.size());
  out.smoothed.resize(data.subjects.size());
  std::vector<double> loglik(data.subjects.size(), 0.0);
  parallel_for_index(data.subjects.size(), threads, [&](std::size_t i) {
    const auto& series = data.subjects[i];
    const FeedbackSeries zero(static_cast<size_t>(series.length()));
    const std::vector<double> means = smooth_state_means(series, model, zero);
    const FeedbackSeries z = feedback_series_from_averages(
        model.sw, feedback_averages_from_means(model.sw.feedback, means));
    out.filtered[i] = run_filter(series, model, z);
    out.smoothed[i] = smooth_pass(out.filtered[i], model);
    loglik[i] = out.filtered[i].loglik;
  });
  for (double ll : loglik) out.loglik += ll;
  return out;
}

Json config_json(const RunConfig& cfg) {
  Json j;
  j["model"] = {{"preset", cfg.preset},
                {"covariates", cfg.covariates},
                {"L", cfg.feedback.L},
                {"rho", cfg.feedback.rho},
                {"normalize", cfg.feedback.normalize}};
  Json init = Json::object();
  for (const auto& [k, v] : cfg.init_values) init[k] = v;
  j["init"] = init;
  j["em"] = {{"n_max", cfg.em.n_max},
             {"d_em", cfg.em.d_em},
             {"kappa", cfg.em.kappa},
             {"lambda", cfg.em.lambda}};
  j["optimizer"] = {{"max_evals", cfg.em.optimizer.max_evals},
                    {"fd_step", cfg.em.optimizer.fd_step},
                    {"grad_tol", cfg.em.optimizer.grad_tol}};
  j["bootstrap"] = {{"B", cfg.bootstrap_b}, {"level", cfg.bootstrap_level}};
  j["simulate"] = {
      {"m", cfg.sim.m},
      {"n", cfg.sim.n},
      {"setting",
       cfg.sim.setting == FeedbackSetting::Positive ? "positive" : "negative"},
      {"delta", cfg.sim.delta},
      {"missing_rate", cfg.sim.missing_rate}};
  return j;
}

}  // namespace

Table parameter_table(const ParameterSet& params) {
  Table t;
  t.header = {"parameter", "estimate"};
  for (const auto& e : params.entries())
    if (!e.fixed) t.rows.push_back({e.name, format_double(e.value)});
  return t;
}

Table interval_table(const ParameterSet& params, const BootstrapResult& boot) {
  Table t;
  t.header = {"parameter", "estimate", "lower", "upper", "flags"};
  for (std::size_t j = 0; j < boot.param_names.size(); ++j) {
    const auto& iv = boot.intervals[j];
    std::string flags;
    if (iv.flags.percentile_fallback) flags += "percentile_fallback";
    if (iv.flags.z0_clamped) flags += flags.empty() ? "z0_clamped" : "|z0_clamped";
    t.rows.push_back({boot.param_names[j],
                      format_double(params.get(boot.param_names[j])),
                      format_double(iv.lower), format_double(iv.upper), flags});
  }
  return t;
}

Table series_table(const Dataset& data, const std::vector<FilterOutput>& filt,
                   const std::vector<SmootherOutput>& smooth) {
  Table t;
  t.header = {"subject_id", "arm",        "t",          "y",
              "theta_filt", "var_filt",   "prob_filt",  "theta_smooth",
              "var_smooth", "prob_smooth"};
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    const auto& s = data.subjects[i];
    for (int k = 0; k < s.length(); ++k) {
      const auto& step = filt[i].steps[static_cast<size_t>(k)];
      const double y0 = s.y[static_cast<size_t>(k)](0);
      t.rows.push_back(
          {s.subject, s.arm, std::to_string(s.t_start + k),
           std::isfinite(y0) ? format_double(y0) : "",
           format_double(step.marg_mean(0)),
           format_double(step.marg_cov(0, 0)),
           format_double(step.regime_prob[1]),
           format_double(smooth[i].smooth_mean[static_cast<size_t>(k)](0)),
           format_double(smooth[i].smooth_cov[static_cast<size_t>(k)](0, 0)),
           format_double(smooth[i].smooth_prob[static_cast<size_t>(k)][1])});
    }
  }
  return t;
}

FitResult fit_dataset(const Dataset& data, const RunConfig& cfg) {
  const ModelBuilder builder = model_builder(cfg);
  EmConfig em = cfg.em;
  em.threads = cfg.threads;
  return fit(data, builder, initial_parameters(cfg), em);
}

Dataset simulate_dataset(const RunConfig& cfg) {
  StudyDesign design = cfg.sim;
  design.base_seed = cfg.seed;
  design.feedback = cfg.feedback;
  return simulate_study(design).dataset;
}

CommandOutcome run_command(const std::string& command, const RunConfig& config,
                           const std::string& data_path,
                           const std::string& out_dir,
                           std::optional<uint64_t> seed_override,
                           std::optional<int> threads_override) {
  RunConfig cfg = config;
  if (seed_override) cfg.seed = *seed_override;
  if (threads_override) cfg.threads = *threads_override;
  if (!out_dir.empty()) cfg.out_dir = out_dir;

  const auto t_begin = std::chrono::steady_clock::now();
  fs::create_directories(cfg.out_dir);
  auto path_of = [&](const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
  };

  CommandOutcome outcome;
  Json meta;
  meta["command"] = command;
  meta["version"] = kVersion;
  meta["seed"] = cfg.seed;
  meta["threads"] = cfg.threads;
  meta["config"] = config_json(cfg);
  if (!data_path.empty()) meta["data"] = data_path;

  auto need_data = [&]() -> Dataset {
    if (data_path.empty())
      throw ConfigError("command '" + command + "' requires --data");
    return load_dataset(data_path);
  };

  auto emit = [&](const std::string& name, const Table& table) {
    const std::string path = path_of(name);
    table.write(path);
    outcome.artifacts.push_back(path);
  };

  if (command == "simulate") {
    StudyDesign design = cfg.sim;
    design.base_seed = cfg.seed;
    design.feedback = cfg.feedback;
    const SimulatedStudy study = simulate_study(design);
    const std::string dataset_path = path_of("dataset.csv");
    save_dataset(study.dataset, dataset_path);
    outcome.artifacts.push_back(dataset_path);

    Table truth;
    truth.header = {"subject_id", "arm", "time", "theta_true", "regime_true"};
    for (const auto& subj : study.subjects) {
      for (int k = 0; k < subj.series.length(); ++k)
        truth.rows.push_back(
            {subj.series.subject, subj.series.arm,
             std::to_string(subj.series.t_start + k),
             format_double(subj.true_states[static_cast<size_t>(k)]),
             std::to_string(subj.true_regimes[static_cast<size_t>(k)])});
    }
    emit("truth.csv", truth);
    Table truth_params = parameter_table(study.truth);
    emit("truth_params.csv", truth_params);
  } else if (command == "fit") {
    const Dataset data = need_data();
    const FitResult result = fit_dataset(data, cfg);
    emit("params.csv", parameter_table(result.params));

    Table trace;
    trace.header = {"iteration", "penalized_loglik", "d_em"};
    for (std::size_t i = 0; i < result.loglik_trace.size(); ++i)
      trace.rows.push_back({std::to_string(i + 1),
                            format_double(result.loglik_trace[i]),
                            format_double(result.d_em_trace[i])});
    emit("trace.csv", trace);
    emit("series.csv", series_table(data, result.filtered, result.smoothed));

    meta["converged"] = result.converged;
    meta["iterations"] = result.iterations;
    meta["aborted_nonmonotone"] = result.aborted_nonmonotone;
    if (!result.loglik_trace.empty())
      meta["penalized_loglik"] = result.loglik_trace.back();
  } else if (command == "filter" || command == "smooth") {
    const Dataset data = need_data();
    const ModelSweep sweep = sweep_at_params(data, cfg, cfg.threads);
    emit("series.csv", series_table(data, sweep.filtered, sweep.smoothed));
    meta["loglik"] = sweep.loglik;
  } else if (command == "predict") {
    const Dataset data = need_data();
    const ModelSweep sweep = sweep_at_params(data, cfg, cfg.threads);
    Table t;
    t.header = {"subject_id", "arm", "t_pred", "theta_pred", "prob_pred"};
    for (std::size_t i = 0; i < data.subjects.size(); ++i) {
      const auto& s = data.subjects[i];
      const auto& sm = sweep.smoothed[i];
      for (std::size_t k = 0; k < sm.pred_mean.size(); ++k)
        t.rows.push_back({s.subject, s.arm,
                          std::to_string(s.t_start + static_cast<int>(k)),
                          format_double(sm.pred_mean[k](0)),
                          format_double(sm.pred_prob[k][1])});
    }
    emit("predict.csv", t);
  } else if (command == "bootstrap") {
    const Dataset data = need_data();
    const FitResult base = fit_dataset(data, cfg);
    emit("params.csv", parameter_table(base.params));
    EmConfig em = cfg.em;
    em.threads = cfg.threads;
    const BootstrapResult boot =
        run_bootstrap(data, model_builder(cfg), base, em, cfg.bootstrap_b,
                      cfg.bootstrap_level, cfg.seed);
    emit("intervals.csv", interval_table(base.params, boot));
    meta["bootstrap_failures"] = boot.failures;
    meta["bootstrap_B"] = boot.b;
    meta["warm_start"] = "base fit, n_max halved";
  } else if (command == "bench") {
    RunConfig bench_cfg = cfg;
    bench_cfg.em.n_max = cfg.bench_iterations;
    bench_cfg.em.d_em = 1e-300;  // fixed iteration budget
    bench_cfg.threads = 1;

    Table t;
    t.header = {"m", "repeat", "seconds"};
    std::vector<double> mean_secs;
    for (int m : cfg.bench_m) {
      double acc = 0.0;
      for (int rep = 0; rep < cfg.bench_repeats; ++rep) {
        StudyDesign design = cfg.sim;
        design.m = m;
        design.base_seed =
            mix_seed(cfg.seed, static_cast<uint64_t>(m * 131 + rep));
        design.feedback = cfg.feedback;
        const Dataset data = simulate_study(design).dataset;
        const auto t0 = std::chrono::steady_clock::now();
        (void)fit_dataset(data, bench_cfg);
        const double secs = seconds_since(t0);
        acc += secs;
        t.rows.push_back({std::to_string(m), std::to_string(rep),
                          format_double(secs)});
      }
      mean_secs.push_back(acc / cfg.bench_repeats);
    }
    emit("timing.csv", t);

    // Least-squares line through (m, mean seconds).
    const std::size_t k = cfg.bench_m.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < k; ++i) {
      sx += cfg.bench_m[i];
      sy += mean_secs[i];
      sxx += static_cast<double>(cfg.bench_m[i]) * cfg.bench_m[i];
      sxy += cfg.bench_m[i] * mean_secs[i];
    }
    const double denom = k * sxx - sx * sx;
    const double slope = (k * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / k;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double fit_v = intercept + slope * cfg.bench_m[i];
      ss_res += (mean_secs[i] - fit_v) * (mean_secs[i] - fit_v);
      ss_tot += (mean_secs[i] - sy / k) * (mean_secs[i] - sy / k);
    }
    meta["linear_fit"] = {{"slope", slope},
                          {"intercept", intercept},
                          {"r_squared", ss_tot > 0 ? 1.0 - ss_res / ss_tot
                                                   : 1.0}};
  } else {
    throw ConfigError("unknown command: " + command);
  }

  meta["elapsed_seconds"] = seconds_since(t_begin);
  Json artifacts = Json::array();
  for (const auto& a : outcome.artifacts) artifacts.push_back(a);
  meta["artifacts"] = artifacts;
  const std::string meta_path = path_of("run_metadata.json");
  write_text_file(meta_path, meta.dump(2) + "\n");
  outcome.artifacts.push_back(meta_path);
  return outcome;
}

}  // namespace mssfs
