#include "em.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "filter.hpp"
#include "parallel.hpp"

namespace mssfs {

namespace {

int count_observed(const Dataset& data) {
  int n = 0;
  for (const auto& s : data.subjects)
    for (const auto& yt : s.y)
      for (int j = 0; j < yt.size(); ++j)
        if (std::isfinite(yt[j])) ++n;
  return n;
}

std::vector<std::string> zeta_names(const ParameterSet& params) {
  std::vector<std::string> names;
  for (const auto& e : params.entries())
    if (e.name.rfind("zeta", 0) == 0) names.push_back(e.name);
  return names;
}

}  // namespace

double penalized_negloglik(const ParameterSet& params, const Dataset& data,
                           const FeedbackAverages& averages,
                           const ModelBuilder& builder, double lambda,
                           int threads) {
  if (averages.size() != data.subjects.size())
    throw ConfigError("feedback averages do not cover every series");
  const ModelSpec model = builder(params);

  std::vector<double> loglik(data.subjects.size(), 0.0);
  parallel_for_index(data.subjects.size(), threads, [&](std::size_t i) {
    const auto& series = data.subjects[i];
    try {
      const FeedbackSeries z =
          feedback_series_from_averages(model.sw, averages[i]);
      loglik[i] = filter_loglik(series, model, z);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (series " + series.key() +
                             ")",
                         e.time_index());
    }
  });

  double total = 0.0;
  for (double ll : loglik) total += ll;  // fixed series order
  return -total + lambda * params.penalized_sq_norm();
}

std::vector<double> m_step(const Objective& objective,
                           std::vector<double> start, const BoxBounds& bounds,
                           const OptimizerConfig& config) {
  const OptimResult res =
      minimize_bounded(objective, std::move(start), bounds, config);
  return res.x;
}

std::vector<double> feedback_averages_from_means(
    const FeedbackSpec& spec, std::span<const double> means) {
  std::vector<double> u(means.size(), 0.0);
  for (int t = 2; t <= static_cast<int>(means.size()); ++t)
    u[static_cast<size_t>(t - 1)] =
        feedback_average(spec, means.first(static_cast<size_t>(t - 1)), t);
  return u;
}

FeedbackSeries plugin_feedback(const SmootherOutput& smoothed,
                               const ModelSpec& model) {
  std::vector<double> means(static_cast<size_t>(smoothed.length()));
  for (std::size_t t = 0; t < means.size(); ++t)
    means[t] = smoothed.smooth_mean[t](0);
  const std::vector<double> u =
      feedback_averages_from_means(model.sw.feedback, means);
  return feedback_series_from_averages(model.sw, u);
}

double check_convergence(std::span<const double> prev,
                         std::span<const double> curr, double kappa) {
  if (prev.size() != curr.size())
    throw ConfigError("check_convergence: dimension mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    const double d = curr[i] - prev[i];
    num += d * d;
    den += prev[i] * prev[i];
  }
  return num / (den + kappa);
}

BoxBounds default_bounds(const ParameterSet& params, const EmConfig& config) {
  BoxBounds b;
  for (const auto& e : params.entries()) {
    if (e.fixed) continue;
    const double r = e.transform == TransformKind::Identity
                         ? config.bound_identity
                         : config.bound_transformed;
    b.lower.push_back(-r);
    b.upper.push_back(r);
  }
  return b;
}

namespace {

struct EmState {
  ParameterSet params;
  FeedbackAverages averages;
};

// One bounded quasi-Newton pass over the penalized collapsed likelihood at
// fixed feedback averages. Returns the achieved objective.
double run_m_step(EmState& state, const Dataset& data,
                  const ModelBuilder& builder, const EmConfig& config) {
  ParameterSet probe = state.params;
  const Objective objective = [&](std::span<const double> u) {
    probe.set_free_unconstrained(u);
    return penalized_negloglik(probe, data, state.averages, builder,
                               config.lambda, config.threads);
  };
  const BoxBounds bounds = default_bounds(state.params, config);
  std::vector<double> u =
      m_step(objective, state.params.free_unconstrained(), bounds,
             config.optimizer);
  state.params.set_free_unconstrained(u);
  return penalized_negloglik(state.params, data, state.averages, builder,
                             config.lambda, config.threads);
}

// Smoother pass at the current parameters; refreshes the plug-in averages.
void update_plugin(EmState& state, const Dataset& data,
                   const ModelBuilder& builder, const EmConfig& config) {
  const ModelSpec model = builder(state.params);
  parallel_for_index(data.subjects.size(), config.threads, [&](std::size_t i) {
    const FeedbackSeries z =
        feedback_series_from_averages(model.sw, state.averages[i]);
    const std::vector<double> means =
        smooth_state_means(data.subjects[i], model, z);
    state.averages[i] =
        feedback_averages_from_means(model.sw.feedback, means);
  });
}

}  // namespace

FitResult fit(const Dataset& data, const ModelBuilder& builder,
              const ParameterSet& start, const EmConfig& config) {
  if (data.subjects.empty()) throw FitError("fit: empty dataset");
  if (count_observed(data) == 0)
    throw FitError("fit: degenerate likelihood, no observed data");
  if (config.n_max < 1 || config.d_em <= 0.0 || config.kappa <= 0.0 ||
      config.lambda < 0.0)
    throw ConfigError("fit: invalid EM configuration");

  EmState state;
  state.params = start;
  state.averages.resize(data.subjects.size());
  for (std::size_t i = 0; i < data.subjects.size(); ++i)
    state.averages[i].assign(
        static_cast<size_t>(data.subjects[i].length()), 0.0);

  // Initialization: fit without the feedback terms (zeta frozen at zero),
  // then derive the first plug-in averages from its smoothed states.
  const auto zetas = zeta_names(state.params);
  std::vector<std::pair<std::string, std::pair<double, bool>>> saved;
  for (const auto& name : zetas) {
    bool was_fixed = false;
    for (const auto& e : state.params.entries())
      if (e.name == name) was_fixed = e.fixed;
    saved.push_back({name, {state.params.get(name), was_fixed}});
    state.params.set(name, 0.0);
    state.params.set_fixed(name, true);
  }
  try {
    run_m_step(state, data, builder, config);
  } catch (const Error&) {
    for (const auto& [name, prev] : saved) {
      state.params.set_fixed(name, prev.second);
    }
    throw;
  }
  for (const auto& [name, prev] : saved)
    state.params.set_fixed(name, prev.second);
  update_plugin(state, data, builder, config);

  FitResult result;
  result.params = state.params;

  double prev_obj = std::numeric_limits<double>::infinity();
  int increase_streak = 0;
  bool converged = false;
  int tau = 0;
  while (tau < config.n_max) {
    ++tau;
    const std::vector<double> prev_u = state.params.free_unconstrained();
    const double obj = run_m_step(state, data, builder, config);
    const std::vector<double> curr_u = state.params.free_unconstrained();

    const double d_em = check_convergence(prev_u, curr_u, config.kappa);
    result.loglik_trace.push_back(-obj);
    result.d_em_trace.push_back(d_em);

    // The approximate E-step can raise the objective slightly; tolerate
    // small increases, stop on three consecutive larger ones.
    if (std::isfinite(prev_obj) &&
        obj > prev_obj + 1e-4 * (1.0 + std::abs(prev_obj))) {
      if (++increase_streak >= 3) {
        result.aborted_nonmonotone = true;
        break;
      }
    } else {
      increase_streak = 0;
    }
    prev_obj = obj;

    update_plugin(state, data, builder, config);

    if (d_em <= config.d_em) {
      converged = true;
      break;
    }
  }

  result.iterations = tau;
  result.converged = converged;
  result.params = state.params;

  // Full filter + smoother record at the final parameters.
  const ModelSpec model = builder(state.params);
  result.filtered.resize(data.subjects.size());
  result.smoothed.resize(data.subjects.size());
  result.z_hat.resize(data.subjects.size());
  parallel_for_index(data.subjects.size(), config.threads, [&](std::size_t i) {
    const FeedbackSeries z =
        feedback_series_from_averages(model.sw, state.averages[i]);
    result.filtered[i] = run_filter(data.subjects[i], model, z);
    result.smoothed[i] = smooth_pass(result.filtered[i], model);
    result.z_hat[i] = plugin_feedback(result.smoothed[i], model);
  });
  return result;
}

}  // namespace mssfs
