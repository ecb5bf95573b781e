#ifndef MSSFS_TEST_UTIL_HPP
#define MSSFS_TEST_UTIL_HPP

#include <vector>

#include "data.hpp"
#include "filter.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "simulate.hpp"

namespace mssfs::test {

// Random scalar two-regime model with variances bounded away from zero.
inline ModelSpec random_scalar_model(Rng& rng, bool unreachable_regime1 = false) {
  ParameterSet p = temperature_parameters(0);
  p.set("sigma_v2", 0.05 + rng.uniform01());
  p.set("sigma_0_2", 0.02 + 0.5 * rng.uniform01());
  p.set("sigma_1_2", 0.02 + 0.5 * rng.uniform01());
  p.set("delta", 0.5 + 5.0 * rng.uniform01());
  p.set("G_0", 0.05 + 0.9 * rng.uniform01());
  p.set("G_1", 0.05 + 0.9 * rng.uniform01());
  p.set("alpha_0", unreachable_regime1 ? -40.0 : -2.0 + 4.0 * rng.uniform01());
  p.set("alpha_1", -1.0 + 2.0 * rng.uniform01());
  p.set("zeta_1", -0.4 + 0.8 * rng.uniform01());
  return temperature_preset(p);
}

inline SubjectSeries random_scalar_series(Rng& rng, const ModelSpec& model,
                                          int n, double missing_rate = 0.0) {
  SimulatedSubject sim = simulate_subject(model, n, Vec::Zero(model.sw.d),
                                          rng.next_u64(), "s", "",
                                          missing_rate);
  return sim.series;
}

inline FeedbackSeries zero_feedback(int n) {
  return FeedbackSeries(static_cast<size_t>(n));
}

inline FeedbackSeries random_feedback(Rng& rng, int n, double scale = 0.5) {
  FeedbackSeries z(static_cast<size_t>(n));
  for (auto& pair : z) {
    pair.z0 = scale * (rng.uniform01() - 0.5);
    pair.z1 = scale * (rng.uniform01() - 0.5);
  }
  return z;
}

// General-path filter (explicit filter_step loop); reference for the scalar
// dispatch inside run_filter.
inline FilterOutput run_filter_general(const SubjectSeries& series,
                                       const ModelSpec& model,
                                       const FeedbackSeries& z) {
  FilterOutput out;
  RegimeState state = initial_state(model);
  for (int t = 1; t <= series.length(); ++t) {
    FilterStep step =
        filter_step(state, model, t, series.x, z[static_cast<size_t>(t - 1)],
                    series.y[static_cast<size_t>(t - 1)]);
    state.mean = step.regime_mean;
    state.cov = step.regime_cov;
    state.prob = step.regime_prob;
    out.loglik += step.loglik_inc;
    out.steps.push_back(std::move(step));
  }
  return out;
}

}  // namespace mssfs::test

#endif  // MSSFS_TEST_UTIL_HPP
