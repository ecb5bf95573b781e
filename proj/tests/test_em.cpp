#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "em.hpp"
#include "test_util.hpp"

using namespace mssfs;
using namespace mssfs::test;

namespace {

Dataset study_dataset(int m, int n, FeedbackSetting setting, uint64_t seed,
                      double delta = 10.0) {
  StudyDesign design;
  design.m = m;
  design.n = n;
  design.setting = setting;
  design.delta = delta;
  design.base_seed = seed;
  return simulate_study(design).dataset;
}

// Paper-style arbitrary initialization: unit variances, zeroed switch
// coefficients, neutral rates.
ParameterSet arbitrary_start() {
  ParameterSet p = temperature_parameters(2);
  p.set("sigma_v2", 1.0);
  p.set("sigma_0_2", 1.0);
  p.set("sigma_1_2", 1.0);
  p.set("delta", 1.0);
  p.set("G_0", 0.5);
  p.set("G_1", 0.5);
  return p;
}

FeedbackAverages zero_averages(const Dataset& data) {
  FeedbackAverages u(data.subjects.size());
  for (std::size_t i = 0; i < data.subjects.size(); ++i)
    u[i].assign(static_cast<size_t>(data.subjects[i].length()), 0.0);
  return u;
}

}  // namespace

TEST_CASE("penalized objective equals the summed filter likelihood") {
  Dataset data = study_dataset(1, 30, FeedbackSetting::Positive, 5);
  data.subjects.push_back(data.subjects[0]);
  data.subjects[1].subject = "copy";

  const ParameterSet truth = study_parameters(StudyDesign{});
  const ModelBuilder builder = temperature_builder();
  const ModelSpec model = builder(truth);

  Dataset single;
  single.subjects = {data.subjects[0]};
  const double one = penalized_negloglik(truth, single, zero_averages(single),
                                         builder, 0.0);
  const double ll =
      run_filter(single.subjects[0], model, zero_feedback(30)).loglik;
  CHECK(one == -ll);

  const double two =
      penalized_negloglik(truth, data, zero_averages(data), builder, 0.0);
  CHECK(two == 2.0 * one);
}

TEST_CASE("penalty contribution matches the quadratic form") {
  Dataset data = study_dataset(1, 10, FeedbackSetting::Positive, 6);
  ParameterSet p = study_parameters(StudyDesign{});
  p.set("alpha_1", 1.0);
  p.set("beta_1_1", 1.0);
  p.set("beta_1_2", 1.0);
  p.set("zeta_1", 1.0);
  const ModelBuilder builder = temperature_builder();
  const double base =
      penalized_negloglik(p, data, zero_averages(data), builder, 0.0);
  const double with_penalty =
      penalized_negloglik(p, data, zero_averages(data), builder, 0.01);
  CHECK(with_penalty - base == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("objective is additive and permutation-stable across subjects") {
  Dataset data = study_dataset(6, 25, FeedbackSetting::Positive, 7);
  const ParameterSet truth = study_parameters(StudyDesign{});
  const ModelBuilder builder = temperature_builder();

  double sum_parts = 0.0;
  for (const auto& subject : data.subjects) {
    Dataset one;
    one.subjects = {subject};
    sum_parts +=
        penalized_negloglik(truth, one, zero_averages(one), builder, 0.0);
  }
  const double joint =
      penalized_negloglik(truth, data, zero_averages(data), builder, 0.0);
  CHECK(std::abs(joint - sum_parts) <= 1e-10 * (1.0 + std::abs(joint)));

  Dataset reversed = data;
  std::reverse(reversed.subjects.begin(), reversed.subjects.end());
  const double swapped = penalized_negloglik(truth, reversed,
                                             zero_averages(reversed), builder,
                                             0.0);
  CHECK(std::abs(joint - swapped) <= 1e-12 * (1.0 + std::abs(joint)));
}

TEST_CASE("m_step solves a convex problem and respects stationarity") {
  const Objective quadratic = [](std::span<const double> x) {
    return (x[0] - 3.0) * (x[0] - 3.0);
  };
  BoxBounds bounds;
  bounds.lower = {-10.0};
  bounds.upper = {10.0};
  OptimizerConfig cfg;

  const auto solution = m_step(quadratic, {0.0}, bounds, cfg);
  CHECK(solution[0] == doctest::Approx(3.0).epsilon(1e-4));

  const auto stay = m_step(quadratic, {3.0}, bounds, cfg);
  CHECK(quadratic(stay) <= quadratic(std::vector<double>{3.0}) + 1e-9);
  CHECK(stay[0] == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("m_step honors box bounds") {
  const Objective slope = [](std::span<const double> x) { return x[0]; };
  BoxBounds bounds;
  bounds.lower = {-2.0};
  bounds.upper = {2.0};
  const auto at_bound = m_step(slope, {0.5}, bounds, OptimizerConfig{});
  CHECK(at_bound[0] == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("plug-in feedback values from smoothed paths") {
  ParameterSet p = temperature_parameters(0);
  p.set("zeta_1", 0.4);
  p.set("delta", 2.0);
  const ModelSpec model = temperature_preset(p);

  SmootherOutput smoothed;
  const double c = 1.25;
  for (int t = 0; t < 6; ++t) {
    smoothed.smooth_mean.push_back(Vec::Constant(1, c));
    smoothed.smooth_cov.push_back(Mat::Zero(1, 1));
    smoothed.smooth_prob.push_back({1.0, 0.0});
  }

  const FeedbackSeries z = plugin_feedback(smoothed, model);
  REQUIRE(z.size() == 6);
  CHECK(z[0].z0 == 0.0);
  CHECK(z[0].z1 == 0.0);  // no history at t = 1
  for (std::size_t t = 1; t < z.size(); ++t) {
    CHECK(z[t].z0 == 0.0);  // zeta_0 fixed at zero in the preset
    CHECK(z[t].z1 == doctest::Approx(0.4 * c).epsilon(1e-12));
  }

  p.set("zeta_1", 0.0);
  const FeedbackSeries none = plugin_feedback(smoothed, temperature_preset(p));
  for (const auto& pair : none) {
    CHECK(pair.z0 == 0.0);
    CHECK(pair.z1 == 0.0);
  }
}

TEST_CASE("convergence statistic") {
  const std::vector<double> a{1.0};
  const std::vector<double> b{1.1};
  CHECK(check_convergence(a, a, 1e-6) == 0.0);
  CHECK(check_convergence(a, b, 1e-6) ==
        doctest::Approx(0.01 / (1.0 + 1e-6)).epsilon(1e-12));

  const std::vector<double> zero{0.0, 0.0};
  const std::vector<double> eps{1e-4, 0.0};
  CHECK(check_convergence(zero, eps, 1e-6) ==
        doctest::Approx(1e-8 / 1e-6).epsilon(1e-12));
}

TEST_CASE("finite-difference gradient is step-size stable") {
  Rng rng(301);
  for (int rep = 0; rep < 5; ++rep) {
    Dataset data = study_dataset(4, 30, FeedbackSetting::Positive,
                                 900 + static_cast<uint64_t>(rep));
    ParameterSet p = study_parameters(StudyDesign{});
    // Perturb away from the truth so the gradient is not near zero.
    p.set("delta", 8.0);
    p.set("G_0", 0.45);
    p.set("alpha_1", 0.1);
    const ModelBuilder builder = temperature_builder();
    const FeedbackAverages u = zero_averages(data);

    ParameterSet probe = p;
    const Objective objective = [&](std::span<const double> v) {
      probe.set_free_unconstrained(v);
      return penalized_negloglik(probe, data, u, builder, 0.0);
    };
    const std::vector<double> x = p.free_unconstrained();
    const auto g5 = fd_gradient(objective, x, 1e-5);
    const auto g6 = fd_gradient(objective, x, 1e-6);
    for (std::size_t i = 0; i < g5.size(); ++i) {
      const double scale = std::max(1.0, std::abs(g6[i]));
      CHECK(std::abs(g5[i] - g6[i]) <= 1e-3 * scale);
    }
  }
}

TEST_CASE("fit rejects data with no observations") {
  Dataset data = study_dataset(1, 5, FeedbackSetting::Positive, 8);
  for (auto& y : data.subjects[0].y)
    y.setConstant(std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(
      fit(data, temperature_builder(), arbitrary_start(), EmConfig{}),
      FitError);

  Dataset empty;
  CHECK_THROWS_AS(
      fit(empty, temperature_builder(), arbitrary_start(), EmConfig{}),
      FitError);
}

TEST_CASE("fit trace is bit-identical across runs and thread counts") {
  Dataset data = study_dataset(6, 40, FeedbackSetting::Positive, 9);
  EmConfig cfg;
  cfg.n_max = 4;

  EmConfig threaded = cfg;
  threaded.threads = 4;

  const FitResult a = fit(data, temperature_builder(), arbitrary_start(), cfg);
  const FitResult b = fit(data, temperature_builder(), arbitrary_start(), cfg);
  const FitResult c =
      fit(data, temperature_builder(), arbitrary_start(), threaded);

  REQUIRE(a.loglik_trace.size() == b.loglik_trace.size());
  for (std::size_t i = 0; i < a.loglik_trace.size(); ++i) {
    CHECK(a.loglik_trace[i] == b.loglik_trace[i]);
    CHECK(a.d_em_trace[i] == b.d_em_trace[i]);
    CHECK(a.loglik_trace[i] == c.loglik_trace[i]);
  }
}

TEST_CASE("penalized objective is effectively monotone over EM iterations") {
  // The approximate E-step voids the usual monotonicity guarantee; count a
  // run as monotone when no step increases the objective by more than the
  // tolerated 1e-4 relative slack.
  const int runs = 50;
  int monotone = 0;
  for (int rep = 0; rep < runs; ++rep) {
    Dataset data = study_dataset(20, 60, FeedbackSetting::Positive,
                                 4000 + static_cast<uint64_t>(rep));
    EmConfig cfg;
    cfg.n_max = 8;
    cfg.lambda = 0.0;
    cfg.threads = 4;
    const FitResult r =
        fit(data, temperature_builder(), arbitrary_start(), cfg);
    bool ok = true;
    for (std::size_t i = 1; i < r.loglik_trace.size(); ++i) {
      const double prev_obj = -r.loglik_trace[i - 1];
      const double obj = -r.loglik_trace[i];
      if (obj > prev_obj + 1e-4 * (1.0 + std::abs(prev_obj))) ok = false;
    }
    if (ok) ++monotone;
  }
  MESSAGE("monotone runs: ", monotone, "/", runs);
  CHECK(monotone >= 48);  // >= 95%
}

TEST_CASE("fit recovers the generative parameters at desk scale") {
  Dataset data = study_dataset(25, 80, FeedbackSetting::Positive, 11);
  EmConfig cfg;
  cfg.lambda = 0.0;
  cfg.threads = 4;
  const FitResult r = fit(data, temperature_builder(), arbitrary_start(), cfg);

  CHECK(std::abs(r.params.get("delta") - 10.0) < 0.5);
  CHECK(std::abs(r.params.get("sigma_v2") - 0.1) < 0.05);
  CHECK(std::abs(r.params.get("G_0") - 0.5) < 0.15);
  CHECK(std::abs(r.params.get("G_1") - 0.5) < 0.15);
  CHECK(std::abs(r.params.get("zeta_1") - 0.3) < 0.4);
  CHECK(r.iterations >= 1);
  REQUIRE(r.smoothed.size() == data.subjects.size());
  REQUIRE(r.z_hat.size() == data.subjects.size());
  CHECK(r.z_hat[0][0].z1 == 0.0);  // no history at t = 1
}
