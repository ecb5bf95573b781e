#include <doctest.h>

#include <cmath>

#include "model.hpp"
#include "rng.hpp"
#include "stats.hpp"

using namespace mssfs;

namespace {

SwitchSpec plain_switch(double a0, double a1) {
  SwitchSpec sw;
  sw.d = 0;
  sw.alpha = {a0, a1};
  sw.beta[0] = Vec::Zero(0);
  sw.beta[1] = Vec::Zero(0);
  return sw;
}

}  // namespace

TEST_CASE("transition probabilities match logistic evaluations") {
  const Vec x0 = Vec::Zero(0);

  auto tp = transition_probabilities(plain_switch(-3.0, 0.0), x0, 0.0, 0.0);
  CHECK(tp.p01 == doctest::Approx(0.047425873177566781).epsilon(1e-10));
  CHECK(tp.p11 == 0.5);

  tp = transition_probabilities(plain_switch(0.0, 0.2), x0, 0.0, 3.0);
  CHECK(tp.p11 == doctest::Approx(0.96083427729964455).epsilon(1e-10));
}

TEST_CASE("transition probability rows sum to one exactly") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    SwitchSpec sw = plain_switch(-6.0 + 12.0 * rng.uniform01(),
                                 -6.0 + 12.0 * rng.uniform01());
    sw.d = 2;
    sw.beta[0] = Vec::Random(2);
    sw.beta[1] = Vec::Random(2);
    Vec x(2);
    x << rng.normal(), rng.normal();
    const auto tp = transition_probabilities(sw, x, rng.normal(), rng.normal());
    CHECK(tp.p00 + tp.p01 == 1.0);
    CHECK(tp.p10 + tp.p11 == 1.0);
    CHECK(tp.p01 > 0.0);
    CHECK(tp.p01 < 1.0);
    CHECK(tp.p11 > 0.0);
    CHECK(tp.p11 < 1.0);
  }
}

TEST_CASE("transition probabilities reject non-finite input") {
  const Vec x0 = Vec::Zero(0);
  CHECK_THROWS_AS(
      transition_probabilities(plain_switch(0, 0), x0,
                               std::numeric_limits<double>::infinity(), 0.0),
      DomainError);
  Vec bad(1);
  bad << std::numeric_limits<double>::quiet_NaN();
  SwitchSpec sw = plain_switch(0, 0);
  sw.d = 1;
  sw.beta[0] = Vec::Zero(1);
  sw.beta[1] = Vec::Zero(1);
  CHECK_THROWS_AS(transition_probabilities(sw, bad, 0.0, 0.0), DomainError);
}

TEST_CASE("feedback value on full and truncated histories") {
  FeedbackSpec spec;  // L = 3, rho = 0.5, normalized

  const double h_full[] = {1.0, 1.0, 1.0};
  CHECK(feedback_value(spec, 0.3, h_full, 4) ==
        doctest::Approx(0.3).epsilon(1e-14));

  const double h_one[] = {2.0};
  CHECK(feedback_value(spec, 0.3, h_one, 2) ==
        doctest::Approx(0.6).epsilon(1e-14));

  CHECK(feedback_value(spec, 0.0, h_full, 4) == 0.0);
  CHECK(feedback_value(spec, 0.7, {}, 1) == 0.0);
}

TEST_CASE("feedback is linear in zeta and rho-invariant on constant history") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    FeedbackSpec spec;
    spec.L = 1 + static_cast<int>(rng.uniform_below(4));
    spec.rho = -1.0 + 2.0 * rng.uniform01();
    std::vector<double> history(6);
    for (auto& h : history) h = rng.normal();
    const int t = 2 + static_cast<int>(rng.uniform_below(5));
    const double z = rng.normal();
    const double one = feedback_value(spec, z, history, t);
    const double two = feedback_value(spec, 2.0 * z, history, t);
    CHECK(two == doctest::Approx(2.0 * one).epsilon(1e-12));
  }

  const double c = 1.7;
  const std::vector<double> constant(5, c);
  FeedbackSpec a;
  a.rho = 0.5;
  FeedbackSpec b;
  b.rho = -1.3;
  for (int t = 2; t <= 6; ++t)
    CHECK(feedback_value(a, 0.4, constant, t) ==
          doctest::Approx(feedback_value(b, 0.4, constant, t)).epsilon(1e-12));
}

TEST_CASE("unnormalized feedback keeps raw exponential weights") {
  FeedbackSpec spec;
  spec.L = 2;
  spec.rho = 0.3;
  spec.normalize = false;
  const double h[] = {1.5, -0.4};  // theta_1 (older), theta_2
  const double w1 = std::exp(0.3 * 2.0);
  const double w2 = std::exp(0.3 * 1.0);
  CHECK(feedback_value(spec, 1.0, h, 3) ==
        doctest::Approx(w1 * 1.5 + w2 * (-0.4)).epsilon(1e-14));
}

TEST_CASE("transform examples and domain errors") {
  CHECK(transform_value(0.1, TransformKind::Log,
                        TransformDirection::ToUnconstrained) ==
        doctest::Approx(-2.3025850929940455).epsilon(1e-14));
  CHECK(transform_value(0.5, TransformKind::Logit,
                        TransformDirection::ToUnconstrained) == 0.0);
  CHECK_THROWS_AS(transform_value(-0.1, TransformKind::Log,
                                  TransformDirection::ToUnconstrained),
                  DomainError);
  CHECK_THROWS_AS(transform_value(1.0, TransformKind::Logit,
                                  TransformDirection::ToUnconstrained),
                  DomainError);
}

TEST_CASE("apply_transform round trip reproduces reported estimates") {
  ParameterSet p = temperature_parameters(2);
  p.set("delta", 1.0979);
  p.set("G_0", 0.9392);
  p.set("G_1", 0.6651);
  p.set("sigma_v2", 0.3839);
  p.set("sigma_1_2", 0.6218);
  p.set("alpha_0", -3.7057);
  p.set("zeta_1", 2.5922);

  const ParameterSet u =
      apply_transform(p, TransformDirection::ToUnconstrained);
  const ParameterSet back =
      apply_transform(u, TransformDirection::ToConstrained);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p.entry(i).value;
    const double round = back.entry(i).value;
    CHECK(std::abs(round - orig) <= 1e-12 * std::max(1.0, std::abs(orig)));
  }
}

TEST_CASE("transform round trip over random draws") {
  Rng rng(17);
  ParameterSet p = temperature_parameters(2);
  for (int i = 0; i < 1000; ++i) {
    p.set("sigma_v2", 1e-6 + 3.0 * rng.uniform01());
    p.set("sigma_0_2", 1e-6 + 3.0 * rng.uniform01());
    p.set("sigma_1_2", 1e-6 + 3.0 * rng.uniform01());
    p.set("delta", 1e-4 + 10.0 * rng.uniform01());
    p.set("G_0", 1e-4 + 0.9997 * rng.uniform01());
    p.set("G_1", 1e-4 + 0.9997 * rng.uniform01());
    p.set("alpha_0", rng.normal(0, 3));
    p.set("beta_0_1", rng.normal(0, 3));
    p.set("beta_1_2", rng.normal(0, 3));
    p.set("zeta_1", rng.normal(0, 2));

    const auto u = apply_transform(p, TransformDirection::ToUnconstrained);
    const auto back = apply_transform(u, TransformDirection::ToConstrained);
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double orig = p.entry(j).value;
      CHECK(std::abs(back.entry(j).value - orig) <=
            1e-12 * std::max(1.0, std::abs(orig)));
    }
  }
}

TEST_CASE("free parameter packing skips fixed entries") {
  ParameterSet p = temperature_parameters(1);
  p.set_fixed("zeta_1", true);
  CHECK(p.free_count() == p.size() - 1);
  auto u = p.free_unconstrained();
  u[0] += 0.25;
  p.set_free_unconstrained(u);
  CHECK(p.get("sigma_v2") == doctest::Approx(std::exp(0.25)).epsilon(1e-12));
}

TEST_CASE("temperature preset wiring") {
  ParameterSet p = temperature_parameters(2);
  p.set("delta", 10.0);
  p.set("G_1", 0.5);
  const ModelSpec m = temperature_preset(p);

  CHECK(m.p == 1);
  CHECK(m.q == 1);
  CHECK(m.gamma[1].at(1)(0) == doctest::Approx(5.0));
  CHECK(m.gamma[0].at(1)(0) == 0.0);
  CHECK(m.init.prob0 == 1.0);
  CHECK(m.init.mean[1](0) == 10.0);
  CHECK(m.init.cov[0](0, 0) == 0.0);
  CHECK(m.sw.zeta[0] == 0.0);

  p.set("G_1", 1.0);
  CHECK_THROWS_AS(temperature_preset(p), ConfigError);

  ParameterSet incomplete;
  incomplete.add("sigma_v2", 1.0, TransformKind::Log);
  CHECK_THROWS_AS(temperature_preset(incomplete), ConfigError);
}

TEST_CASE("preset with delta zero collapses the regimes") {
  ParameterSet p = temperature_parameters(0);
  p.set("delta", 0.0);
  p.set("G_0", 0.7);
  p.set("G_1", 0.7);
  p.set("sigma_0_2", 0.2);
  p.set("sigma_1_2", 0.2);
  const ModelSpec m = temperature_preset(p);

  // Conditional mean and variance of theta_t given theta_{t-1} agree across
  // regimes on a grid, so simulated trajectories are distributionally equal.
  for (double prev : {-2.0, 0.0, 1.0, 4.0}) {
    const double mean0 = m.gamma[0].at(1)(0) + m.G[0].at(1)(0, 0) * prev;
    const double mean1 = m.gamma[1].at(1)(0) + m.G[1].at(1)(0, 0) * prev;
    CHECK(mean0 == mean1);
    CHECK(m.W[0].at(1)(0, 0) == m.W[1].at(1)(0, 0));
  }
  CHECK(m.init.mean[0](0) == m.init.mean[1](0));
}

TEST_CASE("penalized block is the regime-1 switch parameters") {
  ParameterSet p = temperature_parameters(2);
  p.set("alpha_1", 1.0);
  p.set("beta_1_1", 1.0);
  p.set("beta_1_2", 1.0);
  p.set("zeta_1", 1.0);
  p.set("alpha_0", 5.0);  // unpenalized
  CHECK(p.penalized_sq_norm() == doctest::Approx(4.0));
}

TEST_CASE("model validation rejects inconsistent dimensions") {
  ParameterSet p = temperature_parameters(0);
  ModelSpec m = temperature_preset(p);
  m.F = Schedule<Mat>(Mat::Ones(2, 1));
  CHECK_THROWS_AS(m.validate(), ConfigError);

  ModelSpec bad_cov = temperature_preset(p);
  bad_cov.V = Schedule<Mat>(Mat::Constant(1, 1, -0.5));
  CHECK_THROWS_AS(bad_cov.validate(), ConfigError);
}
