#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracle.hpp"
#include "test_util.hpp"

using namespace mssfs;
using namespace mssfs::test;

TEST_CASE("standard Kalman reference: hand-checked update") {
  ModelSpec m;
  m.p = 1;
  m.q = 1;
  m.F = Schedule<Mat>(Mat::Ones(1, 1));
  m.V = Schedule<Mat>(Mat::Ones(1, 1));
  for (int k = 0; k < 2; ++k) {
    m.G[k] = Schedule<Mat>(Mat::Ones(1, 1));
    m.gamma[k] = Schedule<Vec>(Vec::Zero(1));
    m.W[k] = Schedule<Mat>(Mat::Zero(1, 1));
    m.init.mean[k] = Vec::Zero(1);
    m.init.cov[k] = Mat::Ones(1, 1);
  }
  m.sw.d = 0;
  m.sw.beta[0] = Vec::Zero(0);
  m.sw.beta[1] = Vec::Zero(0);

  SubjectSeries s;
  s.subject = "k";
  s.x = Vec::Zero(0);
  s.y.push_back(Vec::Constant(1, 2.0));

  const KalmanReference ref = standard_kalman_reference(s, m, 0);
  CHECK(ref.filt_mean[0](0) == doctest::Approx(1.0));
  CHECK(ref.filt_cov[0](0, 0) == doctest::Approx(0.5));
  CHECK(ref.loglik == doctest::Approx(-2.2655121234846454).epsilon(1e-12));

  SubjectSeries empty;
  empty.subject = "none";
  empty.x = Vec::Zero(0);
  const KalmanReference nothing = standard_kalman_reference(empty, m, 0);
  CHECK(nothing.loglik == 0.0);
  CHECK(nothing.filt_mean.empty());
}

TEST_CASE("exact filter equals the collapsed filter at n = 1") {
  Rng rng(19);
  for (int rep = 0; rep < 10; ++rep) {
    ModelSpec m = random_scalar_model(rng);
    m.init.prob0 = 0.35;  // both initial regimes carry mass
    m.init.cov = {Mat::Constant(1, 1, 0.2), Mat::Constant(1, 1, 0.4)};
    const SubjectSeries s = random_scalar_series(rng, m, 1);
    const FeedbackSeries z = zero_feedback(1);

    const ExactPosterior exact = exact_filter(s, m, z);
    const FilterOutput mkf = run_filter(s, m, z);

    CHECK(std::abs(exact.filtered[0][1] - mkf.steps[0].regime_prob[1]) <=
          1e-12);
    CHECK(std::abs(exact.loglik - mkf.loglik) <=
          1e-12 * (1.0 + std::abs(mkf.loglik)));
    CHECK(exact.path_probs.size() == 2);
  }
}

TEST_CASE("exact filter reduces to the standard Kalman filter") {
  Rng rng(29);
  for (int rep = 0; rep < 8; ++rep) {
    const ModelSpec m = random_scalar_model(rng, /*unreachable_regime1=*/true);
    const SubjectSeries s = random_scalar_series(rng, m, 10, 0.2);
    const ExactPosterior exact = exact_filter(s, m, zero_feedback(10));
    const KalmanReference ref = standard_kalman_reference(s, m, 0);
    CHECK(std::abs(exact.loglik - ref.loglik) <=
          1e-10 * (1.0 + std::abs(ref.loglik)));
  }
}

TEST_CASE("path posterior is a distribution consistent with its marginals") {
  Rng rng(37);
  const ModelSpec m = random_scalar_model(rng);
  const int n = 6;
  const SubjectSeries s = random_scalar_series(rng, m, n, 0.15);
  const FeedbackSeries z = random_feedback(rng, n);
  const ExactPosterior exact = exact_filter(s, m, z);

  REQUIRE(exact.path_probs.size() == (1u << n));
  const double total =
      std::accumulate(exact.path_probs.begin(), exact.path_probs.end(), 0.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));

  // Summing in reverse order changes nothing beyond roundoff.
  double reversed = 0.0;
  for (auto it = exact.path_probs.rbegin(); it != exact.path_probs.rend(); ++it)
    reversed += *it;
  CHECK(std::abs(total - reversed) <= 1e-12);

  // Smoothed marginals equal sums of path posteriors.
  for (int t = 0; t < n; ++t) {
    double mass1 = 0.0;
    for (std::size_t path = 0; path < exact.path_probs.size(); ++path)
      if (path & (1u << t)) mass1 += exact.path_probs[path];
    CHECK(std::abs(mass1 - exact.smoothed[static_cast<size_t>(t)][1]) <=
          1e-12);
  }
}

TEST_CASE("exact smoother probabilities expose the posterior marginals") {
  Rng rng(39);
  const ModelSpec m = random_scalar_model(rng, /*unreachable_regime1=*/true);
  const SubjectSeries s = random_scalar_series(rng, m, 8);
  const ExactPosterior exact = exact_filter(s, m, zero_feedback(8));
  const auto smoothed = exact_smoother_probs(exact);
  for (const auto& probs : smoothed)
    CHECK(probs[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("enumeration capacity is enforced") {
  Rng rng(49);
  const ModelSpec m = random_scalar_model(rng);
  const SubjectSeries s = random_scalar_series(rng, m, 17);
  CHECK_THROWS_AS(exact_filter(s, m, zero_feedback(17)), CapacityError);
}
