#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bootstrap.hpp"
#include "stats.hpp"
#include "test_util.hpp"

using namespace mssfs;
using namespace mssfs::test;

namespace {

Dataset toy_dataset(int m, int n, uint64_t seed, bool two_arms = false) {
  StudyDesign design;
  design.m = m;
  design.n = n;
  design.base_seed = seed;
  Dataset data = simulate_study(design).dataset;
  if (two_arms) {
    Dataset doubled;
    doubled.covariate_names = data.covariate_names;
    for (const auto& s : data.subjects) {
      SubjectSeries pos = s;
      pos.arm = "pos";
      SubjectSeries neg = s;
      neg.arm = "neg";
      for (auto& y : neg.y) y(0) += 0.01;
      doubled.subjects.push_back(pos);
      doubled.subjects.push_back(neg);
    }
    return doubled;
  }
  return data;
}

// Textbook BCa reference, written for the test: bias correction from the
// replicate CDF at the point estimate, acceleration from jackknife skewness,
// adjusted percentiles via the same ceil(a*B) order statistic.
std::pair<double, double> bca_reference(std::vector<double> reps,
                                        const std::vector<double>& jack,
                                        double point, double level) {
  const int b = static_cast<int>(reps.size());
  int below = 0;
  for (double r : reps) below += r < point;
  const double z0 = norm_ppf(std::clamp(
      static_cast<double>(below) / b, 0.5 / b, 1.0 - 0.5 / b));

  const double mean = std::accumulate(jack.begin(), jack.end(), 0.0) /
                      static_cast<double>(jack.size());
  double s2 = 0, s3 = 0;
  for (double v : jack) {
    s2 += (mean - v) * (mean - v);
    s3 += (mean - v) * (mean - v) * (mean - v);
  }
  const double a = s3 / (6.0 * std::pow(s2, 1.5));

  std::sort(reps.begin(), reps.end());
  auto q = [&](double alpha) {
    const double za = norm_ppf(alpha);
    const double adj = norm_cdf(z0 + (z0 + za) / (1.0 - a * (z0 + za)));
    const int idx =
        std::clamp(static_cast<int>(std::ceil(adj * b)), 1, b);
    return reps[static_cast<size_t>(idx - 1)];
  };
  const double alpha = 1.0 - level;
  return {q(alpha / 2.0), q(1.0 - alpha / 2.0)};
}

}  // namespace

TEST_CASE("resampling preserves size and keeps arms together") {
  const Dataset data = toy_dataset(6, 10, 21, /*two_arms=*/true);
  REQUIRE(data.num_series() == 12);
  REQUIRE(data.subject_ids().size() == 6);

  const std::vector<std::size_t> all_first{0, 0, 0, 0, 0, 0};
  const Dataset clones = resample_dataset(data, all_first);
  CHECK(clones.num_series() == 12);
  CHECK(clones.subject_ids().size() == 6);  // relabeled copies stay distinct
  for (const auto& s : clones.subjects)
    CHECK(s.subject.rfind(data.subjects[0].subject, 0) == 0);

  const Dataset random = resample_dataset(data, uint64_t{5});
  CHECK(random.subject_ids().size() <= 6);
  CHECK(random.num_series() == 12);
}

TEST_CASE("resampled inclusion frequency approaches 1 - (1 - 1/m)^m") {
  const int m = 8;
  const Dataset data = toy_dataset(m, 5, 22);
  const int reps = 10000;
  int included = 0;
  for (int r = 0; r < reps; ++r) {
    const Dataset draw = resample_dataset(data, static_cast<uint64_t>(r));
    for (const auto& s : draw.subjects)
      if (s.subject.rfind("s0001", 0) == 0 && s.subject == "s0001") {
        ++included;
        break;
      }
  }
  const double expected = 1.0 - std::pow(1.0 - 1.0 / m, m);
  const double se = std::sqrt(expected * (1 - expected) / reps);
  CHECK(std::abs(included / static_cast<double>(reps) - expected) < 3 * se);
}

TEST_CASE("bca interval equals an independently coded reference") {
  Rng rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    const int b = 40 + static_cast<int>(rng.uniform_below(200));
    std::vector<double> reps_v(static_cast<size_t>(b));
    for (auto& v : reps_v) v = rng.normal(1.4, 0.7) + 0.2 * rng.uniform01();
    std::vector<double> jack(12);
    for (auto& v : jack) v = rng.normal(1.4, 0.1);
    const double point = 1.4 + 0.2 * (rng.uniform01() - 0.5);
    const double level = 0.9 + 0.08 * rng.uniform01();

    const Interval iv = bca_interval(reps_v, jack, point, level);
    const auto [lo, hi] = bca_reference(reps_v, jack, point, level);
    CHECK(iv.lower == doctest::Approx(lo).epsilon(1e-10));
    CHECK(iv.upper == doctest::Approx(hi).epsilon(1e-10));
    CHECK(iv.lower <= iv.upper);
  }
}

TEST_CASE("bca degenerate cases") {
  Rng rng(79);
  std::vector<double> reps_v(50);
  for (auto& v : reps_v) v = rng.normal();
  std::vector<double> jack(8, 1.0);  // zero jackknife variance

  const Interval fallback = bca_interval(reps_v, jack, 0.0, 0.95);
  CHECK(fallback.flags.percentile_fallback);

  // Symmetric replicates around the point with zero acceleration: the
  // percentile fallback and the BCa interval coincide.
  std::vector<double> sym;
  for (int i = 1; i <= 25; ++i) {
    sym.push_back(0.5 + 0.01 * i);
    sym.push_back(0.5 - 0.01 * i);
  }
  std::vector<double> balanced_jack{0.4, 0.6, 0.5, 0.45, 0.55, 0.5, 0.38,
                                    0.62};
  const Interval sym_iv = bca_interval(sym, balanced_jack, 0.5, 0.9);
  std::vector<double> sorted = sym;
  std::sort(sorted.begin(), sorted.end());
  const int b = static_cast<int>(sorted.size());
  const double lo =
      sorted[static_cast<size_t>(std::clamp(
                 static_cast<int>(std::ceil(0.05 * b)), 1, b) - 1)];
  // Acceleration of the symmetric jackknife is tiny but nonzero; allow a
  // one-order-statistic wobble.
  CHECK(std::abs(sym_iv.lower - lo) <= 0.03);

  // All replicates on one side of the point clamps the bias correction.
  std::vector<double> low(30);
  for (std::size_t i = 0; i < low.size(); ++i)
    low[i] = -1.0 - static_cast<double>(i) * 0.01;
  std::vector<double> jack2{0.9, 1.1, 1.0, 0.95, 1.05, 1.02, 0.97, 1.03};
  const Interval clamped = bca_interval(low, jack2, 5.0, 0.95);
  CHECK(clamped.flags.z0_clamped);
  CHECK(clamped.upper <= -1.0);

  CHECK_THROWS_AS(bca_interval(std::vector<double>(5, 1.0), jack2, 1.0, 0.95),
                  BootstrapError);
}

TEST_CASE("failure-rate guard") {
  std::vector<std::string> reasons{"r1"};
  CHECK_THROWS_AS(detail::check_failure_rate(3, 10, reasons), BootstrapError);
  CHECK_NOTHROW(detail::check_failure_rate(2, 10, reasons));
  CHECK_THROWS_AS(detail::check_failure_rate(0, 0, reasons), BootstrapError);
}

TEST_CASE("bootstrap end to end: determinism, nesting, jackknife shape") {
  const Dataset data = toy_dataset(8, 40, 23);
  EmConfig cfg;
  cfg.lambda = 0.0;
  cfg.n_max = 6;
  cfg.threads = 4;
  const FitResult base = fit(data, temperature_builder(),
                             study_parameters(StudyDesign{}), cfg);

  CHECK_THROWS_AS(run_bootstrap(data, temperature_builder(), base, cfg, 0,
                                0.95, 1),
                  BootstrapError);

  const BootstrapResult b95 =
      run_bootstrap(data, temperature_builder(), base, cfg, 16, 0.95, 42);
  const BootstrapResult again =
      run_bootstrap(data, temperature_builder(), base, cfg, 16, 0.95, 42);
  const BootstrapResult b99 =
      run_bootstrap(data, temperature_builder(), base, cfg, 16, 0.99, 42);

  REQUIRE(b95.intervals.size() == b95.param_names.size());
  CHECK(b95.jackknife.size() == 8);
  CHECK(b95.failures == 0);

  for (std::size_t j = 0; j < b95.intervals.size(); ++j) {
    CHECK(b95.intervals[j].lower == again.intervals[j].lower);
    CHECK(b95.intervals[j].upper == again.intervals[j].upper);
    CHECK(b95.intervals[j].lower <= b95.intervals[j].upper);
    // Wider level nests the narrower one.
    CHECK(b99.intervals[j].lower <= b95.intervals[j].lower + 1e-12);
    CHECK(b99.intervals[j].upper >= b95.intervals[j].upper - 1e-12);
  }
}
