#include "simulate.hpp"

#include <cmath>
#include <limits>

#include "rng.hpp"
#include "stats.hpp"

namespace mssfs {

namespace {

// Draw from N(mean, cov); cov may be singular (exactly known components).
Vec draw_gaussian(Rng& rng, const Vec& mean, const Mat& cov) {
  if (cov.size() == 0 || cov.cwiseAbs().maxCoeff() == 0.0) return mean;
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  Vec z(mean.size());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const Vec scale = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return mean + es.eigenvectors() * scale.asDiagonal() * z;
}

std::string zero_padded(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

ParameterSet study_parameters(const StudyDesign& design) {
  ParameterSet p = temperature_parameters(2);
  p.set("sigma_v2", 0.1);
  p.set("sigma_0_2", 0.03);
  p.set("sigma_1_2", 0.3);
  p.set("delta", design.delta);
  p.set("G_0", 0.5);  // r_0 = -0.5
  p.set("G_1", 0.5);  // r_1 = -0.5
  p.set("alpha_0", -3.0);
  p.set("beta_0_1", 0.15);
  p.set("beta_0_2", -0.2);
  p.set("beta_1_1", -0.8);
  p.set("beta_1_2", 0.5);
  if (design.setting == FeedbackSetting::Positive) {
    p.set("alpha_1", 0.2);
    p.set("zeta_1", 0.3);
  } else {
    p.set("alpha_1", 4.0);
    p.set("zeta_1", -0.3);
  }
  return p;
}

SimulatedSubject simulate_subject(const ModelSpec& model, int n, const Vec& x,
                                  uint64_t seed,
                                  const std::string& subject_id,
                                  const std::string& arm,
                                  double missing_rate) {
  if (n < 0) throw ConfigError("simulate_subject: negative length");
  if (x.size() != model.sw.d)
    throw ConfigError("simulate_subject: covariate dimension mismatch");

  Rng rng(seed);
  SimulatedSubject out;
  out.seed = seed;
  out.series.subject = subject_id;
  out.series.arm = arm;
  out.series.t_start = 1;
  out.series.x = x;
  out.series.y.reserve(static_cast<size_t>(n));
  out.true_states.reserve(static_cast<size_t>(n));
  out.true_regimes.reserve(static_cast<size_t>(n));

  int regime = rng.bernoulli(model.init.prob0) ? 0 : 1;
  Vec theta = draw_gaussian(rng, model.init.mean[static_cast<size_t>(regime)],
                            model.init.cov[static_cast<size_t>(regime)]);

  std::vector<double> history;  // lead component of theta_1..theta_{t-1}
  history.reserve(static_cast<size_t>(n));

  for (int t = 1; t <= n; ++t) {
    const double u = feedback_average(model.sw.feedback, history, t);
    const double z0 = model.sw.zeta[0] * u;
    const double z1 = model.sw.zeta[1] * u;
    const TransitionProbs tp = transition_probabilities(model.sw, x, z0, z1);
    const double stay = regime == 0 ? tp.p00 : tp.p10;
    regime = rng.bernoulli(stay) ? 0 : 1;

    const Mat& G = model.G[regime].at(t);
    const Vec drift = model.gamma[regime].at(t) + G * theta;
    theta = draw_gaussian(rng, drift, model.W[regime].at(t));

    Vec y = draw_gaussian(rng, model.F.at(t) * theta, model.V.at(t));
    // Fully missing injection mirrors the all-elements-missing case.
    if (missing_rate > 0.0 && rng.uniform01() < missing_rate)
      y.setConstant(std::numeric_limits<double>::quiet_NaN());

    out.series.y.push_back(std::move(y));
    out.true_states.push_back(theta[0]);
    out.true_regimes.push_back(regime);
    history.push_back(theta[0]);
  }
  return out;
}

SimulatedStudy simulate_study(const StudyDesign& design) {
  if (design.m < 1) throw ConfigError("simulate_study: m must be >= 1");
  if (design.n < 1) throw ConfigError("simulate_study: n must be >= 1");
  if (!(design.missing_rate >= 0.0 && design.missing_rate < 1.0))
    throw ConfigError("simulate_study: missing_rate outside [0, 1)");

  SimulatedStudy study;
  study.truth = study_parameters(design);
  const ModelSpec model = temperature_preset(study.truth, design.feedback);

  study.dataset.covariate_names = {"x1", "x2"};
  study.dataset.format_version = "1";
  study.subjects.reserve(static_cast<size_t>(design.m));

  const int width = design.m >= 1000 ? 5 : 4;
  for (int i = 0; i < design.m; ++i) {
    const uint64_t seed = mix_seed(design.base_seed, static_cast<uint64_t>(i));
    Rng cov_rng(mix_seed(seed, 0x9e37ULL));
    Vec x(2);
    x[0] = cov_rng.bernoulli(0.605) ? 1.0 : 0.0;
    x[1] = cov_rng.normal();
    study.subjects.push_back(
        simulate_subject(model, design.n, x, seed,
                         "s" + zero_padded(i + 1, width), "",
                         design.missing_rate));
    study.dataset.subjects.push_back(study.subjects.back().series);
  }
  return study;
}

}  // namespace mssfs
