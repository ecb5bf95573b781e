#include "filter.hpp"

#include <cmath>

#include "scalar_sweep.hpp"
#include "stats.hpp"

namespace mssfs {

namespace detail {

Eigen::LLT<Mat> psd_factorize(const Mat& m, int t, const char* what) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter =
      1e-10 * m.trace() / static_cast<double>(std::max<Eigen::Index>(1, m.rows()));
  Mat jittered = m + jitter * Mat::Identity(m.rows(), m.cols());
  llt.compute(jittered);
  if (llt.info() == Eigen::Success) return llt;
  throw NumericError(std::string(what) + " not positive definite at t=" +
                         std::to_string(t),
                     t);
}

double psd_scalar(double h, int t, const char* what) {
  if (h > 0.0) return h;
  const double jittered = h + 1e-10 * h;
  if (jittered > 0.0) return jittered;
  throw NumericError(std::string(what) + " not positive definite at t=" +
                         std::to_string(t),
                     t);
}

namespace {

double log_det_from_llt(const Eigen::LLT<Mat>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void symmetrize(Mat& m) { m = 0.5 * (m + m.transpose()).eval(); }

}  // namespace
}  // namespace detail

SubsetObservation subset_observation(const Vec& y_t, const Mat& F_t,
                                     const Mat& V_t) {
  const int p = static_cast<int>(y_t.size());
  std::vector<int> observed;
  observed.reserve(static_cast<size_t>(p));
  for (int i = 0; i < p; ++i)
    if (std::isfinite(y_t[i])) observed.push_back(i);

  SubsetObservation out;
  if (static_cast<int>(observed.size()) == p) {
    out.pattern.kind = MissingPattern::Kind::None;
    out.y = y_t;
    out.F = F_t;
    out.V = V_t;
    return out;
  }
  if (observed.empty()) {
    out.pattern.kind = MissingPattern::Kind::Full;
    out.y = Vec(0);
    out.F = Mat(0, F_t.cols());
    out.V = Mat(0, 0);
    return out;
  }

  const int r = static_cast<int>(observed.size());
  out.pattern.kind = MissingPattern::Kind::Partial;
  out.pattern.observed = observed;
  out.y = Vec(r);
  out.F = Mat(r, F_t.cols());
  out.V = Mat(r, r);
  for (int i = 0; i < r; ++i) {
    out.y[i] = y_t[observed[static_cast<size_t>(i)]];
    out.F.row(i) = F_t.row(observed[static_cast<size_t>(i)]);
    for (int j = 0; j < r; ++j)
      out.V(i, j) = V_t(observed[static_cast<size_t>(i)],
                        observed[static_cast<size_t>(j)]);
  }
  return out;
}

void collapse_mixture(std::span<const double> weights,
                      std::span<const Vec> means, std::span<const Mat> covs,
                      Vec& mean_out, Mat& cov_out) {
  if (weights.size() != means.size() || weights.size() != covs.size())
    throw DomainError("collapse_mixture: component counts differ");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw DomainError("collapse_mixture: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-10)
    throw DomainError("collapse_mixture: weights do not sum to 1");

  mean_out = Vec::Zero(means[0].size());
  for (std::size_t i = 0; i < weights.size(); ++i)
    mean_out += weights[i] * means[i];

  cov_out = Mat::Zero(covs[0].rows(), covs[0].cols());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const Vec d = means[i] - mean_out;
    cov_out += weights[i] * (covs[i] + d * d.transpose());
  }
  detail::symmetrize(cov_out);
}

RegimeState initial_state(const ModelSpec& model) {
  RegimeState s;
  s.mean = model.init.mean;
  s.cov = model.init.cov;
  s.prob = {model.init.prob0, 1.0 - model.init.prob0};
  return s;
}

FilterStep filter_step(const RegimeState& prev, const ModelSpec& model, int t,
                       const Vec& x, const FeedbackPair& z, const Vec& y_t) {
  FilterStep step;
  step.t = t;
  step.trans = transition_probabilities(model.sw, x, z.z0, z.z1);

  const auto subset = subset_observation(y_t, model.F.at(t), model.V.at(t));
  step.pattern = subset.pattern;
  const bool observed = subset.pattern.kind != MissingPattern::Kind::Full;
  const int obs_dim = subset.pattern.observed_count(model.p);

  std::array<std::array<double, 2>, 2> lw{};
  for (int o = 0; o < 2; ++o) {
    for (int p = 0; p < 2; ++p) {
      const Mat& G = model.G[p].at(t);
      step.pred_mean[o][p] = model.gamma[p].at(t) + G * prev.mean[o];
      step.pred_cov[o][p] = G * prev.cov[o] * G.transpose() + model.W[p].at(t);
      detail::symmetrize(step.pred_cov[o][p]);

      const double prior = step.trans.at(o, p) * prev.prob[o];
      double lp = std::log(std::max(prior, kProbFloor));
      if (observed) {
        const Vec eta = subset.y - subset.F * step.pred_mean[o][p];
        Mat H = subset.F * step.pred_cov[o][p] * subset.F.transpose() + subset.V;
        detail::symmetrize(H);
        const auto llt = detail::psd_factorize(H, t, "innovation covariance");
        const Vec sol = llt.solve(eta);
        const Mat PFt = step.pred_cov[o][p] * subset.F.transpose();
        step.innovation[o][p] = eta;
        step.innovation_cov[o][p] = H;
        step.post_mean_pair[o][p] = step.pred_mean[o][p] + PFt * sol;
        step.post_cov_pair[o][p] =
            step.pred_cov[o][p] -
            PFt * llt.solve(subset.F * step.pred_cov[o][p]);
        detail::symmetrize(step.post_cov_pair[o][p]);
        lp += -0.5 * (obs_dim * kLog2Pi + detail::log_det_from_llt(llt) +
                      eta.dot(sol));
      } else {
        step.post_mean_pair[o][p] = step.pred_mean[o][p];
        step.post_cov_pair[o][p] = step.pred_cov[o][p];
      }
      lw[o][p] = lp;
    }
  }

  const double flat[4] = {lw[0][0], lw[0][1], lw[1][0], lw[1][1]};
  const double norm = log_sum_exp(std::span<const double>(flat, 4));
  step.loglik_inc = observed ? norm : 0.0;
  for (int o = 0; o < 2; ++o)
    for (int p = 0; p < 2; ++p)
      step.joint_prob[o][p] = std::exp(lw[o][p] - norm);

  for (int p = 0; p < 2; ++p) {
    const double mass = step.joint_prob[0][p] + step.joint_prob[1][p];
    step.regime_prob[p] = mass;
    std::array<double, 2> w{0.5, 0.5};
    if (mass > kProbFloor)
      w = {step.joint_prob[0][p] / mass, step.joint_prob[1][p] / mass};
    const std::array<Vec, 2> means{step.post_mean_pair[0][p],
                                   step.post_mean_pair[1][p]};
    const std::array<Mat, 2> covs{step.post_cov_pair[0][p],
                                  step.post_cov_pair[1][p]};
    collapse_mixture(w, means, covs, step.regime_mean[p], step.regime_cov[p]);
  }

  collapse_mixture(step.regime_prob, step.regime_mean, step.regime_cov,
                   step.marg_mean, step.marg_cov);
  return step;
}

namespace {

void validate_filter_inputs(const SubjectSeries& series, const ModelSpec& model,
                            const FeedbackSeries& z) {
  const int n = series.length();
  if (static_cast<int>(z.size()) != n)
    throw ConfigError("feedback series length does not match data (" +
                      series.key() + ")");
  for (const auto& yt : series.y)
    if (yt.size() != model.p)
      throw ConfigError("observation dimension mismatch (" + series.key() + ")");
  if (series.x.size() != model.sw.d)
    throw ConfigError("covariate dimension mismatch (" + series.key() + ")");
}

FilterStep step_from_scalar(const detail::ScalarStep& s) {
  FilterStep step;
  step.t = s.t;
  step.trans = TransitionProbs{s.trans[0][1], s.trans[0][0], s.trans[1][1],
                               s.trans[1][0]};
  step.pattern.kind =
      s.observed ? MissingPattern::Kind::None : MissingPattern::Kind::Full;
  for (int o = 0; o < 2; ++o) {
    for (int p = 0; p < 2; ++p) {
      step.pred_mean[o][p] = Vec::Constant(1, s.th_pred[o][p]);
      step.pred_cov[o][p] = Mat::Constant(1, 1, s.P_pred[o][p]);
      if (s.observed) {
        step.innovation[o][p] = Vec::Constant(1, s.eta[o][p]);
        step.innovation_cov[o][p] = Mat::Constant(1, 1, s.H[o][p]);
      }
      step.post_mean_pair[o][p] = Vec::Constant(1, s.th_post[o][p]);
      step.post_cov_pair[o][p] = Mat::Constant(1, 1, s.P_post[o][p]);
      step.joint_prob[o][p] = s.joint[o][p];
    }
  }
  for (int p = 0; p < 2; ++p) {
    step.regime_mean[p] = Vec::Constant(1, s.th_r[p]);
    step.regime_cov[p] = Mat::Constant(1, 1, s.P_r[p]);
    step.regime_prob[p] = s.pr[p];
  }
  step.marg_mean = Vec::Constant(1, s.th_m);
  step.marg_cov = Mat::Constant(1, 1, s.P_m);
  step.loglik_inc = s.ll_inc;
  return step;
}

}  // namespace

FilterOutput run_filter(const SubjectSeries& series, const ModelSpec& model,
                        const FeedbackSeries& z) {
  validate_filter_inputs(series, model, z);
  const int n = series.length();
  FilterOutput out;
  out.steps.reserve(static_cast<size_t>(n));

  if (model.is_scalar()) {
    detail::scalar_filter_sweep(series, model, z,
                                [&](const detail::ScalarStep& s) {
                                  out.steps.push_back(step_from_scalar(s));
                                  out.loglik += s.ll_inc;
                                });
    return out;
  }

  RegimeState state = initial_state(model);
  for (int t = 1; t <= n; ++t) {
    FilterStep step;
    try {
      step = filter_step(state, model, t, series.x,
                         z[static_cast<size_t>(t - 1)],
                         series.y[static_cast<size_t>(t - 1)]);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (series " + series.key() +
                             ")",
                         t);
    }
    state.mean = step.regime_mean;
    state.cov = step.regime_cov;
    state.prob = step.regime_prob;
    out.loglik += step.loglik_inc;
    out.steps.push_back(std::move(step));
  }
  return out;
}

double filter_loglik(const SubjectSeries& series, const ModelSpec& model,
                     const FeedbackSeries& z) {
  validate_filter_inputs(series, model, z);

  if (model.is_scalar()) {
    double ll = 0.0;
    detail::scalar_filter_sweep(
        series, model, z,
        [&](const detail::ScalarStep& s) { ll += s.ll_inc; });
    return ll;
  }

  RegimeState state = initial_state(model);
  double ll = 0.0;
  const int n = series.length();
  for (int t = 1; t <= n; ++t) {
    FilterStep step = filter_step(state, model, t, series.x,
                                  z[static_cast<size_t>(t - 1)],
                                  series.y[static_cast<size_t>(t - 1)]);
    state.mean = step.regime_mean;
    state.cov = step.regime_cov;
    state.prob = step.regime_prob;
    ll += step.loglik_inc;
  }
  return ll;
}

FeedbackSeries feedback_series_from_averages(const SwitchSpec& sw,
                                             std::span<const double> averages) {
  FeedbackSeries z(averages.size());
  for (std::size_t i = 0; i < averages.size(); ++i) {
    z[i].z0 = sw.zeta[0] * averages[i];
    z[i].z1 = sw.zeta[1] * averages[i];
  }
  return z;
}

}  // namespace mssfs
