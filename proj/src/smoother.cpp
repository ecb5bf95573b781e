#include "smoother.hpp"

#include <cmath>

#include "scalar_sweep.hpp"
#include "stats.hpp"

namespace mssfs {

namespace {

void symmetrize(Mat& m) { m = 0.5 * (m + m.transpose()).eval(); }

// Collapsed regime moments of the initial condition presented as a t = 0
// filter step, so prediction formulas can treat the base case uniformly.
FilterStep init_pseudo_step(const ModelSpec& model) {
  FilterStep s;
  s.t = 0;
  s.regime_mean = model.init.mean;
  s.regime_cov = model.init.cov;
  s.regime_prob = {model.init.prob0, 1.0 - model.init.prob0};
  collapse_mixture(s.regime_prob, s.regime_mean, s.regime_cov, s.marg_mean,
                   s.marg_cov);
  return s;
}

std::array<std::array<double, 2>, 2> joint_prior(
    const FilterStep& step_t, const TransitionProbs& trans_next) {
  std::array<std::array<double, 2>, 2> joint{};
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q)
      joint[p][q] = trans_next.at(p, q) * step_t.regime_prob[p];
  return joint;
}

}  // namespace

PredictiveMoments predictive_moments(
    const FilterStep& step_t, const ModelSpec& model,
    const std::array<std::array<double, 2>, 2>& trans_joint) {
  double total = 0.0;
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q) total += trans_joint[p][q];
  if (std::abs(total - 1.0) > 1e-10)
    throw DomainError("predictive_moments: joint probabilities do not sum to 1");

  const int t_next = step_t.t + 1;
  const int q_dim = model.q;

  PredictiveMoments out;
  out.mean = Vec::Zero(q_dim);
  out.cov = Mat::Zero(q_dim, q_dim);
  Mat second_cross = Mat::Zero(q_dim, q_dim);  // E[theta_t theta_{t+1}^T | psi_t]

  std::array<std::array<Vec, 2>, 2> comp_mean;
  for (int p = 0; p < 2; ++p) {
    for (int q = 0; q < 2; ++q) {
      const Mat& G = model.G[q].at(t_next);
      comp_mean[p][q] = model.gamma[q].at(t_next) + G * step_t.regime_mean[p];
      out.mean += trans_joint[p][q] * comp_mean[p][q];
    }
  }

  for (int p = 0; p < 2; ++p) {
    for (int q = 0; q < 2; ++q) {
      const double w = trans_joint[p][q];
      const Mat& G = model.G[q].at(t_next);
      out.cov += w * (G * step_t.regime_cov[p] * G.transpose() +
                      model.W[q].at(t_next) +
                      comp_mean[p][q] * comp_mean[p][q].transpose());
      second_cross +=
          w * (step_t.regime_mean[p] * comp_mean[p][q].transpose() +
               step_t.regime_cov[p] * G.transpose());
    }
  }
  out.cov -= out.mean * out.mean.transpose();
  symmetrize(out.cov);
  out.cross = second_cross - step_t.marg_mean * out.mean.transpose();
  return out;
}

SmoothedProbs smooth_probabilities(const FilterOutput& filter) {
  const int n = filter.length();
  SmoothedProbs out;
  if (n == 0) return out;
  out.marginal.resize(static_cast<size_t>(n));
  out.pairwise.resize(static_cast<size_t>(n - 1));
  out.marginal[static_cast<size_t>(n - 1)] =
      filter.steps[static_cast<size_t>(n - 1)].regime_prob;

  for (int t = n - 1; t >= 1; --t) {
    const FilterStep& cur = filter.steps[static_cast<size_t>(t - 1)];
    // Kernel governing the move t -> t+1 was used by the filter at t+1.
    const TransitionProbs& trans = filter.steps[static_cast<size_t>(t)].trans;
    const auto joint = joint_prior(cur, trans);
    std::array<double, 2> denom{};
    for (int q = 0; q < 2; ++q)
      denom[q] = joint[0][q] + joint[1][q];

    auto& pair_t = out.pairwise[static_cast<size_t>(t - 1)];
    const auto& next_marg = out.marginal[static_cast<size_t>(t)];
    bool fell_back = false;
    for (int q = 0; q < 2; ++q) {
      for (int p = 0; p < 2; ++p) {
        if (denom[q] > kProbFloor) {
          pair_t[p][q] = next_marg[q] * cur.regime_prob[p] * trans.at(p, q) /
                         denom[q];
        } else {
          pair_t[p][q] = next_marg[q] * cur.regime_prob[p];
          fell_back = true;
        }
      }
    }
    if (fell_back) out.fallback_times.push_back(t);
    out.marginal[static_cast<size_t>(t - 1)] = {pair_t[0][0] + pair_t[0][1],
                                                pair_t[1][0] + pair_t[1][1]};
  }
  return out;
}

SmootherOutput smooth_pass(const FilterOutput& filter, const ModelSpec& model) {
  const int n = filter.length();
  SmootherOutput out;
  if (n == 0) return out;

  out.smooth_mean.resize(static_cast<size_t>(n));
  out.smooth_cov.resize(static_cast<size_t>(n));
  out.smooth_prob.resize(static_cast<size_t>(n));
  out.pairwise_prob.resize(static_cast<size_t>(n - 1));
  out.pred_mean.resize(static_cast<size_t>(n));
  out.pred_cov.resize(static_cast<size_t>(n));
  out.pred_prob.resize(static_cast<size_t>(n));
  out.cross_cov.resize(static_cast<size_t>(n - 1));

  auto probs = smooth_probabilities(filter);
  out.pairwise_prob = std::move(probs.pairwise);
  out.smooth_prob = std::move(probs.marginal);
  out.fallback_times = std::move(probs.fallback_times);

  const FilterStep& last = filter.steps[static_cast<size_t>(n - 1)];
  out.smooth_mean[static_cast<size_t>(n - 1)] = last.marg_mean;
  out.smooth_cov[static_cast<size_t>(n - 1)] = last.marg_cov;

  for (int t = n - 1; t >= 1; --t) {
    const FilterStep& cur = filter.steps[static_cast<size_t>(t - 1)];
    const TransitionProbs& trans = filter.steps[static_cast<size_t>(t)].trans;
    const auto joint = joint_prior(cur, trans);
    PredictiveMoments pm;
    try {
      pm = predictive_moments(cur, model, joint);
    } catch (const DomainError& e) {
      throw NumericError(std::string(e.what()) + " at t=" + std::to_string(t),
                         t);
    }

    const auto llt = detail::psd_factorize(pm.cov, t, "predicted covariance");
    // A = Sigma P^{-1}, computed via the PSD solve of P against Sigma^T.
    const Mat gain = llt.solve(pm.cross.transpose()).transpose();

    const Vec& mean_next = out.smooth_mean[static_cast<size_t>(t)];
    const Mat& cov_next = out.smooth_cov[static_cast<size_t>(t)];
    out.smooth_mean[static_cast<size_t>(t - 1)] =
        cur.marg_mean + gain * (mean_next - pm.mean);
    Mat cov = cur.marg_cov - gain * pm.cross.transpose() +
              gain * cov_next * gain.transpose();
    symmetrize(cov);
    out.smooth_cov[static_cast<size_t>(t - 1)] = std::move(cov);

    out.cross_cov[static_cast<size_t>(t - 1)] = pm.cross;
    out.pred_mean[static_cast<size_t>(t)] = pm.mean;
    out.pred_cov[static_cast<size_t>(t)] = pm.cov;
    out.pred_prob[static_cast<size_t>(t)] = {joint[0][0] + joint[1][0],
                                             joint[0][1] + joint[1][1]};
  }

  // Base-case prediction from the initial condition, using the kernel the
  // filter applied at t = 1.
  const FilterStep init_step = init_pseudo_step(model);
  const auto joint0 = joint_prior(init_step, filter.steps[0].trans);
  const PredictiveMoments pm0 = predictive_moments(init_step, model, joint0);
  out.pred_mean[0] = pm0.mean;
  out.pred_cov[0] = pm0.cov;
  out.pred_prob[0] = {joint0[0][0] + joint0[1][0], joint0[0][1] + joint0[1][1]};
  return out;
}

std::pair<Vec, double> one_step_predict(const FilterOutput& filter, int t,
                                        const ModelSpec& model, const Vec& x,
                                        const FeedbackPair& z_next) {
  if (t < 0 || t > filter.length())
    throw ConfigError("one_step_predict: t outside filter range");
  const FilterStep step =
      t == 0 ? init_pseudo_step(model) : filter.steps[static_cast<size_t>(t - 1)];
  const TransitionProbs trans =
      transition_probabilities(model.sw, x, z_next.z0, z_next.z1);
  const auto joint = joint_prior(step, trans);
  const PredictiveMoments pm = predictive_moments(step, model, joint);
  const double prob1 = step.regime_prob[0] * trans.p01 +
                       step.regime_prob[1] * trans.p11;
  return {pm.mean, prob1};
}

std::vector<double> smooth_state_means(const SubjectSeries& series,
                                       const ModelSpec& model,
                                       const FeedbackSeries& z) {
  const int n = series.length();
  std::vector<double> means(static_cast<size_t>(n));
  if (n == 0) return means;

  if (!model.is_scalar()) {
    const FilterOutput filter = run_filter(series, model, z);
    const SmootherOutput smooth = smooth_pass(filter, model);
    for (int t = 0; t < n; ++t)
      means[static_cast<size_t>(t)] = smooth.smooth_mean[static_cast<size_t>(t)](0);
    return means;
  }

  // Forward sweep retaining only what the backward mean recursion needs.
  std::vector<double> th_r(2 * static_cast<size_t>(n));
  std::vector<double> P_r(2 * static_cast<size_t>(n));
  std::vector<double> pr(2 * static_cast<size_t>(n));
  std::vector<double> th_m(static_cast<size_t>(n));
  detail::scalar_filter_sweep(series, model, z,
                              [&](const detail::ScalarStep& s) {
                                const size_t i = static_cast<size_t>(s.t - 1);
                                th_r[2 * i] = s.th_r[0];
                                th_r[2 * i + 1] = s.th_r[1];
                                P_r[2 * i] = s.P_r[0];
                                P_r[2 * i + 1] = s.P_r[1];
                                pr[2 * i] = s.pr[0];
                                pr[2 * i + 1] = s.pr[1];
                                th_m[i] = s.th_m;
                              });

  const SwitchSpec& sw = model.sw;
  const double xb0 = sw.d > 0 ? sw.beta[0].dot(series.x) : 0.0;
  const double xb1 = sw.d > 0 ? sw.beta[1].dot(series.x) : 0.0;

  means[static_cast<size_t>(n - 1)] = th_m[static_cast<size_t>(n - 1)];
  for (int t = n - 1; t >= 1; --t) {
    const size_t i = static_cast<size_t>(t - 1);
    const int t_next = t + 1;
    const double g[2] = {model.G[0].at(t_next)(0, 0),
                         model.G[1].at(t_next)(0, 0)};
    const double gam[2] = {model.gamma[0].at(t_next)(0),
                           model.gamma[1].at(t_next)(0)};
    const double w[2] = {model.W[0].at(t_next)(0, 0),
                         model.W[1].at(t_next)(0, 0)};

    const FeedbackPair& zt = z[static_cast<size_t>(t_next - 1)];
    const double p01 = logistic(sw.alpha[0] + xb0 + zt.z0);
    const double p11 = logistic(sw.alpha[1] + xb1 + zt.z1);
    const double trans[2][2] = {{1.0 - p01, p01}, {1.0 - p11, p11}};

    double mean_pred = 0.0, second = 0.0, cross2 = 0.0;
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) {
        const double jw = trans[p][q] * pr[2 * i + static_cast<size_t>(p)];
        const double mc = gam[q] + g[q] * th_r[2 * i + static_cast<size_t>(p)];
        mean_pred += jw * mc;
        second += jw * (g[q] * g[q] * P_r[2 * i + static_cast<size_t>(p)] +
                        w[q] + mc * mc);
        cross2 += jw * (th_r[2 * i + static_cast<size_t>(p)] * mc +
                        P_r[2 * i + static_cast<size_t>(p)] * g[q]);
      }
    }
    const double cov_pred =
        detail::psd_scalar(second - mean_pred * mean_pred, t,
                           "predicted covariance");
    const double cross = cross2 - th_m[i] * mean_pred;
    const double gain = cross / cov_pred;
    means[i] = th_m[i] + gain * (means[i + 1] - mean_pred);
  }
  return means;
}

}  // namespace mssfs
