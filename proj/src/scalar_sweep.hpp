#ifndef MSSFS_SCALAR_SWEEP_HPP
#define MSSFS_SCALAR_SWEEP_HPP

#include <cmath>

#include "data.hpp"
#include "filter.hpp"
#include "model.hpp"
#include "stats.hpp"

namespace mssfs::detail {

// Per-time quantities of the p = q = 1 filter in plain doubles.
struct ScalarStep {
  int t = 0;
  bool observed = false;
  double trans[2][2];    // [o][p]
  double th_pred[2][2];
  double P_pred[2][2];
  double eta[2][2];
  double H[2][2];
  double th_post[2][2];
  double P_post[2][2];
  double joint[2][2];
  double th_r[2];
  double P_r[2];
  double pr[2];
  double th_m = 0.0;
  double P_m = 0.0;
  double ll_inc = 0.0;
};

// Allocation-free scalar specialization of the filter recursion; must stay
// algebraically identical to the general path (asserted by tests).
template <typename Sink>
void scalar_filter_sweep(const SubjectSeries& series, const ModelSpec& model,
                         const FeedbackSeries& z, Sink&& sink) {
  const int n = series.length();
  const SwitchSpec& sw = model.sw;
  const Vec& x = series.x;
  const double xb0 = sw.d > 0 ? sw.beta[0].dot(x) : 0.0;
  const double xb1 = sw.d > 0 ? sw.beta[1].dot(x) : 0.0;

  double th[2] = {model.init.mean[0](0), model.init.mean[1](0)};
  double P[2] = {model.init.cov[0](0, 0), model.init.cov[1](0, 0)};
  double pr[2] = {model.init.prob0, 1.0 - model.init.prob0};

  ScalarStep s;
  for (int t = 1; t <= n; ++t) {
    s.t = t;
    const double g[2] = {model.G[0].at(t)(0, 0), model.G[1].at(t)(0, 0)};
    const double gam[2] = {model.gamma[0].at(t)(0), model.gamma[1].at(t)(0)};
    const double w[2] = {model.W[0].at(t)(0, 0), model.W[1].at(t)(0, 0)};
    const double f = model.F.at(t)(0, 0);
    const double v = model.V.at(t)(0, 0);

    const FeedbackPair& zt = z[static_cast<size_t>(t - 1)];
    const double p01 = logistic(sw.alpha[0] + xb0 + zt.z0);
    const double p11 = logistic(sw.alpha[1] + xb1 + zt.z1);
    s.trans[0][1] = p01;
    s.trans[0][0] = 1.0 - p01;
    s.trans[1][1] = p11;
    s.trans[1][0] = 1.0 - p11;

    const double yt = series.y[static_cast<size_t>(t - 1)](0);
    s.observed = std::isfinite(yt);

    double lw[2][2];
    for (int o = 0; o < 2; ++o) {
      for (int p = 0; p < 2; ++p) {
        const double mp = gam[p] + g[p] * th[o];
        const double pp = g[p] * P[o] * g[p] + w[p];
        s.th_pred[o][p] = mp;
        s.P_pred[o][p] = pp;
        const double prior = s.trans[o][p] * pr[o];
        double lp = std::log(std::max(prior, kProbFloor));
        if (s.observed) {
          const double eta = yt - f * mp;
          double h = f * pp * f + v;
          h = psd_scalar(h, t, "innovation covariance");
          const double k = pp * f / h;
          s.eta[o][p] = eta;
          s.H[o][p] = h;
          s.th_post[o][p] = mp + k * eta;
          s.P_post[o][p] = pp - k * f * pp;
          lp += -0.5 * (kLog2Pi + std::log(h) + eta * eta / h);
        } else {
          s.th_post[o][p] = mp;
          s.P_post[o][p] = pp;
        }
        lw[o][p] = lp;
      }
    }

    const double m =
        std::max(std::max(lw[0][0], lw[0][1]), std::max(lw[1][0], lw[1][1]));
    const double sum = std::exp(lw[0][0] - m) + std::exp(lw[0][1] - m) +
                       std::exp(lw[1][0] - m) + std::exp(lw[1][1] - m);
    s.ll_inc = s.observed ? m + std::log(sum) : 0.0;
    for (int o = 0; o < 2; ++o)
      for (int p = 0; p < 2; ++p)
        s.joint[o][p] = std::exp(lw[o][p] - m) / sum;

    for (int p = 0; p < 2; ++p) {
      const double mass = s.joint[0][p] + s.joint[1][p];
      s.pr[p] = mass;
      double w0 = 0.5, w1 = 0.5;
      if (mass > kProbFloor) {
        w0 = s.joint[0][p] / mass;
        w1 = s.joint[1][p] / mass;
      }
      const double mu = w0 * s.th_post[0][p] + w1 * s.th_post[1][p];
      const double d0 = s.th_post[0][p] - mu;
      const double d1 = s.th_post[1][p] - mu;
      s.th_r[p] = mu;
      s.P_r[p] = w0 * (s.P_post[0][p] + d0 * d0) + w1 * (s.P_post[1][p] + d1 * d1);
    }

    s.th_m = s.pr[0] * s.th_r[0] + s.pr[1] * s.th_r[1];
    const double e0 = s.th_r[0] - s.th_m;
    const double e1 = s.th_r[1] - s.th_m;
    s.P_m = s.pr[0] * (s.P_r[0] + e0 * e0) + s.pr[1] * (s.P_r[1] + e1 * e1);

    sink(s);

    th[0] = s.th_r[0];
    th[1] = s.th_r[1];
    P[0] = s.P_r[0];
    P[1] = s.P_r[1];
    pr[0] = s.pr[0];
    pr[1] = s.pr[1];
  }
}

}  // namespace mssfs::detail

#endif  // MSSFS_SCALAR_SWEEP_HPP
