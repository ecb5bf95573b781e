#include "oracle.hpp"

#include <cmath>
#include <limits>

#include "filter.hpp"
#include "stats.hpp"

namespace mssfs {

namespace {

constexpr int kMaxEnumLength = 16;

// Streaming log-sum-exp accumulator.
struct StreamLse {
  double m = -std::numeric_limits<double>::infinity();
  double s = 0.0;

  void add(double lw) {
    if (!std::isfinite(lw)) return;
    if (lw <= m) {
      s += std::exp(lw - m);
    } else {
      s = s * std::exp(m - lw) + 1.0;
      m = lw;
    }
  }

  double value() const {
    if (!std::isfinite(m)) return m;
    return m + std::log(s);
  }
};

double log_add(double a, double b) {
  if (!std::isfinite(a)) return b;
  if (!std::isfinite(b)) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct EnumContext {
  const ModelSpec* model;
  const SubjectSeries* series;
  const FeedbackSeries* z;
  int n;
  std::vector<SubsetObservation> subsets;      // one per t
  std::vector<TransitionProbs> trans;          // kernel at each t
  std::vector<std::array<StreamLse, 2>> filt;  // prefix mass per (t, I_t)
  std::vector<std::array<StreamLse, 2>> smooth;
  std::vector<double> path_lw;                 // per path over I_{1:n}
  StreamLse total;
  std::vector<int> path;
};

// Depth-first walk over regime prefixes. Each prefix node carries the
// path-conditional Kalman state and the joint log-mass p(y_{1:t}, I_{0:t}).
void enumerate(EnumContext& ctx, int t, int k_prev, const Vec& th, const Mat& P,
               double lw, unsigned path_bits) {
  if (t > ctx.n) {
    ctx.total.add(lw);
    for (int u = 1; u <= ctx.n; ++u)
      ctx.smooth[static_cast<size_t>(u - 1)]
          [static_cast<size_t>(ctx.path[static_cast<size_t>(u - 1)])].add(lw);
    double& slot = ctx.path_lw[path_bits];
    slot = log_add(slot, lw);
    return;
  }

  const ModelSpec& model = *ctx.model;
  const auto& subset = ctx.subsets[static_cast<size_t>(t - 1)];
  const bool observed = subset.pattern.kind != MissingPattern::Kind::Full;
  const int obs_dim = subset.pattern.observed_count(model.p);

  for (int k = 0; k < 2; ++k) {
    const double pk = ctx.trans[static_cast<size_t>(t - 1)].at(k_prev, k);
    double lw2 = lw + std::log(std::max(pk, kProbFloor));

    const Mat& G = model.G[k].at(t);
    Vec th2 = model.gamma[k].at(t) + G * th;
    Mat P2 = G * P * G.transpose() + model.W[k].at(t);
    P2 = 0.5 * (P2 + P2.transpose()).eval();

    if (observed) {
      const Vec eta = subset.y - subset.F * th2;
      Mat H = subset.F * P2 * subset.F.transpose() + subset.V;
      H = 0.5 * (H + H.transpose()).eval();
      const Eigen::LLT<Mat> llt(H);
      if (llt.info() != Eigen::Success)
        throw NumericError("exact_filter: singular innovation covariance", t);
      const Vec sol = llt.solve(eta);
      const double logdet =
          2.0 * llt.matrixLLT().diagonal().array().log().sum();
      lw2 += -0.5 * (obs_dim * kLog2Pi + logdet + eta.dot(sol));
      const Mat PFt = P2 * subset.F.transpose();
      th2 += PFt * sol;
      P2 -= PFt * llt.solve(subset.F * P2);
      P2 = 0.5 * (P2 + P2.transpose()).eval();
    }

    ctx.filt[static_cast<size_t>(t - 1)][static_cast<size_t>(k)].add(lw2);
    ctx.path[static_cast<size_t>(t - 1)] = k;
    enumerate(ctx, t + 1, k, th2, P2, lw2,
              path_bits | (static_cast<unsigned>(k) << (t - 1)));
  }
}

}  // namespace

ExactPosterior exact_filter(const SubjectSeries& series, const ModelSpec& model,
                            const FeedbackSeries& z) {
  const int n = series.length();
  if (n > kMaxEnumLength)
    throw CapacityError("exact_filter: series longer than " +
                        std::to_string(kMaxEnumLength));
  if (static_cast<int>(z.size()) != n)
    throw ConfigError("exact_filter: feedback series length mismatch");

  ExactPosterior out;
  out.n = n;
  if (n == 0) return out;

  EnumContext ctx;
  ctx.model = &model;
  ctx.series = &series;
  ctx.z = &z;
  ctx.n = n;
  ctx.subsets.reserve(static_cast<size_t>(n));
  ctx.trans.reserve(static_cast<size_t>(n));
  for (int t = 1; t <= n; ++t) {
    ctx.subsets.push_back(subset_observation(series.y[static_cast<size_t>(t - 1)],
                                             model.F.at(t), model.V.at(t)));
    const FeedbackPair& zt = z[static_cast<size_t>(t - 1)];
    ctx.trans.push_back(
        transition_probabilities(model.sw, series.x, zt.z0, zt.z1));
  }
  ctx.filt.resize(static_cast<size_t>(n));
  ctx.smooth.resize(static_cast<size_t>(n));
  ctx.path_lw.assign(1u << n, -std::numeric_limits<double>::infinity());
  ctx.path.resize(static_cast<size_t>(n));

  const std::array<double, 2> init_prob{model.init.prob0,
                                        1.0 - model.init.prob0};
  for (int k0 = 0; k0 < 2; ++k0) {
    if (init_prob[static_cast<size_t>(k0)] <= 0.0) continue;
    enumerate(ctx, 1, k0, model.init.mean[static_cast<size_t>(k0)],
              model.init.cov[static_cast<size_t>(k0)],
              std::log(init_prob[static_cast<size_t>(k0)]), 0u);
  }

  out.loglik = ctx.total.value();
  out.path_probs.resize(ctx.path_lw.size());
  for (std::size_t i = 0; i < ctx.path_lw.size(); ++i)
    out.path_probs[i] = std::exp(ctx.path_lw[i] - out.loglik);

  out.filtered.resize(static_cast<size_t>(n));
  out.smoothed.resize(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    const double f0 = ctx.filt[static_cast<size_t>(t)][0].value();
    const double f1 = ctx.filt[static_cast<size_t>(t)][1].value();
    const double fn = log_add(f0, f1);
    out.filtered[static_cast<size_t>(t)] = {std::exp(f0 - fn),
                                            std::exp(f1 - fn)};
    const double s0 = ctx.smooth[static_cast<size_t>(t)][0].value();
    const double s1 = ctx.smooth[static_cast<size_t>(t)][1].value();
    out.smoothed[static_cast<size_t>(t)] = {std::exp(s0 - out.loglik),
                                            std::exp(s1 - out.loglik)};
  }
  return out;
}

std::vector<std::array<double, 2>> exact_smoother_probs(
    const ExactPosterior& posterior) {
  return posterior.smoothed;
}

KalmanReference standard_kalman_reference(const SubjectSeries& series,
                                          const ModelSpec& model, int regime) {
  if (regime < 0 || regime > 1)
    throw ConfigError("standard_kalman_reference: regime must be 0 or 1");
  const int n = series.length();
  const int k = regime;

  KalmanReference out;
  out.filt_mean.resize(static_cast<size_t>(n));
  out.filt_cov.resize(static_cast<size_t>(n));
  if (n == 0) return out;

  std::vector<Vec> pred_mean(static_cast<size_t>(n));
  std::vector<Mat> pred_cov(static_cast<size_t>(n));

  Vec th = model.init.mean[static_cast<size_t>(k)];
  Mat P = model.init.cov[static_cast<size_t>(k)];

  for (int t = 1; t <= n; ++t) {
    const size_t i = static_cast<size_t>(t - 1);
    const Mat& G = model.G[k].at(t);
    th = model.gamma[k].at(t) + G * th;
    P = G * P * G.transpose() + model.W[k].at(t);
    pred_mean[i] = th;
    pred_cov[i] = P;

    const Vec& y_t = series.y[i];
    std::vector<int> obs;
    for (int j = 0; j < y_t.size(); ++j)
      if (std::isfinite(y_t[j])) obs.push_back(j);

    if (!obs.empty()) {
      const int r = static_cast<int>(obs.size());
      const Mat& F_full = model.F.at(t);
      const Mat& V_full = model.V.at(t);
      Mat F(r, model.q), V(r, r);
      Vec y(r);
      for (int a = 0; a < r; ++a) {
        y[a] = y_t[obs[static_cast<size_t>(a)]];
        F.row(a) = F_full.row(obs[static_cast<size_t>(a)]);
        for (int b = 0; b < r; ++b)
          V(a, b) = V_full(obs[static_cast<size_t>(a)],
                           obs[static_cast<size_t>(b)]);
      }
      const Vec eta = y - F * th;
      const Mat H = F * P * F.transpose() + V;
      const double det = H.determinant();
      if (!(det > 0.0))
        throw NumericError("standard kalman: singular innovation covariance",
                           t);
      const Mat Hinv = H.inverse();
      const Mat K = P * F.transpose() * Hinv;
      th = th + K * eta;
      P = P - K * F * P;
      out.loglik += -0.5 * (r * kLog2Pi + std::log(det) +
                            eta.dot(Hinv * eta));
    }
    out.filt_mean[i] = th;
    out.filt_cov[i] = P;
  }

  out.smooth_mean = out.filt_mean;
  out.smooth_cov = out.filt_cov;
  for (int t = n - 1; t >= 1; --t) {
    const size_t i = static_cast<size_t>(t - 1);
    const Mat& G = model.G[k].at(t + 1);
    const Mat C =
        out.filt_cov[i] * G.transpose() * pred_cov[i + 1].inverse();
    out.smooth_mean[i] =
        out.filt_mean[i] + C * (out.smooth_mean[i + 1] - pred_mean[i + 1]);
    out.smooth_cov[i] =
        out.filt_cov[i] +
        C * (out.smooth_cov[i + 1] - pred_cov[i + 1]) * C.transpose();
  }
  return out;
}

}  // namespace mssfs
