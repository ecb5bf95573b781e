#ifndef MSSFS_EM_HPP
#define MSSFS_EM_HPP

#include <vector>

#include "data.hpp"
#include "model.hpp"
#include "optimizer.hpp"
#include "smoother.hpp"

namespace mssfs {

struct EmConfig {
  int n_max = 30;        // maximum EM iterations
  double d_em = 0.001;   // relative-change stopping threshold
  double kappa = 1e-6;   // underflow guard in the stopping statistic
  double lambda = 0.01;  // L2 penalty on the regime-1 switch block
  OptimizerConfig optimizer{};
  // Box rails on the unconstrained scale. 30 on the transformed entries
  // floors variances at exp(-30) and keeps the logit entries inside (0,1).
  double bound_transformed = 30.0;
  double bound_identity = 50.0;
  int threads = 1;
};

struct FitResult {
  ParameterSet params;  // constrained scale
  std::vector<double> loglik_trace;  // penalized log-likelihood per iteration
  std::vector<double> d_em_trace;
  int iterations = 0;
  bool converged = false;
  // Set when three consecutive objective increases beyond the tolerated
  // 1e-4 relative slack stopped the loop.
  bool aborted_nonmonotone = false;
  std::vector<FilterOutput> filtered;    // per series, at the final params
  std::vector<SmootherOutput> smoothed;  // per series, at the final params
  std::vector<FeedbackSeries> z_hat;     // final plug-in feedback values
};

// Per-series feedback averages u_t (unscaled by zeta); entry [i][t-1].
using FeedbackAverages = std::vector<std::vector<double>>;

// -sum_i loglik_i(params; z_i = zeta * u_i) + lambda * |penalized block|^2.
// Subjects are filtered independently and reduced in series order.
double penalized_negloglik(const ParameterSet& params, const Dataset& data,
                           const FeedbackAverages& averages,
                           const ModelBuilder& builder, double lambda,
                           int threads = 1);

// Bounded quasi-Newton update of the unconstrained parameters. The result
// never has a worse objective than the start.
std::vector<double> m_step(const Objective& objective,
                           std::vector<double> start, const BoxBounds& bounds,
                           const OptimizerConfig& config);

// u_t sequence for one series from smoothed state means.
std::vector<double> feedback_averages_from_means(
    const FeedbackSpec& spec, std::span<const double> means);

// Spec surface: zeta-scaled plug-in feedback values from smoothed means.
FeedbackSeries plugin_feedback(const SmootherOutput& smoothed,
                               const ModelSpec& model);

// d_EM = |curr - prev|^2 / (|prev|^2 + kappa).
double check_convergence(std::span<const double> prev,
                         std::span<const double> curr, double kappa);

// Box bounds for the free entries of a parameter set.
BoxBounds default_bounds(const ParameterSet& params, const EmConfig& config);

// Approximate EM: a no-feedback initialization fit (zeta frozen at zero),
// then alternating bounded quasi-Newton M-steps on the collapsed filter
// likelihood at fixed plug-in feedback with smoother-based plug-in updates.
FitResult fit(const Dataset& data, const ModelBuilder& builder,
              const ParameterSet& start, const EmConfig& config);

}  // namespace mssfs

#endif  // MSSFS_EM_HPP
