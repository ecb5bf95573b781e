#ifndef MSSFS_SMOOTHER_HPP
#define MSSFS_SMOOTHER_HPP

#include <array>
#include <vector>

#include "data.hpp"
#include "filter.hpp"
#include "model.hpp"

namespace mssfs {

// Output of the fixed-interval smoother. Entry i of the smooth_* arrays is
// time t = i + 1; pairwise_prob entry i couples times (i+1, i+2); the pred_*
// arrays hold one-step-ahead quantities with entry i predicting time i + 1
// from time i (entry 0 predicts from the initial condition).
struct SmootherOutput {
  std::vector<Vec> smooth_mean;                      // theta_{t|T}
  std::vector<Mat> smooth_cov;                       // P_{t|T}
  std::vector<std::array<double, 2>> smooth_prob;    // Pr(I_t = p | psi_T)
  std::vector<std::array<std::array<double, 2>, 2>> pairwise_prob;  // [p][q]
  std::vector<Vec> pred_mean;                        // theta_{t+1|t}
  std::vector<Mat> pred_cov;                         // P_{t+1|t}
  std::vector<std::array<double, 2>> pred_prob;      // Pr(I_{t+1}=q | psi_t)
  std::vector<Mat> cross_cov;                        // Sigma_{t,t+1}, t=1..n-1
  std::vector<int> fallback_times;  // zero predicted-mass fallbacks (step 4)

  int length() const { return static_cast<int>(smooth_mean.size()); }
};

struct PredictiveMoments {
  Vec mean;       // theta_{t+1|t}
  Mat cross;      // Sigma_{t,t+1}
  Mat cov;        // P_{t+1|t}
};

// Mixture moments of (theta_t, theta_{t+1}) given psi_t. trans_joint[p][q] =
// Pr(I_t = p, I_{t+1} = q | psi_t) and must sum to one within 1e-10. The
// schedules are read at time step_t.t + 1.
PredictiveMoments predictive_moments(
    const FilterStep& step_t, const ModelSpec& model,
    const std::array<std::array<double, 2>, 2>& trans_joint);

struct SmoothedProbs {
  std::vector<std::array<std::array<double, 2>, 2>> pairwise;  // t = 1..n-1
  std::vector<std::array<double, 2>> marginal;                 // t = 1..n
  std::vector<int> fallback_times;
};

// Backward regime-probability recursion (Theorem-2-style step 4) using the
// transition kernels cached in the filter steps. A regime with zero
// predicted mass falls back to the filtered probability and is flagged.
SmoothedProbs smooth_probabilities(const FilterOutput& filter);

// Full backward pass over a completed filter sweep.
SmootherOutput smooth_pass(const FilterOutput& filter, const ModelSpec& model);

// One-step-ahead state mean and fever-regime probability from the filter
// prefix ending at time t (t = 0 predicts from the initial condition).
// z_next is the feedback pair for time t + 1.
std::pair<Vec, double> one_step_predict(const FilterOutput& filter, int t,
                                        const ModelSpec& model, const Vec& x,
                                        const FeedbackPair& z_next);

// Smoothed state means only (lead component per time). Scalar models take an
// allocation-free combined filter+smoother sweep; the general path runs
// run_filter + smooth_pass. Used for the EM plug-in update.
std::vector<double> smooth_state_means(const SubjectSeries& series,
                                       const ModelSpec& model,
                                       const FeedbackSeries& z);

}  // namespace mssfs

#endif  // MSSFS_SMOOTHER_HPP
