#ifndef MSSFS_ORACLE_HPP
#define MSSFS_ORACLE_HPP

#include <array>
#include <vector>

#include "data.hpp"
#include "model.hpp"
#include "types.hpp"

namespace mssfs {

// Exact two-regime posterior by enumeration over every regime path, for
// testing the collapsing approximations. Capped at n = 16.
struct ExactPosterior {
  int n = 0;
  // Posterior probability of each path I_{1:n} given y_{1:n}; index encodes
  // the path with bit (t-1) holding I_t (lexicographic in time).
  std::vector<double> path_probs;
  std::vector<std::array<double, 2>> filtered;  // Pr(I_t = p | y_{1:t})
  std::vector<std::array<double, 2>> smoothed;  // Pr(I_t = p | y_{1:n})
  double loglik = 0.0;                          // exact log p(y_{1:n})
};

// Runs a path-conditional linear Kalman filter for every regime path and
// combines them exactly in log space. The feedback terms z are plug-in
// values, so the oracle and the collapsed filter condition on the same
// switch kernels.
ExactPosterior exact_filter(const SubjectSeries& series, const ModelSpec& model,
                            const FeedbackSeries& z);

// Smoothed regime probabilities from the enumerated posterior.
std::vector<std::array<double, 2>> exact_smoother_probs(
    const ExactPosterior& posterior);

// Classical linear-Gaussian filter + fixed-interval smoother, written
// independently of the multiprocess recursion (reduction target when one
// regime is unreachable). Uses regime k of the model throughout.
struct KalmanReference {
  std::vector<Vec> filt_mean;
  std::vector<Mat> filt_cov;
  std::vector<Vec> smooth_mean;
  std::vector<Mat> smooth_cov;
  double loglik = 0.0;
};

KalmanReference standard_kalman_reference(const SubjectSeries& series,
                                          const ModelSpec& model, int regime);

}  // namespace mssfs

#endif  // MSSFS_ORACLE_HPP
