#ifndef MSSFS_FILTER_HPP
#define MSSFS_FILTER_HPP

#include <array>
#include <optional>
#include <vector>

#include "data.hpp"
#include "model.hpp"
#include "types.hpp"

namespace mssfs {

// Which elements of y_t are observed.
struct MissingPattern {
  enum class Kind { None, Partial, Full };
  Kind kind = Kind::None;
  std::vector<int> observed;  // sorted indices into the p slots (Partial only)

  int observed_count(int p) const {
    switch (kind) {
      case Kind::None: return p;
      case Kind::Partial: return static_cast<int>(observed.size());
      case Kind::Full: return 0;
    }
    return 0;
  }
};

struct SubsetObservation {
  MissingPattern pattern;
  Vec y;  // observed elements only
  Mat F;
  Mat V;
};

// Removes the rows of F and rows/columns of V matching missing (NaN) slots
// of y_t; equivalent to premultiplying the observation equation by the
// subsetting matrix that keeps observed rows of the identity.
SubsetObservation subset_observation(const Vec& y_t, const Mat& F_t,
                                     const Mat& V_t);

// Moment-matched single Gaussian for a finite mixture. Weights must be
// nonnegative and sum to one (within 1e-10).
void collapse_mixture(std::span<const double> weights,
                      std::span<const Vec> means, std::span<const Mat> covs,
                      Vec& mean_out, Mat& cov_out);

// All per-time quantities of the multiprocess filter. Pair arrays are
// indexed [o][p] = (previous regime, current regime).
struct FilterStep {
  int t = 0;
  TransitionProbs trans{};  // kernel used at this step
  MissingPattern pattern;

  std::array<std::array<Vec, 2>, 2> pred_mean;
  std::array<std::array<Mat, 2>, 2> pred_cov;
  std::array<std::array<Vec, 2>, 2> innovation;      // empty when fully missing
  std::array<std::array<Mat, 2>, 2> innovation_cov;  // empty when fully missing
  std::array<std::array<Vec, 2>, 2> post_mean_pair;
  std::array<std::array<Mat, 2>, 2> post_cov_pair;
  std::array<std::array<double, 2>, 2> joint_prob{};  // Pr(I_{t-1}=o, I_t=p | psi_t)

  std::array<Vec, 2> regime_mean;
  std::array<Mat, 2> regime_cov;
  std::array<double, 2> regime_prob{};  // Pr(I_t=p | psi_t)

  Vec marg_mean;
  Mat marg_cov;
  double loglik_inc = 0.0;  // log p(y_t | psi_{t-1}); 0 when fully missing
};

struct FilterOutput {
  std::vector<FilterStep> steps;
  double loglik = 0.0;

  int length() const { return static_cast<int>(steps.size()); }
};

// Regime-conditional moments carried between filter steps.
struct RegimeState {
  std::array<Vec, 2> mean;
  std::array<Mat, 2> cov;
  std::array<double, 2> prob{};
};

RegimeState initial_state(const ModelSpec& model);

// One step of the multiprocess Kalman filter: prediction, innovation,
// posterior update, probability update in log space, and the two collapse
// stages. Fully missing observations propagate the prediction and the
// transition kernel alone and contribute nothing to the log-likelihood.
FilterStep filter_step(const RegimeState& prev, const ModelSpec& model, int t,
                       const Vec& x, const FeedbackPair& z, const Vec& y_t);

// Filter over t = 1..n. z covers one (z_0, z_1) pair per time.
FilterOutput run_filter(const SubjectSeries& series, const ModelSpec& model,
                        const FeedbackSeries& z);

// Log-likelihood only; algebraically identical to run_filter(...).loglik but
// avoids materializing the per-step record (hot path of the EM objective).
double filter_loglik(const SubjectSeries& series, const ModelSpec& model,
                     const FeedbackSeries& z);

// z pairs from zeta-scaled feedback averages u_t (shared by both regimes).
FeedbackSeries feedback_series_from_averages(const SwitchSpec& sw,
                                             std::span<const double> averages);

namespace detail {
// Symmetric positive-definite solve used by filter and smoother: one jitter
// of 1e-10 * trace/dim is added if the factorization fails, then the step
// errors out. Returns the (possibly jittered) LLT factorization.
Eigen::LLT<Mat> psd_factorize(const Mat& m, int t, const char* what);

// Scalar counterpart of the compiled-in jitter policy.
double psd_scalar(double h, int t, const char* what);
}  // namespace detail

}  // namespace mssfs

#endif  // MSSFS_FILTER_HPP
