#ifndef MSSFS_MODEL_HPP
#define MSSFS_MODEL_HPP

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "types.hpp"

namespace mssfs {

// Exponentially weighted feedback over the previous L latent states. Weights
// are w_l = exp(rho * (L - l + 1)) for l = 1..L, pairing w_1 with the oldest
// lag in the window; with fewer than L lags available the weights keep their
// original values restricted to the available lags. When normalize is set the
// active weights are rescaled to sum to one.
struct FeedbackSpec {
  int L = 3;
  double rho = 0.5;
  bool normalize = true;
};

// Logistic switch equations. pi_01 = logistic(alpha[0] + x'beta[0] + z0) is
// the probability of moving 0 -> 1 and pi_11 = logistic(alpha[1] + x'beta[1]
// + z1) the probability of staying at 1.
struct SwitchSpec {
  int d = 0;
  std::array<double, 2> alpha{0.0, 0.0};
  std::array<Vec, 2> beta{};
  std::array<double, 2> zeta{0.0, 0.0};
  FeedbackSpec feedback{};
};

struct InitialCondition {
  std::array<Vec, 2> mean{};
  std::array<Mat, 2> cov{};
  double prob0 = 1.0;  // Pr(I_0 = 0)
  bool mean_estimable = false;
  bool cov_estimable = false;
  bool prob0_estimable = false;
};

// Full model family: observation equation y_t = F theta_t + v, per-regime
// system equations theta_t = gamma_k + G_k theta_{t-1} + w_k, and the switch
// equations above. Immutable after construction.
struct ModelSpec {
  int p = 1;
  int q = 1;
  int n_max = 0;  // 0 means unlimited / constant schedules only

  Schedule<Mat> F;
  std::array<Schedule<Mat>, 2> G;
  std::array<Schedule<Vec>, 2> gamma;
  Schedule<Mat> V;
  std::array<Schedule<Mat>, 2> W;

  SwitchSpec sw;
  InitialCondition init;

  bool is_scalar() const { return p == 1 && q == 1; }

  // Throws ConfigError on dimension mismatches or non-PSD covariance entries.
  void validate() const;
};

struct TransitionProbs {
  double p01, p00, p11, p10;
  // pi[o][p] = Pr(I_t = p | I_{t-1} = o)
  double at(int o, int p) const {
    return o == 0 ? (p == 1 ? p01 : p00) : (p == 1 ? p11 : p10);
  }
};

// z0 and z1 are the full feedback terms (already scaled by zeta). Rows sum
// to one exactly because the complements are formed by subtraction.
TransitionProbs transition_probabilities(const SwitchSpec& sw, const Vec& x,
                                         double z0, double z1);

// Weighted average of the available history, without the zeta factor.
// history spans theta_1 .. theta_{t-1} (scalar summaries); returns 0 at t=1.
double feedback_average(const FeedbackSpec& spec,
                        std::span<const double> history, int t);

// zeta * feedback_average.
double feedback_value(const FeedbackSpec& spec, double zeta,
                      std::span<const double> history, int t);

enum class TransformKind { Identity, Log, Logit };

struct ParamEntry {
  std::string name;
  double value = 0.0;  // constrained scale
  TransformKind transform = TransformKind::Identity;
  bool fixed = false;
  bool penalized = false;
};

// Named parameter vector with per-entry bijective transforms between the
// constrained scale (storage) and the unconstrained scale (optimization).
class ParameterSet {
 public:
  void add(const std::string& name, double value,
           TransformKind transform = TransformKind::Identity,
           bool fixed = false, bool penalized = false);

  bool has(const std::string& name) const;
  double get(const std::string& name) const;
  void set(const std::string& name, double value);
  void set_fixed(const std::string& name, bool fixed);

  std::size_t size() const { return entries_.size(); }
  const ParamEntry& entry(std::size_t i) const { return entries_[i]; }
  const std::vector<ParamEntry>& entries() const { return entries_; }

  std::size_t free_count() const;
  std::vector<std::string> free_names() const;

  // Packs the free entries onto the unconstrained scale (optimizer order =
  // declaration order). Throws DomainError if a constrained value violates
  // its transform domain.
  std::vector<double> free_unconstrained() const;
  void set_free_unconstrained(std::span<const double> u);

  // L2 penalty mass: sum of squared unconstrained values of penalized
  // entries (all penalized entries use the identity transform here).
  double penalized_sq_norm() const;

 private:
  std::vector<ParamEntry> entries_;
  std::map<std::string, std::size_t> index_;
};

enum class TransformDirection { ToUnconstrained, ToConstrained };

// Applies each entry's transform to its value, keeping names and tags.
ParameterSet apply_transform(const ParameterSet& params,
                             TransformDirection direction);

double transform_value(double value, TransformKind kind,
                       TransformDirection direction);

// Parameter vector of the scalar temperature model: observation noise
// sigma_v2; regime 0 (baseline) with rate G_0 and noise sigma_0_2; regime 1
// (elevated) reverting to level delta with rate G_1, drift delta*(1-G_1) and
// noise sigma_1_2; logistic switch parameters alpha_0, beta_0_*, alpha_1,
// beta_1_*, zeta_1 with the regime-1 block penalized.
ParameterSet temperature_parameters(int d);

// Builds the scalar ModelSpec from a temperature parameter vector.
// Feedback enters pi_11 only (zeta_0 = 0); everyone starts in regime 0 with
// exactly known initial levels 0 and delta.
ModelSpec temperature_preset(const ParameterSet& params,
                             const FeedbackSpec& feedback = FeedbackSpec{});

// Model generator used by the EM loop: candidate parameters -> ModelSpec.
using ModelBuilder = std::function<ModelSpec(const ParameterSet&)>;

ModelBuilder temperature_builder(const FeedbackSpec& feedback = FeedbackSpec{});

}  // namespace mssfs

#endif  // MSSFS_MODEL_HPP
