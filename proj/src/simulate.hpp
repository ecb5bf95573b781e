#ifndef MSSFS_SIMULATE_HPP
#define MSSFS_SIMULATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "data.hpp"
#include "model.hpp"

namespace mssfs {

struct SimulatedSubject {
  SubjectSeries series;
  std::vector<double> true_states;  // lead state component per time
  std::vector<int> true_regimes;
  uint64_t seed = 0;
};

enum class FeedbackSetting { Positive, Negative };

struct StudyDesign {
  int m = 100;
  int n = 101;
  FeedbackSetting setting = FeedbackSetting::Positive;
  double delta = 10.0;
  double missing_rate = 0.0;  // fraction of fully missing times
  uint64_t base_seed = 1;
  FeedbackSpec feedback{};
};

// True parameter vector for a study design: the standard noise levels and
// switch coefficients with (alpha_1, zeta_1) = (0.2, 0.3) for the positive
// setting and (4, -0.3) for the negative one.
ParameterSet study_parameters(const StudyDesign& design);

// Draws one series from the generative model: regime moves use the logistic
// kernel with feedback computed from the true past states, states follow
// the active system equation, observations add measurement noise.
SimulatedSubject simulate_subject(const ModelSpec& model, int n, const Vec& x,
                                  uint64_t seed,
                                  const std::string& subject_id = "s",
                                  const std::string& arm = "",
                                  double missing_rate = 0.0);

struct SimulatedStudy {
  Dataset dataset;
  std::vector<SimulatedSubject> subjects;
  ParameterSet truth;
};

// Full study draw: covariates x1 ~ Bernoulli(0.605), x2 ~ N(0, 1); one
// series per subject; per-subject seeds derived from the base seed.
SimulatedStudy simulate_study(const StudyDesign& design);

}  // namespace mssfs

#endif  // MSSFS_SIMULATE_HPP
