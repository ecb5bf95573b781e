#ifndef MSSFS_DATA_HPP
#define MSSFS_DATA_HPP

#include <string>
#include <vector>

#include "types.hpp"

namespace mssfs {

// One observed series on a dense unit-step time grid. Missing observation
// elements are stored as NaN; a row of all-NaN is a fully missing time.
// Covariates are constant within the series and must be complete.
struct SubjectSeries {
  std::string subject;
  std::string arm;  // empty for single-arm data
  int t_start = 1;  // time label of the first slot
  std::vector<Vec> y;
  Vec x;

  int length() const { return static_cast<int>(y.size()); }
  std::string key() const { return arm.empty() ? subject : subject + "/" + arm; }
};

struct Dataset {
  std::vector<SubjectSeries> subjects;
  std::vector<std::string> covariate_names;
  std::string source_path;
  std::string format_version = "1";

  int num_series() const { return static_cast<int>(subjects.size()); }
  // Distinct subject ids (a subject may carry several arms).
  std::vector<std::string> subject_ids() const;
};

// Per-time feedback term pair (z_0, z_1), already scaled by zeta; entry i
// corresponds to time t = i + 1.
struct FeedbackPair {
  double z0 = 0.0;
  double z1 = 0.0;
};
using FeedbackSeries = std::vector<FeedbackPair>;

}  // namespace mssfs

#endif  // MSSFS_DATA_HPP
