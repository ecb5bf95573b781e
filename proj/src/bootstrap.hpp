#ifndef MSSFS_BOOTSTRAP_HPP
#define MSSFS_BOOTSTRAP_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "data.hpp"
#include "em.hpp"
#include "model.hpp"

namespace mssfs {

struct IntervalFlags {
  bool percentile_fallback = false;  // zero jackknife variance
  bool z0_clamped = false;           // all replicates on one side of the point
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  IntervalFlags flags;
};

struct BootstrapResult {
  int b = 0;
  double level = 0.95;
  std::vector<std::string> param_names;
  // replicate fits on the constrained scale, one row per converged replicate
  std::vector<std::vector<double>> estimates;
  std::vector<std::vector<double>> jackknife;  // one row per left-out subject
  std::vector<Interval> intervals;
  int failures = 0;
  std::vector<std::string> failure_reasons;
};

// Draws m subjects with replacement, keeping all arms of a subject together;
// copies are relabeled "<id>#<k>" to keep series keys unique.
Dataset resample_dataset(const Dataset& data,
                         std::span<const std::size_t> subject_indices);
Dataset resample_dataset(const Dataset& data, uint64_t seed);

// BCa interval from replicate and jackknife statistics. The empirical
// quantile convention is q(a) = sorted[clamp(ceil(a * B), 1, B)] on 1-based
// order statistics; zero jackknife variance falls back to the plain
// percentile interval.
Interval bca_interval(std::span<const double> replicates,
                      std::span<const double> jackknife, double point,
                      double level);

// Subject-level bootstrap around an existing base fit. Replicate and
// jackknife refits warm-start at the base estimate with the iteration cap
// halved; more than 20% failed replicates aborts.
BootstrapResult run_bootstrap(const Dataset& data, const ModelBuilder& builder,
                              const FitResult& base, const EmConfig& config,
                              int b, double level, uint64_t seed);

namespace detail {
// Aggregation guard shared with tests: throws BootstrapError when more than
// 20% of replicates failed.
void check_failure_rate(int failures, int total,
                        const std::vector<std::string>& reasons);
}  // namespace detail

}  // namespace mssfs

#endif  // MSSFS_BOOTSTRAP_HPP
