#include "bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "parallel.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace mssfs {

namespace {

// Series indices grouped by subject id, in first-appearance order.
std::vector<std::vector<std::size_t>> group_by_subject(const Dataset& data) {
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    const std::string& id = data.subjects[i].subject;
    auto it = seen.find(id);
    if (it == seen.end()) {
      seen[id] = groups.size();
      groups.push_back({i});
    } else {
      groups[it->second].push_back(i);
    }
  }
  return groups;
}

double empirical_quantile(const std::vector<double>& sorted, double a, int b) {
  int idx = static_cast<int>(std::ceil(a * b));
  idx = std::clamp(idx, 1, b);
  return sorted[static_cast<size_t>(idx - 1)];
}

}  // namespace

Dataset resample_dataset(const Dataset& data,
                         std::span<const std::size_t> subject_indices) {
  const auto groups = group_by_subject(data);
  Dataset out;
  out.covariate_names = data.covariate_names;
  out.format_version = data.format_version;
  out.source_path = data.source_path;

  std::map<std::string, int> copies;
  for (std::size_t gi : subject_indices) {
    if (gi >= groups.size())
      throw BootstrapError("resample index out of range");
    const int copy = copies[data.subjects[groups[gi][0]].subject]++;
    for (std::size_t si : groups[gi]) {
      SubjectSeries s = data.subjects[si];
      if (copy > 0) s.subject += "#" + std::to_string(copy);
      out.subjects.push_back(std::move(s));
    }
  }
  return out;
}

Dataset resample_dataset(const Dataset& data, uint64_t seed) {
  const auto groups = group_by_subject(data);
  const std::size_t m = groups.size();
  if (m < 2) throw BootstrapError("resampling requires at least 2 subjects");
  Rng rng(seed);
  std::vector<std::size_t> draws(m);
  for (auto& d : draws) d = rng.uniform_below(m);
  return resample_dataset(data, draws);
}

Interval bca_interval(std::span<const double> replicates,
                      std::span<const double> jackknife, double point,
                      double level) {
  const int b = static_cast<int>(replicates.size());
  if (b < 10) throw BootstrapError("bca_interval: fewer than 10 replicates");
  if (!(level > 0.0 && level < 1.0))
    throw BootstrapError("bca_interval: level outside (0, 1)");

  std::vector<double> sorted(replicates.begin(), replicates.end());
  std::sort(sorted.begin(), sorted.end());

  Interval out;

  // Bias correction from the replicate distribution.
  int below = 0;
  for (double r : replicates)
    if (r < point) ++below;
  double prop = static_cast<double>(below) / b;
  const double clamp_lo = 0.5 / b;
  if (prop < clamp_lo || prop > 1.0 - clamp_lo) {
    prop = std::clamp(prop, clamp_lo, 1.0 - clamp_lo);
    out.flags.z0_clamped = true;
  }
  const double z0 = norm_ppf(prop);

  // Acceleration from the jackknife influence values.
  double accel = 0.0;
  bool degenerate_jackknife = jackknife.empty();
  if (!degenerate_jackknife) {
    const double mean =
        std::accumulate(jackknife.begin(), jackknife.end(), 0.0) /
        static_cast<double>(jackknife.size());
    double s2 = 0.0, s3 = 0.0;
    for (double v : jackknife) {
      const double d = mean - v;
      s2 += d * d;
      s3 += d * d * d;
    }
    if (s2 <= 0.0) {
      degenerate_jackknife = true;
    } else {
      accel = s3 / (6.0 * std::pow(s2, 1.5));
    }
  }

  const double alpha = 1.0 - level;
  if (degenerate_jackknife) {
    out.flags.percentile_fallback = true;
    out.lower = empirical_quantile(sorted, alpha / 2.0, b);
    out.upper = empirical_quantile(sorted, 1.0 - alpha / 2.0, b);
    return out;
  }

  auto adjusted = [&](double a) {
    const double za = norm_ppf(a);
    const double num = z0 + za;
    return norm_cdf(z0 + num / (1.0 - accel * num));
  };

  out.lower = empirical_quantile(sorted, adjusted(alpha / 2.0), b);
  out.upper = empirical_quantile(sorted, adjusted(1.0 - alpha / 2.0), b);
  if (out.lower > out.upper) std::swap(out.lower, out.upper);
  return out;
}

namespace detail {

void check_failure_rate(int failures, int total,
                        const std::vector<std::string>& reasons) {
  if (total <= 0) throw BootstrapError("bootstrap: no replicates requested");
  if (failures * 5 > total) {
    std::string msg = "bootstrap: more than 20% of replicates failed (" +
                      std::to_string(failures) + "/" + std::to_string(total) +
                      ")";
    for (std::size_t i = 0; i < reasons.size() && i < 5; ++i)
      msg += "; " + reasons[i];
    throw BootstrapError(msg);
  }
}

}  // namespace detail

BootstrapResult run_bootstrap(const Dataset& data, const ModelBuilder& builder,
                              const FitResult& base, const EmConfig& config,
                              int b, double level, uint64_t seed) {
  if (b < 1) throw BootstrapError("run_bootstrap: B must be >= 1");
  const auto groups = group_by_subject(data);
  const std::size_t m = groups.size();
  if (m < 2) throw BootstrapError("run_bootstrap: need at least 2 subjects");

  EmConfig refit_config = config;
  refit_config.n_max = std::max(1, (config.n_max + 1) / 2);
  refit_config.threads = 1;  // parallelism lives across replicates

  BootstrapResult out;
  out.b = b;
  out.level = level;
  for (const auto& e : base.params.entries())
    if (!e.fixed) out.param_names.push_back(e.name);

  auto fit_values =
      [&](const Dataset& d) -> std::vector<double> {
    const FitResult r = fit(d, builder, base.params, refit_config);
    std::vector<double> values;
    for (const auto& e : r.params.entries())
      if (!e.fixed) values.push_back(e.value);
    return values;
  };

  // Replicates: independent jobs with derived seeds, aggregated in order.
  std::vector<std::optional<std::vector<double>>> reps(
      static_cast<size_t>(b));
  std::vector<std::string> errors(static_cast<size_t>(b));
  parallel_for_index(static_cast<size_t>(b), config.threads,
                     [&](std::size_t i) {
                       try {
                         const Dataset d = resample_dataset(
                             data, mix_seed(seed, i));
                         reps[i] = fit_values(d);
                       } catch (const std::exception& e) {
                         errors[i] = e.what();
                       }
                     });

  std::vector<std::string> reasons;
  for (int i = 0; i < b; ++i) {
    if (reps[static_cast<size_t>(i)]) {
      out.estimates.push_back(*reps[static_cast<size_t>(i)]);
    } else {
      ++out.failures;
      reasons.push_back("replicate " + std::to_string(i) + ": " +
                        errors[static_cast<size_t>(i)]);
    }
  }
  out.failure_reasons = reasons;
  detail::check_failure_rate(out.failures, b, reasons);

  // Jackknife: leave one subject out.
  out.jackknife.resize(m);
  parallel_for_index(m, config.threads, [&](std::size_t leave) {
    std::vector<std::size_t> keep;
    for (std::size_t gi = 0; gi < m; ++gi)
      if (gi != leave) keep.push_back(gi);
    const Dataset d = resample_dataset(data, keep);
    out.jackknife[leave] = fit_values(d);
  });

  const std::size_t k = out.param_names.size();
  std::vector<double> point;
  for (const auto& e : base.params.entries())
    if (!e.fixed) point.push_back(e.value);

  out.intervals.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> reps_j, jack_j;
    for (const auto& row : out.estimates) reps_j.push_back(row[j]);
    for (const auto& row : out.jackknife) jack_j.push_back(row[j]);
    out.intervals[j] = bca_interval(reps_j, jack_j, point[j], level);
  }
  return out;
}

}  // namespace mssfs
