#ifndef MSSFS_OPTIMIZER_HPP
#define MSSFS_OPTIMIZER_HPP

#include <functional>
#include <span>
#include <vector>

#include "types.hpp"

namespace mssfs {

using Objective = std::function<double(std::span<const double>)>;

// Per-coordinate box bounds; empty vectors mean unbounded.
struct BoxBounds {
  std::vector<double> lower;
  std::vector<double> upper;

  bool empty() const { return lower.empty() && upper.empty(); }
  void project(std::vector<double>& x) const;
};

struct OptimizerConfig {
  int max_evals = 800;     // objective-evaluation budget per call
  double fd_step = 1e-5;   // central finite-difference step
  double grad_tol = 1e-3;  // projected-gradient infinity norm
  double f_tol = 1e-10;    // relative objective-change stop
  int history = 10;        // quasi-Newton memory
  double max_step = 1.0;   // per-coordinate cap on one trial move
};

struct OptimResult {
  std::vector<double> x;
  double f = 0.0;
  int evals = 0;
  int iterations = 0;
  bool converged = false;
};

// Central finite-difference gradient (2k evaluations).
std::vector<double> fd_gradient(const Objective& f, std::span<const double> x,
                                double step);

// Limited-memory BFGS with box constraints handled by gradient projection
// and a projected backtracking line search. Descent is guaranteed: the
// returned point is the best one evaluated, never worse than the start.
OptimResult minimize_bounded(const Objective& f, std::vector<double> x0,
                             const BoxBounds& bounds,
                             const OptimizerConfig& config);

}  // namespace mssfs

#endif  // MSSFS_OPTIMIZER_HPP
