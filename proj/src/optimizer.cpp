#include "optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace mssfs {

void BoxBounds::project(std::vector<double>& x) const {
  if (!lower.empty())
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = std::max(x[i], lower[i]);
  if (!upper.empty())
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = std::min(x[i], upper[i]);
}

std::vector<double> fd_gradient(const Objective& f, std::span<const double> x,
                                double step) {
  std::vector<double> g(x.size());
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = probe[i];
    probe[i] = xi + step;
    const double fp = f(probe);
    probe[i] = xi - step;
    const double fm = f(probe);
    probe[i] = xi;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

namespace {

// Zeroes gradient components that point out of the feasible box at an
// active bound.
std::vector<double> projected_gradient(const std::vector<double>& x,
                                       const std::vector<double>& g,
                                       const BoxBounds& b) {
  std::vector<double> pg = g;
  const double edge = 1e-12;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!b.lower.empty() && x[i] <= b.lower[i] + edge && g[i] > 0.0) pg[i] = 0.0;
    if (!b.upper.empty() && x[i] >= b.upper[i] - edge && g[i] < 0.0) pg[i] = 0.0;
  }
  return pg;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

OptimResult minimize_bounded(const Objective& f, std::vector<double> x0,
                             const BoxBounds& bounds,
                             const OptimizerConfig& config) {
  const std::size_t dim = x0.size();
  OptimResult result;
  bounds.project(x0);

  std::vector<double> x = x0;
  int evals = 0;
  auto eval = [&](std::span<const double> p) {
    ++evals;
    const double v = f(p);
    if (std::isnan(v)) throw FitError("objective evaluated to NaN");
    return v;
  };

  double fx = eval(x);
  result.x = x;
  result.f = fx;
  if (dim == 0) {
    result.evals = evals;
    result.converged = true;
    return result;
  }

  auto gradient = [&](const std::vector<double>& p) {
    evals += 2 * static_cast<int>(dim);
    return fd_gradient(f, p, config.fd_step);
  };

  std::vector<double> g = gradient(x);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  int flat_count = 0;

  auto record_best = [&](const std::vector<double>& p, double v) {
    if (v < result.f) {
      result.f = v;
      result.x = p;
    }
  };

  for (int iter = 0; evals < config.max_evals; ++iter) {
    result.iterations = iter;
    const auto pg = projected_gradient(x, g, bounds);
    if (inf_norm(pg) <= config.grad_tol) {
      result.converged = true;
      break;
    }

    // Two-loop recursion for the quasi-Newton direction.
    std::vector<double> d(g.size());
    for (std::size_t i = 0; i < dim; ++i) d[i] = -g[i];
    if (!s_hist.empty()) {
      std::vector<double> alpha(s_hist.size());
      for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
        alpha[static_cast<size_t>(k)] =
            rho_hist[static_cast<size_t>(k)] *
            dot(s_hist[static_cast<size_t>(k)], d);
        for (std::size_t i = 0; i < dim; ++i)
          d[i] -= alpha[static_cast<size_t>(k)] *
                  y_hist[static_cast<size_t>(k)][i];
      }
      const auto& s_last = s_hist.back();
      const auto& y_last = y_hist.back();
      const double gamma = dot(s_last, y_last) / dot(y_last, y_last);
      for (auto& di : d) di *= gamma;
      for (std::size_t k = 0; k < s_hist.size(); ++k) {
        const double beta = rho_hist[k] * dot(y_hist[k], d);
        for (std::size_t i = 0; i < dim; ++i)
          d[i] += (alpha[k] - beta) * s_hist[k][i];
      }
    }
    if (dot(d, g) >= 0.0) {
      // Not a descent direction (stale curvature); fall back to steepest
      // descent and drop the memory.
      for (std::size_t i = 0; i < dim; ++i) d[i] = -g[i];
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // Projected backtracking line search with an Armijo condition on the
    // actually attempted (projected) point. The trial step never moves any
    // coordinate by more than one unit of the unconstrained scale, which
    // keeps the first (gradient-scaled) iterations from tunneling into
    // degenerate basins.
    double step = 1.0;
    const double d_norm = inf_norm(d);
    if (d_norm > config.max_step) step = config.max_step / d_norm;
    bool accepted = false;
    std::vector<double> x_new(dim);
    double f_new = fx;
    for (int ls = 0; ls < 40 && evals < config.max_evals; ++ls) {
      for (std::size_t i = 0; i < dim; ++i) x_new[i] = x[i] + step * d[i];
      bounds.project(x_new);
      double gs = 0.0;
      for (std::size_t i = 0; i < dim; ++i) gs += g[i] * (x_new[i] - x[i]);
      if (gs >= 0.0) {
        step *= 0.5;
        continue;
      }
      f_new = eval(x_new);
      record_best(x_new, f_new);
      if (f_new <= fx + 1e-4 * gs) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    if (evals + 2 * static_cast<int>(dim) > config.max_evals) {
      x = x_new;
      fx = f_new;
      break;
    }
    const std::vector<double> g_new = gradient(x_new);

    std::vector<double> s(dim), yv(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      s[i] = x_new[i] - x[i];
      yv[i] = g_new[i] - g[i];
    }
    const double sy = dot(s, yv);
    if (sy > 1e-12 * inf_norm(s) * inf_norm(yv) && sy > 0.0) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double drop = fx - f_new;
    x = x_new;
    fx = f_new;
    g = g_new;

    if (drop <= config.f_tol * (1.0 + std::abs(fx))) {
      if (++flat_count >= 2) {
        result.converged = true;
        break;
      }
    } else {
      flat_count = 0;
    }
  }

  result.evals = evals;
  return result;
}

}  // namespace mssfs
