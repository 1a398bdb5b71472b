/**
 * @file   validation.hpp
 *
 * @brief  Adjoint versus finite-difference sweeps and log-log slope fits.
 */
#pragma once

#include "homopt/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace homopt {

struct SweepRow {
  double d_rho{0.0};
  double error{0.0};  ///< |S_adjoint - S_fd|_2
};

inline std::vector<SweepRow> adjoint_fd_sweep(const DesignProblem& problem, std::span<const double> rho,
                                              std::span<const double> d_rhos, FdScheme scheme) {
  const auto adj = problem.evaluate_with_gradient(rho).gradient;
  std::vector<SweepRow> rows;
  for (double h : d_rhos) {
    const auto fd = fd_sensitivity(problem, rho, h, scheme);
    double acc = 0.0;
    for (size_t p = 0; p < fd.size(); ++p) acc += (fd[p] - adj[p]) * (fd[p] - adj[p]);
    rows.push_back({h, std::sqrt(acc)});
  }
  return rows;
}

struct SlopeFit {
  double slope{0.0};
  size_t points{0};     ///< leading points used, i.e. before the floor
  double decades{0.0};  ///< span of d_rho covered by those points
};

/// Least-squares slope of log(error) over log(d_rho) for the leading part
/// of a sweep ordered by decreasing step. The fit stops at the numerical
/// floor: the first step after which the local slope drops below
/// `floor_slope`.
inline SlopeFit fit_loglog_slope(std::span<const SweepRow> rows, double floor_slope = 0.5) {
  std::vector<SweepRow> sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.d_rho > b.d_rho; });
  SlopeFit fit;
  if (sorted.size() < 2) return fit;
  size_t used = 1;
  while (used < sorted.size()) {
    const auto& a = sorted[used - 1];
    const auto& b = sorted[used];
    if (!(a.error > 0.0) || !(b.error > 0.0)) break;
    const double local = std::log10(a.error / b.error) / std::log10(a.d_rho / b.d_rho);
    if (local < floor_slope) break;
    ++used;
  }
  if (used < 2) used = 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t k = 0; k < used; ++k) {
    const double x = std::log10(sorted[k].d_rho), y = std::log10(std::max(sorted[k].error, 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(used);
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.points = used;
  fit.decades = std::log10(sorted.front().d_rho / sorted[used - 1].d_rho);
  return fit;
}

}  // namespace homopt
