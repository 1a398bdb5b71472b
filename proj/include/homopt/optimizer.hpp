/**
 * @file   optimizer.hpp
 *
 * @brief  Design loop: initial phases, L-BFGS-B over rho in [0,1]^N with
 *         adjoint gradients, and post-processing of the optimised density.
 */
#pragma once

#include "homopt/adjoint.hpp"
#include "homopt/lbfgsb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

namespace homopt {

enum class InitialPhase { sine, random };

inline std::string to_string(InitialPhase k) { return k == InitialPhase::sine ? "sine" : "random"; }

inline InitialPhase initial_phase_from_string(const std::string& s) {
  if (s == "sine") return InitialPhase::sine;
  if (s == "random") return InitialPhase::random;
  throw ConfigError("unknown initial phase '" + s + "' (expected sine or random)");
}

inline DensityField initial_phase(InitialPhase kind, const GridSpec& grid, std::uint64_t seed = 0) {
  DensityField rho(grid.n_pixels());
  if (kind == InitialPhase::sine) {
    for (int j = 0; j < grid.ny; ++j) {
      for (int i = 0; i < grid.nx; ++i) {
        rho[grid.index(i, j)] =
            0.5 + 0.25 * (std::sin(2.0 * kPi * i / grid.nx) + std::sin(2.0 * kPi * j / grid.ny));
      }
    }
    return rho;
  }
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (auto& r : rho) r = uni(gen);
  return rho;
}

struct OptimizerSettings {
  int memory{10};
  double pg_tol{0.0};  ///< 0 selects 1e-9 * E2 * d_eps^2
  double f_rel_tol{1e-12};
  int max_iter{2000};
  std::uint64_t seed{0};
  bool check_gradient{false};  ///< compare with finite differences at iteration 0

  void validate() const {
    if (memory < 1) throw ConfigError("optimizer memory must be >= 1");
    if (pg_tol < 0.0 || !(f_rel_tol > 0.0) || max_iter < 0) throw ConfigError("invalid optimizer tolerances");
  }
};

struct TraceRow {
  int iteration{0};
  double f_total{0.0};
  double f_stress{0.0};
  double f_interface{0.0};
  double pg_norm{0.0};
  int equilibrium_cg{0};
  int adjoint_cg{0};
  int evaluations{0};
};

struct OptimizationResult {
  DensityField rho;
  std::vector<TraceRow> trace;
  LbfgsbStatus status{LbfgsbStatus::max_iterations};
  ObjectiveReport final_report;
  double gradient_check_error{-1.0};  ///< negative when not requested
};

/// Relative l2 difference between adjoint and central finite-difference
/// sensitivities on a random subset of pixels.
inline double gradient_check(const DesignProblem& problem, std::span<const double> rho, int n_pixels = 5,
                             double d_rho = 1e-6, std::uint64_t seed = 0) {
  const auto adj = problem.evaluate_with_gradient(rho).gradient;
  std::mt19937_64 gen(seed);
  std::vector<int> all(rho.size());
  for (size_t k = 0; k < all.size(); ++k) all[k] = static_cast<int>(k);
  std::shuffle(all.begin(), all.end(), gen);
  all.resize(std::min<size_t>(all.size(), size_t(n_pixels)));
  const auto fd = fd_sensitivity_at(problem, rho, all, d_rho, FdScheme::central);
  double num = 0.0, den = 0.0;
  for (size_t k = 0; k < all.size(); ++k) {
    num += (adj[all[k]] - fd[k]) * (adj[all[k]] - fd[k]);
    den += adj[all[k]] * adj[all[k]];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double default_pg_tol(const DesignProblem& problem) {
  const double e2 = problem.cell().materials().phase1.E;
  const double d = problem.target().d_eps;
  return 1e-9 * e2 * d * d;
}

/// Error raised from inside an objective evaluation, tagged with the
/// optimizer iteration it happened in.
class OptimizationError : public std::runtime_error {
 public:
  OptimizationError(const std::string& what, int iteration)
      : std::runtime_error(what + " (optimizer iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

inline OptimizationResult minimize(const DesignProblem& problem, std::span<const double> rho0,
                                   const OptimizerSettings& settings = {}) {
  settings.validate();
  check_density(problem.grid(), rho0);
  const auto n = static_cast<Eigen::Index>(rho0.size());

  OptimizationResult out;
  if (settings.check_gradient) out.gradient_check_error = gradient_check(problem, rho0, 5, 1e-6, settings.seed);

  LbfgsbSettings ls;
  ls.memory = settings.memory;
  ls.pg_tol = settings.pg_tol > 0.0 ? settings.pg_tol : default_pg_tol(problem);
  ls.f_rel_tol = settings.f_rel_tol;
  ls.max_iter = settings.max_iter;

  DesignProblem::GradientEvaluation last;
  int iteration = 0;
  auto fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    try {
      last = problem.evaluate_with_gradient(std::span<const double>(x.data(), size_t(x.size())));
    } catch (const std::exception& err) {
      throw OptimizationError(err.what(), iteration);
    }
    g = Eigen::Map<const Eigen::VectorXd>(last.gradient.data(), n);
    return last.report.f_total;
  };
  auto record = [&](const LbfgsbIteration& it) {
    // the most recent evaluation is always the accepted iterate
    out.trace.push_back({it.iteration, last.report.f_total, last.report.f_stress, last.report.f_interface,
                         it.pg_norm, last.equilibrium_cg, last.adjoint_cg, it.evaluations});
    out.final_report = last.report;
    iteration = it.iteration + 1;
  };

  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(rho0.data(), n);
  const auto res =
      lbfgsb_minimize(fg, x0, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n), ls, record);
  out.rho.assign(res.x.data(), res.x.data() + n);
  out.status = res.status;
  return out;
}

/// Circular shift that moves the void (weight 1 - rho) centroid to the
/// middle of the cell. Periodic centroids use the mean angle per axis.
inline DensityField center_void(const GridSpec& grid, std::span<const double> rho) {
  double cx = 0.0, sx = 0.0, cy = 0.0, sy = 0.0;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const double w = 1.0 - rho[grid.index(i, j)];
      cx += w * std::cos(2.0 * kPi * i / grid.nx);
      sx += w * std::sin(2.0 * kPi * i / grid.nx);
      cy += w * std::cos(2.0 * kPi * j / grid.ny);
      sy += w * std::sin(2.0 * kPi * j / grid.ny);
    }
  }
  auto centroid = [](double c, double s, int n) {
    if (c == 0.0 && s == 0.0) return 0;
    double a = std::atan2(s, c);
    if (a < 0.0) a += 2.0 * kPi;
    return static_cast<int>(std::lround(a / (2.0 * kPi) * n)) % n;
  };
  const int shift_i = grid.nx / 2 - centroid(cx, sx, grid.nx);
  const int shift_j = grid.ny / 2 - centroid(cy, sy, grid.ny);
  DensityField out(rho.size());
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) out[grid.index(i + shift_i, j + shift_j)] = rho[grid.index(i, j)];
  }
  return out;
}

/// Number of periodic connected regions with rho < threshold. Neighbours are
/// the nodes sharing a triangle edge.
inline int count_void_regions(const GridSpec& grid, std::span<const double> rho, double threshold = 0.5) {
  std::vector<int> label(rho.size(), -1);
  // both triangulations split each pixel along the (0,1)-(1,0) diagonal
  const std::pair<int, int> nbrs[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}};
  int regions = 0;
  std::vector<int> stack;
  for (int start = 0; start < grid.n_pixels(); ++start) {
    if (rho[start] >= threshold || label[start] >= 0) continue;
    label[start] = regions;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int i = p % grid.nx, j = p / grid.nx;
      for (auto [di, dj] : nbrs) {
        const int q = grid.index(i + di, j + dj);
        if (rho[q] < threshold && label[q] < 0) {
          label[q] = regions;
          stack.push_back(q);
        }
      }
    }
    ++regions;
  }
  return regions;
}

/// Fraction of pixels with lo < rho < hi.
inline double intermediate_fraction(std::span<const double> rho, double lo = 0.05, double hi = 0.95) {
  const auto n = std::count_if(rho.begin(), rho.end(), [&](double r) { return r > lo && r < hi; });
  return static_cast<double>(n) / static_cast<double>(rho.size());
}

}  // namespace homopt
