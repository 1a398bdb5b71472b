/**
 * @file   equilibrium.hpp
 *
 * @brief  Projected equilibrium G:sigma(eps) = 0 with a Newton / projected
 *         conjugate gradient solver.
 *
 * The strain is split into the imposed mean and a compatible, zero-mean
 * fluctuation. The linearised problem G:C:d = -G:sigma is solved by CG on the
 * compatible subspace; the initial guess 0 and the right hand side are
 * compatible, so every iterate stays compatible as well.
 */
#pragma once

#include "homopt/grid.hpp"
#include "homopt/material.hpp"
#include "homopt/projection.hpp"
#include "homopt/quad_field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace homopt {

/// Nodal design variable, one value in [0, 1] per grid point.
using DensityField = std::vector<double>;

inline void check_density(const GridSpec& grid, std::span<const double> rho) {
  if (rho.size() != size_t(grid.n_pixels())) {
    throw std::invalid_argument("density has " + std::to_string(rho.size()) + " values, grid has " +
                                std::to_string(grid.n_pixels()) + " pixels");
  }
  for (size_t k = 0; k < rho.size(); ++k) {
    if (!std::isfinite(rho[k]) || rho[k] < 0.0 || rho[k] > 1.0) {
      throw std::domain_error("density at pixel " + std::to_string(k) + " outside [0, 1]");
    }
  }
}

/// Grid, stencils, projection and phases: everything that stays fixed while
/// the density changes.
class UnitCell {
 public:
  UnitCell(const GridSpec& grid, const MaterialPair& materials)
      : grid_(grid), stencils_(build_stencils(grid)), projection_(grid, stencils_), materials_(materials) {}

  const GridSpec& grid() const { return grid_; }
  const GradientStencils& stencils() const { return stencils_; }
  const ProjectionOperator& projection() const { return projection_; }
  const MaterialPair& materials() const { return materials_; }

 private:
  GridSpec grid_;
  GradientStencils stencils_;
  ProjectionOperator projection_;
  MaterialPair materials_;
};

struct LoadCase {
  Sym2 mean_strain;

  static LoadCase tension_x(double d) { return {{d, 0.0, 0.0}}; }
  static LoadCase tension_y(double d) { return {{0.0, d, 0.0}}; }
  static LoadCase shear(double d) { return {{0.0, 0.0, 0.5 * d}}; }
};

/// The three linearly independent cases eps_0, eps_1, eps_2.
inline std::array<LoadCase, 3> standard_load_cases(double d) {
  return {LoadCase::tension_x(d), LoadCase::tension_y(d), LoadCase::shear(d)};
}

struct SolverSettings {
  double newton_tol{1e-8};
  double cg_tol{1e-10};
  int max_newton{10};
  int max_cg{0};  ///< 0 selects 10 x number of unknowns
  int stagnation_window{1000};  ///< CG iterations without a new residual minimum

  void validate() const {
    if (!(newton_tol > 0.0 && newton_tol < 1.0) || !(cg_tol > 0.0 && cg_tol < 1.0)) {
      throw ConfigError("solver tolerances must lie in (0, 1)");
    }
    if (max_newton < 1 || max_cg < 0 || stagnation_window < 1) {
      throw ConfigError("solver iteration limits must be positive");
    }
  }

  int cg_limit(const GridSpec& grid) const {
    return max_cg > 0 ? max_cg : 10 * kQuadComponents * grid.n_pixels();
  }
};

struct SolveStats {
  int newton_steps{0};
  int cg_iterations{0};
  std::vector<double> newton_residuals;  ///< |G:sigma| / ref before each step and at the end
  std::vector<double> cg_residuals;      ///< relative CG residuals of the last linear solve
};

struct EquilibriumSolution {
  QuadField strain;
  QuadField stress;
  LoadCase load;
  SolveStats stats;
};

/// Per-pixel Lame constants for a density field.
inline std::vector<IsotropicElastic2D> pixel_laws(const MaterialPair& pair, std::span<const double> rho) {
  std::vector<IsotropicElastic2D> laws(rho.size());
  for (size_t p = 0; p < rho.size(); ++p) laws[p] = pair.law(rho[p]);
  return laws;
}

/// x -> C(rho_p) : x at every quadrature point.
inline QuadField apply_stiffness(std::span<const IsotropicElastic2D> laws, const QuadField& x) {
  QuadField out(x.grid());
  for (int e = 0; e < kElementsPerPixel; ++e) {
    auto x0 = x.plane(3 * e), x1 = x.plane(3 * e + 1), x2 = x.plane(3 * e + 2);
    auto y0 = out.plane(3 * e), y1 = out.plane(3 * e + 1), y2 = out.plane(3 * e + 2);
    for (size_t p = 0; p < laws.size(); ++p) {
      const double lam = laws[p].lam, two_mu = 2.0 * laws[p].mu;
      y0[p] = (lam + two_mu) * x0[p] + lam * x1[p];
      y1[p] = lam * x0[p] + (lam + two_mu) * x1[p];
      y2[p] = two_mu * x2[p];
    }
  }
  return out;
}

inline QuadField stress_field(const UnitCell& cell, std::span<const double> rho, const QuadField& eps) {
  return apply_stiffness(pixel_laws(cell.materials(), rho), eps);
}

/// G : sigma(eps), the discrete equilibrium residual.
inline QuadField residual(const UnitCell& cell, std::span<const double> rho, const QuadField& eps) {
  return cell.projection().apply(stress_field(cell, rho, eps));
}

struct CgResult {
  QuadField solution;
  int iterations{0};
  std::vector<double> residuals;
};

/// Conjugate gradients for op(x) = rhs on the compatible subspace, where op
/// is self-adjoint and positive semi-definite under the quadrature inner
/// product. Stagnation (no new residual minimum within the window) counts as
/// convergence if the best relative residual is within 10 x tol.
template <class Operator>
CgResult projected_cg(const Operator& op, const QuadField& rhs, double tol, int max_iter,
                      int stagnation_window = 1000) {
  CgResult res{QuadField(rhs.grid()), 0, {}};
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return res;
  if (!std::isfinite(bnorm)) throw NumericalError("non-finite right hand side in CG");

  QuadField r = rhs;
  QuadField p = r;
  double rr = r.dot(r);
  double best = 1.0;
  int last_improvement = 0;

  for (int k = 1; k <= max_iter; ++k) {
    const QuadField ap = op(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) {
      // p lies in the null space of the operator; nothing left to reduce
      if (best <= 10.0 * tol) return res;
      throw ConvergenceError("CG broke down on a non-positive curvature direction", res.residuals);
    }
    const double alpha = rr / pap;
    res.solution.axpy(alpha, p);
    r.axpy(-alpha, ap);
    const double rr_new = r.dot(r);
    const double rel = std::sqrt(rr_new) / bnorm;
    res.iterations = k;
    res.residuals.push_back(rel);
    if (!std::isfinite(rel)) throw NumericalError("non-finite residual in CG");
    if (rel <= tol) return res;
    if (rel < best) {
      best = rel;
      last_improvement = k;
    } else if (k - last_improvement >= stagnation_window) {
      if (best <= 10.0 * tol) return res;
      throw ConvergenceError("CG stagnated at relative residual " + std::to_string(best), res.residuals);
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (size_t i = 0; i < p.size(); ++i) p.raw()[i] = r.raw()[i] + beta * p.raw()[i];
  }
  throw ConvergenceError("CG exceeded " + std::to_string(max_iter) + " iterations", res.residuals);
}

/// The operator x -> G : (C : x) used by Newton steps and adjoint solves.
inline auto projected_stiffness(const UnitCell& cell, std::span<const IsotropicElastic2D> laws) {
  return [&cell, laws](const QuadField& x) { return cell.projection().apply(apply_stiffness(laws, x)); };
}

inline EquilibriumSolution solve(const UnitCell& cell, std::span<const double> rho, const LoadCase& load,
                                 const SolverSettings& settings = {}) {
  settings.validate();
  check_density(cell.grid(), rho);
  const auto laws = pixel_laws(cell.materials(), rho);
  const auto op = projected_stiffness(cell, laws);

  EquilibriumSolution sol{QuadField::uniform(cell.grid(), load.mean_strain), QuadField(cell.grid()), load, {}};
  const double homogeneous_scale = apply_stiffness(laws, sol.strain).norm();
  const int cg_max = settings.cg_limit(cell.grid());

  for (int step = 0;; ++step) {
    sol.stress = apply_stiffness(laws, sol.strain);
    QuadField res = cell.projection().apply(sol.stress);
    const double ref = std::max(sol.stress.norm(), homogeneous_scale);
    const double rel = ref > 0.0 ? res.norm() / ref : 0.0;
    if (!std::isfinite(rel)) throw NumericalError("non-finite equilibrium residual");
    sol.stats.newton_residuals.push_back(rel);
    if (rel <= settings.newton_tol) break;
    if (step == settings.max_newton) {
      throw ConvergenceError("Newton iteration did not converge", sol.stats.newton_residuals);
    }
    res *= -1.0;
    CgResult cg = projected_cg(op, res, settings.cg_tol, cg_max, settings.stagnation_window);
    sol.strain += cg.solution;
    sol.stats.newton_steps += 1;
    sol.stats.cg_iterations += cg.iterations;
    sol.stats.cg_residuals = std::move(cg.residuals);
  }
  if (!sol.strain.all_finite()) throw NumericalError("non-finite strain in equilibrium solution");
  return sol;
}

/// Solves several load cases, concurrently when threads > 1. Each case is
/// independent, so results do not depend on the thread count.
inline std::vector<EquilibriumSolution> solve_cases(const UnitCell& cell, std::span<const double> rho,
                                                    std::span<const LoadCase> cases,
                                                    const SolverSettings& settings, int threads = 1) {
  std::vector<EquilibriumSolution> out;
  out.reserve(cases.size());
  if (threads <= 1 || cases.size() < 2) {
    for (const auto& lc : cases) out.push_back(solve(cell, rho, lc, settings));
    return out;
  }
  std::vector<std::future<EquilibriumSolution>> jobs;
  for (const auto& lc : cases) {
    jobs.push_back(std::async(std::launch::async, [&cell, rho, lc, &settings] { return solve(cell, rho, lc, settings); }));
  }
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

inline Sym2 mean_stress(const EquilibriumSolution& sol) { return sol.stress.mean(); }

struct EffectiveConstants {
  double mu{0.0};
  double nu{0.0};
  Mandel4 stiffness{Mandel4::Zero()};  ///< Mandel basis
};

inline EffectiveConstants effective_constants(const UnitCell& cell, std::span<const double> rho, double d_eps,
                                              const SolverSettings& settings = {}, int threads = 1) {
  if (!(d_eps > 0.0)) throw std::domain_error("load amplitude must be positive");
  const auto cases = standard_load_cases(d_eps);
  const auto sols = solve_cases(cell, rho, cases, settings, threads);
  EffectiveConstants out;
  for (int k = 0; k < 3; ++k) {
    const Mandel strain = cases[k].mean_strain.mandel();
    out.stiffness.col(k) = mean_stress(sols[k]).mandel() / strain(k);
  }
  out.mu = mean_stress(sols[2]).xy / d_eps;
  const Sym2 s0 = mean_stress(sols[0]);
  out.nu = s0.xx != 0.0 ? s0.yy / s0.xx : 0.0;
  return out;
}

}  // namespace homopt
