/**
 * @file   objective.hpp
 *
 * @brief  Aim function: squared mismatch between homogenised and target
 *         stresses, summed over load cases, plus a phase-field penalty
 *
 *   w * integral( eta |grad rho|^2 + rho^2 (1 - rho)^2 / eta ).
 *
 * The gradient term is evaluated at the element quadrature points with the
 * grid stencils; the double well is lumped at the nodes with weight dx*dy.
 */
#pragma once

#include "homopt/equilibrium.hpp"
#include "homopt/grid.hpp"

#include <span>
#include <string>
#include <vector>

namespace homopt {

struct TargetSpec {
  double mu_target{0.3};
  double nu_target{0.0};
  double d_eps{0.01};
  std::vector<int> case_ids{0, 1, 2};  ///< indices into standard_load_cases

  void validate() const {
    if (!(d_eps > 0.0)) throw ConfigError("target load amplitude must be positive");
    if (case_ids.empty() || case_ids.size() > 3) throw ConfigError("need between 1 and 3 load cases");
    for (int id : case_ids) {
      if (id < 0 || id > 2) throw ConfigError("load case id " + std::to_string(id) + " not in {0, 1, 2}");
    }
    if (!(nu_target > -1.0 && nu_target < 1.0)) throw ConfigError("target Poisson's ratio outside (-1, 1)");
  }

  std::vector<LoadCase> cases() const {
    const auto all = standard_load_cases(d_eps);
    std::vector<LoadCase> out;
    for (int id : case_ids) out.push_back(all.at(id));
    return out;
  }
};

struct PhaseFieldParams {
  double eta{1.0};
  double w{0.0};

  void validate() const {
    if (!(eta > 0.0) || !(w >= 0.0)) throw ConfigError("phase field needs eta > 0 and w >= 0");
  }
};

/// Stress in a homogeneous cell made of the target material.
inline Sym2 target_stress(const TargetSpec& target, const LoadCase& lc) {
  const double mu = target.mu_target, nu = target.nu_target;
  const IsotropicElastic2D law{2.0 * mu * nu / (1.0 - nu), mu};
  return law.stress(lc.mean_strain);
}

inline double interface_energy(const GridSpec& grid, const GradientStencils& st, std::span<const double> rho,
                               const PhaseFieldParams& pf) {
  const auto grad = element_gradient(st, grid, rho);
  double gradient_term = 0.0;
  for (double g : grad.values) gradient_term += g * g;
  gradient_term *= grid.element_area() * pf.eta;
  double well = 0.0;
  for (double r : rho) well += r * r * (1.0 - r) * (1.0 - r);
  well *= grid.pixel_area() / pf.eta;
  return pf.w * (gradient_term + well);
}

/// Exact derivative of interface_energy with respect to every nodal density.
inline std::vector<double> interface_energy_gradient(const GridSpec& grid, const GradientStencils& st,
                                                     std::span<const double> rho, const PhaseFieldParams& pf) {
  auto grad = element_gradient(st, grid, rho);
  for (double& g : grad.values) g *= 2.0 * pf.eta * grid.element_area();
  auto out = element_gradient_transpose(st, grid, grad);
  const double well_weight = grid.pixel_area() / pf.eta;
  for (size_t p = 0; p < out.size(); ++p) {
    const double r = rho[p];
    out[p] += well_weight * 2.0 * r * (1.0 - r) * (1.0 - 2.0 * r);
    out[p] *= pf.w;
  }
  return out;
}

struct ObjectiveReport {
  double f_total{0.0};
  double f_stress{0.0};
  double f_interface{0.0};
  std::vector<Sym2> mean_stresses;
  std::vector<Sym2> target_stresses;
};

inline ObjectiveReport aim_function(const UnitCell& cell, std::span<const double> rho,
                                    std::span<const EquilibriumSolution> solutions, const TargetSpec& target,
                                    const PhaseFieldParams& pf) {
  const auto cases = target.cases();
  if (solutions.size() != cases.size()) {
    throw std::invalid_argument("got " + std::to_string(solutions.size()) + " solutions for " +
                                std::to_string(cases.size()) + " load cases");
  }
  ObjectiveReport rep;
  for (size_t k = 0; k < cases.size(); ++k) {
    const Sym2 mean = mean_stress(solutions[k]);
    const Sym2 want = target_stress(target, cases[k]);
    rep.f_stress += (mean - want).frobenius2();
    rep.mean_stresses.push_back(mean);
    rep.target_stresses.push_back(want);
  }
  rep.f_interface = interface_energy(cell.grid(), cell.stencils(), rho, pf);
  rep.f_total = rep.f_stress + rep.f_interface;
  return rep;
}

}  // namespace homopt
