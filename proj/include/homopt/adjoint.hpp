/**
 * @file   adjoint.hpp
 *
 * @brief  Discrete adjoint sensitivities of the aim function.
 *
 * For every load case the multiplier field Lambda solves
 *
 *     G : C : Lambda = -G : df/deps,
 *
 * the same projected linear system as one Newton step, solved by the same
 * CG. Lambda is compatible by construction, and the sensitivity at node g is
 *
 *     S_g = df/drho_g + sum_cases sum_{e in g} dsigma_e/drho_g : Lambda_e.
 *
 * df/deps is the plain partial derivative with respect to the strain
 * coefficients at each quadrature point, so the area weights live there and
 * not in the assembly sum.
 */
#pragma once

#include "homopt/equilibrium.hpp"
#include "homopt/objective.hpp"

#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace homopt {

/// d f_stress / d eps for one load case:
/// (2 A_e / V) C(rho_p) : (mean stress - target stress).
inline QuadField df_dstrain(const UnitCell& cell, std::span<const double> rho, const EquilibriumSolution& sol,
                            const Sym2& target) {
  const GridSpec& g = cell.grid();
  const Mandel mismatch = (mean_stress(sol) - target).mandel();
  const double scale = 2.0 * g.element_area() / g.volume();
  QuadField out(g);
  for (int p = 0; p < g.n_pixels(); ++p) {
    const Mandel v = scale * (tangent(cell.materials(), rho[p]) * mismatch);
    for (int e = 0; e < kElementsPerPixel; ++e) out.set_mandel(p, e, v);
  }
  return out;
}

struct AdjointSolution {
  QuadField lambda;
  int cg_iterations{0};
};

inline AdjointSolution solve_adjoint(const UnitCell& cell, std::span<const double> rho, const QuadField& df_deps,
                                     const SolverSettings& settings = {}) {
  settings.validate();
  const auto laws = pixel_laws(cell.materials(), rho);
  QuadField rhs = cell.projection().apply(df_deps);
  rhs *= -1.0;
  CgResult cg = projected_cg(projected_stiffness(cell, laws), rhs, settings.cg_tol, settings.cg_limit(cell.grid()),
                             settings.stagnation_window);
  return {std::move(cg.solution), cg.iterations};
}

inline std::vector<double> assemble_sensitivity(const UnitCell& cell, std::span<const double> rho,
                                                std::span<const EquilibriumSolution> sols,
                                                std::span<const AdjointSolution> lambdas, const TargetSpec& target,
                                                const PhaseFieldParams& pf) {
  const auto cases = target.cases();
  if (sols.size() != cases.size() || lambdas.size() != cases.size()) {
    throw std::invalid_argument("sensitivity assembly needs one solution and one adjoint per load case");
  }
  const GridSpec& g = cell.grid();
  std::vector<double> s = interface_energy_gradient(g, cell.stencils(), rho, pf);
  const double explicit_scale = 2.0 * g.element_area() / g.volume();
  for (size_t k = 0; k < cases.size(); ++k) {
    const Mandel mismatch = (mean_stress(sols[k]) - target_stress(target, cases[k])).mandel();
    const QuadField& eps = sols[k].strain;
    const QuadField& lam = lambdas[k].lambda;
    for (int p = 0; p < g.n_pixels(); ++p) {
      const IsotropicElastic2D dlaw = cell.materials().law_derivative(rho[p]);
      for (int e = 0; e < kElementsPerPixel; ++e) {
        const Mandel dsigma = dlaw.stress(eps.at(p, e)).mandel();
        s[p] += explicit_scale * mismatch.dot(dsigma) + lam.mandel(p, e).dot(dsigma);
      }
    }
  }
  return s;
}

/// The full design problem: cell, targets, regularisation and solver setup.
class DesignProblem {
 public:
  struct Evaluation {
    ObjectiveReport report;
    std::vector<EquilibriumSolution> solutions;
  };

  struct GradientEvaluation {
    ObjectiveReport report;
    std::vector<double> gradient;
    std::vector<EquilibriumSolution> solutions;
    std::vector<AdjointSolution> adjoints;
    int equilibrium_cg{0};
    int adjoint_cg{0};
  };

  DesignProblem(UnitCell cell, TargetSpec target, PhaseFieldParams pf, SolverSettings settings = {}, int threads = 1)
      : cell_(std::move(cell)), target_(std::move(target)), pf_(pf), settings_(settings), threads_(threads) {
    target_.validate();
    pf_.validate();
    settings_.validate();
  }

  const UnitCell& cell() const { return cell_; }
  const GridSpec& grid() const { return cell_.grid(); }
  const TargetSpec& target() const { return target_; }
  const PhaseFieldParams& phase_field() const { return pf_; }
  const SolverSettings& settings() const { return settings_; }
  int threads() const { return threads_; }

  Evaluation evaluate(std::span<const double> rho) const {
    const auto cases = target_.cases();
    Evaluation ev;
    ev.solutions = solve_cases(cell_, rho, cases, settings_, threads_);
    ev.report = aim_function(cell_, rho, ev.solutions, target_, pf_);
    return ev;
  }

  double value(std::span<const double> rho) const { return evaluate(rho).report.f_total; }

  GradientEvaluation evaluate_with_gradient(std::span<const double> rho) const {
    auto ev = evaluate(rho);
    const auto cases = target_.cases();
    GradientEvaluation out;
    out.adjoints.resize(cases.size());
    auto adjoint_case = [&](size_t k) {
      const QuadField rhs = df_dstrain(cell_, rho, ev.solutions[k], ev.report.target_stresses[k]);
      out.adjoints[k] = solve_adjoint(cell_, rho, rhs, settings_);
    };
    if (threads_ > 1 && cases.size() > 1) {
      std::vector<std::future<void>> jobs;
      for (size_t k = 0; k < cases.size(); ++k) jobs.push_back(std::async(std::launch::async, adjoint_case, k));
      for (auto& j : jobs) j.get();
    } else {
      for (size_t k = 0; k < cases.size(); ++k) adjoint_case(k);
    }
    out.gradient = assemble_sensitivity(cell_, rho, ev.solutions, out.adjoints, target_, pf_);
    for (const auto& s : ev.solutions) out.equilibrium_cg += s.stats.cg_iterations;
    for (const auto& a : out.adjoints) out.adjoint_cg += a.cg_iterations;
    out.report = std::move(ev.report);
    out.solutions = std::move(ev.solutions);
    return out;
  }

 private:
  UnitCell cell_;
  TargetSpec target_;
  PhaseFieldParams pf_;
  SolverSettings settings_;
  int threads_;
};

enum class FdScheme { forward, central };

inline FdScheme fd_scheme_from_string(const std::string& s) {
  if (s == "forward") return FdScheme::forward;
  if (s == "central") return FdScheme::central;
  throw ConfigError("unknown finite-difference scheme '" + s + "'");
}

/// Finite-difference sensitivity at the given pixels, re-solving every load
/// case per perturbation. At the box bounds the difference turns one-sided
/// towards the interior.
inline std::vector<double> fd_sensitivity_at(const DesignProblem& problem, std::span<const double> rho,
                                             std::span<const int> pixels, double d_rho, FdScheme scheme) {
  if (!(d_rho > 0.0)) throw std::domain_error("finite-difference step must be positive");
  std::vector<double> work(rho.begin(), rho.end());
  std::optional<double> f0;
  auto base = [&] {
    if (!f0) f0 = problem.value(rho);
    return *f0;
  };
  auto value_at = [&](int p, double v) {
    work[p] = v;
    try {
      const double f = problem.value(work);
      work[p] = rho[p];
      return f;
    } catch (const ConvergenceError& err) {
      throw ConvergenceError(std::string(err.what()) + " (perturbed pixel " + std::to_string(p) + ")",
                             err.residual_history());
    }
  };

  std::vector<double> out;
  out.reserve(pixels.size());
  for (int p : pixels) {
    const double r = rho[p];
    const bool up_ok = r + d_rho <= 1.0;
    const bool down_ok = r - d_rho >= 0.0;
    double s = 0.0;
    if (scheme == FdScheme::central && up_ok && down_ok) {
      s = (value_at(p, r + d_rho) - value_at(p, r - d_rho)) / (2.0 * d_rho);
    } else if (up_ok) {
      s = (value_at(p, r + d_rho) - base()) / d_rho;
    } else {
      s = (base() - value_at(p, r - d_rho)) / d_rho;
    }
    out.push_back(s);
  }
  return out;
}

inline std::vector<double> fd_sensitivity(const DesignProblem& problem, std::span<const double> rho, double d_rho,
                                          FdScheme scheme) {
  std::vector<int> all(rho.size());
  std::iota(all.begin(), all.end(), 0);
  return fd_sensitivity_at(problem, rho, all, d_rho, scheme);
}

}  // namespace homopt
