/**
 * @file   material.hpp
 *
 * @brief  Two-dimensional isotropic Hooke's law with density interpolation.
 *
 * The law is genuinely two-dimensional: E = 4 mu (lam + mu) / (lam + 2 mu)
 * and nu = lam / (lam + 2 mu). Young's modulus and Poisson's ratio are
 * interpolated linearly in the density and then converted to Lame constants,
 * which allows an exactly zero-stiffness void phase.
 */
#pragma once

#include "homopt/types.hpp"

#include <string>

namespace homopt {

struct IsotropicElastic2D {
  double lam{0.0};
  double mu{0.0};

  Sym2 stress(const Sym2& eps) const {
    const double t = lam * eps.trace();
    return {t + 2.0 * mu * eps.xx, t + 2.0 * mu * eps.yy, 2.0 * mu * eps.xy};
  }

  Mandel4 tangent() const {
    Mandel4 c = Mandel4::Zero();
    c(0, 0) = c(1, 1) = lam + 2.0 * mu;
    c(0, 1) = c(1, 0) = lam;
    c(2, 2) = 2.0 * mu;
    return c;
  }
};

inline IsotropicElastic2D lame_from_E_nu(double E, double nu) {
  if (!(nu > -1.0 && nu < 1.0)) {
    throw std::domain_error("Poisson's ratio " + std::to_string(nu) + " outside (-1, 1)");
  }
  return {E * nu / (1.0 - nu * nu), E / (2.0 * (1.0 + nu))};
}

struct PhaseProperties {
  double E{0.0};
  double nu{0.0};
};

/// Void (rho = 0) and solid (rho = 1) phase.
struct MaterialPair {
  PhaseProperties phase0{0.0, 0.0};
  PhaseProperties phase1{1.0, 0.0};

  double young(double rho) const { return (phase1.E - phase0.E) * rho + phase0.E; }
  double poisson(double rho) const { return (phase1.nu - phase0.nu) * rho + phase0.nu; }

  IsotropicElastic2D law(double rho) const { return lame_from_E_nu(young(rho), poisson(rho)); }

  /// (dlam/drho, dmu/drho), chain-ruled through the (E, nu) interpolation.
  IsotropicElastic2D law_derivative(double rho) const {
    const double E = young(rho), nu = poisson(rho);
    const double dE = phase1.E - phase0.E, dnu = phase1.nu - phase0.nu;
    const double one_m = 1.0 - nu * nu;
    const double dlam = dE * nu / one_m + E * dnu * (1.0 + nu * nu) / (one_m * one_m);
    const double dmu = dE / (2.0 * (1.0 + nu)) - E * dnu / (2.0 * (1.0 + nu) * (1.0 + nu));
    return {dlam, dmu};
  }
};

inline Sym2 stress(const MaterialPair& pair, double rho, const Sym2& eps) {
  return pair.law(rho).stress(eps);
}

inline Mandel4 tangent(const MaterialPair& pair, double rho) { return pair.law(rho).tangent(); }

inline Sym2 dstress_drho(const MaterialPair& pair, double rho, const Sym2& eps) {
  // the derivative law is linear in eps exactly like the law itself
  return pair.law_derivative(rho).stress(eps);
}

}  // namespace homopt
