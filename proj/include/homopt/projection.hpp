/**
 * @file   projection.hpp
 *
 * @brief  Compatibility projection onto symmetrised discrete gradients.
 *
 * For every wavevector q the operator is a 6x6 Hermitian block acting on the
 * stacked Mandel components of both triangles. The block is the orthogonal
 * projector onto the column space of B(q), the map from a complex nodal
 * displacement amplitude v to sym(D_e(q) (x) v):
 *
 *   G(q) = B (B^H B)^+ B^H,   G(0) = 0.
 *
 * Both triangles have the same area, so this unweighted projector is also the
 * orthogonal projector under the quadrature inner product.
 */
#pragma once

#include "homopt/fft.hpp"
#include "homopt/grid.hpp"
#include "homopt/quad_field.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <utility>
#include <vector>

namespace homopt {

using ProjectionBlock = Eigen::Matrix<Complex, kQuadComponents, kQuadComponents>;
using StrainMap = Eigen::Matrix<Complex, kQuadComponents, 2>;

/// B(q): maps displacement amplitudes to stacked Mandel strain amplitudes.
inline StrainMap strain_map(const Eigen::Matrix2cd& d) {
  StrainMap b = StrainMap::Zero();
  const double r = 1.0 / kSqrt2;
  for (int e = 0; e < kElementsPerPixel; ++e) {
    const Complex dx = d(e, 0), dy = d(e, 1);
    b(3 * e + 0, 0) = dx;
    b(3 * e + 1, 1) = dy;
    b(3 * e + 2, 0) = r * dy;
    b(3 * e + 2, 1) = r * dx;
  }
  return b;
}

inline ProjectionBlock projection_block(const GradientStencils& st, const GridSpec& grid, int q1, int q2) {
  if (q1 == 0 && q2 == 0) return ProjectionBlock::Zero();
  const StrainMap b = strain_map(derivative_factors(st, grid, q1, q2));
  const Eigen::Matrix2cd gram = b.adjoint() * b;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> eig(gram);
  const Eigen::Vector2d ev = eig.eigenvalues();
  const double cutoff = 1e-12 * std::max(std::abs(ev(0)), std::abs(ev(1)));
  Eigen::Vector2d inv = Eigen::Vector2d::Zero();
  for (int k = 0; k < 2; ++k) {
    if (ev(k) > cutoff && ev(k) > 0.0) inv(k) = 1.0 / ev(k);
  }
  const Eigen::Matrix2cd pinv =
      eig.eigenvectors() * inv.cast<Complex>().asDiagonal() * eig.eigenvectors().adjoint();
  return b * pinv * b.adjoint();
}

class ProjectionOperator {
 public:
  ProjectionOperator(const GridSpec& grid, const GradientStencils& stencils)
      : grid_(grid), fft_(grid.nx, grid.ny), blocks_(fft_.spectrum_size()) {
    const int nh = fft_.half_nx();
    for (int q2 = 0; q2 < grid.ny; ++q2) {
      for (int q1 = 0; q1 < nh; ++q1) blocks_[size_t(q2) * nh + q1] = projection_block(stencils, grid, q1, q2);
    }
  }

  const GridSpec& grid() const { return grid_; }
  const FourierEngine2D& fft() const { return fft_; }

  /// Block for any wavevector in [0,nx) x [0,ny); uses G(-q) = conj(G(q)).
  ProjectionBlock block(int q1, int q2) const {
    const int nh = fft_.half_nx();
    if (q1 < nh) return blocks_[size_t(q2) * nh + q1];
    const int m1 = grid_.nx - q1;
    const int m2 = (grid_.ny - q2) % grid_.ny;
    return blocks_[size_t(m2) * nh + m1].conjugate();
  }

  QuadField apply(const QuadField& field) const {
    if (!(field.grid() == grid_)) throw std::invalid_argument("field grid does not match the projection");
    const size_t ns = fft_.spectrum_size();
    const int nh = fft_.half_nx();
    std::array<std::vector<Complex>, kQuadComponents> spec;
    double spec_scale = 0.0;
    for (int k = 0; k < kQuadComponents; ++k) {
      spec[k].resize(ns);
      fft_.forward(field.plane(k), spec[k]);
      for (const auto& c : spec[k]) spec_scale = std::max(spec_scale, std::abs(c));
    }

    Eigen::Matrix<Complex, kQuadComponents, 1> in, out;
    double residue = 0.0;
    for (size_t m = 0; m < ns; ++m) {
      for (int k = 0; k < kQuadComponents; ++k) in(k) = spec[k][m];
      out.noalias() = blocks_[m] * in;
      for (int k = 0; k < kQuadComponents; ++k) spec[k][m] = out(k);
      const int q1 = static_cast<int>(m % nh);
      const int q2 = static_cast<int>(m / nh);
      if (self_conjugate(q1, grid_.nx) && self_conjugate(q2, grid_.ny)) {
        for (int k = 0; k < kQuadComponents; ++k) residue = std::max(residue, std::abs(out(k).imag()));
      }
    }
    // c2r drops the imaginary part of self-conjugate modes; it must be noise
    if (residue > 1e-12 * spec_scale && residue > 0.0) {
      throw NumericalError("projection produced a non-real field (imaginary residue " +
                           std::to_string(residue) + ")");
    }

    QuadField result(grid_);
    std::vector<Complex> scratch;
    for (int k = 0; k < kQuadComponents; ++k) fft_.inverse(spec[k], result.plane(k), scratch);
    return result;
  }

 private:
  static bool self_conjugate(int q, int n) { return q == 0 || 2 * q == n; }

  GridSpec grid_;
  FourierEngine2D fft_;
  std::vector<ProjectionBlock> blocks_;
};

/// (<G a, b>, <a, G b>) under the quadrature inner product.
inline std::pair<double, double> self_adjointness_pair(const ProjectionOperator& op, const QuadField& a,
                                                       const QuadField& b) {
  return {op.apply(a).dot(b), a.dot(op.apply(b))};
}

}  // namespace homopt
