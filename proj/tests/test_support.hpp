// Shared helpers for the unit and acceptance suites.
#pragma once

#include "homopt/quad_field.hpp"

#include <random>
#include <vector>

namespace homopt::testing {

inline std::vector<double> random_vector(size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> uni(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = uni(gen);
  return v;
}

inline QuadField random_field(const GridSpec& grid, std::uint64_t seed) {
  QuadField f(grid);
  const auto v = random_vector(f.size(), seed);
  std::copy(v.begin(), v.end(), f.raw().begin());
  return f;
}

/// Symmetrised gradient of a random periodic displacement.
inline QuadField random_compatible(const GradientStencils& st, const GridSpec& grid, std::uint64_t seed) {
  const auto ux = random_vector(grid.n_pixels(), seed);
  const auto uy = random_vector(grid.n_pixels(), seed + 7919);
  return symmetric_gradient(st, grid, ux, uy);
}

inline double rel_diff(const QuadField& a, const QuadField& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale > 0.0 ? (a - b).norm() / scale : 0.0;
}

}  // namespace homopt::testing
