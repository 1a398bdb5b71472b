/**
 * @file   grid.hpp
 *
 * @brief  Periodic structured grids with two linear triangles per pixel and
 *         the finite-difference stencils of their (constant) gradients.
 *
 * Nodal fields are stored row-major with pixel index p = j * nx + i. Node
 * (i, j) owns pixel (i, j), i.e. the parallelogram spanned by nodes (i, j),
 * (i+1, j), (i, j+1) and (i+1, j+1). All indices wrap periodically.
 */
#pragma once

#include "homopt/types.hpp"

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace homopt {

enum class Lattice { square, hexagonal };

inline std::string to_string(Lattice l) {
  return l == Lattice::square ? "square" : "hexagonal";
}

inline Lattice lattice_from_string(const std::string& s) {
  if (s == "square") return Lattice::square;
  if (s == "hexagonal" || s == "hex") return Lattice::hexagonal;
  throw ConfigError("unknown lattice '" + s + "' (expected square or hexagonal)");
}

struct GridSpec {
  int nx{2};
  int ny{2};
  double dx{1.0};
  double dy{1.0};
  Lattice lattice{Lattice::square};

  /// Grid of nx x ny pixels with spacing dx. On a hexagonal lattice the row
  /// spacing defaults to sqrt(3)/2 dx, which makes all triangles equilateral.
  static GridSpec regular(int nx, int ny, double dx, Lattice lattice) {
    const double dy = lattice == Lattice::hexagonal ? 0.5 * std::sqrt(3.0) * dx : dx;
    GridSpec g{nx, ny, dx, dy, lattice};
    g.validate();
    return g;
  }

  void validate() const {
    if (nx < 2 || ny < 2) {
      throw ConfigError("grid needs at least 2x2 pixels, got " + std::to_string(nx) +
                        "x" + std::to_string(ny));
    }
    if (!(dx > 0.0) || !(dy > 0.0)) throw ConfigError("grid spacings must be positive");
  }

  int n_pixels() const { return nx * ny; }
  int index(int i, int j) const { return wrap(j, ny) * nx + wrap(i, nx); }
  double length_x() const { return nx * dx; }
  double length_y() const { return ny * dy; }
  double volume() const { return length_x() * length_y(); }
  double pixel_area() const { return dx * dy; }
  double element_area() const { return 0.5 * dx * dy; }

  /// Cartesian position of node (i, j).
  std::array<double, 2> node_position(int i, int j) const {
    if (lattice == Lattice::hexagonal) return {dx * (i + 0.5 * j), dy * j};
    return {dx * i, dy * j};
  }

  bool operator==(const GridSpec&) const = default;

  static int wrap(int k, int n) {
    const int r = k % n;
    return r < 0 ? r + n : r;
  }
};

struct StencilTap {
  int s1;
  int s2;
  double coeff;
};

/// taps[e][dir] lists the weighted node offsets whose sum is the derivative
/// along dir (0 = x, 1 = y) inside triangle e of a pixel.
struct GradientStencils {
  std::array<std::array<std::vector<StencilTap>, 2>, 2> taps;

  const std::vector<StencilTap>& operator()(int element, int dir) const {
    return taps[element][dir];
  }
};

inline GradientStencils build_stencils(const GridSpec& grid) {
  grid.validate();
  const double hx = 1.0 / grid.dx;
  const double hy = 1.0 / grid.dy;
  GradientStencils st;
  switch (grid.lattice) {
    case Lattice::hexagonal:
      // element 1: nodes (0,0), (1,0), (0,1); element 2: nodes (1,0), (0,1), (1,1)
      st.taps[0][0] = {{1, 0, hx}, {0, 0, -hx}};
      st.taps[0][1] = {{0, 1, hy}, {0, 0, -0.5 * hy}, {1, 0, -0.5 * hy}};
      st.taps[1][0] = {{1, 1, hx}, {0, 1, -hx}};
      st.taps[1][1] = {{1, 0, -hy}, {0, 1, 0.5 * hy}, {1, 1, 0.5 * hy}};
      break;
    case Lattice::square:
      // pixel split along the (0,1)-(1,0) diagonal
      st.taps[0][0] = {{1, 0, hx}, {0, 0, -hx}};
      st.taps[0][1] = {{0, 1, hy}, {0, 0, -hy}};
      st.taps[1][0] = {{1, 1, hx}, {0, 1, -hx}};
      st.taps[1][1] = {{1, 1, hy}, {1, 0, -hy}};
      break;
    default:
      throw ConfigError("unsupported lattice kind");
  }
  return st;
}

/// Fourier symbol D(q) of the stencils, rows = element, cols = direction.
/// With the forward transform f^(q) = sum_x f(x) exp(-2 pi i q.x / N), the
/// element gradients are the inverse transform of D(q) f^(q).
inline Eigen::Matrix2cd derivative_factors(const GradientStencils& st, const GridSpec& grid,
                                           int q1, int q2) {
  if (q1 < 0 || q1 >= grid.nx || q2 < 0 || q2 >= grid.ny) {
    throw std::out_of_range("wavevector (" + std::to_string(q1) + "," + std::to_string(q2) +
                            ") outside the grid");
  }
  Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
  for (int e = 0; e < 2; ++e) {
    for (int dir = 0; dir < 2; ++dir) {
      for (const auto& tap : st(e, dir)) {
        const double phase = 2.0 * kPi *
                             (static_cast<double>(q1) * tap.s1 / grid.nx +
                              static_cast<double>(q2) * tap.s2 / grid.ny);
        d(e, dir) += tap.coeff * Complex(std::cos(phase), std::sin(phase));
      }
    }
  }
  return d;
}

/// Per-element gradient of a nodal scalar field. Layout: value(p, e, dir).
struct ElementGradients {
  int n_pixels{0};
  std::vector<double> values;

  explicit ElementGradients(int n = 0) : n_pixels(n), values(4 * static_cast<size_t>(n), 0.0) {}

  double& operator()(int p, int e, int dir) { return values[(e * 2 + dir) * size_t(n_pixels) + p]; }
  double operator()(int p, int e, int dir) const {
    return values[(e * 2 + dir) * size_t(n_pixels) + p];
  }
};

inline ElementGradients element_gradient(const GradientStencils& st, const GridSpec& grid,
                                         std::span<const double> nodal) {
  if (nodal.size() != static_cast<size_t>(grid.n_pixels())) {
    throw std::invalid_argument("nodal field has " + std::to_string(nodal.size()) +
                                " entries, grid has " + std::to_string(grid.n_pixels()));
  }
  ElementGradients out(grid.n_pixels());
  for (int e = 0; e < 2; ++e) {
    for (int dir = 0; dir < 2; ++dir) {
      for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
          double acc = 0.0;
          for (const auto& tap : st(e, dir)) acc += tap.coeff * nodal[grid.index(i + tap.s1, j + tap.s2)];
          out(j * grid.nx + i, e, dir) = acc;
        }
      }
    }
  }
  return out;
}

/// Transpose of element_gradient: scatters per-element vectors back onto the
/// nodes, result[n] = sum_{p,e,dir} coeff(p,e,dir -> n) * grads(p,e,dir).
inline std::vector<double> element_gradient_transpose(const GradientStencils& st,
                                                      const GridSpec& grid,
                                                      const ElementGradients& grads) {
  std::vector<double> out(grid.n_pixels(), 0.0);
  for (int e = 0; e < 2; ++e) {
    for (int dir = 0; dir < 2; ++dir) {
      for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
          const double g = grads(j * grid.nx + i, e, dir);
          for (const auto& tap : st(e, dir)) out[grid.index(i + tap.s1, j + tap.s2)] += tap.coeff * g;
        }
      }
    }
  }
  return out;
}

}  // namespace homopt
