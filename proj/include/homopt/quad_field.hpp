/**
 * @file   quad_field.hpp
 *
 * @brief  Fields of symmetric 2x2 tensors with one value per triangle.
 *
 * Storage is planar: six planes of nx*ny doubles, plane k = 3*e + c holds
 * Mandel component c of element e. Planar storage lets the Fourier
 * transforms run directly on contiguous memory.
 */
#pragma once

#include "homopt/grid.hpp"
#include "homopt/types.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace homopt {

inline constexpr int kElementsPerPixel = 2;
inline constexpr int kSymComponents = 3;
inline constexpr int kQuadComponents = kElementsPerPixel * kSymComponents;

class QuadField {
 public:
  QuadField() = default;
  explicit QuadField(const GridSpec& grid)
      : grid_(grid), data_(kQuadComponents * static_cast<size_t>(grid.n_pixels()), 0.0) {}

  static QuadField uniform(const GridSpec& grid, const Sym2& value) {
    QuadField f(grid);
    for (int p = 0; p < grid.n_pixels(); ++p) {
      for (int e = 0; e < kElementsPerPixel; ++e) f.set(p, e, value);
    }
    return f;
  }

  const GridSpec& grid() const { return grid_; }
  int n_pixels() const { return grid_.n_pixels(); }
  size_t size() const { return data_.size(); }

  std::span<double> plane(int k) { return {data_.data() + k * size_t(n_pixels()), size_t(n_pixels())}; }
  std::span<const double> plane(int k) const {
    return {data_.data() + k * size_t(n_pixels()), size_t(n_pixels())};
  }
  std::span<double> raw() { return data_; }
  std::span<const double> raw() const { return data_; }

  double& operator()(int p, int e, int c) { return data_[(e * kSymComponents + c) * size_t(n_pixels()) + p]; }
  double operator()(int p, int e, int c) const {
    return data_[(e * kSymComponents + c) * size_t(n_pixels()) + p];
  }

  Mandel mandel(int p, int e) const { return {(*this)(p, e, 0), (*this)(p, e, 1), (*this)(p, e, 2)}; }
  void set_mandel(int p, int e, const Mandel& m) {
    for (int c = 0; c < kSymComponents; ++c) (*this)(p, e, c) = m(c);
  }
  Sym2 at(int p, int e) const { return Sym2::from_mandel(mandel(p, e)); }
  void set(int p, int e, const Sym2& t) { set_mandel(p, e, t.mandel()); }

  QuadField& operator+=(const QuadField& o) {
    check_same(o);
    for (size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  QuadField& operator-=(const QuadField& o) {
    check_same(o);
    for (size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  QuadField& operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
  }
  friend QuadField operator+(QuadField a, const QuadField& b) { return a += b; }
  friend QuadField operator-(QuadField a, const QuadField& b) { return a -= b; }
  friend QuadField operator*(double s, QuadField a) { return a *= s; }

  /// this += alpha * x
  void axpy(double alpha, const QuadField& x) {
    check_same(x);
    for (size_t k = 0; k < data_.size(); ++k) data_[k] += alpha * x.data_[k];
  }

  /// Quadrature inner product sum_{p,e} A_e u:v.
  double dot(const QuadField& o) const {
    check_same(o);
    double acc = 0.0;
    for (size_t k = 0; k < data_.size(); ++k) acc += data_[k] * o.data_[k];
    return grid_.element_area() * acc;
  }
  double norm() const { return std::sqrt(dot(*this)); }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  /// Area-weighted average over all quadrature points.
  Sym2 mean() const {
    Mandel acc = Mandel::Zero();
    for (int e = 0; e < kElementsPerPixel; ++e) {
      for (int c = 0; c < kSymComponents; ++c) {
        double s = 0.0;
        for (double v : plane(e * kSymComponents + c)) s += v;
        acc(c) += s;
      }
    }
    return Sym2::from_mandel(acc / (kElementsPerPixel * double(n_pixels())));
  }

  void check_same(const QuadField& o) const {
    if (!(grid_ == o.grid_)) throw std::invalid_argument("quadrature fields live on different grids");
  }

 private:
  GridSpec grid_{};
  std::vector<double> data_;
};

/// Symmetrised element gradient of a periodic nodal displacement (ux, uy).
/// The result is compatible by construction.
inline QuadField symmetric_gradient(const GradientStencils& st, const GridSpec& grid,
                                    std::span<const double> ux, std::span<const double> uy) {
  const auto gx = element_gradient(st, grid, ux);
  const auto gy = element_gradient(st, grid, uy);
  QuadField eps(grid);
  for (int p = 0; p < grid.n_pixels(); ++p) {
    for (int e = 0; e < kElementsPerPixel; ++e) {
      eps.set(p, e, Sym2{gx(p, e, 0), gy(p, e, 1), 0.5 * (gx(p, e, 1) + gy(p, e, 0))});
    }
  }
  return eps;
}

}  // namespace homopt
