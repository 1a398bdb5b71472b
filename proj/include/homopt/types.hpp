/**
 * @file   types.hpp
 *
 * @brief  Small tensor types and error classes shared by all modules.
 *
 * Symmetric 2x2 tensors are stored in the orthonormal (Mandel) basis
 * (t11, t22, sqrt(2) t12). In this basis the double contraction a:b is the
 * plain Euclidean dot product of the coefficient vectors, and a fourth order
 * tensor with minor and major symmetries is a symmetric 3x3 matrix.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace homopt {

using Complex = std::complex<double>;
using Mandel = Eigen::Vector3d;
using Mandel4 = Eigen::Matrix3d;

inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kPi = 3.14159265358979323846;

/// Symmetric 2x2 tensor in plain component form.
struct Sym2 {
  double xx{0.0};
  double yy{0.0};
  double xy{0.0};

  static Sym2 from_mandel(const Mandel& m) {
    return {m(0), m(1), m(2) / kSqrt2};
  }

  Mandel mandel() const { return {xx, yy, kSqrt2 * xy}; }

  double trace() const { return xx + yy; }

  /// Double contraction a:b.
  double contract(const Sym2& o) const {
    return xx * o.xx + yy * o.yy + 2.0 * xy * o.xy;
  }

  double frobenius2() const { return contract(*this); }

  Sym2 operator+(const Sym2& o) const { return {xx + o.xx, yy + o.yy, xy + o.xy}; }
  Sym2 operator-(const Sym2& o) const { return {xx - o.xx, yy - o.yy, xy - o.xy}; }
  Sym2 operator*(double s) const { return {s * xx, s * yy, s * xy}; }
  friend Sym2 operator*(double s, const Sym2& t) { return t * s; }
  Sym2& operator+=(const Sym2& o) {
    xx += o.xx;
    yy += o.yy;
    xy += o.xy;
    return *this;
  }
  bool operator==(const Sym2&) const = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an iterative solve exceeds its iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}

  /// Relative residuals, one per iteration.
  const std::vector<double>& residual_history() const { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace homopt
