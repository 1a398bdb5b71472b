#include <catch_amalgamated.hpp>

#include "homopt/fft.hpp"
#include "homopt/grid.hpp"
#include "test_support.hpp"

#include <cmath>
#include <limits>
#include <numeric>

using namespace homopt;
using Catch::Approx;

namespace {

std::vector<double> sample(const GridSpec& g, double a, double b, double c = 0.0) {
  std::vector<double> f(g.n_pixels());
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const auto x = g.node_position(i, j);
      f[g.index(i, j)] = a * x[0] + b * x[1] + c;
    }
  }
  return f;
}

// Affine fields are not periodic; evaluate the stencils on the unwrapped
// positions around one pixel instead of using periodic element_gradient.
std::array<double, 2> local_gradient(const GradientStencils& st, const GridSpec& g, int e, double a, double b,
                                     int i, int j) {
  std::array<double, 2> out{};
  for (int dir = 0; dir < 2; ++dir) {
    for (const auto& tap : st(e, dir)) {
      const auto x = g.node_position(i + tap.s1, j + tap.s2);
      out[dir] += tap.coeff * (a * x[0] + b * x[1]);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("stencil coefficients sum to zero", "[grid]") {
  for (auto lat : {Lattice::square, Lattice::hexagonal}) {
    const auto g = GridSpec::regular(5, 4, 0.7, lat);
    const auto st = build_stencils(g);
    for (int e = 0; e < 2; ++e) {
      for (int dir = 0; dir < 2; ++dir) {
        double sum = 0.0;
        for (const auto& tap : st(e, dir)) sum += tap.coeff;
        CHECK(std::abs(sum) < 1e-14);
      }
    }
  }
}

TEST_CASE("stencils differentiate affine fields exactly", "[grid]") {
  const auto coeffs = testing::random_vector(40, 11);
  for (auto lat : {Lattice::square, Lattice::hexagonal}) {
    for (int trial = 0; trial < 10; ++trial) {
      const GridSpec g{7, 6, 0.3 + std::abs(coeffs[4 * trial + 2]), 0.2 + std::abs(coeffs[4 * trial + 3]), lat};
      const auto st = build_stencils(g);
      const double a = coeffs[4 * trial], b = coeffs[4 * trial + 1];
      for (int e = 0; e < 2; ++e) {
        const auto grad = local_gradient(st, g, e, a, b, 2, 3);
        CHECK(grad[0] == Approx(a).margin(1e-14));
        CHECK(grad[1] == Approx(b).margin(1e-14));
      }
    }
  }
}

TEST_CASE("hexagonal stencil on f = x", "[grid]") {
  const auto g = GridSpec::regular(6, 6, 1.0, Lattice::hexagonal);
  const auto st = build_stencils(g);
  for (int e = 0; e < 2; ++e) {
    const auto grad = local_gradient(st, g, e, 1.0, 0.0, 1, 1);
    CHECK(grad[0] == Approx(1.0));
    CHECK(std::abs(grad[1]) < 1e-15);
  }
}

TEST_CASE("constant fields have zero element gradients", "[grid]") {
  for (auto lat : {Lattice::square, Lattice::hexagonal}) {
    const auto g = GridSpec::regular(5, 5, 1.0, lat);
    const auto grads = element_gradient(build_stencils(g), g, std::vector<double>(25, 3.25));
    for (double v : grads.values) CHECK(v == 0.0);
  }
}

TEST_CASE("square stencil on a nodal indicator", "[grid]") {
  const GridSpec g{4, 4, 1.0, 1.0, Lattice::square};
  std::vector<double> f(16, 0.0);
  f[g.index(0, 0)] = 1.0;
  const auto grads = element_gradient(build_stencils(g), g, f);
  CHECK(grads(0, 0, 0) == -1.0);
  CHECK(grads(0, 0, 1) == -1.0);
  // element 2 of pixel (0,0) does not touch node (0,0)
  CHECK(grads(0, 1, 0) == 0.0);
  CHECK(grads(0, 1, 1) == 0.0);
}

TEST_CASE("element gradient of a sampled sine is its forward difference", "[grid]") {
  const GridSpec g{8, 5, 0.5, 1.0, Lattice::square};
  std::vector<double> f(g.n_pixels());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) f[g.index(i, j)] = std::sin(2.0 * kPi * i / g.nx);
  const auto grads = element_gradient(build_stencils(g), g, f);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double fd = (std::sin(2.0 * kPi * (i + 1) / g.nx) - std::sin(2.0 * kPi * i / g.nx)) / g.dx;
      for (int e = 0; e < 2; ++e) {
        CHECK(grads(g.index(i, j), e, 0) == Approx(fd).margin(1e-14));
        CHECK(std::abs(grads(g.index(i, j), e, 1)) < 1e-14);
      }
    }
  }
  // alternating sign with period L_x: first and second half differ in sign
  CHECK(grads(g.index(0, 0), 0, 0) > 0.0);
  CHECK(grads(g.index(4, 0), 0, 0) < 0.0);
}

TEST_CASE("derivative factors", "[grid]") {
  const GridSpec g{4, 4, 1.0, 1.0, Lattice::square};
  const auto st = build_stencils(g);
  CHECK(derivative_factors(st, g, 0, 0).norm() == 0.0);
  const auto d2 = derivative_factors(st, g, 2, 0);
  CHECK(d2(0, 0).real() == Approx(-2.0));
  CHECK(std::abs(d2(0, 0).imag()) < 1e-15);
  const auto d1 = derivative_factors(st, g, 1, 0);
  CHECK(d1(0, 0).real() == Approx(-1.0));
  CHECK(d1(0, 0).imag() == Approx(1.0));
  CHECK_THROWS_AS(derivative_factors(st, g, 4, 0), std::out_of_range);
  CHECK_THROWS_AS(derivative_factors(st, g, 0, -1), std::out_of_range);
}

TEST_CASE("Fourier symbols reproduce the real-space stencils", "[grid]") {
  for (auto lat : {Lattice::square, Lattice::hexagonal}) {
    for (int n : {4, 5, 31}) {
      const auto g = GridSpec::regular(n, n + 1, 1.0, lat);
      const auto st = build_stencils(g);
      const auto f = testing::random_vector(g.n_pixels(), 3 + n);
      const auto direct = element_gradient(st, g, f);

      FourierEngine2D fft(g.nx, g.ny);
      std::vector<Complex> fh(fft.spectrum_size()), work(fft.spectrum_size()), scratch;
      std::vector<double> back(g.n_pixels());
      fft.forward(f, fh);
      const double fnorm = std::sqrt(std::inner_product(f.begin(), f.end(), f.begin(), 0.0));
      const double tol = 10.0 * std::numeric_limits<double>::epsilon() * fnorm;
      for (int e = 0; e < 2; ++e) {
        for (int dir = 0; dir < 2; ++dir) {
          for (int q2 = 0; q2 < g.ny; ++q2) {
            for (int q1 = 0; q1 < fft.half_nx(); ++q1) {
              const size_t m = size_t(q2) * fft.half_nx() + q1;
              work[m] = derivative_factors(st, g, q1, q2)(e, dir) * fh[m];
            }
          }
          fft.inverse(work, back, scratch);
          double worst = 0.0;
          for (int p = 0; p < g.n_pixels(); ++p) worst = std::max(worst, std::abs(back[p] - direct(p, e, dir)));
          CHECK(worst <= tol);
        }
      }
    }
  }
}

TEST_CASE("element gradients commute with lattice translations", "[grid]") {
  const auto g = GridSpec::regular(6, 5, 1.0, Lattice::hexagonal);
  const auto st = build_stencils(g);
  const auto f = testing::random_vector(g.n_pixels(), 5);
  std::vector<double> shifted(f.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) shifted[g.index(i + 1, j + 2)] = f[g.index(i, j)];
  const auto a = element_gradient(st, g, f);
  const auto b = element_gradient(st, g, shifted);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      for (int e = 0; e < 2; ++e)
        for (int dir = 0; dir < 2; ++dir) CHECK(b(g.index(i + 1, j + 2), e, dir) == a(g.index(i, j), e, dir));
}

TEST_CASE("gradient transpose is the adjoint of the gradient", "[grid]") {
  const auto g = GridSpec::regular(5, 7, 0.4, Lattice::square);
  const auto st = build_stencils(g);
  const auto f = testing::random_vector(g.n_pixels(), 1);
  ElementGradients h(g.n_pixels());
  h.values = testing::random_vector(h.values.size(), 2);
  const auto gf = element_gradient(st, g, f);
  const auto gth = element_gradient_transpose(st, g, h);
  const double lhs = std::inner_product(gf.values.begin(), gf.values.end(), h.values.begin(), 0.0);
  const double rhs = std::inner_product(f.begin(), f.end(), gth.begin(), 0.0);
  CHECK(lhs == Approx(rhs).epsilon(1e-13));
}

TEST_CASE("grid validation and shape errors", "[grid]") {
  CHECK_THROWS_AS((GridSpec{1, 4, 1.0, 1.0, Lattice::square}.validate()), ConfigError);
  CHECK_THROWS_AS((GridSpec{4, 4, 0.0, 1.0, Lattice::square}.validate()), ConfigError);
  CHECK_THROWS_AS(lattice_from_string("triangular"), ConfigError);
  const GridSpec g{4, 4, 1.0, 1.0, Lattice::square};
  CHECK_THROWS_AS(element_gradient(build_stencils(g), g, std::vector<double>(15)), std::invalid_argument);
  const auto hex = GridSpec::regular(4, 4, 2.0, Lattice::hexagonal);
  CHECK(hex.dy == Approx(std::sqrt(3.0)));
  CHECK(hex.pixel_area() == Approx(2.0 * std::sqrt(3.0)));
}
