/**
 * @file   fft.hpp
 *
 * @brief  Thin RAII wrapper around FFTW real-to-complex 2D transforms.
 *
 * Convention: unnormalised forward transform, 1/(nx*ny) on the inverse.
 * The half spectrum has ny rows of nx/2+1 modes; mode (q1, q2) with
 * 0 <= q1 <= nx/2 lives at index q2 * (nx/2+1) + q1.
 */
#pragma once

#include "homopt/types.hpp"

#include <fftw3.h>

#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace homopt {

namespace detail {
// the FFTW planner is not reentrant
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;
}  // namespace detail

class FourierEngine2D {
 public:
  FourierEngine2D(int nx, int ny) : nx_(nx), ny_(ny), nh_(nx / 2 + 1) {
    std::vector<double> real(size_t(nx) * ny);
    std::vector<Complex> spec(size_t(nh_) * ny);
    std::lock_guard lock(detail::fftw_planner_mutex());
    // FFTW_ESTIMATE keeps plans (and thus results) identical between runs
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_.reset(fftw_plan_dft_r2c_2d(ny, nx, real.data(), as_fftw(spec.data()), flags));
    inverse_.reset(fftw_plan_dft_c2r_2d(ny, nx, as_fftw(spec.data()), real.data(), flags));
    if (!forward_ || !inverse_) throw std::runtime_error("FFTW plan creation failed");
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int half_nx() const { return nh_; }
  size_t spectrum_size() const { return size_t(nh_) * ny_; }
  size_t real_size() const { return size_t(nx_) * ny_; }

  void forward(std::span<const double> in, std::span<Complex> out) const {
    check(in.size() == real_size() && out.size() == spectrum_size());
    fftw_execute_dft_r2c(forward_.get(), const_cast<double*>(in.data()), as_fftw(out.data()));
  }

  /// Normalised inverse. `scratch` is overwritten (c2r destroys its input).
  void inverse(std::span<const Complex> in, std::span<double> out, std::vector<Complex>& scratch) const {
    check(in.size() == spectrum_size() && out.size() == real_size());
    scratch.assign(in.begin(), in.end());
    fftw_execute_dft_c2r(inverse_.get(), as_fftw(scratch.data()), out.data());
    const double norm = 1.0 / static_cast<double>(real_size());
    for (auto& v : out) v *= norm;
  }

 private:
  static fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }
  static void check(bool ok) {
    if (!ok) throw std::invalid_argument("FFT buffer size does not match the grid");
  }

  int nx_, ny_, nh_;
  detail::PlanHandle forward_;
  detail::PlanHandle inverse_;
};

}  // namespace homopt
