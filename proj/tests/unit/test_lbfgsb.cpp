#include <catch_amalgamated.hpp>

#include "homopt/lbfgsb.hpp"

#include <vector>

using namespace homopt;
using Catch::Approx;
using Eigen::VectorXd;

namespace {

struct Recorder {
  std::vector<LbfgsbIteration> its;
  void operator()(const LbfgsbIteration& it) { its.push_back(it); }
};

}  // namespace

TEST_CASE("bound-constrained quadratic with known solution", "[lbfgsb]") {
  // f = 0.5 |x - c|^2 + 0.1 (x0 - x1)^2, box [0,1]^4; c pushes two variables out of the box
  const VectorXd c = (VectorXd(4) << 1.7, -0.4, 0.3, 0.6).finished();
  auto fg = [&](const VectorXd& x, VectorXd& g) {
    g = x - c;
    g(0) += 0.2 * (x(0) - x(1));
    g(1) -= 0.2 * (x(0) - x(1));
    return 0.5 * (x - c).squaredNorm() + 0.1 * (x(0) - x(1)) * (x(0) - x(1));
  };
  Recorder rec;
  LbfgsbSettings s;
  s.pg_tol = 1e-12;
  const auto res = lbfgsb_minimize(fg, VectorXd::Constant(4, 0.5), VectorXd::Zero(4), VectorXd::Ones(4), s,
                                   std::ref(rec));
  CHECK(res.status == LbfgsbStatus::converged_gradient);
  CHECK(res.x(0) == 1.0);
  CHECK(res.x(1) == 0.0);
  CHECK(res.x(2) == Approx(0.3).margin(1e-10));
  CHECK(res.x(3) == Approx(0.6).margin(1e-10));
}

TEST_CASE("Rosenbrock with an active bound", "[lbfgsb]") {
  auto fg = [](const VectorXd& x, VectorXd& g) {
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    g(0) = -2.0 * a - 400.0 * x(0) * b;
    g(1) = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  Recorder rec;
  LbfgsbSettings s;
  s.pg_tol = 1e-10;
  s.f_rel_tol = 1e-16;
  // unconstrained minimum (1,1) is outside; the box forces x0 <= 0.5
  const VectorXd lo = (VectorXd(2) << -2.0, -2.0).finished();
  const VectorXd hi = (VectorXd(2) << 0.5, 2.0).finished();
  const auto res = lbfgsb_minimize(fg, (VectorXd(2) << -1.2, 1.0).finished(), lo, hi, s, std::ref(rec));
  CHECK(converged(res.status));
  CHECK(res.x(0) == 0.5);
  CHECK(res.x(1) == Approx(0.25).margin(1e-6));

  SECTION("iterates stay feasible and f decreases monotonically") {
    for (size_t k = 1; k < rec.its.size(); ++k) CHECK(rec.its[k].f <= rec.its[k - 1].f);
  }
}

TEST_CASE("double well converges to a well", "[lbfgsb]") {
  auto fg = [](const VectorXd& x, VectorXd& g) {
    const double r = x(0);
    g(0) = 2.0 * r * (1.0 - r) * (1.0 - 2.0 * r);
    return r * r * (1.0 - r) * (1.0 - r);
  };
  for (double start : {0.2, 0.45, 0.7, 0.99}) {
    LbfgsbSettings s;
    s.pg_tol = 1e-12;
    const auto res = lbfgsb_minimize(fg, VectorXd::Constant(1, start), VectorXd::Zero(1), VectorXd::Ones(1), s,
                                     [](const auto&) {});
    const double r = res.x(0);
    CHECK(std::min(std::abs(r), std::abs(1.0 - r)) < 1e-6);
  }
}

TEST_CASE("stationary start returns immediately", "[lbfgsb]") {
  int calls = 0;
  auto fg = [&](const VectorXd& x, VectorXd& g) {
    ++calls;
    g = VectorXd::Zero(x.size());
    return 1.0;
  };
  const auto res = lbfgsb_minimize(fg, VectorXd::Constant(3, 0.5), VectorXd::Zero(3), VectorXd::Ones(3),
                                   LbfgsbSettings{}, [](const auto&) {});
  CHECK(res.iterations == 0);
  CHECK(calls == 1);
  CHECK(res.status == LbfgsbStatus::converged_gradient);
  CHECK(res.x == VectorXd::Constant(3, 0.5));
}

TEST_CASE("gradient pointing out of the box is stationary", "[lbfgsb]") {
  auto fg = [](const VectorXd& x, VectorXd& g) {
    g = VectorXd::Constant(x.size(), -1.0);
    return -x.sum();
  };
  const auto res = lbfgsb_minimize(fg, VectorXd::Constant(5, 0.3), VectorXd::Zero(5), VectorXd::Ones(5),
                                   LbfgsbSettings{}, [](const auto&) {});
  CHECK(res.status == LbfgsbStatus::converged_gradient);
  CHECK(res.x == VectorXd::Ones(5));
}

TEST_CASE("projected gradient norm", "[lbfgsb]") {
  const VectorXd x = (VectorXd(3) << 0.0, 1.0, 0.5).finished();
  const VectorXd g = (VectorXd(3) << 2.0, -3.0, 0.25).finished();
  CHECK(projected_gradient_norm(x, g, VectorXd::Zero(3), VectorXd::Ones(3)) == 0.25);
}
