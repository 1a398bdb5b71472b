#include <catch_amalgamated.hpp>

#include "homopt/adjoint.hpp"
#include "homopt/validation.hpp"
#include "test_support.hpp"

using namespace homopt;
using Catch::Approx;

namespace {
const SolverSettings kTight{1e-11, 1e-13, 10, 0};
}

TEST_CASE("strain derivative of the stress mismatch", "[adjoint]") {
  const auto g = GridSpec::regular(5, 5, 0.2, Lattice::square);
  const UnitCell cell(g, MaterialPair{});
  const DensityField solid(g.n_pixels(), 1.0);
  const auto sol = solve(cell, solid, LoadCase::tension_x(0.01));

  CHECK(df_dstrain(cell, solid, sol, mean_stress(sol)).max_abs() == 0.0);
  const DensityField empty(g.n_pixels(), 0.0);
  CHECK(df_dstrain(cell, empty, solve(cell, empty, LoadCase::tension_x(0.01)), Sym2{0.006, 0, 0}).max_abs() == 0.0);

  const auto d = df_dstrain(cell, solid, sol, Sym2{0.006, 0.0, 0.0});
  const double scale = 2.0 * g.element_area() / g.volume();
  for (int p = 0; p < g.n_pixels(); ++p) {
    for (int e = 0; e < 2; ++e) {
      CHECK(d(p, e, 0) == Approx(scale * 0.004));
      CHECK(d(p, e, 1) == 0.0);
      CHECK(d(p, e, 2) == 0.0);
    }
  }
}

TEST_CASE("adjoint solves", "[adjoint]") {
  const auto g = GridSpec::regular(8, 7, 1.0, Lattice::hexagonal);
  const UnitCell cell(g, MaterialPair{});

  SECTION("uniform right hand side gives zero multipliers") {
    const DensityField solid(g.n_pixels(), 1.0);
    const auto lam = solve_adjoint(cell, solid, QuadField::uniform(g, Sym2{0.1, 0.2, 0.3}));
    CHECK(lam.lambda.max_abs() == 0.0);
    CHECK(lam.cg_iterations == 0);
  }
  SECTION("known compatible solution on a homogeneous solid") {
    const DensityField solid(g.n_pixels(), 1.0);
    const auto delta = testing::random_compatible(cell.stencils(), g, 44);
    QuadField rhs = apply_stiffness(pixel_laws(cell.materials(), solid), delta);
    rhs *= -1.0;
    const auto lam = solve_adjoint(cell, solid, rhs, kTight);
    CHECK(testing::rel_diff(lam.lambda, delta) < 1e-10);
  }
  SECTION("solver contract and compatibility on a random design") {
    const DensityField rho = testing::random_vector(g.n_pixels(), 45, 0.0, 1.0);
    const auto rhs = testing::random_field(g, 46);
    const SolverSettings s{1e-8, 1e-10, 10, 0};
    const auto lam = solve_adjoint(cell, rho, rhs, s);
    const auto laws = pixel_laws(cell.materials(), rho);
    const QuadField lhs = cell.projection().apply(apply_stiffness(laws, lam.lambda));
    const QuadField prhs = cell.projection().apply(rhs);
    CHECK((lhs + prhs).norm() <= s.cg_tol * prhs.norm() * 1.0001);
    CHECK((lam.lambda - cell.projection().apply(lam.lambda)).norm() <= 1e-12 * lam.lambda.norm());
  }
}

TEST_CASE("sensitivity on uniform designs", "[adjoint]") {
  const auto g = GridSpec::regular(6, 6, 1.0, Lattice::square);
  const PhaseFieldParams pf{6.0 / 40.0, 1e-4};

  SECTION("matched target at rho = 0.5 is stationary") {
    const DesignProblem prob(UnitCell(g, MaterialPair{}), TargetSpec{0.25, 0.0, 0.01, {0, 1, 2}}, pf);
    const auto ev = prob.evaluate_with_gradient(DensityField(g.n_pixels(), 0.5));
    for (double s : ev.gradient) CHECK(std::abs(s) < 1e-18);
  }
  SECTION("mismatched target gives a spatially uniform sensitivity") {
    const DesignProblem prob(UnitCell(g, MaterialPair{}), TargetSpec{0.3, 0.0, 0.01, {0, 1, 2}}, pf);
    const auto ev = prob.evaluate_with_gradient(DensityField(g.n_pixels(), 0.6));
    for (double s : ev.gradient) CHECK(s == Approx(ev.gradient[0]).epsilon(1e-10));
    CHECK(ev.gradient[0] != 0.0);
  }
}

TEST_CASE("binary laminate matching its target is driven by the phase field only", "[adjoint]") {
  const GridSpec g{8, 8, 1.0, 1.0, Lattice::square};
  DensityField rho(g.n_pixels());
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 8; ++i) rho[g.index(i, j)] = i < 4 ? 1.0 : 0.0;
  // tension along the stripes: mean stress (0, 0.5 E dEps), i.e. mu = 0.25, nu = 0
  const PhaseFieldParams pf{0.2, 1e-4};
  const DesignProblem prob(UnitCell(g, MaterialPair{}), TargetSpec{0.25, 0.0, 0.01, {1}}, pf, kTight);
  const auto ev = prob.evaluate_with_gradient(rho);
  CHECK(ev.report.f_stress < 1e-24);
  const auto phase = interface_energy_gradient(g, prob.cell().stencils(), rho, pf);
  for (size_t p = 0; p < rho.size(); ++p) CHECK(std::abs(ev.gradient[p] - phase[p]) < 1e-14);
}

TEST_CASE("adjoint sensitivity agrees with finite differences", "[adjoint]") {
  for (auto lat : {Lattice::square, Lattice::hexagonal}) {
    const auto g = GridSpec::regular(7, 7, 1.0 / 7.0, lat);
    const DesignProblem prob(UnitCell(g, MaterialPair{}), TargetSpec{0.3, 0.0, 0.01, {0, 1, 2}},
                             PhaseFieldParams{1.0 / 40.0, 1e-4 * 1e-3}, kTight);
    const DensityField rho = testing::random_vector(g.n_pixels(), 77, 0.2, 0.8);
    const std::vector<double> steps{1e-2, 1e-3, 1e-4};

    const auto fwd = adjoint_fd_sweep(prob, rho, steps, FdScheme::forward);
    const auto fit_f = fit_loglog_slope(fwd);
    CHECK(fit_f.slope == Approx(1.0).margin(0.2));
    CHECK(fit_f.points == 3);

    const auto cen = adjoint_fd_sweep(prob, rho, steps, FdScheme::central);
    const auto fit_c = fit_loglog_slope(cen);
    CHECK(fit_c.slope == Approx(2.0).margin(0.3));
  }
}

TEST_CASE("finite differences at the box bounds are one-sided", "[adjoint]") {
  const auto g = GridSpec::regular(5, 5, 0.2, Lattice::square);
  const DesignProblem prob(UnitCell(g, MaterialPair{}), TargetSpec{0.3, 0.0, 0.01, {0, 2}},
                           PhaseFieldParams{0.025, 1e-7}, kTight);
  DensityField rho = testing::random_vector(g.n_pixels(), 5, 0.2, 0.8);
  rho[0] = 1.0;
  rho[1] = 0.0;
  const auto adj = prob.evaluate_with_gradient(rho).gradient;
  const std::vector<int> pix{0, 1};
  for (auto scheme : {FdScheme::forward, FdScheme::central}) {
    const auto fd = fd_sensitivity_at(prob, rho, pix, 1e-6, scheme);
    CHECK(fd[0] == Approx(adj[0]).epsilon(1e-3));
    CHECK(fd[1] == Approx(adj[1]).epsilon(1e-3));
  }
  CHECK_THROWS_AS(fd_sensitivity(prob, rho, 0.0, FdScheme::forward), std::domain_error);
}

TEST_CASE("adjoint solve costs about one linear equilibrium solve", "[adjoint]") {
  const auto g = GridSpec::regular(12, 12, 1.0, Lattice::square);
  const DesignProblem prob(UnitCell(g, MaterialPair{}), TargetSpec{0.3, 0.0, 0.01, {0, 1, 2}},
                           PhaseFieldParams{12.0 / 40.0, 1e-4});
  const DensityField rho = testing::random_vector(g.n_pixels(), 8, 0.0, 1.0);
  const auto ev = prob.evaluate_with_gradient(rho);
  for (size_t k = 0; k < 3; ++k) {
    CHECK(ev.adjoints[k].cg_iterations <= 2 * ev.solutions[k].stats.cg_iterations);
  }
}

TEST_CASE("assembly checks case counts", "[adjoint]") {
  const auto g = GridSpec::regular(4, 4, 1.0, Lattice::square);
  const UnitCell cell(g, MaterialPair{});
  const DensityField rho(g.n_pixels(), 1.0);
  const TargetSpec t{0.3, 0.0, 0.01, {0, 1}};
  const std::vector<EquilibriumSolution> sols{solve(cell, rho, LoadCase::tension_x(0.01))};
  const std::vector<AdjointSolution> lams(1);
  CHECK_THROWS_AS(assemble_sensitivity(cell, rho, sols, lams, t, PhaseFieldParams{}), std::invalid_argument);
}
