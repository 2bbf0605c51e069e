#include <doctest.h>

#include <cmath>

#include "compolab/cell_geometry.hpp"
#include "compolab/cell_solver.hpp"
#include "compolab/errors.hpp"
#include "../support/generators.hpp"
#include "../support/oracles.hpp"

using namespace compolab;
using testgen::Rng;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

ErrorKind kind_of(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

CellGeometry transposed(const CellGeometry& g) {
  std::vector<std::uint8_t> out(g.cell_count());
  for (int y = 0; y < g.N(); ++y)
    for (int x = 0; x < g.N(); ++x) out[g.index(x, y)] = g.at(y, x);
  return CellGeometry(2, g.N(), std::move(out));
}

}  // namespace

TEST_SUITE("cell-solver") {
  TEST_CASE("homogeneous cell carries the applied field unchanged") {
    Rng rng(3);
    const BlockTensor L = testgen::random_block_spd(rng, 2);
    const Field2n E0 = testgen::random_field(rng, 2);
    const FieldSolution sol = solve_cell(CellGeometry::uniform(2, 16, 1), L, testgen::random_block_spd(rng, 2), E0);
    for (std::size_t c = 0; c < sol.cell_count(); c += 37) CHECK(max_abs(sol.E(c) - E0) < 1e-12);
    CHECK(max_abs(sol.J_average - L.apply(E0)) < 1e-12);
  }

  TEST_CASE("all of phase 2 returns L2") {
    Rng rng(4);
    const BlockTensor L1 = testgen::random_block_spd(rng, 2), L2 = testgen::random_block_spd(rng, 2);
    const BlockTensor s = effective_tensor_cell(CellGeometry::uniform(2, 8, 0), L1, L2);
    CHECK(max_abs(s.flat() - L2.flat()) < 1e-12);
  }

  TEST_CASE("sigma = 1 gives the identity on any geometry") {
    const MatX<cplx> s = sigma_star_fn(make_random(2, 32, 5, 0.5), 1.0);
    CHECK((s - MatX<cplx>::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("stripes reproduce the layered formula for anisotropic phases") {
    Rng rng(8);
    for (double f : {0.25, 0.5, 0.75}) {
      const Mat2 a = testgen::random_spd(rng, 2), b = testgen::random_spd(rng, 2);
      const CellGeometry g = make_stripes(2, 32, f);
      const Eigen::MatrixXd got = effective_conductivity<double>(g, a, b);
      const Mat2 want = oracle::layered_scalar<double>(a, b, Eigen::Vector2d(1, 0), g.volume_fraction());
      CHECK(max_abs(got - want) < 1e-8);
    }
  }

  TEST_CASE("stripes match the block jump oracle for coupled fields") {
    Rng rng(9);
    const BlockTensor L1 = testgen::random_block_spd(rng, 2), L2 = testgen::random_block_spd(rng, 2);
    const BlockTensor got = effective_tensor_cell(make_stripes(2, 16, 0.5), L1, L2);
    CHECK(max_abs(got.flat() - oracle::jump_pair(L1, L2, Eigen::Vector2d(1, 0), 0.5).flat()) < 1e-8);
  }

  TEST_CASE("checkerboard conductivity is the geometric mean") {
    const MatX<cplx> s = sigma_star_fn(make_checkerboard(2, 64), 4.0);
    CHECK(std::abs(s(0, 0) - 2.0) < 0.02);
    CHECK(std::abs(s(1, 1) - 2.0) < 0.02);
    CHECK(std::abs(s(0, 1)) < 1e-8);
  }

  TEST_CASE("effective tensor is symmetric and satisfies the energy identity") {
    Rng rng(13);
    const CellGeometry g = make_random(2, 32, 13, 0.4);
    const BlockTensor L1 = testgen::random_block_spd(rng, 2), L2 = testgen::random_block_spd(rng, 2);
    const BlockTensor s = effective_tensor_cell(g, L1, L2, {}, 2);
    CHECK(s.symmetry_residual() < 1e-8);
    const Field2n E0 = testgen::random_field(rng, 2);
    const FieldSolution sol = solve_cell(g, L1, L2, E0);
    double energy = 0.0;
    for (std::size_t c = 0; c < sol.cell_count(); ++c) energy += sol.E(c).cwiseProduct(sol.J(c)).sum();
    energy /= static_cast<double>(sol.cell_count());
    const double want = inner(E0, s.apply(E0));
    CHECK(std::abs(energy - want) < 1e-8 * std::abs(want));
  }

  TEST_CASE("sigma* is monotone in the phase 1 conductivity") {
    const CellGeometry g = make_random(2, 32, 2, 0.5);
    Eigen::MatrixXd prev = sigma_star_fn(g, 1.0).real();
    for (double s : {2.0, 4.0, 8.0}) {
      const Eigen::MatrixXd cur = sigma_star_fn(g, s).real();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cur - prev + (cur - prev).transpose()));
      CHECK(es.eigenvalues()(0) > 0.0);
      prev = cur;
    }
  }

  TEST_CASE("transposing the cell transposes sigma*") {
    const CellGeometry g = make_random(2, 32, 21, 0.5);
    const MatX<cplx> a = sigma_star_fn(g, cplx(3.0, 1.0));
    const MatX<cplx> b = sigma_star_fn(transposed(g), cplx(3.0, 1.0));
    CHECK(std::abs(a(0, 0) - b(1, 1)) < 1e-8);
    CHECK(std::abs(a(1, 1) - b(0, 0)) < 1e-8);
    CHECK(std::abs(a(0, 1) - b(1, 0)) < 1e-8);
  }

  TEST_CASE("thread count does not change the result bits") {
    const CellGeometry g = make_random(2, 32, 6, 0.5);
    const MatX<cplx> a = sigma_star_fn(g, cplx(5.0, 2.0), {}, 1);
    const MatX<cplx> b = sigma_star_fn(g, cplx(5.0, 2.0), {}, 4);
    CHECK(a == b);
  }

  TEST_CASE("failure modes are reported with their kinds") {
    const CellGeometry g = make_checkerboard(2, 16);
    CHECK(kind_of([&] { sigma_star_fn(g, -2.0); }) == ErrorKind::BranchCut);
    CHECK(kind_of([&] { sigma_star_fn(g, 0.0); }) == ErrorKind::BranchCut);
    CHECK(kind_of([&] { sigma_star_fn(g, 1e7); }) == ErrorKind::ContrastTooHigh);
    SolverOptions once;
    once.max_iterations = 1;
    CHECK(kind_of([&] { sigma_star_fn(g, 50.0, once); }) == ErrorKind::NoConvergence);
  }

  TEST_CASE("homogeneous matrix field has unit determinant and cofactor trace three") {
    const FieldSolution sol =
        solve_matrix_field(CellGeometry::uniform(3, 8, 1), 2.0 * Eigen::MatrixXd::Identity(3, 3),
                           Eigen::MatrixXd::Identity(3, 3));
    const CofactorReport r = cofactor_diagnostics(sol);
    CHECK(r.cells == 512);
    CHECK(r.min_det == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.max_det == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.negative_det_fraction == 0.0);
    REQUIRE(r.min_tr_cof.has_value());
    CHECK(*r.min_tr_cof == doctest::Approx(3.0).epsilon(1e-12));
  }

  TEST_CASE("Hall coefficient of a homogeneous conductor is R_H by both methods") {
    const CellGeometry g = CellGeometry::uniform(3, 8, 1);
    for (HallMethod m : {HallMethod::Direct, HallMethod::Perturbation}) {
      const HallResult r = hall_coefficient(g, 2.0, 0.7, Eigen::Vector3d(0, 0, 1e-4), m);
      CHECK(std::abs(r.R_star - 0.7) < 1e-8);
      CHECK(max_abs(r.rho_star0 - 2.0 * Eigen::Matrix3d::Identity()) < 1e-10);
    }
  }

  TEST_CASE("Hall input validation") {
    const Eigen::Vector3d h(0, 0, 1e-4);
    CHECK(kind_of([&] { hall_coefficient(make_checkerboard(2, 8), 1.0, 1.0, h, HallMethod::Direct); }) ==
          ErrorKind::InvalidInput);
    CHECK(kind_of([&] {
            hall_coefficient(CellGeometry::uniform(3, 4, 1), 1.0, 1.0, Eigen::Vector3d(0, 0, 1.0),
                             HallMethod::Direct);
          }) == ErrorKind::InvalidInput);
  }

  TEST_CASE("cross_matrix and axial_vector are inverse on skew matrices") {
    const Eigen::Vector3d h(0.3, -1.2, 2.5), v(1.0, 2.0, -0.5);
    CHECK((cross_matrix(h) * v - h.cross(v)).norm() < 1e-15);
    CHECK((axial_vector(cross_matrix(h)) - h).norm() < 1e-15);
  }
}

TEST_SUITE("cell-geometry") {
  TEST_CASE("construction validates its input") {
    CHECK_THROWS_AS(CellGeometry(2, 12, std::vector<std::uint8_t>(144, 0)), Error);
    CHECK_THROWS_AS(CellGeometry(4, 2, std::vector<std::uint8_t>(16, 0)), Error);
    CHECK_THROWS_AS(CellGeometry(2, 4, std::vector<std::uint8_t>(15, 0)), Error);
    CHECK_THROWS_AS(CellGeometry(2, 2, std::vector<std::uint8_t>{0, 1, 2, 0}), Error);
  }

  TEST_CASE("periodic access wraps around") {
    const CellGeometry g = make_stripes(2, 8, 0.5);
    CHECK(g.at(-1, 0) == g.at(7, 0));
    CHECK(g.at(8, 3) == g.at(0, 3));
    CHECK(g.at(0, 0) == 1);
    CHECK(g.at(4, 0) == 0);
  }

  TEST_CASE("simple generators have the expected volume fractions") {
    CHECK(make_checkerboard(2, 16).volume_fraction() == 0.5);
    CHECK(make_checkerboard(3, 8).volume_fraction() == 0.5);
    CHECK(make_stripes(2, 64, 0.25).volume_fraction() == 0.25);
    CHECK(make_cubes(32, 0.125).volume_fraction() == 0.125);
    CHECK(std::abs(make_spheres(32, 0.3).volume_fraction() - 0.3) < 0.01);
  }

  TEST_CASE("random geometry is reproducible and resolution consistent") {
    CHECK(make_random(2, 64, 7, 0.5) == make_random(2, 64, 7, 0.5));
    CHECK(make_random(2, 64, 7, 0.5) == make_random(2, 32, 7, 0.5).upsample(2));
    CHECK_FALSE(make_random(2, 64, 7, 0.5) == make_random(2, 64, 8, 0.5));
  }

  TEST_CASE("upsampling preserves volume fraction") {
    const CellGeometry g = make_random(3, 16, 3, 0.3, 8);
    const CellGeometry u = g.upsample(2);
    CHECK(u.N() == 32);
    CHECK(u.volume_fraction() == g.volume_fraction());
  }

  TEST_CASE("cubic generators are cubic symmetric") {
    CHECK(make_random_cubic(16, 3, 0.6).is_cubic_symmetric());
    CHECK(make_tori_chain(32).is_cubic_symmetric());
    CHECK(make_cubes(16, 0.125).is_cubic_symmetric());
    CHECK_FALSE(make_stripes(3, 8, 0.5).is_cubic_symmetric());
  }

  TEST_CASE("named geometries parse") {
    CHECK(make_named("checkerboard@16") == make_checkerboard(2, 16));
    CHECK(make_named("random(7,0.5)@64") == make_random(2, 64, 7, 0.5));
    CHECK(make_named("stripes(0.25)@64") == make_stripes(2, 64, 0.25));
    CHECK(make_named("cubes(0.125)@16") == make_cubes(16, 0.125));
    CHECK(make_named("tori-chain@16") == make_tori_chain(16));
    CHECK(make_named("tori-chain(0.3,0.1)@16") == make_tori_chain(16, 0.3, 0.1));
    CHECK_THROWS_AS(make_named("hexagons@16"), Error);
    CHECK_THROWS_AS(make_named("checkerboard@12"), Error);
    CHECK_THROWS_AS(make_named("tori-chain(0.1,0.2)@16"), Error);
  }
}
