#include <doctest.h>

#include <cmath>

#include "compolab/errors.hpp"
#include "compolab/laminate.hpp"
#include "compolab/two_well.hpp"
#include "../support/generators.hpp"
#include "../support/oracles.hpp"

using namespace compolab;
using testgen::Rng;

namespace {

double quad(const BlockTensor& L, const Field2n& F, const Field2n& C, double k) {
  const Field2n d = F - C;
  return d.cwiseProduct(L.apply(d)).sum() + k;
}

TwoWellSpec convex_spec(Rng& rng, int m) {
  const BlockTensor L = testgen::random_block_spd(rng, m);
  const Field2n C = testgen::random_field(rng, m);
  return TwoWellSpec::from_wells(L, C, 0.3, L, C, 0.3);
}

/// Wells at +-R/2 with R rank one, identity stiffness and zero offsets.
TwoWellSpec compatible_spec(const Field2n& R, const Field2n& shift) {
  const int m = static_cast<int>(R.cols());
  const BlockTensor I = BlockTensor::identity(m);
  return TwoWellSpec::from_wells(I, Field2n(shift + 0.5 * R), 0.0, I, Field2n(shift - 0.5 * R), 0.0);
}

}  // namespace

TEST_SUITE("two-well") {
  TEST_CASE("W vanishes at the bottom of a zero-offset well") {
    Rng rng(1);
    const TwoWellSpec s = testgen::random_spec(rng, 2);
    const TwoWellSpec t = TwoWellSpec::from_wells(s.K1.L, testgen::random_field(rng, 2), 0.0, s.K2.L,
                                                  testgen::random_field(rng, 2), 0.5);
    const Field2n F1 = -t.K1.L.inverse().apply(t.K1.V);
    CHECK(std::abs(eval_W(t, F1)) < 1e-12);
  }

  TEST_CASE("W is the smaller of two independently expanded quadratics") {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
      const int m = rng.integer(1, 3);
      const BlockTensor L1 = testgen::random_block_spd(rng, m), L2 = testgen::random_block_spd(rng, m);
      const Field2n C1 = testgen::random_field(rng, m), C2 = testgen::random_field(rng, m);
      const double k1 = rng.uniform(0.0, 1.0), k2 = rng.uniform(0.0, 1.0);
      const TwoWellSpec s = TwoWellSpec::from_wells(L1, C1, k1, L2, C2, k2);
      const Field2n F = testgen::random_field(rng, m, 2.0);
      const double want = std::min(quad(L1, F, C1, k1), quad(L2, F, C2, k2));
      CHECK(eval_W(s, F) == doctest::Approx(want).epsilon(1e-12));
    }
  }

  TEST_CASE("identical wells give W equal to the single well") {
    Rng rng(3);
    const TwoWellSpec s = convex_spec(rng, 2);
    const Field2n F = testgen::random_field(rng, 2);
    CHECK(eval_W(s, F) == eval_well(s.K1, F));
  }

  TEST_CASE("validation rejects indefinite wells and mismatched sizes") {
    Rng rng(4);
    const BlockTensor L = testgen::random_block_spd(rng, 2);
    const Field2n C = Field2n::Zero(2, 2);
    try {
      TwoWellSpec::from_wells(L, C, 0.0, BlockTensor::scalar_multiple(2, -1.0), C, 0.0).validate();
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
    }
    TwoWellSpec bad = TwoWellSpec::from_wells(L, C, 0.0, L, C, 0.0);
    bad.m = 3;
    CHECK_THROWS_AS(bad.validate(), Error);
  }

  TEST_CASE("minors match their definition") {
    Field2n F(2, 3);
    F << 1, 2, 3, 4, 5, 7;
    CHECK(minor(F, 0, 1) == 1 * 5 - 4 * 2);
    CHECK(minor(F, 0, 2) == 1 * 7 - 4 * 3);
    CHECK(minor(F, 1, 2) == 2 * 7 - 5 * 3);
  }

  TEST_CASE("translations vanish on rank-one matrices") {
    Rng rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
      const int m = rng.integer(2, 4);
      Translation T{m, testgen::random_vector(rng, Translation::pair_count(m))};
      const Field2n R = testgen::rank_one(testgen::random_unit(rng), testgen::random_vector(rng, m));
      CHECK(std::abs(T.value(R)) <= 1e-12 * (1.0 + R.squaredNorm() * T.c.norm()));
    }
  }

  TEST_CASE("translation matrix represents the translation value") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
      const int m = rng.integer(1, 4);
      Translation T{m, testgen::random_vector(rng, Translation::pair_count(m))};
      const Field2n F = testgen::random_field(rng, m);
      const Eigen::VectorXd x = flatten(F);
      CHECK(x.dot(T.matrix() * x) == doctest::Approx(T.value(F)).epsilon(1e-12));
      CHECK((T.matrix() - T.matrix().transpose()).norm() == 0.0);
    }
  }

  TEST_CASE("one-dimensional convex envelope matches the sampled lower hull") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const double a1 = rng.uniform(0.2, 2.0), a2 = rng.uniform(0.2, 2.0);
      const double b1 = rng.uniform(-2.0, 2.0), b2 = rng.uniform(-2.0, 2.0);
      const double c1 = rng.uniform(-1.0, 1.0), c2 = rng.uniform(-1.0, 1.0);
      std::vector<double> xs, ys;
      const int samples = 40001;
      for (int i = 0; i < samples; ++i) {
        const double x = -10.0 + 20.0 * i / (samples - 1);
        xs.push_back(x);
        ys.push_back(std::min(a1 * x * x + 2 * b1 * x + c1, a2 * x * x + 2 * b2 * x + c2));
      }
      for (double x : {-2.0, -0.5, 0.0, 0.3, 1.7}) {
        const EnvelopeValue e = convex_envelope_two_quadratics(
            Eigen::MatrixXd::Constant(1, 1, a1), Eigen::VectorXd::Constant(1, b1), c1,
            Eigen::MatrixXd::Constant(1, 1, a2), Eigen::VectorXd::Constant(1, b2), c2, Eigen::VectorXd::Constant(1, x));
        CHECK(std::abs(e.value - oracle::lower_hull_at(xs, ys, x)) <= 1e-5);
        CHECK(e.p >= 0.0);
        CHECK(e.p <= 1.0);
        const double mean = e.p * e.x1(0) + (1 - e.p) * e.x2(0);
        CHECK(mean == doctest::Approx(x).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("convex spec: both bounds equal W") {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
      const int m = rng.integer(1, 3);
      const TwoWellSpec s = convex_spec(rng, m);
      const Field2n F = testgen::random_field(rng, m);
      const double w = eval_W(s, F);
      CHECK(std::abs(lamination_upper_bound(s, F).value - w) < 1e-10 * (1.0 + w));
      CHECK(std::abs(translation_lower_bound(s, F).value - w) < 1e-10 * (1.0 + w));
    }
  }

  TEST_CASE("compatible wells relax to zero at the midpoint") {
    Rng rng(9);
    for (int trial = 0; trial < 5; ++trial) {
      const Field2n R = testgen::rank_one(testgen::random_unit(rng), testgen::random_vector(rng, 2));
      const Field2n shift = testgen::random_field(rng, 2);
      const TwoWellSpec s = compatible_spec(R, shift);
      const double up = lamination_upper_bound(s, shift).value;
      const double lo = translation_lower_bound(s, shift).value;
      CHECK(up <= 1e-8);
      CHECK(lo <= up + 1e-10);
      CHECK(lo >= -1e-10);
    }
  }

  TEST_CASE("lower bound never exceeds the upper bound") {
    Rng rng(10);
    for (int trial = 0; trial < 60; ++trial) {
      const int m = rng.integer(1, 3);
      const TwoWellSpec s = testgen::random_spec(rng, m);
      const Field2n F = testgen::random_field(rng, m, 1.5);
      const double lo = translation_lower_bound(s, F).value;
      const UpperBoundResult up = lamination_upper_bound(s, F);
      CHECK(lo <= up.value + 1e-10);
      CHECK(up.value <= eval_W(s, F) + 1e-12);
      CHECK(up.tree.energy(s) == doctest::Approx(up.value).epsilon(1e-10));
    }
  }

  TEST_CASE("upper bound is nonincreasing in the rank budget") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      const TwoWellSpec s = testgen::random_spec(rng, 2);
      const Field2n F = testgen::random_field(rng, 2);
      UpperBoundOptions o;
      o.max_rank = 2;
      const double r2 = lamination_upper_bound(s, F, o).value;
      o.max_rank = 3;
      const double r3 = lamination_upper_bound(s, F, o).value;
      o.max_rank = 0;
      CHECK(r3 <= r2 + 1e-12);
      CHECK(lamination_upper_bound(s, F, o).value == eval_W(s, F));
    }
  }

  TEST_CASE("bounds shift with a common offset and move with a common translation of the wells") {
    Rng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
      const BlockTensor L1 = testgen::random_block_spd(rng, 2), L2 = testgen::random_block_spd(rng, 2);
      const Field2n C1 = testgen::random_field(rng, 2), C2 = testgen::random_field(rng, 2);
      const Field2n F = testgen::random_field(rng, 2), G = testgen::random_field(rng, 2);
      const double delta = rng.uniform(0.5, 2.0);
      const TwoWellSpec base = TwoWellSpec::from_wells(L1, C1, 0.1, L2, C2, 0.4);
      const TwoWellSpec lifted = TwoWellSpec::from_wells(L1, C1, 0.1 + delta, L2, C2, 0.4 + delta);
      const TwoWellSpec moved = TwoWellSpec::from_wells(L1, Field2n(C1 + G), 0.1, L2, Field2n(C2 + G), 0.4);
      const double lo = translation_lower_bound(base, F).value;
      CHECK(translation_lower_bound(lifted, F).value == doctest::Approx(lo + delta).epsilon(1e-8));
      CHECK(translation_lower_bound(moved, Field2n(F + G)).value == doctest::Approx(lo).epsilon(1e-8));
      const double up = lamination_upper_bound(base, F).value;
      CHECK(lamination_upper_bound(lifted, F).value == doctest::Approx(up + delta).epsilon(1e-8));
      CHECK(lamination_upper_bound(moved, Field2n(F + G)).value == doctest::Approx(up).epsilon(1e-6));
    }
  }

  TEST_CASE("translation lower bound is rank-one convex along segments") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      const BlockTensor L = testgen::random_block_spd(rng, 2);
      const TwoWellSpec s = TwoWellSpec::from_wells(L, testgen::random_field(rng, 2), 0.0, L,
                                                    testgen::random_field(rng, 2), rng.uniform(0.0, 0.5));
      const Field2n F = testgen::random_field(rng, 2);
      const Field2n R = testgen::rank_one(testgen::random_unit(rng), testgen::random_vector(rng, 2));
      const double a = translation_lower_bound(s, Field2n(F - R)).value;
      const double b = translation_lower_bound(s, Field2n(F + R)).value;
      CHECK(translation_lower_bound(s, F).value <= 0.5 * (a + b) + 1e-8);
    }
  }

  TEST_CASE("Kohn reduction with equal tensors is the quadratic form") {
    Rng rng(14);
    const AugmentedTensor K = testgen::random_augmented(rng, 2);
    const Field2n E0 = testgen::random_field(rng, 2);
    const KohnResult r = kohn_reduction(K, K, E0);
    const double q = eval_well(K, E0);
    CHECK(r.lower.value == doctest::Approx(q).epsilon(1e-10));
    CHECK(r.upper.value == doctest::Approx(q).epsilon(1e-10));
    CHECK(eval_well(r.spec.K1, E0) == q);
  }

  TEST_CASE("Kohn reduction bounds lie below the energy of a simple laminate") {
    Rng rng(15);
    for (int trial = 0; trial < 10; ++trial) {
      const AugmentedTensor K1 = testgen::random_augmented(rng, 2), K2 = testgen::random_augmented(rng, 2);
      const LaminateTree t = LaminateTree::branch(LaminateTree::leaf(1), LaminateTree::leaf(2),
                                                  testgen::random_unit(rng), rng.uniform(0.2, 0.8));
      const Field2n E0 = testgen::random_field(rng, 2);
      const double lam = eval_well(augmented_effective(t, K1, K2), E0);
      const KohnResult r = kohn_reduction(K1, K2, E0);
      CHECK(r.lower.value <= lam + 1e-10);
      CHECK(r.upper.value <= lam + 1e-8);
    }
  }

  TEST_CASE("W-transform: a single current field uses the dual scalar") {
    const double s = 4.0;
    Field2n J(2, 1);
    J << 1.0, 0.0;
    const WTransformResult r =
        wtransform_reduction(BlockTensor::scalar_multiple(1, s), BlockTensor::scalar_multiple(1, 1.0), {}, {J});
    CHECK(r.spec.m == 1);
    CHECK((r.spec.K1.L.flat() - Eigen::MatrixXd::Identity(2, 2) / s).norm() < 1e-15);
    CHECK((r.E0 - rotation_perp().transpose() * J).norm() == 0.0);
  }

  TEST_CASE("W-transform: primal fields repeat L block-diagonally and the multiplier shifts well 1") {
    Rng rng(16);
    const BlockTensor L1 = testgen::random_block_spd(rng, 2), L2 = testgen::random_block_spd(rng, 2);
    Field2n E1 = Field2n::Zero(2, 2), E2 = Field2n::Zero(2, 2);
    E1(0, 0) = 1.0;
    E2(1, 1) = 1.0;
    const WTransformResult r = wtransform_reduction(L1, L2, {E1, E2}, {}, 0.75);
    CHECK(r.spec.m == 4);
    CHECK(r.spec.K1.L.flat().block(0, 0, 4, 4) == L1.flat());
    CHECK(r.spec.K1.L.flat().block(4, 4, 4, 4) == L1.flat());
    CHECK(r.spec.K1.L.flat().block(0, 4, 4, 4).norm() == 0.0);
    CHECK(r.spec.K1.c == 0.75);
    CHECK(r.spec.K2.c == 0.0);
    // With a fixed laminate the energy of the superfield is the sum of primal forms.
    const LaminateTree t = LaminateTree::branch(LaminateTree::leaf(1), LaminateTree::leaf(2), {1, 0}, 0.4);
    const BlockTensor Ls = effective_tensor(t, L1, L2);
    const BlockTensor Lsuper = effective_tensor(t, r.spec.K1.L, r.spec.K2.L);
    const double sum = inner(E1, Ls.apply(E1)) + inner(E2, Ls.apply(E2));
    CHECK(inner(r.E0, Lsuper.apply(r.E0)) == doctest::Approx(sum).epsilon(1e-12));
  }

  TEST_CASE("W-transform input validation") {
    const BlockTensor L = BlockTensor::identity(2);
    Field2n A = Field2n::Zero(2, 2), B = Field2n::Zero(2, 2);
    A(0, 0) = 1.0;
    B(0, 0) = 1.0;
    B(1, 1) = 1.0;
    try {
      wtransform_reduction(L, L, {A}, {B});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NotOrthogonal);
    }
    try {
      wtransform_reduction(L, L, {A}, {});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
  }

  TEST_CASE("grid covers every entry combination") {
    const std::vector<Field2n> g = make_F_grid(2, -1.0, 1.0, 3);
    CHECK(g.size() == 81);
    CHECK(g.front() == Field2n::Constant(2, 2, -1.0));
    CHECK(g.back() == Field2n::Constant(2, 2, 1.0));
  }

  TEST_CASE("gap scan of a convex spec reports no gap") {
    Rng rng(17);
    const TwoWellSpec s = convex_spec(rng, 2);
    const GapReport r = gap_scan(s, make_F_grid(2, -1.0, 1.0, 2), {}, {}, 2);
    CHECK(r.records.size() == 16);
    CHECK(r.max_gap <= 1e-8);
    CHECK(r.min_gap >= -1e-10);
    CHECK(std::string(kGapCaveat).find("gap") != std::string::npos);
  }

  TEST_CASE("gap scan summary is consistent with its records and the thread count") {
    Rng rng(18);
    const TwoWellSpec s = testgen::random_spec(rng, 2);
    const std::vector<Field2n> grid = make_F_grid(2, -1.0, 1.0, 2);
    const GapReport a = gap_scan(s, grid, {}, {}, 1);
    const GapReport b = gap_scan(s, grid, {}, {}, 3);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].lower == b.records[i].lower);
      CHECK(a.records[i].upper == b.records[i].upper);
      CHECK(a.records[i].gap == doctest::Approx(a.records[i].upper - a.records[i].lower));
      CHECK(a.records[i].gap >= -1e-10);
    }
    CHECK(a.records[a.argmax].gap == a.max_gap);
  }
}
