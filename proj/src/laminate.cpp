#include "compolab/laminate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "compolab/errors.hpp"

namespace compolab {

struct LaminateTree::Node {
  int phase = 0;
  double rotation = 0.0;
  std::optional<LaminateTree> a;
  std::optional<LaminateTree> b;
  Eigen::Vector2d normal = Eigen::Vector2d::Zero();
  double fraction = 0.0;
};

LaminateTree LaminateTree::leaf(int phase, double rotation) {
  if (phase != 1 && phase != 2) fail(ErrorKind::InvalidInput, "leaf phase must be 1 or 2");
  if (!std::isfinite(rotation)) fail(ErrorKind::InvalidInput, "leaf rotation must be finite");
  auto node = std::make_shared<Node>();
  node->phase = phase;
  node->rotation = rotation;
  return LaminateTree(std::move(node));
}

LaminateTree LaminateTree::branch(LaminateTree a, LaminateTree b, const Eigen::Vector2d& normal,
                                  double fraction) {
  if (!(std::abs(normal.norm() - 1.0) <= 1e-14))
    fail(ErrorKind::InvalidInput, "laminate normal must have unit length");
  if (!(fraction > 0.0 && fraction < 1.0))
    fail(ErrorKind::InvalidInput, "laminate fraction must lie strictly inside (0, 1)");
  auto node = std::make_shared<Node>();
  node->a = std::move(a);
  node->b = std::move(b);
  node->normal = normal;
  node->fraction = fraction;
  return LaminateTree(std::move(node));
}

bool LaminateTree::is_leaf() const { return !node_->a.has_value(); }
int LaminateTree::phase() const { return node_->phase; }
double LaminateTree::rotation() const { return node_->rotation; }
const LaminateTree& LaminateTree::child_a() const {
  if (is_leaf()) fail(ErrorKind::Internal, "child_a of a leaf");
  return *node_->a;
}
const LaminateTree& LaminateTree::child_b() const {
  if (is_leaf()) fail(ErrorKind::Internal, "child_b of a leaf");
  return *node_->b;
}
const Eigen::Vector2d& LaminateTree::normal() const { return node_->normal; }
double LaminateTree::fraction() const { return node_->fraction; }

int LaminateTree::rank() const {
  if (is_leaf()) return 0;
  return 1 + std::max(child_a().rank(), child_b().rank());
}

std::size_t LaminateTree::leaf_count() const {
  if (is_leaf()) return 1;
  return child_a().leaf_count() + child_b().leaf_count();
}

Eigen::Vector2d unit_normal(double theta) { return {std::cos(theta), std::sin(theta)}; }

namespace {

// Jump basis I_n (x) nu of the flattened field space, padded with `extra`
// zero rows for non-jumping scalar components.
Eigen::MatrixXd jump_basis(int n, const Eigen::Vector2d& nu, int extra = 0) {
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(2 * n + extra, n);
  for (int j = 0; j < n; ++j) N.block<2, 1>(2 * j, j) = nu;
  return N;
}

template <class S>
MatX<S> solve_jump(const MatX<S>& S_mat, const MatX<S>& rhs) {
  Eigen::PartialPivLU<MatX<S>> lu(S_mat);
  if (!(lu.rcond() > 1e-14))
    fail(ErrorKind::SingularJumpSystem, "jump system of a simple laminate is singular");
  return lu.solve(rhs);
}

// Effective flattening of a simple laminate of A (fraction f) and B:
// fA + (1-f)B - f(1-f) D N S^{-1} N^T D with D = A - B and
// S = N^T ((1-f)A + fB) N.
template <class S>
MatX<S> laminate_flat(const MatX<S>& A, const MatX<S>& B, const Eigen::MatrixXd& Nr, double f) {
  const MatX<S> N = Nr.cast<S>();
  const MatX<S> D = A - B;
  const MatX<S> M = (1.0 - f) * A + f * B;
  const MatX<S> Smat = N.transpose() * M * N;
  const MatX<S> NtD = N.transpose() * D;
  return f * A + (1.0 - f) * B - (f * (1.0 - f)) * (D * N) * solve_jump<S>(Smat, NtD);
}

template <class S>
MatX<S> conjugate_flat(const MatX<S>& flat, double theta, int n) {
  if (theta == 0.0) return flat;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(flat.rows(), flat.cols());
  const Mat2 r = rotation(theta);
  for (int k = 0; k < n; ++k) Q.block<2, 2>(2 * k, 2 * k) = r;
  const MatX<S> Qs = Q.cast<S>();
  return Qs * flat * Qs.transpose();
}

// Bottom-up lamination of flattenings with `extra` non-jumping components.
template <class S>
MatX<S> effective_flat(const LaminateTree& tree, const MatX<S>& P1, const MatX<S>& P2, int n,
                       int extra) {
  if (tree.is_leaf()) return conjugate_flat<S>(tree.phase() == 1 ? P1 : P2, tree.rotation(), n);
  const MatX<S> A = effective_flat<S>(tree.child_a(), P1, P2, n, extra);
  const MatX<S> B = effective_flat<S>(tree.child_b(), P1, P2, n, extra);
  return laminate_flat<S>(A, B, jump_basis(n, tree.normal(), extra), tree.fraction());
}

void require_same_n(int a, int b) {
  if (a != b) fail(ErrorKind::DimensionMismatch, "phase tensors have different field counts");
}

}  // namespace

template <class S>
BlockTensorT<S> laminate_pair(const BlockTensorT<S>& LA, const BlockTensorT<S>& LB,
                              const Eigen::Vector2d& normal, double f) {
  require_same_n(LA.n(), LB.n());
  if (!(f > 0.0 && f < 1.0)) fail(ErrorKind::InvalidInput, "laminate fraction must lie in (0, 1)");
  if (!(std::abs(normal.norm() - 1.0) <= 1e-14))
    fail(ErrorKind::InvalidInput, "laminate normal must have unit length");
  return BlockTensorT<S>::from_flat(
      laminate_flat<S>(LA.flat(), LB.flat(), jump_basis(LA.n(), normal), f), -1.0);
}

template <class S>
BlockTensorT<S> effective_tensor(const LaminateTree& tree, const BlockTensorT<S>& L1,
                                 const BlockTensorT<S>& L2) {
  require_same_n(L1.n(), L2.n());
  return BlockTensorT<S>::from_flat(effective_flat<S>(tree, L1.flat(), L2.flat(), L1.n(), 0), -1.0);
}

double volume_fraction(const LaminateTree& tree) {
  if (tree.is_leaf()) return tree.phase() == 1 ? 1.0 : 0.0;
  const double f = tree.fraction();
  return f * volume_fraction(tree.child_a()) + (1.0 - f) * volume_fraction(tree.child_b());
}

AugmentedTensor augmented_effective(const LaminateTree& tree, const AugmentedTensor& K1,
                                    const AugmentedTensor& K2) {
  require_same_n(K1.n(), K2.n());
  return AugmentedTensor::from_flat(
      effective_flat<double>(tree, K1.flat(), K2.flat(), K1.n(), 1), -1.0);
}

VcStar vstar_cstar_from_Lstar(const BlockTensor& L1, const BlockTensor& L2, const Field2n& V1,
                              const Field2n& V2, double c1, double c2, const BlockTensor& Lstar,
                              double f) {
  const int n = L1.n();
  require_same_n(n, L2.n());
  require_same_n(n, Lstar.n());
  if (V1.cols() != n || V2.cols() != n)
    fail(ErrorKind::DimensionMismatch, "V has the wrong number of columns");
  const Eigen::MatrixXd contrast = L1.flat() - L2.flat();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(contrast);
  const double scale = std::max(L1.flat().cwiseAbs().maxCoeff(), L2.flat().cwiseAbs().maxCoeff());
  lu.setThreshold(1e-12);
  if (!lu.isInvertible() || contrast.cwiseAbs().maxCoeff() <= 1e-14 * scale)
    fail(ErrorKind::SingularContrast, "L1 - L2 is singular");
  const Eigen::VectorXd v1 = flatten<double>(V1), v2 = flatten<double>(V2);
  const Eigen::VectorXd y = lu.solve(Eigen::VectorXd(v2 - v1));
  const Eigen::VectorXd vstar = v1 + (L1.flat() - Lstar.flat()) * y;
  const double cstar = f * c1 + (1.0 - f) * c2 + (f * v1 + (1.0 - f) * v2 - vstar).dot(y);
  return {unflatten<double>(vstar, n), cstar};
}

namespace {

void collect_leaf_fields(const LaminateTree& tree, const BlockTensor& L1, const BlockTensor& L2,
                         const Eigen::VectorXd& E, double weight, std::vector<LeafField>& out) {
  const int n = L1.n();
  if (tree.is_leaf()) {
    const Eigen::MatrixXd L =
        conjugate_flat<double>(tree.phase() == 1 ? L1.flat() : L2.flat(), tree.rotation(), n);
    LeafField leaf;
    leaf.phase = tree.phase();
    leaf.weight = weight;
    leaf.E = unflatten<double>(E, n);
    leaf.J = unflatten<double>(Eigen::VectorXd(L * E), n);
    if (n == 2) leaf.det = leaf.E(0, 0) * leaf.E(1, 1) - leaf.E(0, 1) * leaf.E(1, 0);
    out.push_back(std::move(leaf));
    return;
  }
  const double f = tree.fraction();
  const Eigen::MatrixXd A = effective_flat<double>(tree.child_a(), L1.flat(), L2.flat(), n, 0);
  const Eigen::MatrixXd B = effective_flat<double>(tree.child_b(), L1.flat(), L2.flat(), n, 0);
  const Eigen::MatrixXd N = jump_basis(n, tree.normal());
  const Eigen::MatrixXd Smat = N.transpose() * ((1.0 - f) * A + f * B) * N;
  const Eigen::MatrixXd rhs = N.transpose() * (A - B) * E;
  const Eigen::VectorXd alpha = -solve_jump<double>(Smat, rhs);
  const Eigen::VectorXd jump = N * alpha;
  collect_leaf_fields(tree.child_a(), L1, L2, E + (1.0 - f) * jump, weight * f, out);
  collect_leaf_fields(tree.child_b(), L1, L2, E - f * jump, weight * (1.0 - f), out);
}

}  // namespace

LeafFieldReport leaf_fields(const LaminateTree& tree, const BlockTensor& L1, const BlockTensor& L2,
                            const Field2n& E0) {
  const int n = L1.n();
  require_same_n(n, L2.n());
  if (E0.cols() != n) fail(ErrorKind::DimensionMismatch, "E0 has the wrong number of columns");
  LeafFieldReport report;
  collect_leaf_fields(tree, L1, L2, flatten<double>(E0), 1.0, report.leaves);
  report.E_average = Field2n::Zero(2, n);
  report.J_average = Field2n::Zero(2, n);
  for (const auto& leaf : report.leaves) {
    report.E_average += leaf.weight * leaf.E;
    report.J_average += leaf.weight * leaf.J;
    if (leaf.det) report.min_det = report.min_det ? std::min(*report.min_det, *leaf.det) : *leaf.det;
  }
  return report;
}

namespace {

/// Largest lattice coordinate considered when snapping an oblique normal.
constexpr int kMaxLatticeIndex = 4;

using Directions = std::vector<Eigen::Vector2i>;

/**
 * Integer direction (p, q) with gcd 1 closest in angle to the normal. Layers
 * with phase coordinate p x + q y are periodic on the unit cell, which an
 * oblique normal with irrational slope could not be. The direction is also
 * kept either parallel to each ancestor direction or at an odd determinant
 * with it: together with odd level multipliers this makes the pixel centres
 * equidistributed over the joint (ancestor, child) layer coordinates, so
 * volume fractions survive sampling.
 */
Eigen::Vector2i lattice_direction(const Eigen::Vector2d& nu, const Directions& ancestors) {
  Eigen::Vector2i best(0, 0);
  double best_cos = -2.0;
  for (int p = -kMaxLatticeIndex; p <= kMaxLatticeIndex; ++p)
    for (int q = -kMaxLatticeIndex; q <= kMaxLatticeIndex; ++q) {
      if (std::gcd(p, q) != 1) continue;
      const bool compatible = std::all_of(ancestors.begin(), ancestors.end(), [&](const Eigen::Vector2i& a) {
        const int det = p * a.y() - q * a.x();
        return det == 0 || det % 2 != 0;
      });
      if (!compatible) continue;
      const double c = (p * nu.x() + q * nu.y()) / std::hypot(p, q);
      if (c > best_cos + 1e-12) {
        best_cos = c;
        best = {p, q};
      }
    }
  return best;
}

/// Odd number of layer periods per cell at the given depth, at least r^depth.
double level_multiplier(int depth, double r) { return 2.0 * std::floor(std::pow(r, depth) / 2.0) + 1.0; }

double thinnest_layer(const LaminateTree& tree, Directions& path, double r) {
  if (tree.is_leaf()) return INFINITY;
  const double f = tree.fraction();
  const Eigen::Vector2i d = lattice_direction(tree.normal(), path);
  const int depth = static_cast<int>(path.size());
  const double spacing = 1.0 / (std::hypot(d.x(), d.y()) * level_multiplier(depth, r));
  path.push_back(d);
  const double result = std::min({std::min(f, 1.0 - f) * spacing, thinnest_layer(tree.child_a(), path, r),
                                  thinnest_layer(tree.child_b(), path, r)});
  path.pop_back();
  return result;
}

int phase_at(const LaminateTree& tree, double x, double y, double r) {
  const LaminateTree* node = &tree;
  Directions path;
  // Position across the enclosing layer and its width in units of the
  // current level's period; a child layered along the same direction as its
  // parent subdivides that layer so the fractions stay exact.
  double across = 0.0, width = 0.0;
  while (!node->is_leaf()) {
    const Eigen::Vector2i d = lattice_direction(node->normal(), path);
    const double m = level_multiplier(static_cast<int>(path.size()), r);
    double s;
    if (!path.empty() && (d == path.back() || d == -path.back())) {
      const double reps = std::max(1.0, std::round(width * m));
      s = (d == path.back() ? across : 1.0 - across) * reps;
    } else {
      s = (d.x() * x + d.y() * y) * m;
    }
    const double t = s - std::floor(s);
    const double f = node->fraction();
    const bool in_a = t < f;
    across = in_a ? t / f : (t - f) / (1.0 - f);
    width = (in_a ? f : 1.0 - f) / m;
    path.push_back(d);
    node = in_a ? &node->child_a() : &node->child_b();
  }
  return node->phase();
}

}  // namespace

CellGeometry rasterize(const LaminateTree& tree, int N, double scale_ratio) {
  if (!is_power_of_two(N)) fail(ErrorKind::InvalidInput, "raster size must be a power of two");
  if (!(scale_ratio >= 2.0)) fail(ErrorKind::InvalidInput, "scale ratio must be at least 2");
  Directions path;
  if (thinnest_layer(tree, path, scale_ratio) * N < 2.0)
    fail(ErrorKind::ResolutionTooCoarse, "thinnest laminate layer spans fewer than 2 pixels");
  std::vector<std::uint8_t> chi(static_cast<std::size_t>(N) * N);
  for (int y = 0; y < N; ++y)
    for (int x = 0; x < N; ++x)
      chi[static_cast<std::size_t>(x) + static_cast<std::size_t>(N) * y] =
          phase_at(tree, (x + 0.5) / N, (y + 0.5) / N, scale_ratio) == 1 ? 1 : 0;
  return CellGeometry(2, N, std::move(chi));
}

template BlockTensor laminate_pair<double>(const BlockTensor&, const BlockTensor&,
                                           const Eigen::Vector2d&, double);
template CBlockTensor laminate_pair<cplx>(const CBlockTensor&, const CBlockTensor&,
                                          const Eigen::Vector2d&, double);
template BlockTensor effective_tensor<double>(const LaminateTree&, const BlockTensor&,
                                              const BlockTensor&);
template CBlockTensor effective_tensor<cplx>(const LaminateTree&, const CBlockTensor&,
                                             const CBlockTensor&);

}  // namespace compolab
