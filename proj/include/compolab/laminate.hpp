#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <vector>

#include "compolab/cell_geometry.hpp"
#include "compolab/tensor_core.hpp"

namespace compolab {

/**
 * Recursive description of a multiple-rank laminate.
 *
 * A leaf is one of the two phases, optionally rotated (a polycrystal grain);
 * a branch layers child A (volume fraction `fraction`) with child B across
 * interfaces of unit normal `normal`. Trees are immutable and cheap to copy.
 */
class LaminateTree {
 public:
  static LaminateTree leaf(int phase, double rotation = 0.0);
  /// Throws InvalidInput unless |normal| == 1 to 1e-14 and 0 < fraction < 1.
  static LaminateTree branch(LaminateTree a, LaminateTree b, const Eigen::Vector2d& normal,
                             double fraction);

  bool is_leaf() const;
  int phase() const;
  double rotation() const;
  const LaminateTree& child_a() const;
  const LaminateTree& child_b() const;
  const Eigen::Vector2d& normal() const;
  double fraction() const;

  /// Leaf has rank 0; a branch has 1 + max rank of its children.
  int rank() const;
  std::size_t leaf_count() const;

 private:
  struct Node;
  explicit LaminateTree(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Unit normal at angle theta from the x axis.
Eigen::Vector2d unit_normal(double theta);

/**
 * Effective tensor of a simple laminate of LA (fraction f) and LB.
 *
 * Solves the piecewise-constant field problem
 *     E_A - E_B = nu (x) alpha,   nu^T (L_A E_A - L_B E_B) = 0,
 *     f E_A + (1 - f) E_B = E0
 * for all E0 at once. Throws SingularJumpSystem when the n x n system for
 * alpha is singular.
 */
template <class S>
BlockTensorT<S> laminate_pair(const BlockTensorT<S>& LA, const BlockTensorT<S>& LB,
                              const Eigen::Vector2d& normal, double f);

/// Bottom-up lamination of the tree; leaf rotations conjugate every block.
template <class S>
BlockTensorT<S> effective_tensor(const LaminateTree& tree, const BlockTensorT<S>& L1,
                                 const BlockTensorT<S>& L2);

/// Volume fraction of phase 1.
double volume_fraction(const LaminateTree& tree);

/**
 * Effective augmented tensor K* = (L*, V*, c*): the scalar component theta is
 * constant across layers and s is averaged, so only the 2 x n part jumps.
 */
AugmentedTensor augmented_effective(const LaminateTree& tree, const AugmentedTensor& K1,
                                    const AugmentedTensor& K2);

/**
 * V* and c* from L* by the uniform-field construction:
 *     V* = V1 + (L1 - L*)(L1 - L2)^{-1}(V2 - V1)
 *     c* = f c1 + (1-f) c2 + [f V1 + (1-f) V2 - V*]^T (L1 - L2)^{-1} (V2 - V1)
 * Throws SingularContrast when L1 - L2 is singular.
 */
struct VcStar {
  Field2n V;
  double c = 0.0;
};
VcStar vstar_cstar_from_Lstar(const BlockTensor& L1, const BlockTensor& L2, const Field2n& V1,
                              const Field2n& V2, double c1, double c2, const BlockTensor& Lstar,
                              double f);

struct LeafField {
  int phase = 0;
  double weight = 0.0;  ///< volume fraction of this leaf in the cell
  Field2n E;
  Field2n J;
  /// det E, present when n == 2.
  std::optional<double> det;
};

struct LeafFieldReport {
  std::vector<LeafField> leaves;
  Field2n E_average;
  Field2n J_average;
  std::optional<double> min_det;
};

/// Per-leaf constant fields for the prescribed average E0.
LeafFieldReport leaf_fields(const LaminateTree& tree, const BlockTensor& L1, const BlockTensor& L2,
                            const Field2n& E0);

/**
 * Pixel rendering of a laminate with finite separation of scales. Each normal
 * is snapped to a nearby lattice direction (p, q) with |p|, |q| <= 4 so the
 * layers stay periodic; root layers repeat once along that direction per
 * cell, level k the smallest odd number >= r^k of times. Layers are decided
 * at pixel centres. For rank <= 2 the pixel volume fraction is within 2/N of
 * the tree's; deeper trees only approach it as r grows. Throws InvalidInput unless N
 * is a power of two and r >= 2, and ResolutionTooCoarse when the thinnest
 * layer would be under 2 pixels.
 */
CellGeometry rasterize(const LaminateTree& tree, int N, double scale_ratio);

}  // namespace compolab
