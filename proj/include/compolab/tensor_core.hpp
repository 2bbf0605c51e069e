#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace compolab {

using cplx = std::complex<double>;

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S>
using Mat2T = Eigen::Matrix<S, 2, 2>;
using Mat2 = Mat2T<double>;
using CMat2 = Mat2T<cplx>;

/// An element of the space of real (or complex) 2 x n matrices. Column j is
/// the j-th two-component field.
template <class S>
using Field2nT = Eigen::Matrix<S, 2, Eigen::Dynamic>;
using Field2n = Field2nT<double>;
using CField2n = Field2nT<cplx>;

/// Default tolerance for the block symmetry invariant, relative to the
/// largest entry.
inline constexpr double kSymmetryTol = 1e-12;

/// Matrix of a 90 degree counter-clockwise rotation.
Mat2 rotation_perp();
Mat2 rotation(double theta);

inline double real_part(double x) { return x; }
inline double real_part(const cplx& x) { return x.real(); }

/// Column-stacked vector view of a 2 x n field: entry (i, j) lands at 2j + i.
template <class S>
VecX<S> flatten(const Field2nT<S>& field) {
  return Eigen::Map<const VecX<S>>(field.data(), field.size());
}

template <class S>
Field2nT<S> unflatten(const VecX<S>& flat, int n) {
  return Eigen::Map<const Field2nT<S>>(flat.data(), 2, n);
}

/**
 * Self-adjoint linear map on 2 x n matrices, stored as an n x n grid of 2 x 2
 * blocks with block(k, l) == block(l, k)^T.
 *
 * Internally the tensor is kept as its 2n x 2n flattening acting on
 * column-stacked fields: block (k, l) occupies rows 2k..2k+1 and columns
 * 2l..2l+1, so the block symmetry is ordinary (non-conjugating) matrix
 * symmetry. The flattening is the form used for eigenvalue and definiteness
 * queries; blocks are the form used for construction and I/O.
 */
template <class S>
class BlockTensorT {
 public:
  using Scalar = S;
  using Flat = MatX<S>;

  BlockTensorT() = default;

  /// Throws InvalidInput when the flattening is not square with even size or
  /// violates block symmetry beyond `symmetry_tol` (negative skips the check).
  static BlockTensorT from_flat(Flat flat, double symmetry_tol = kSymmetryTol);
  /// Blocks in row-major order: blocks[k * n + l] is block (k, l).
  static BlockTensorT from_blocks(int n, const std::vector<Mat2T<S>>& blocks);
  static BlockTensorT identity(int n);
  static BlockTensorT scalar_multiple(int n, S s);
  /// Block diagonal tensor with every diagonal block equal to `block`.
  static BlockTensorT repeated(int n, const Mat2T<S>& block);

  int n() const { return static_cast<int>(flat_.rows() / 2); }
  const Flat& flat() const { return flat_; }
  Mat2T<S> block(int k, int l) const { return flat_.template block<2, 2>(2 * k, 2 * l); }

  Field2nT<S> apply(const Field2nT<S>& field) const;

  /// max |flat - flat^T| relative to max(1, max |flat|).
  double symmetry_residual() const;
  /// Positive definiteness of the real symmetric part of the flattening.
  bool is_positive_definite() const;
  /// Smallest eigenvalue of the real symmetric part of the flattening.
  double min_eigenvalue() const;
  BlockTensorT inverse() const;
  BlockTensorT<cplx> to_complex() const;

  friend BlockTensorT operator+(const BlockTensorT& a, const BlockTensorT& b) {
    return BlockTensorT(Flat(a.flat_ + b.flat_));
  }
  friend BlockTensorT operator-(const BlockTensorT& a, const BlockTensorT& b) {
    return BlockTensorT(Flat(a.flat_ - b.flat_));
  }
  friend BlockTensorT operator*(S s, const BlockTensorT& a) {
    return BlockTensorT(Flat(s * a.flat_));
  }

 private:
  explicit BlockTensorT(Flat flat) : flat_(std::move(flat)) {}
  template <class T>
  friend class BlockTensorT;

  Flat flat_;
};

using BlockTensor = BlockTensorT<double>;
using CBlockTensor = BlockTensorT<cplx>;

/**
 * The tensor of a quadratic well extended by a constant scalar component:
 *
 *     K = [ L    V ]
 *         [ V^T  c ]
 *
 * acting on (F, 1) so that (F, 1) . K (F, 1) = F.LF + 2 V.F + c.
 */
template <class S>
struct AugmentedTensorT {
  BlockTensorT<S> L;
  Field2nT<S> V;
  S c{};

  int n() const { return L.n(); }
  /// The (2n+1) x (2n+1) flattening, last row/column for the scalar part.
  MatX<S> flat() const;
  static AugmentedTensorT from_flat(const MatX<S>& flat, double symmetry_tol = kSymmetryTol);
  /// Well centred at F with bottom value k: V = -L F, c = k + F.LF.
  static AugmentedTensorT from_well(const BlockTensorT<S>& L, const Field2nT<S>& F, S k);
  bool is_positive_definite() const;
};

using AugmentedTensor = AugmentedTensorT<double>;
using CAugmentedTensor = AugmentedTensorT<cplx>;

/// Tr(a b^T), the (bilinear) inner product on 2 x n matrices.
template <class S>
S inner(const Field2nT<S>& a, const Field2nT<S>& b);

/// (F, 1) . K (F, 1).
template <class S>
S eval_well(const AugmentedTensorT<S>& K, const Field2nT<S>& F);

/// Conjugates every 2 x 2 block by the 90 degree rotation.
template <class S>
BlockTensorT<S> rotate_perp(const BlockTensorT<S>& L);

/// Conjugates every 2 x 2 block by the rotation through `theta`.
template <class S>
BlockTensorT<S> rotate(const BlockTensorT<S>& L, double theta);

/// Tolerance for the scalar-block test, relative to each block's norm.
inline constexpr double kScalarBlockTol = 1e-12;

/**
 * Simultaneous reduction of two tensors whose blocks are all multiples of the
 * 2 x 2 identity: W^T L2 W = I and W^T L1 W = diag(sigma_k) (x) I.
 */
struct Decoupling {
  /// Eigenvalues sigma^(k), sorted in descending order.
  std::vector<double> sigma;
  /// n x n scalar matrix; the block matrix is w (x) I_2.
  Eigen::MatrixXd w;
};

/// Throws NonScalarBlocks or NotPositiveDefinite (for L2).
Decoupling decouple(const BlockTensor& L1, const BlockTensor& L2);

/// Kronecker lift of an n x n scalar matrix to 2n x 2n with identity blocks.
Eigen::MatrixXd lift_scalar_blocks(const Eigen::MatrixXd& w);

/// Scalar matrix s with block(k, l) == s(k, l) I; throws NonScalarBlocks.
Eigen::MatrixXd scalar_block_matrix(const BlockTensor& L, double tol = kScalarBlockTol);

/**
 * Recovers L* = W^{-T} L'* W^{-1} from the per-eigenvalue effective tensors
 * sigma*(sigma^(k)) placed on the block diagonal of L'*. Throws SingularMatrix
 * when w is singular.
 */
template <class S>
BlockTensorT<S> reassemble(const std::vector<Mat2T<S>>& sigma_stars, const Eigen::MatrixXd& w);

}  // namespace compolab
