#include "compolab/tensor_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "compolab/errors.hpp"

namespace compolab {

Mat2 rotation_perp() {
  Mat2 r;
  r << 0.0, -1.0, 1.0, 0.0;
  return r;
}

Mat2 rotation(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

namespace {

template <class S>
Eigen::MatrixXd real_symmetric_part(const MatX<S>& m) {
  Eigen::MatrixXd re = m.unaryExpr([](const S& x) { return real_part(x); });
  return 0.5 * (re + re.transpose());
}

template <class S>
MatX<S> conjugate_blocks(const MatX<S>& flat, const Mat2& r) {
  const Eigen::Index n = flat.rows() / 2;
  MatX<S> out(flat.rows(), flat.cols());
  const Mat2T<S> rs = r.cast<S>();
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l)
      out.template block<2, 2>(2 * k, 2 * l) =
          rs * flat.template block<2, 2>(2 * k, 2 * l) * rs.transpose();
  return out;
}

}  // namespace

template <class S>
BlockTensorT<S> BlockTensorT<S>::from_flat(Flat flat, double symmetry_tol) {
  if (flat.rows() != flat.cols() || flat.rows() % 2 != 0 || flat.rows() == 0)
    fail(ErrorKind::InvalidInput, "block tensor flattening must be non-empty, square, of even size");
  if (!flat.allFinite()) fail(ErrorKind::InvalidInput, "block tensor has non-finite entries");
  BlockTensorT t(std::move(flat));
  if (symmetry_tol >= 0.0 && t.symmetry_residual() > symmetry_tol)
    fail(ErrorKind::InvalidInput, "block tensor violates block symmetry (residual " +
                                      std::to_string(t.symmetry_residual()) + ")");
  return t;
}

template <class S>
BlockTensorT<S> BlockTensorT<S>::from_blocks(int n, const std::vector<Mat2T<S>>& blocks) {
  if (n <= 0 || blocks.size() != static_cast<std::size_t>(n) * n)
    fail(ErrorKind::DimensionMismatch, "expected n*n blocks");
  Flat flat(2 * n, 2 * n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) flat.template block<2, 2>(2 * k, 2 * l) = blocks[k * n + l];
  return from_flat(std::move(flat));
}

template <class S>
BlockTensorT<S> BlockTensorT<S>::identity(int n) {
  return BlockTensorT(Flat::Identity(2 * n, 2 * n));
}

template <class S>
BlockTensorT<S> BlockTensorT<S>::scalar_multiple(int n, S s) {
  return BlockTensorT(Flat(s * Flat::Identity(2 * n, 2 * n)));
}

template <class S>
BlockTensorT<S> BlockTensorT<S>::repeated(int n, const Mat2T<S>& block) {
  Flat flat = Flat::Zero(2 * n, 2 * n);
  for (int k = 0; k < n; ++k) flat.template block<2, 2>(2 * k, 2 * k) = block;
  return from_flat(std::move(flat));
}

template <class S>
Field2nT<S> BlockTensorT<S>::apply(const Field2nT<S>& field) const {
  if (field.cols() != n()) fail(ErrorKind::DimensionMismatch, "field width differs from tensor n");
  VecX<S> out = flat_ * flatten(field);
  return unflatten(out, n());
}

template <class S>
double BlockTensorT<S>::symmetry_residual() const {
  if (flat_.size() == 0) return 0.0;
  const double scale = std::max(1.0, flat_.cwiseAbs().maxCoeff());
  return (flat_ - flat_.transpose()).cwiseAbs().maxCoeff() / scale;
}

template <class S>
double BlockTensorT<S>::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(real_symmetric_part(flat_),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

template <class S>
bool BlockTensorT<S>::is_positive_definite() const {
  return flat_.size() > 0 && min_eigenvalue() > 0.0;
}

template <class S>
BlockTensorT<S> BlockTensorT<S>::inverse() const {
  Eigen::FullPivLU<Flat> lu(flat_);
  if (!lu.isInvertible()) fail(ErrorKind::SingularMatrix, "block tensor is singular");
  Flat inv = lu.inverse();
  // The inverse of a symmetric matrix is symmetric; remove rounding asymmetry.
  inv = (0.5 * (inv + inv.transpose())).eval();
  return BlockTensorT(std::move(inv));
}

template <class S>
BlockTensorT<cplx> BlockTensorT<S>::to_complex() const {
  return BlockTensorT<cplx>(MatX<cplx>(flat_.template cast<cplx>()));
}

template <class S>
MatX<S> AugmentedTensorT<S>::flat() const {
  const int d = 2 * n();
  MatX<S> k(d + 1, d + 1);
  k.topLeftCorner(d, d) = L.flat();
  const VecX<S> v = flatten(V);
  k.topRightCorner(d, 1) = v;
  k.bottomLeftCorner(1, d) = v.transpose();
  k(d, d) = c;
  return k;
}

template <class S>
AugmentedTensorT<S> AugmentedTensorT<S>::from_flat(const MatX<S>& flat, double symmetry_tol) {
  if (flat.rows() != flat.cols() || flat.rows() % 2 != 1 || flat.rows() < 3)
    fail(ErrorKind::InvalidInput, "augmented tensor flattening must be (2n+1) x (2n+1)");
  const int d = static_cast<int>(flat.rows()) - 1;
  AugmentedTensorT k;
  k.L = BlockTensorT<S>::from_flat(flat.topLeftCorner(d, d), symmetry_tol);
  const VecX<S> v = flat.topRightCorner(d, 1);
  if (symmetry_tol >= 0.0) {
    const double scale = std::max(1.0, flat.cwiseAbs().maxCoeff());
    const VecX<S> row = flat.bottomLeftCorner(1, d).transpose();
    if ((v - row).cwiseAbs().maxCoeff() / scale > symmetry_tol)
      fail(ErrorKind::InvalidInput, "augmented tensor is not symmetric");
  }
  k.V = unflatten(v, d / 2);
  k.c = flat(d, d);
  return k;
}

template <class S>
AugmentedTensorT<S> AugmentedTensorT<S>::from_well(const BlockTensorT<S>& L, const Field2nT<S>& F,
                                                   S k) {
  if (F.cols() != L.n()) fail(ErrorKind::DimensionMismatch, "well centre width differs from n");
  AugmentedTensorT out;
  out.L = L;
  const Field2nT<S> LF = L.apply(F);
  out.V = -LF;
  out.c = k + inner<S>(F, LF);
  return out;
}

template <class S>
bool AugmentedTensorT<S>::is_positive_definite() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(real_symmetric_part<S>(flat()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0) > 0.0;
}

template <class S>
S inner(const Field2nT<S>& a, const Field2nT<S>& b) {
  if (a.cols() != b.cols()) fail(ErrorKind::DimensionMismatch, "inner product of 2xn matrices with different n");
  return (a.array() * b.array()).sum();
}

template <class S>
S eval_well(const AugmentedTensorT<S>& K, const Field2nT<S>& F) {
  if (F.cols() != K.n()) fail(ErrorKind::DimensionMismatch, "well evaluated at field of wrong width");
  return inner<S>(F, K.L.apply(F)) + S(2) * inner<S>(K.V, F) + K.c;
}

template <class S>
BlockTensorT<S> rotate_perp(const BlockTensorT<S>& L) {
  return BlockTensorT<S>::from_flat(conjugate_blocks<S>(L.flat(), rotation_perp()), -1.0);
}

template <class S>
BlockTensorT<S> rotate(const BlockTensorT<S>& L, double theta) {
  return BlockTensorT<S>::from_flat(conjugate_blocks<S>(L.flat(), rotation(theta)), -1.0);
}

Eigen::MatrixXd scalar_block_matrix(const BlockTensor& L, double tol) {
  const int n = L.n();
  Eigen::MatrixXd s(n, n);
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      const Mat2 b = L.block(k, l);
      const double diag = 0.5 * (b(0, 0) + b(1, 1));
      const double off = std::max({std::abs(b(0, 1)), std::abs(b(1, 0)),
                                   0.5 * std::abs(b(0, 0) - b(1, 1))});
      if (off > tol * b.norm())
        fail(ErrorKind::NonScalarBlocks, "block (" + std::to_string(k) + "," +
                                             std::to_string(l) +
                                             ") is not a multiple of the identity");
      s(k, l) = diag;
    }
  }
  return s;
}

Decoupling decouple(const BlockTensor& L1, const BlockTensor& L2) {
  if (L1.n() != L2.n()) fail(ErrorKind::DimensionMismatch, "decouple: tensors differ in n");
  const Eigen::MatrixXd s1 = scalar_block_matrix(L1);
  const Eigen::MatrixXd s2 = scalar_block_matrix(L2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> check(s2, Eigen::EigenvaluesOnly);
  if (check.eigenvalues()(0) <= 0.0)
    fail(ErrorKind::NotPositiveDefinite, "decouple: L2 is not positive definite");

  // s1 v = lambda s2 v with v^T s2 v = 1 gives W^T L2 W = I, W^T L1 W diagonal.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(s1, s2);
  if (ges.info() != Eigen::Success)
    fail(ErrorKind::NotPositiveDefinite, "decouple: generalized eigensolver failed");

  const int n = L1.n();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Eigen returns ascending eigenvalues; reverse for descending order.
  std::reverse(order.begin(), order.end());
  Decoupling out;
  out.w.resize(n, n);
  for (int k = 0; k < n; ++k) {
    out.sigma.push_back(ges.eigenvalues()(order[k]));
    out.w.col(k) = ges.eigenvectors().col(order[k]);
  }
  return out;
}

Eigen::MatrixXd lift_scalar_blocks(const Eigen::MatrixXd& w) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * w.rows(), 2 * w.cols());
  for (Eigen::Index k = 0; k < w.rows(); ++k)
    for (Eigen::Index l = 0; l < w.cols(); ++l)
      out.block<2, 2>(2 * k, 2 * l) = w(k, l) * Mat2::Identity();
  return out;
}

template <class S>
BlockTensorT<S> reassemble(const std::vector<Mat2T<S>>& sigma_stars, const Eigen::MatrixXd& w) {
  const int n = static_cast<int>(sigma_stars.size());
  if (w.rows() != n || w.cols() != n)
    fail(ErrorKind::DimensionMismatch, "reassemble: W size differs from eigenvalue count");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(w);
  if (!lu.isInvertible()) fail(ErrorKind::SingularMatrix, "reassemble: W is singular");
  const MatX<S> winv = lift_scalar_blocks(lu.inverse()).cast<S>();
  MatX<S> lprime = MatX<S>::Zero(2 * n, 2 * n);
  for (int k = 0; k < n; ++k) lprime.template block<2, 2>(2 * k, 2 * k) = sigma_stars[k];
  MatX<S> lstar = winv.transpose() * lprime * winv;
  return BlockTensorT<S>::from_flat(std::move(lstar), -1.0);
}

template class BlockTensorT<double>;
template class BlockTensorT<cplx>;
template struct AugmentedTensorT<double>;
template struct AugmentedTensorT<cplx>;
template double inner<double>(const Field2n&, const Field2n&);
template cplx inner<cplx>(const CField2n&, const CField2n&);
template double eval_well<double>(const AugmentedTensor&, const Field2n&);
template cplx eval_well<cplx>(const CAugmentedTensor&, const CField2n&);
template BlockTensor rotate_perp<double>(const BlockTensor&);
template CBlockTensor rotate_perp<cplx>(const CBlockTensor&);
template BlockTensor rotate<double>(const BlockTensor&, double);
template CBlockTensor rotate<cplx>(const CBlockTensor&, double);
template BlockTensor reassemble<double>(const std::vector<Mat2>&, const Eigen::MatrixXd&);
template CBlockTensor reassemble<cplx>(const std::vector<CMat2>&, const Eigen::MatrixXd&);

}  // namespace compolab
