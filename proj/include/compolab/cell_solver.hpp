#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "compolab/cell_geometry.hpp"
#include "compolab/tensor_core.hpp"

namespace compolab {

struct SolverOptions {
  /// Relative residual at which the Krylov iteration stops.
  double tol = 1e-10;
  /// 0 selects 20 * N.
  int max_iterations = 0;
  /// Largest admitted ratio of extreme eigenvalues of the phase tensors.
  double max_contrast = 1e6;
};

int resolved_max_iterations(const SolverOptions& options, int N);

/**
 * Cell fields of one loading. E and J are stored cell by cell, each cell a
 * column-major dim x n block, so E(cell) is the matrix whose column j is the
 * j-th field at that cell.
 */
template <class S>
struct FieldSolutionT {
  int dim = 0;
  int n = 0;
  int N = 0;
  std::vector<S> E_data;
  std::vector<S> J_data;
  MatX<S> E_average;
  MatX<S> J_average;
  double residual = 0.0;
  int iterations = 0;

  std::size_t cell_count() const { return E_data.size() / static_cast<std::size_t>(dim * n); }
  MatX<S> E(std::size_t cell) const;
  MatX<S> J(std::size_t cell) const;
};

using FieldSolution = FieldSolutionT<double>;

/**
 * Periodic cell problem for n coupled potential fields on a dim-dimensional
 * grid: E = E0 + grad u, J = T(x) E with T = T1 on phase 1 and T2 on phase
 * 2, div J = 0.
 *
 * T1 and T2 act on dim x n fields flattened column by column (entry (i, j)
 * at dim * j + i). The discretization is a rotated staggered grid: u lives
 * on cell corners and every cell gradient averages the corner differences,
 * so layered media are represented exactly. Throws ContrastTooHigh,
 * NotPositiveDefinite and NoConvergence.
 */
template <class S>
FieldSolutionT<S> solve_cell_tensor(const CellGeometry& geom, const MatX<S>& T1, const MatX<S>& T2,
                                    const MatX<S>& E0, const SolverOptions& options = {});

/// Two-dimensional block problem with the block tensors L1, L2.
template <class S>
FieldSolutionT<S> solve_cell(const CellGeometry& geom, const BlockTensorT<S>& L1,
                             const BlockTensorT<S>& L2, const Field2nT<S>& E0,
                             const SolverOptions& options = {});

/// L* assembled column by column from 2n unit loadings, run on `jobs` threads.
template <class S>
BlockTensorT<S> effective_tensor_cell(const CellGeometry& geom, const BlockTensorT<S>& L1,
                                      const BlockTensorT<S>& L2, const SolverOptions& options = {},
                                      int jobs = 1);

/// Effective conductivity (dim x dim) for phase conductivities s1, s2.
template <class S>
MatX<S> effective_conductivity(const CellGeometry& geom, const MatX<S>& s1, const MatX<S>& s2,
                               const SolverOptions& options = {}, int jobs = 1);

/**
 * sigma*(sigma): phase 1 of conductivity sigma I against phase 2 of
 * conductivity I. Throws BranchCut for sigma on the closed negative real axis.
 */
MatX<cplx> sigma_star_fn(const CellGeometry& geom, cplx sigma, const SolverOptions& options = {},
                         int jobs = 1);

/// Matrix-valued field with <E> = I: column d solves the loading e_d.
FieldSolution solve_matrix_field(const CellGeometry& geom, const Eigen::MatrixXd& s1,
                                 const Eigen::MatrixXd& s2, const SolverOptions& options = {},
                                 int jobs = 1);

struct CofactorReport {
  std::size_t cells = 0;
  double min_det = 0.0;
  double max_det = 0.0;
  double negative_det_fraction = 0.0;
  /// Trace of the cofactor matrix, reported in 3D only.
  std::optional<double> min_tr_cof;
  std::optional<double> max_tr_cof;
  std::optional<double> negative_tr_cof_fraction;
};

/// Per-cell det E and (3D) tr cof E statistics of a dim x dim field.
CofactorReport cofactor_diagnostics(const FieldSolution& sol);

enum class HallMethod { Direct, Perturbation };

struct HallOptions {
  /// Phase 2 conductivity relative to 1 / rho.
  double void_ratio = 1e-6;
  SolverOptions solver{1e-10, 0, 1e6};
  int jobs = 1;
};

struct HallResult {
  double R_star = 0.0;
  HallMethod method = HallMethod::Direct;
  bool cubic_symmetric = true;
  /// Effective resistivity at zero field.
  Eigen::Matrix3d rho_star0 = Eigen::Matrix3d::Zero();
  int max_iterations_used = 0;
};

/**
 * Effective Hall coefficient of a 3D geometry whose phase 1 has resistivity
 * rho I + R_H [h]x and whose phase 2 is a poor conductor. `Direct` takes a
 * central difference of the antisymmetric part of rho* in h; `Perturbation`
 * uses the zero-field fields E with <E> = I and the first-order change
 * <E^T d(sigma) E>. Throws InvalidInput unless dim == 3 and
 * 0 < |h| <= 1e-3 rho.
 */
HallResult hall_coefficient(const CellGeometry& geom, double rho, double R_H,
                            const Eigen::Vector3d& h, HallMethod method,
                            const HallOptions& options = {});

/// Skew matrix [h]x with [h]x v = h x v.
Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& h);
/// Axial vector of the antisymmetric part of A.
Eigen::Vector3d axial_vector(const Eigen::Matrix3d& A);

}  // namespace compolab
