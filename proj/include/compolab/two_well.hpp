#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "compolab/tensor_core.hpp"

namespace compolab {

/**
 * Two quadratic wells W_j(F) = (F, 1) . K_j (F, 1) on 2 x m matrices and the
 * energy W = min(W_1, W_2).
 */
struct TwoWellSpec {
  int m = 0;
  AugmentedTensor K1;
  AugmentedTensor K2;

  /// Wells W_j(F) = (F - F_j) . L_j (F - F_j) + k_j.
  static TwoWellSpec from_wells(const BlockTensor& L1, const Field2n& F1, double k1,
                                const BlockTensor& L2, const Field2n& F2, double k2);

  /// Throws DimensionMismatch when the tensors do not act on 2 x m matrices and
  /// NotPositiveDefinite when an L_j has a negative eigenvalue beyond 1e-10.
  void validate() const;
};

double eval_W(const TwoWellSpec& spec, const Field2n& F);

/// 2 x 2 minor of F built from columns p and q.
double minor(const Field2n& F, int p, int q);

/**
 * Quadratic null Lagrangian T(F) = sum_{p<q} c_pq minor_pq(F).
 *
 * Coefficients are ordered lexicographically over pairs (0,1), (0,2), ...,
 * (1,2), ...
 */
struct Translation {
  int m = 0;
  Eigen::VectorXd c;

  static int pair_count(int m) { return m * (m - 1) / 2; }
  static Translation zero(int m) { return {m, Eigen::VectorXd::Zero(pair_count(m))}; }

  double value(const Field2n& F) const;
  /// Symmetric 2m x 2m matrix with T(F) = vec(F)^T T vec(F).
  Eigen::MatrixXd matrix() const;
};

/**
 * Node list of a lamination of F: node 0 is the root; a split node with
 * parameters (p, a, b) has children F + (1 - p) a (x) b and F - p a (x) b.
 */
struct LaminationTreeF {
  struct Node {
    Field2n F;
    double p = 0.0;
    double theta = 0.0;  ///< a = (cos theta, sin theta)
    Eigen::VectorXd b;
    int child1 = -1;
    int child2 = -1;
    int depth = 0;
    bool is_leaf() const { return child1 < 0; }
  };
  std::vector<Node> nodes;

  int rank() const;
  /// Volume-weighted sum of W over the leaves.
  double energy(const TwoWellSpec& spec) const;
  /// Recomputes every child F from its parent's split parameters.
  void propagate();
};

struct UpperBoundOptions {
  int max_rank = 2;
  int restarts = 3;
  int angle_samples = 32;
  int refine_sweeps = 2;
};

struct UpperBoundResult {
  double value = 0.0;
  LaminationTreeF tree;
};

/**
 * Best nested-laminate energy found at F over trees of rank at most
 * max_rank; grown greedily rank by rank and refined by coordinate descent, so
 * the value never increases with max_rank.
 */
UpperBoundResult lamination_upper_bound(const TwoWellSpec& spec, const Field2n& F,
                                        const UpperBoundOptions& options = {});

struct LowerBoundOptions {
  /// Line searches per start (ignored when m == 2, where one exact search
  /// covers the whole feasible interval).
  int search_budget = 40;
  int starts = 16;
  std::uint64_t seed = 0;
};

struct LowerBoundResult {
  double value = 0.0;
  Translation T;
  /// True when an L_j was singular and a 1e-10 ridge was added.
  bool ridge_applied = false;
};

/**
 * Translation lower bound max_T [T(F) + C_T(F)] over translations keeping
 * both W_j - T convex, with C_T the convex envelope of min_j (W_j - T).
 */
LowerBoundResult translation_lower_bound(const TwoWellSpec& spec, const Field2n& F,
                                         const LowerBoundOptions& options = {});

/**
 * Convex envelope at x of min(q1, q2) for convex quadratics
 * q_j(x) = x.A_j x + 2 b_j.x + c_j, together with the optimal weight of q1.
 */
struct EnvelopeValue {
  double value = 0.0;
  double p = 0.0;
  Eigen::VectorXd x1;  ///< split point in q1
  Eigen::VectorXd x2;  ///< split point in q2
};
EnvelopeValue convex_envelope_two_quadratics(const Eigen::MatrixXd& A1, const Eigen::VectorXd& b1,
                                             double c1, const Eigen::MatrixXd& A2,
                                             const Eigen::VectorXd& b2, double c2,
                                             const Eigen::VectorXd& x);

struct GapRecord {
  Field2n F;
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;
};

struct GapReport {
  std::vector<GapRecord> records;
  double max_gap = 0.0;
  std::size_t argmax = 0;
  double min_gap = 0.0;
};

/// Wording attached to every gap report.
extern const char* const kGapCaveat;

/// Uniform grid over [lo, hi]^(2m) with `points` samples per entry.
std::vector<Field2n> make_F_grid(int m, double lo, double hi, int points);

GapReport gap_scan(const TwoWellSpec& spec, const std::vector<Field2n>& grid,
                   const UpperBoundOptions& upper, const LowerBoundOptions& lower, int jobs = 1);

struct KohnResult {
  TwoWellSpec spec;
  LowerBoundResult lower;
  UpperBoundResult upper;
};

/**
 * Infimum over geometries of (E0, 1) . K* (E0, 1) as the relaxed two-well
 * energy of the wells (F, 1) . K_j (F, 1) at F = E0, bracketed by both bounds.
 */
KohnResult kohn_reduction(const AugmentedTensor& K1, const AugmentedTensor& K2,
                          const Field2n& E0, const UpperBoundOptions& upper = {},
                          const LowerBoundOptions& lower = {});

struct WTransformResult {
  TwoWellSpec spec;
  /// Superfield [E_1 | ... | E_h | R_perp^T J_{h+1} | ... ] of size 2 x n^2.
  Field2n E0;
};

/**
 * Superfield reduction of the characterization of the set of effective
 * tensors: the h fields in E_list keep L_j, the n - h fields in J_list use the
 * dual tensor [R_perp L_j R_perp^T]^{-1}. `lagrange` is added to the offset
 * of well 1 for the fixed-volume-fraction variant. Throws NotOrthogonal when
 * the fields are not mutually orthogonal to 1e-12 and DimensionMismatch
 * unless h + (n - h) == n.
 */
WTransformResult wtransform_reduction(const BlockTensor& L1, const BlockTensor& L2,
                                      const std::vector<Field2n>& E_list,
                                      const std::vector<Field2n>& J_list, double lagrange = 0.0);

}  // namespace compolab
