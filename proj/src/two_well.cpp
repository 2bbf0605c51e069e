#include "compolab/two_well.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "compolab/errors.hpp"
#include "compolab/parallel.hpp"

namespace compolab {

namespace {

constexpr int kBrentBits = 40;
constexpr std::uintmax_t kBrentIters = 200;

template <class F>
std::pair<double, double> brent_min(F&& f, double lo, double hi) {
  std::uintmax_t iters = kBrentIters;
  return boost::math::tools::brent_find_minima(f, lo, hi, kBrentBits, iters);
}

// q(x) = x.A x + 2 b.x + c on vec(F).
struct Quadratic {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  double c = 0.0;
  double operator()(const Eigen::VectorXd& x) const { return x.dot(A * x) + 2.0 * b.dot(x) + c; }
  Eigen::VectorXd half_gradient(const Eigen::VectorXd& x) const { return A * x + b; }
};

Quadratic quadratic_of(const AugmentedTensor& K) {
  return {K.L.flat(), flatten<double>(K.V), K.c};
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& M, const Eigen::VectorXd& r) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() == Eigen::Success) return llt.solve(r);
  return M.completeOrthogonalDecomposition().solve(r);
}

double min_sym_eigenvalue(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

TwoWellSpec TwoWellSpec::from_wells(const BlockTensor& L1, const Field2n& F1, double k1,
                                   const BlockTensor& L2, const Field2n& F2, double k2) {
  TwoWellSpec spec;
  spec.m = L1.n();
  spec.K1 = AugmentedTensor::from_well(L1, F1, k1);
  spec.K2 = AugmentedTensor::from_well(L2, F2, k2);
  spec.validate();
  return spec;
}

void TwoWellSpec::validate() const {
  if (m < 1) fail(ErrorKind::InvalidInput, "two-well spec needs m >= 1");
  for (const auto* K : {&K1, &K2}) {
    if (K->n() != m || K->V.cols() != m)
      fail(ErrorKind::DimensionMismatch, "well tensors must act on 2 x m matrices");
    const double scale = std::max(1.0, K->L.flat().cwiseAbs().maxCoeff());
    if (K->L.min_eigenvalue() < -1e-10 * scale)
      fail(ErrorKind::NotPositiveDefinite, "well stiffness L_j must be positive semidefinite");
  }
}

double eval_W(const TwoWellSpec& spec, const Field2n& F) {
  if (F.cols() != spec.m) fail(ErrorKind::DimensionMismatch, "F has the wrong number of columns");
  return std::min(eval_well(spec.K1, F), eval_well(spec.K2, F));
}

double minor(const Field2n& F, int p, int q) { return F(0, p) * F(1, q) - F(1, p) * F(0, q); }

double Translation::value(const Field2n& F) const {
  if (F.cols() != m) fail(ErrorKind::DimensionMismatch, "F has the wrong number of columns");
  double t = 0.0;
  int k = 0;
  for (int p = 0; p < m; ++p)
    for (int q = p + 1; q < m; ++q) t += c(k++) * minor(F, p, q);
  return t;
}

Eigen::MatrixXd Translation::matrix() const {
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  int k = 0;
  for (int p = 0; p < m; ++p)
    for (int q = p + 1; q < m; ++q) {
      const double h = 0.5 * c(k++);
      T(2 * p, 2 * q + 1) += h;
      T(2 * q + 1, 2 * p) += h;
      T(2 * p + 1, 2 * q) -= h;
      T(2 * q, 2 * p + 1) -= h;
    }
  return T;
}

// ---------------------------------------------------------------------------
// Convex envelope of two convex quadratics.

EnvelopeValue convex_envelope_two_quadratics(const Eigen::MatrixXd& A1, const Eigen::VectorXd& b1,
                                             double c1, const Eigen::MatrixXd& A2,
                                             const Eigen::VectorXd& b2, double c2,
                                             const Eigen::VectorXd& x) {
  const Quadratic q1{A1, b1, c1}, q2{A2, b2, c2};
  const double v1 = q1(x), v2 = q2(x);
  const Eigen::VectorXd r = q1.half_gradient(x) - q2.half_gradient(x);

  auto phi = [&](double p) {
    const Eigen::MatrixXd M = (1.0 - p) * A1 + p * A2;
    return p * v1 + (1.0 - p) * v2 - p * (1.0 - p) * r.dot(solve_spd(M, r));
  };

  EnvelopeValue best;
  best.value = v2;
  best.p = 0.0;
  if (v1 < best.value) {
    best.value = v1;
    best.p = 1.0;
  }
  if (r.norm() > 0.0) {
    const auto [p, val] = brent_min(phi, 0.0, 1.0);
    if (val < best.value) {
      best.value = val;
      best.p = p;
    }
  }
  best.x1 = x;
  best.x2 = x;
  if (best.p > 0.0 && best.p < 1.0) {
    const Eigen::MatrixXd M = (1.0 - best.p) * A1 + best.p * A2;
    const Eigen::VectorXd delta = -solve_spd(M, r);
    best.x1 = x + (1.0 - best.p) * delta;
    best.x2 = x - best.p * delta;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Translation lower bound.

namespace {

struct LowerProblem {
  Quadratic q1, q2;
  Eigen::VectorXd x;
  int m = 0;

  // h(c) = T(x) + C_T(x) and a supergradient in c.
  double eval(const Eigen::VectorXd& c, Eigen::VectorXd* supergradient = nullptr) const {
    const Translation T{m, c};
    const Eigen::MatrixXd Tm = T.matrix();
    const EnvelopeValue env =
        convex_envelope_two_quadratics(q1.A - Tm, q1.b, q1.c, q2.A - Tm, q2.b, q2.c, x);
    if (supergradient) {
      supergradient->resize(c.size());
      const Field2n F = unflatten<double>(x, m);
      const Field2n X = unflatten<double>(env.x1, m), Y = unflatten<double>(env.x2, m);
      int k = 0;
      for (int p = 0; p < m; ++p)
        for (int q = p + 1; q < m; ++q)
          (*supergradient)(k++) =
              minor(F, p, q) - env.p * minor(X, p, q) - (1.0 - env.p) * minor(Y, p, q);
    }
    return x.dot(Tm * x) + env.value;
  }

  // Range of t keeping A_j - T(c0 + t d) positive definite, shrunk slightly
  // into the interior.
  std::pair<double, double> feasible_interval(const Eigen::VectorXd& c0,
                                              const Eigen::VectorXd& d) const {
    const Eigen::MatrixXd T0 = Translation{m, c0}.matrix();
    const Eigen::MatrixXd Td = Translation{m, d}.matrix();
    double lo = -1e6, hi = 1e6;
    for (const Quadratic* q : {&q1, &q2}) {
      const Eigen::MatrixXd B = q->A - T0;
      Eigen::LLT<Eigen::MatrixXd> llt(B);
      if (llt.info() != Eigen::Success) return {0.0, 0.0};
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Td, B, Eigen::EigenvaluesOnly);
      for (int i = 0; i < ges.eigenvalues().size(); ++i) {
        const double mu = ges.eigenvalues()(i);
        if (mu > 1e-300) hi = std::min(hi, 1.0 / mu);
        if (mu < -1e-300) lo = std::max(lo, 1.0 / mu);
      }
    }
    constexpr double shrink = 1.0 - 1e-9;
    return {lo * shrink, hi * shrink};
  }

  // Maximizes h along c0 + t d; returns the improved point and value.
  std::pair<Eigen::VectorXd, double> line_search(const Eigen::VectorXd& c0, double h0,
                                                 const Eigen::VectorXd& d) const {
    const auto [lo, hi] = feasible_interval(c0, d);
    if (!(hi > lo)) return {c0, h0};
    auto neg = [&](double t) { return -eval(Eigen::VectorXd(c0 + t * d)); };
    const auto [t, v] = brent_min(neg, lo, hi);
    if (-v > h0) return {Eigen::VectorXd(c0 + t * d), -v};
    return {c0, h0};
  }
};

std::uint64_t start_seed(std::uint64_t seed, int start) {
  return seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(start + 1);
}

double symmetric_unit(std::mt19937_64& rng) {
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

}  // namespace

LowerBoundResult translation_lower_bound(const TwoWellSpec& spec, const Field2n& F,
                                         const LowerBoundOptions& options) {
  spec.validate();
  if (F.cols() != spec.m) fail(ErrorKind::DimensionMismatch, "F has the wrong number of columns");
  LowerProblem prob{quadratic_of(spec.K1), quadratic_of(spec.K2), flatten<double>(F), spec.m};

  LowerBoundResult result;
  for (Quadratic* q : {&prob.q1, &prob.q2}) {
    const double scale = std::max(1.0, q->A.cwiseAbs().maxCoeff());
    if (min_sym_eigenvalue(q->A) <= 1e-12 * scale) {
      q->A += 1e-10 * Eigen::MatrixXd::Identity(q->A.rows(), q->A.cols());
      result.ridge_applied = true;
    }
  }

  const int P = Translation::pair_count(spec.m);
  Eigen::VectorXd best_c = Eigen::VectorXd::Zero(P);
  double best_h = prob.eval(best_c);

  if (P == 1) {
    const auto [c, h] = prob.line_search(best_c, best_h, Eigen::VectorXd::Ones(1));
    best_c = c;
    best_h = h;
  } else if (P > 1) {
    for (int s = 0; s < std::max(1, options.starts); ++s) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(P);
      if (s > 0) {
        std::mt19937_64 rng(start_seed(options.seed, s));
        Eigen::VectorXd d(P);
        for (int k = 0; k < P; ++k) d(k) = symmetric_unit(rng);
        const auto [lo, hi] = prob.feasible_interval(c, d);
        const double u = 0.5 * (symmetric_unit(rng) + 1.0);
        c = (lo + u * (hi - lo)) * d;
      }
      double h = prob.eval(c);
      int searches = 0;
      while (searches < options.search_budget) {
        const double cycle_start = h;
        for (int k = 0; k <= P && searches < options.search_budget; ++k, ++searches) {
          Eigen::VectorXd d;
          if (k < P) {
            d = Eigen::VectorXd::Unit(P, k);
          } else {
            prob.eval(c, &d);
            if (!(d.norm() > 0.0)) continue;
            d /= d.norm();
          }
          std::tie(c, h) = prob.line_search(c, h, d);
        }
        if (h - cycle_start <= 1e-14 * (1.0 + std::abs(h))) break;
      }
      if (h > best_h) {
        best_h = h;
        best_c = c;
      }
    }
  }
  result.value = best_h;
  result.T = Translation{spec.m, best_c};
  return result;
}

// ---------------------------------------------------------------------------
// Lamination upper bound.

int LaminationTreeF::rank() const {
  int r = 0;
  for (const auto& node : nodes)
    if (node.is_leaf()) r = std::max(r, node.depth);
  return r;
}

namespace {

Eigen::Vector2d direction(double theta) { return {std::cos(theta), std::sin(theta)}; }

Field2n rank_one(double theta, const Eigen::VectorXd& b) {
  return direction(theta) * b.transpose();
}

double tree_energy(const LaminationTreeF& tree, const TwoWellSpec& spec, int index, double weight) {
  const auto& node = tree.nodes[static_cast<std::size_t>(index)];
  if (node.is_leaf()) return weight * eval_W(spec, node.F);
  return tree_energy(tree, spec, node.child1, weight * node.p) +
         tree_energy(tree, spec, node.child2, weight * (1.0 - node.p));
}

void propagate_from(LaminationTreeF& tree, int index) {
  auto& node = tree.nodes[static_cast<std::size_t>(index)];
  if (node.is_leaf()) return;
  const Field2n jump = rank_one(node.theta, node.b);
  tree.nodes[static_cast<std::size_t>(node.child1)].F = node.F + (1.0 - node.p) * jump;
  tree.nodes[static_cast<std::size_t>(node.child2)].F = node.F - node.p * jump;
  propagate_from(tree, node.child1);
  propagate_from(tree, node.child2);
}

struct Split {
  double theta = 0.0;
  double p = 0.5;
  Eigen::VectorXd b;
  double model = std::numeric_limits<double>::infinity();
};

// Closed-form optimum over b of p q1(F + (1-p) a b^T) + (1-p) q2(F - p a b^T).
struct SplitModel {
  Quadratic q1, q2;
  int m = 0;

  Split at(const Eigen::VectorXd& x, double theta, double p) const {
    const Eigen::Vector2d a = direction(theta);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(2 * m, m);
    for (int j = 0; j < m; ++j) P.block<2, 1>(2 * j, j) = a;
    const Eigen::MatrixXd M = (1.0 - p) * (P.transpose() * q1.A * P) + p * (P.transpose() * q2.A * P);
    const Eigen::VectorXd r = P.transpose() * (q1.half_gradient(x) - q2.half_gradient(x));
    Split s;
    s.theta = theta;
    s.p = p;
    s.b = -solve_spd(M, r);
    s.model = p * q1(x) + (1.0 - p) * q2(x) + p * (1.0 - p) * r.dot(s.b);
    return s;
  }

  Split best_p(const Eigen::VectorXd& x, double theta) const {
    auto f = [&](double p) { return at(x, theta, p).model; };
    const auto [p, v] = brent_min(f, 1e-9, 1.0 - 1e-9);
    (void)v;
    return at(x, theta, p);
  }

  // Candidate splits sorted by model value: angle grid, top three refined.
  std::vector<Split> candidates(const Eigen::VectorXd& x, int samples) const {
    std::vector<Split> grid;
    const double step = std::numbers::pi / samples;
    for (int k = 0; k < samples; ++k) grid.push_back(best_p(x, k * step));
    std::stable_sort(grid.begin(), grid.end(),
                     [](const Split& a, const Split& b) { return a.model < b.model; });
    const std::size_t refined = std::min<std::size_t>(3, grid.size());
    for (std::size_t i = 0; i < refined; ++i) {
      const double t0 = grid[i].theta;
      auto f = [&](double t) { return best_p(x, t).model; };
      const auto [t, v] = brent_min(f, t0 - step, t0 + step);
      if (v < grid[i].model) grid[i] = best_p(x, t);
    }
    std::stable_sort(grid.begin(), grid.end(),
                     [](const Split& a, const Split& b) { return a.model < b.model; });
    return grid;
  }
};

void apply_split(LaminationTreeF& tree, int index, const Split& s) {
  const int c1 = static_cast<int>(tree.nodes.size());
  const int depth = tree.nodes[static_cast<std::size_t>(index)].depth + 1;
  {
    auto& node = tree.nodes[static_cast<std::size_t>(index)];
    node.theta = s.theta;
    node.p = s.p;
    node.b = s.b;
    node.child1 = c1;
    node.child2 = c1 + 1;
  }
  LaminationTreeF::Node child;
  child.depth = depth;
  tree.nodes.push_back(child);
  tree.nodes.push_back(child);
  propagate_from(tree, index);
}

// Coordinate descent on every split parameter of the tree; only improvements
// are kept.
void refine(LaminationTreeF& tree, const TwoWellSpec& spec, int sweeps) {
  double current = tree_energy(tree, spec, 0, 1.0);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    const double start = current;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      if (tree.nodes[i].is_leaf()) continue;
      auto try_param = [&](double& param, double lo, double hi) {
        const double saved = param;
        auto f = [&](double v) {
          param = v;
          propagate_from(tree, static_cast<int>(i));
          return tree_energy(tree, spec, 0, 1.0);
        };
        const auto [v, e] = brent_min(f, lo, hi);
        if (e < current) {
          param = v;
          current = e;
        } else {
          param = saved;
        }
        propagate_from(tree, static_cast<int>(i));
      };
      auto& node = tree.nodes[i];
      try_param(node.p, 1e-9, 1.0 - 1e-9);
      try_param(node.theta, node.theta - 0.25 * std::numbers::pi, node.theta + 0.25 * std::numbers::pi);
      const double spread = 0.5 * (node.b.norm() + 1e-3);
      for (int k = 0; k < node.b.size(); ++k) {
        const double bk = node.b(k);
        try_param(tree.nodes[i].b(k), bk - spread, bk + spread);
      }
    }
    if (start - current <= 1e-14 * (1.0 + std::abs(current))) break;
  }
}

}  // namespace

double LaminationTreeF::energy(const TwoWellSpec& spec) const { return tree_energy(*this, spec, 0, 1.0); }

void LaminationTreeF::propagate() {
  if (!nodes.empty()) propagate_from(*this, 0);
}

UpperBoundResult lamination_upper_bound(const TwoWellSpec& spec, const Field2n& F,
                                        const UpperBoundOptions& options) {
  spec.validate();
  if (F.cols() != spec.m) fail(ErrorKind::DimensionMismatch, "F has the wrong number of columns");
  if (options.max_rank < 0) fail(ErrorKind::InvalidInput, "max_rank must be non-negative");
  const SplitModel model{quadratic_of(spec.K1), quadratic_of(spec.K2), spec.m};

  LaminationTreeF root;
  LaminationTreeF::Node r;
  r.F = F;
  root.nodes.push_back(r);

  UpperBoundResult best{eval_W(spec, F), root};
  if (options.max_rank == 0) return best;

  const std::vector<Split> root_candidates =
      model.candidates(flatten<double>(F), std::max(4, options.angle_samples));
  const int restarts = std::max(1, options.restarts);

  for (int s = 0; s < restarts && s < static_cast<int>(root_candidates.size()); ++s) {
    LaminationTreeF tree = root;
    for (int rank = 1; rank <= options.max_rank; ++rank) {
      const std::size_t existing = tree.nodes.size();
      for (std::size_t i = 0; i < existing; ++i) {
        if (!tree.nodes[i].is_leaf() || tree.nodes[i].depth != rank - 1) continue;
        const Field2n leafF = tree.nodes[i].F;
        const double before = eval_W(spec, leafF);
        Split split;
        if (rank == 1) {
          split = root_candidates[static_cast<std::size_t>(s)];
        } else {
          split = model.candidates(flatten<double>(leafF), std::max(4, options.angle_samples)).front();
        }
        const Field2n jump = rank_one(split.theta, split.b);
        const double after = split.p * eval_W(spec, leafF + (1.0 - split.p) * jump) +
                             (1.0 - split.p) * eval_W(spec, leafF - split.p * jump);
        if (after < before - 1e-14 * (1.0 + std::abs(before))) apply_split(tree, static_cast<int>(i), split);
      }
      refine(tree, spec, options.refine_sweeps);
    }
    const double value = tree.energy(spec);
    if (value < best.value) {
      best.value = value;
      best.tree = std::move(tree);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Scans and reductions.

const char* const kGapCaveat =
    "Gaps are differences between a translation lower bound and a laminate upper bound. A "
    "positive gap only says that the minor translations and the laminates searched here do not "
    "meet at that F; it does not separate rank-one convexity from quasiconvexity. Conversely, "
    "matching bounds are a sufficient condition for equality of the relaxed energies, not a "
    "necessary one.";

std::vector<Field2n> make_F_grid(int m, double lo, double hi, int points) {
  if (m < 1 || points < 1) fail(ErrorKind::InvalidInput, "grid needs m >= 1 and points >= 1");
  const int dims = 2 * m;
  double total = std::pow(static_cast<double>(points), dims);
  if (total > 5e7) fail(ErrorKind::InvalidInput, "F grid is too large");
  std::vector<Field2n> grid;
  grid.reserve(static_cast<std::size_t>(total));
  std::vector<int> digit(static_cast<std::size_t>(dims), 0);
  const double step = points > 1 ? (hi - lo) / (points - 1) : 0.0;
  for (std::size_t idx = 0; idx < static_cast<std::size_t>(total); ++idx) {
    Eigen::VectorXd x(dims);
    for (int k = 0; k < dims; ++k) x(k) = lo + step * digit[static_cast<std::size_t>(k)];
    grid.push_back(unflatten<double>(x, m));
    for (int k = 0; k < dims; ++k) {
      if (++digit[static_cast<std::size_t>(k)] < points) break;
      digit[static_cast<std::size_t>(k)] = 0;
    }
  }
  return grid;
}

GapReport gap_scan(const TwoWellSpec& spec, const std::vector<Field2n>& grid,
                   const UpperBoundOptions& upper, const LowerBoundOptions& lower, int jobs) {
  spec.validate();
  GapReport report;
  report.records.resize(grid.size());
  parallel_for(grid.size(), jobs, [&](std::size_t i) {
    GapRecord rec;
    rec.F = grid[i];
    rec.lower = translation_lower_bound(spec, grid[i], lower).value;
    rec.upper = lamination_upper_bound(spec, grid[i], upper).value;
    rec.gap = rec.upper - rec.lower;
    report.records[i] = std::move(rec);
  });
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    const double g = report.records[i].gap;
    if (i == 0 || g > report.max_gap) {
      report.max_gap = g;
      report.argmax = i;
    }
    if (i == 0 || g < report.min_gap) report.min_gap = g;
  }
  return report;
}

KohnResult kohn_reduction(const AugmentedTensor& K1, const AugmentedTensor& K2, const Field2n& E0,
                          const UpperBoundOptions& upper, const LowerBoundOptions& lower) {
  KohnResult result;
  result.spec.m = K1.n();
  result.spec.K1 = K1;
  result.spec.K2 = K2;
  result.spec.validate();
  result.lower = translation_lower_bound(result.spec, E0, lower);
  result.upper = lamination_upper_bound(result.spec, E0, upper);
  return result;
}

WTransformResult wtransform_reduction(const BlockTensor& L1, const BlockTensor& L2,
                                      const std::vector<Field2n>& E_list,
                                      const std::vector<Field2n>& J_list, double lagrange) {
  const int n = L1.n();
  if (L2.n() != n) fail(ErrorKind::DimensionMismatch, "phase tensors have different field counts");
  const int h = static_cast<int>(E_list.size());
  if (h + static_cast<int>(J_list.size()) != n)
    fail(ErrorKind::DimensionMismatch, "E_list and J_list must hold n fields in total");

  std::vector<Field2n> fields(E_list);
  fields.insert(fields.end(), J_list.begin(), J_list.end());
  for (const auto& fld : fields)
    if (fld.cols() != n) fail(ErrorKind::DimensionMismatch, "fields must be 2 x n");
  for (std::size_t a = 0; a < fields.size(); ++a)
    for (std::size_t b = a + 1; b < fields.size(); ++b) {
      const double scale = std::max(1.0, fields[a].norm() * fields[b].norm());
      if (std::abs(inner(fields[a], fields[b])) > 1e-12 * scale)
        fail(ErrorKind::NotOrthogonal, "fields of the W-transform must be mutually orthogonal");
    }

  const int m = n * n;
  WTransformResult out;
  out.E0 = Field2n::Zero(2, m);
  for (int k = 0; k < n; ++k) {
    const Field2n block = k < h ? fields[static_cast<std::size_t>(k)]
                                : Field2n(rotation_perp().transpose() * fields[static_cast<std::size_t>(k)]);
    out.E0.middleCols(k * n, n) = block;
  }
  auto super = [&](const BlockTensor& L) {
    const Eigen::MatrixXd dual = rotate_perp(L).inverse().flat();
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    for (int k = 0; k < n; ++k) S.block(2 * n * k, 2 * n * k, 2 * n, 2 * n) = k < h ? L.flat() : dual;
    return BlockTensor::from_flat(S, -1.0);
  };
  out.spec.m = m;
  out.spec.K1 = AugmentedTensor{super(L1), Field2n::Zero(2, m), lagrange};
  out.spec.K2 = AugmentedTensor{super(L2), Field2n::Zero(2, m), 0.0};
  out.spec.validate();
  return out;
}

}  // namespace compolab
