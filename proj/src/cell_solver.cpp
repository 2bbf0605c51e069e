#include "compolab/cell_solver.hpp"

#include <fftw3.h>

#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <type_traits>

#include "compolab/errors.hpp"
#include "compolab/parallel.hpp"

namespace compolab {

int resolved_max_iterations(const SolverOptions& options, int N) {
  return options.max_iterations > 0 ? options.max_iterations : 20 * N;
}

template <class S>
MatX<S> FieldSolutionT<S>::E(std::size_t cell) const {
  const std::size_t m = static_cast<std::size_t>(dim * n);
  return Eigen::Map<const MatX<S>>(E_data.data() + cell * m, dim, n);
}

template <class S>
MatX<S> FieldSolutionT<S>::J(std::size_t cell) const {
  const std::size_t m = static_cast<std::size_t>(dim * n);
  return Eigen::Map<const MatX<S>>(J_data.data() + cell * m, dim, n);
}

namespace {

// The FFTW planner is not thread safe; executing distinct plans is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPlan {
 public:
  FftPlan(int dim, int N) : size_(1) {
    std::array<int, 3> dims{N, N, N};
    for (int d = 0; d < dim; ++d) size_ *= static_cast<std::size_t>(N);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    buffer_ = fftw_alloc_complex(size_);
    forward_ = fftw_plan_dft(dim, dims.data(), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft(dim, dims.data(), buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!buffer_ || !forward_ || !backward_) fail(ErrorKind::Internal, "FFTW plan creation failed");
  }
  ~FftPlan() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buffer_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  cplx* data() { return reinterpret_cast<cplx*>(buffer_); }
  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }

 private:
  std::size_t size_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

double real_of(double x) { return x; }
double real_of(const cplx& x) { return x.real(); }
double abs2(double x) { return x * x; }
double abs2(const cplx& x) { return std::norm(x); }
double conj_of(double x) { return x; }
cplx conj_of(const cplx& x) { return std::conj(x); }

template <class S>
S dot(const std::vector<S>& a, const std::vector<S>& b) {
  S s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += conj_of(a[i]) * b[i];
  return s;
}

template <class S>
double norm(const std::vector<S>& a) {
  double s = 0.0;
  for (const auto& v : a) s += abs2(v);
  return std::sqrt(s);
}

Eigen::MatrixXd real_symmetric(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }
Eigen::MatrixXd real_symmetric(const MatX<cplx>& m) {
  const Eigen::MatrixXd r = m.real();
  return 0.5 * (r + r.transpose());
}

template <class S>
class CellProblem {
 public:
  CellProblem(const CellGeometry& geom, const MatX<S>& T1, const MatX<S>& T2, int n)
      : geom_(geom), dim_(geom.dim()), N_(geom.N()), n_(n), m_(geom.dim() * n),
        cells_(geom.cell_count()), corners_(1 << geom.dim()), fft_(geom.dim(), geom.N()) {
    for (int phase = 0; phase < 2; ++phase) {
      const MatX<S>& T = phase == 0 ? T1 : T2;
      tensors_[phase].assign(T.data(), T.data() + T.size());  // column-major
    }
    build_neighbours();
    build_weights();
    build_preconditioner(0.5 * (real_symmetric(T1) + real_symmetric(T2)));
  }

  std::size_t unknowns() const { return cells_ * static_cast<std::size_t>(n_); }

  // q[cell*m + dim*j + d] = d-th derivative of field j at the cell.
  void gradient(const std::vector<S>& u, std::vector<S>& q) const {
    q.assign(cells_ * static_cast<std::size_t>(m_), S{});
    for (std::size_t c = 0; c < cells_; ++c) {
      const std::uint32_t* nb = &neighbours_[c * corners_];
      for (int j = 0; j < n_; ++j) {
        const S* uj = u.data() + static_cast<std::size_t>(j) * cells_;
        for (int d = 0; d < dim_; ++d) {
          S g{};
          for (int s = 0; s < corners_; ++s) g += weights_[static_cast<std::size_t>(d * corners_ + s)] * uj[nb[s]];
          q[c * static_cast<std::size_t>(m_) + static_cast<std::size_t>(dim_ * j + d)] = g;
        }
      }
    }
  }

  void gradient_transpose(const std::vector<S>& q, std::vector<S>& u) const {
    u.assign(unknowns(), S{});
    for (std::size_t c = 0; c < cells_; ++c) {
      const std::uint32_t* nb = &neighbours_[c * corners_];
      for (int j = 0; j < n_; ++j) {
        S* uj = u.data() + static_cast<std::size_t>(j) * cells_;
        for (int s = 0; s < corners_; ++s) {
          S acc{};
          for (int d = 0; d < dim_; ++d)
            acc += weights_[static_cast<std::size_t>(d * corners_ + s)] *
                   q[c * static_cast<std::size_t>(m_) + static_cast<std::size_t>(dim_ * j + d)];
          uj[nb[s]] += acc;
        }
      }
    }
  }

  // In place q <- T(x) q cell by cell.
  void constitutive(std::vector<S>& q) const {
    std::vector<S> tmp(static_cast<std::size_t>(m_));
    const auto& chi = geom_.indicator();
    for (std::size_t c = 0; c < cells_; ++c) {
      const std::vector<S>& T = tensors_[chi[c] ? 0 : 1];
      S* qc = q.data() + c * static_cast<std::size_t>(m_);
      for (int r = 0; r < m_; ++r) {
        S acc{};
        for (int k = 0; k < m_; ++k) acc += T[static_cast<std::size_t>(k * m_ + r)] * qc[k];
        tmp[static_cast<std::size_t>(r)] = acc;
      }
      std::copy(tmp.begin(), tmp.end(), qc);
    }
  }

  void apply(const std::vector<S>& u, std::vector<S>& out) {
    gradient(u, work_);
    constitutive(work_);
    gradient_transpose(work_, out);
  }

  // Right-hand side -G^T T E0 for a uniform applied field.
  void rhs(const MatX<S>& E0, std::vector<S>& b) {
    work_.assign(cells_ * static_cast<std::size_t>(m_), S{});
    for (std::size_t c = 0; c < cells_; ++c)
      for (int j = 0; j < n_; ++j)
        for (int d = 0; d < dim_; ++d)
          work_[c * static_cast<std::size_t>(m_) + static_cast<std::size_t>(dim_ * j + d)] = E0(d, j);
    constitutive(work_);
    gradient_transpose(work_, b);
    for (auto& v : b) v = -v;
  }

  void precondition(const std::vector<S>& r, std::vector<S>& z) {
    z.assign(unknowns(), S{});
    spectral_.assign(unknowns(), cplx{});
    cplx* buf = fft_.data();
    for (int j = 0; j < n_; ++j) {
      const S* rj = r.data() + static_cast<std::size_t>(j) * cells_;
      for (std::size_t c = 0; c < cells_; ++c) buf[c] = cplx(rj[c]);
      fft_.forward();
      std::copy(buf, buf + cells_, spectral_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(j) * cells_));
    }
    std::vector<cplx> in(static_cast<std::size_t>(n_));
    for (std::size_t k = 0; k < cells_; ++k) {
      const cplx* P = &pinv_[k * static_cast<std::size_t>(n_ * n_)];
      for (int j = 0; j < n_; ++j) in[static_cast<std::size_t>(j)] = spectral_[static_cast<std::size_t>(j) * cells_ + k];
      for (int i = 0; i < n_; ++i) {
        cplx acc{};
        for (int j = 0; j < n_; ++j) acc += P[i * n_ + j] * in[static_cast<std::size_t>(j)];
        spectral_[static_cast<std::size_t>(i) * cells_ + k] = acc;
      }
    }
    const double scale = 1.0 / static_cast<double>(cells_);
    for (int j = 0; j < n_; ++j) {
      std::copy(spectral_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(j) * cells_),
                spectral_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(j + 1) * cells_), buf);
      fft_.backward();
      S* zj = z.data() + static_cast<std::size_t>(j) * cells_;
      for (std::size_t c = 0; c < cells_; ++c) {
        if constexpr (std::is_same_v<S, double>) {
          zj[c] = buf[c].real() * scale;
        } else {
          zj[c] = buf[c] * scale;
        }
      }
    }
  }

  const CellGeometry& geometry() const { return geom_; }
  int dim() const { return dim_; }
  int n() const { return n_; }
  int m() const { return m_; }
  std::size_t cells() const { return cells_; }
  const std::vector<S>& tensor(int phase) const { return tensors_[phase == 1 ? 0 : 1]; }

 private:
  void build_neighbours() {
    neighbours_.resize(cells_ * static_cast<std::size_t>(corners_));
    const int zn = dim_ == 3 ? N_ : 1;
    for (int z = 0; z < zn; ++z)
      for (int y = 0; y < N_; ++y)
        for (int x = 0; x < N_; ++x) {
          const std::size_t c = geom_.index(x, y, z);
          for (int s = 0; s < corners_; ++s) {
            const int sx = s & 1, sy = (s >> 1) & 1, sz = (s >> 2) & 1;
            neighbours_[c * corners_ + static_cast<std::size_t>(s)] = static_cast<std::uint32_t>(
                geom_.index((x + sx) % N_, (y + sy) % N_, dim_ == 3 ? (z + sz) % N_ : 0));
          }
        }
  }

  void build_weights() {
    weights_.resize(static_cast<std::size_t>(dim_ * corners_));
    const double norm = 1.0 / static_cast<double>(1 << (dim_ - 1));
    for (int d = 0; d < dim_; ++d)
      for (int s = 0; s < corners_; ++s)
        weights_[static_cast<std::size_t>(d * corners_ + s)] = (((s >> d) & 1) ? 1.0 : -1.0) * norm;
  }

  // Per frequency, the inverse of the n x n matrix g^H L0 g, or zero where
  // the discrete gradient symbol vanishes.
  void build_preconditioner(const Eigen::MatrixXd& L0) {
    pinv_.assign(cells_ * static_cast<std::size_t>(n_ * n_), cplx{});
    const int zn = dim_ == 3 ? N_ : 1;
    std::vector<cplx> g(static_cast<std::size_t>(dim_));
    Eigen::MatrixXcd M(n_, n_);
    for (int kz = 0; kz < zn; ++kz)
      for (int ky = 0; ky < N_; ++ky)
        for (int kx = 0; kx < N_; ++kx) {
          const std::array<int, 3> k{kx, ky, kz};
          double gnorm = 0.0;
          for (int d = 0; d < dim_; ++d) {
            cplx acc{};
            for (int s = 0; s < corners_; ++s) {
              double phase = 0.0;
              for (int e = 0; e < dim_; ++e)
                if ((s >> e) & 1) phase += 2.0 * std::numbers::pi * k[static_cast<std::size_t>(e)] / N_;
              acc += weights_[static_cast<std::size_t>(d * corners_ + s)] * std::polar(1.0, phase);
            }
            g[static_cast<std::size_t>(d)] = acc;
            gnorm += std::norm(acc);
          }
          if (gnorm < 1e-12) continue;
          for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) {
              cplx acc{};
              for (int d = 0; d < dim_; ++d)
                for (int e = 0; e < dim_; ++e)
                  acc += std::conj(g[static_cast<std::size_t>(d)]) * L0(dim_ * i + d, dim_ * j + e) *
                         g[static_cast<std::size_t>(e)];
              M(i, j) = acc;
            }
          const Eigen::MatrixXcd Minv = M.inverse();
          const std::size_t base = geom_.index(kx, ky, kz) * static_cast<std::size_t>(n_ * n_);
          for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) pinv_[base + static_cast<std::size_t>(i * n_ + j)] = Minv(i, j);
        }
  }

  const CellGeometry& geom_;
  int dim_, N_, n_, m_;
  std::size_t cells_;
  int corners_;
  std::array<std::vector<S>, 2> tensors_;
  std::vector<std::uint32_t> neighbours_;
  std::vector<double> weights_;
  std::vector<cplx> pinv_;
  std::vector<S> work_;
  std::vector<cplx> spectral_;
  FftPlan fft_;
};

template <class S>
void axpy(S a, const std::vector<S>& x, std::vector<S>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

struct KrylovOutcome {
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Preconditioned conjugate gradients for the real symmetric case.
template <class S>
KrylovOutcome pcg(CellProblem<S>& A, const std::vector<S>& b, std::vector<S>& x, double tol,
                  int max_iter, double noise_floor) {
  KrylovOutcome out;
  const double bnorm = norm(b);
  x.assign(b.size(), S{});
  if (bnorm <= noise_floor) {
    out.converged = true;
    return out;
  }
  std::vector<S> r = b, z, p, Ap;
  A.precondition(r, z);
  p = z;
  S rz = dot(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    A.apply(p, Ap);
    const S alpha = rz / dot(p, Ap);
    axpy(alpha, p, x);
    axpy(-alpha, Ap, r);
    out.iterations = it;
    out.residual = norm(r) / bnorm;
    if (out.residual <= tol || norm(r) <= noise_floor) {
      out.converged = true;
      break;
    }
    A.precondition(r, z);
    const S rz_new = dot(r, z);
    const S beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
  }
  return out;
}

// Right-preconditioned BiCGSTAB for complex or non-symmetric problems.
template <class S>
KrylovOutcome bicgstab(CellProblem<S>& A, const std::vector<S>& b, std::vector<S>& x, double tol,
                       int max_iter, double noise_floor) {
  KrylovOutcome out;
  const double bnorm = norm(b);
  x.assign(b.size(), S{});
  if (bnorm <= noise_floor) {
    out.converged = true;
    return out;
  }
  std::vector<S> r = b, r_hat = b, p(b.size(), S{}), v(b.size(), S{}), y, s, z, t;
  S rho{1.0}, alpha{1.0}, omega{1.0};
  for (int it = 1; it <= max_iter; ++it) {
    const S rho_new = dot(r_hat, r);
    if (abs2(rho_new) == 0.0) break;
    const S beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    A.precondition(p, y);
    A.apply(y, v);
    alpha = rho / dot(r_hat, v);
    s = r;
    axpy(-alpha, v, s);
    out.iterations = it;
    if (norm(s) / bnorm <= tol || norm(s) <= noise_floor) {
      axpy(alpha, y, x);
      out.residual = norm(s) / bnorm;
      out.converged = true;
      break;
    }
    A.precondition(s, z);
    A.apply(z, t);
    const double tt = real_of(dot(t, t));
    omega = tt > 0.0 ? dot(t, s) / S(tt) : S{};
    axpy(alpha, y, x);
    axpy(omega, z, x);
    r = s;
    axpy(-omega, t, r);
    out.residual = norm(r) / bnorm;
    if (out.residual <= tol || norm(r) <= noise_floor) {
      out.converged = true;
      break;
    }
    if (abs2(omega) == 0.0) break;
  }
  return out;
}

template <class S>
bool is_real_symmetric(const MatX<S>& T) {
  if constexpr (std::is_same_v<S, double>) {
    const double scale = std::max(1.0, T.cwiseAbs().maxCoeff());
    return (T - T.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * scale;
  } else {
    return false;
  }
}

template <class S>
void check_phases(const MatX<S>& T1, const MatX<S>& T2, double max_contrast) {
  double lo = INFINITY, hi = 0.0;
  for (const MatX<S>* T : {&T1, &T2}) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(real_symmetric(*T), Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues()(0));
    hi = std::max(hi, es.eigenvalues()(es.eigenvalues().size() - 1));
  }
  if (!(lo > 0.0))
    fail(ErrorKind::NotPositiveDefinite, "phase tensors need positive definite real symmetric parts");
  if (hi / lo > max_contrast * (1.0 + 1e-9))
    fail(ErrorKind::ContrastTooHigh, "phase contrast exceeds the admitted maximum");
}

}  // namespace

template <class S>
FieldSolutionT<S> solve_cell_tensor(const CellGeometry& geom, const MatX<S>& T1, const MatX<S>& T2,
                                    const MatX<S>& E0, const SolverOptions& options) {
  const int dim = geom.dim();
  if (dim != 2 && dim != 3) fail(ErrorKind::InvalidInput, "geometry has no cells");
  if (E0.rows() != dim || E0.cols() < 1)
    fail(ErrorKind::DimensionMismatch, "applied field must have dim rows");
  const int n = static_cast<int>(E0.cols());
  const int m = dim * n;
  if (T1.rows() != m || T1.cols() != m || T2.rows() != m || T2.cols() != m)
    fail(ErrorKind::DimensionMismatch, "phase tensors must act on dim x n fields");
  check_phases<S>(T1, T2, options.max_contrast);

  CellProblem<S> problem(geom, T1, T2, n);
  std::vector<S> b, u;
  problem.rhs(E0, b);
  const int max_iter = resolved_max_iterations(options, geom.N());
  const bool symmetric = is_real_symmetric<S>(T1) && is_real_symmetric<S>(T2);
  // Loads that are pure rounding noise (a homogeneous cell) count as zero:
  // the floor is a few ulps of the flux a cell carries.
  const double flux = std::max(T1.norm(), T2.norm()) * E0.norm();
  const double noise_floor = 64.0 * std::numeric_limits<double>::epsilon() * flux *
                       std::sqrt(static_cast<double>(geom.cell_count()));
  const KrylovOutcome outcome = symmetric ? pcg(problem, b, u, options.tol, max_iter, noise_floor)
                                          : bicgstab(problem, b, u, options.tol, max_iter, noise_floor);
  if (!outcome.converged)
    fail(ErrorKind::NoConvergence, "cell solver did not reach tolerance within " +
                                       std::to_string(max_iter) + " iterations (residual " +
                                       std::to_string(outcome.residual) + ")");

  FieldSolutionT<S> sol;
  sol.dim = dim;
  sol.n = n;
  sol.N = geom.N();
  sol.iterations = outcome.iterations;
  problem.gradient(u, sol.E_data);
  const std::size_t cells = geom.cell_count();
  for (std::size_t c = 0; c < cells; ++c)
    for (int j = 0; j < n; ++j)
      for (int d = 0; d < dim; ++d) sol.E_data[c * static_cast<std::size_t>(m) + static_cast<std::size_t>(dim * j + d)] += E0(d, j);
  sol.J_data = sol.E_data;
  problem.constitutive(sol.J_data);

  // True residual of the discrete balance law, relative to the load.
  std::vector<S> div;
  problem.gradient_transpose(sol.J_data, div);
  const double bnorm = norm(b);
  sol.residual = bnorm > 0.0 ? norm(div) / bnorm : norm(div);

  sol.E_average = MatX<S>::Zero(dim, n);
  sol.J_average = MatX<S>::Zero(dim, n);
  for (std::size_t c = 0; c < cells; ++c) {
    sol.E_average += Eigen::Map<const MatX<S>>(sol.E_data.data() + c * static_cast<std::size_t>(m), dim, n);
    sol.J_average += Eigen::Map<const MatX<S>>(sol.J_data.data() + c * static_cast<std::size_t>(m), dim, n);
  }
  sol.E_average /= static_cast<double>(cells);
  sol.J_average /= static_cast<double>(cells);
  return sol;
}

template <class S>
FieldSolutionT<S> solve_cell(const CellGeometry& geom, const BlockTensorT<S>& L1,
                             const BlockTensorT<S>& L2, const Field2nT<S>& E0,
                             const SolverOptions& options) {
  if (geom.dim() != 2) fail(ErrorKind::DimensionMismatch, "block tensors need a 2D geometry");
  if (L1.n() != L2.n() || E0.cols() != L1.n())
    fail(ErrorKind::DimensionMismatch, "phase tensors and applied field disagree on n");
  return solve_cell_tensor<S>(geom, L1.flat(), L2.flat(), MatX<S>(E0), options);
}

template <class S>
BlockTensorT<S> effective_tensor_cell(const CellGeometry& geom, const BlockTensorT<S>& L1,
                                      const BlockTensorT<S>& L2, const SolverOptions& options,
                                      int jobs) {
  if (geom.dim() != 2) fail(ErrorKind::DimensionMismatch, "block tensors need a 2D geometry");
  const int n = L1.n();
  if (L2.n() != n) fail(ErrorKind::DimensionMismatch, "phase tensors have different field counts");
  MatX<S> Lstar(2 * n, 2 * n);
  parallel_for(static_cast<std::size_t>(2 * n), jobs, [&](std::size_t k) {
    VecX<S> e = VecX<S>::Zero(2 * n);
    e(static_cast<Eigen::Index>(k)) = S(1.0);
    const auto sol = solve_cell_tensor<S>(geom, L1.flat(), L2.flat(), MatX<S>(unflatten<S>(e, n)), options);
    Lstar.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const VecX<S>>(sol.J_average.data(), 2 * n);
  });
  return BlockTensorT<S>::from_flat(std::move(Lstar), -1.0);
}

template <class S>
MatX<S> effective_conductivity(const CellGeometry& geom, const MatX<S>& s1, const MatX<S>& s2,
                               const SolverOptions& options, int jobs) {
  const int dim = geom.dim();
  MatX<S> out(dim, dim);
  parallel_for(static_cast<std::size_t>(dim), jobs, [&](std::size_t k) {
    MatX<S> e = MatX<S>::Zero(dim, 1);
    e(static_cast<Eigen::Index>(k), 0) = S(1.0);
    const auto sol = solve_cell_tensor<S>(geom, s1, s2, e, options);
    out.col(static_cast<Eigen::Index>(k)) = sol.J_average.col(0);
  });
  return out;
}

MatX<cplx> sigma_star_fn(const CellGeometry& geom, cplx sigma, const SolverOptions& options, int jobs) {
  if (sigma.imag() == 0.0 && sigma.real() <= 0.0)
    fail(ErrorKind::BranchCut, "sigma lies on the closed negative real axis");
  const int dim = geom.dim();
  if (sigma.imag() == 0.0) {
    const Eigen::MatrixXd s1 = sigma.real() * Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::MatrixXd s2 = Eigen::MatrixXd::Identity(dim, dim);
    return effective_conductivity<double>(geom, s1, s2, options, jobs).cast<cplx>();
  }
  const MatX<cplx> s1 = sigma * MatX<cplx>::Identity(dim, dim);
  const MatX<cplx> s2 = MatX<cplx>::Identity(dim, dim);
  return effective_conductivity<cplx>(geom, s1, s2, options, jobs);
}

FieldSolution solve_matrix_field(const CellGeometry& geom, const Eigen::MatrixXd& s1,
                                 const Eigen::MatrixXd& s2, const SolverOptions& options, int jobs) {
  const int dim = geom.dim();
  std::vector<FieldSolution> columns(static_cast<std::size_t>(dim));
  parallel_for(static_cast<std::size_t>(dim), jobs, [&](std::size_t k) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(dim, 1);
    e(static_cast<Eigen::Index>(k), 0) = 1.0;
    columns[k] = solve_cell_tensor<double>(geom, s1, s2, e, options);
  });
  FieldSolution sol;
  sol.dim = dim;
  sol.n = dim;
  sol.N = geom.N();
  const std::size_t cells = geom.cell_count();
  const std::size_t m = static_cast<std::size_t>(dim * dim);
  sol.E_data.resize(cells * m);
  sol.J_data.resize(cells * m);
  sol.E_average = Eigen::MatrixXd::Zero(dim, dim);
  sol.J_average = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const auto& col = columns[static_cast<std::size_t>(k)];
    for (std::size_t c = 0; c < cells; ++c)
      for (int d = 0; d < dim; ++d) {
        sol.E_data[c * m + static_cast<std::size_t>(dim * k + d)] = col.E_data[c * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)];
        sol.J_data[c * m + static_cast<std::size_t>(dim * k + d)] = col.J_data[c * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)];
      }
    sol.E_average.col(k) = col.E_average.col(0);
    sol.J_average.col(k) = col.J_average.col(0);
    sol.residual = std::max(sol.residual, col.residual);
    sol.iterations = std::max(sol.iterations, col.iterations);
  }
  return sol;
}

CofactorReport cofactor_diagnostics(const FieldSolution& sol) {
  if (sol.n != sol.dim) fail(ErrorKind::DimensionMismatch, "cofactor diagnostics need n == dim");
  CofactorReport rep;
  rep.cells = sol.cell_count();
  std::size_t neg_det = 0, neg_cof = 0;
  double min_cof = INFINITY, max_cof = -INFINITY;
  rep.min_det = INFINITY;
  rep.max_det = -INFINITY;
  for (std::size_t c = 0; c < rep.cells; ++c) {
    const Eigen::MatrixXd E = sol.E(c);
    const double det = E.determinant();
    rep.min_det = std::min(rep.min_det, det);
    rep.max_det = std::max(rep.max_det, det);
    if (det < 0.0) ++neg_det;
    if (sol.dim == 3) {
      const double cof = E(1, 1) * E(2, 2) - E(1, 2) * E(2, 1) + E(0, 0) * E(2, 2) -
                         E(0, 2) * E(2, 0) + E(0, 0) * E(1, 1) - E(0, 1) * E(1, 0);
      min_cof = std::min(min_cof, cof);
      max_cof = std::max(max_cof, cof);
      if (cof < 0.0) ++neg_cof;
    }
  }
  rep.negative_det_fraction = static_cast<double>(neg_det) / static_cast<double>(rep.cells);
  if (sol.dim == 3) {
    rep.min_tr_cof = min_cof;
    rep.max_tr_cof = max_cof;
    rep.negative_tr_cof_fraction = static_cast<double>(neg_cof) / static_cast<double>(rep.cells);
  }
  return rep;
}

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& h) {
  Eigen::Matrix3d m;
  m << 0.0, -h.z(), h.y(), h.z(), 0.0, -h.x(), -h.y(), h.x(), 0.0;
  return m;
}

Eigen::Vector3d axial_vector(const Eigen::Matrix3d& A) {
  const Eigen::Matrix3d K = 0.5 * (A - A.transpose());
  return {K(2, 1), K(0, 2), K(1, 0)};
}

HallResult hall_coefficient(const CellGeometry& geom, double rho, double R_H,
                            const Eigen::Vector3d& h, HallMethod method, const HallOptions& options) {
  if (geom.dim() != 3) fail(ErrorKind::InvalidInput, "Hall coefficient needs a 3D geometry");
  if (!(rho > 0.0)) fail(ErrorKind::InvalidInput, "resistivity must be positive");
  const double hn = h.norm();
  if (!(hn > 0.0) || hn > 1e-3 * rho * (1.0 + 1e-12))
    fail(ErrorKind::InvalidInput, "magnetic field must satisfy 0 < |h| <= 1e-3 rho");

  HallResult result;
  result.method = method;
  result.cubic_symmetric = geom.is_cubic_symmetric();
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const Eigen::MatrixXd sigma2 = (options.void_ratio / rho) * I;

  const Eigen::MatrixXd sigma0 = (1.0 / rho) * I;
  const FieldSolution base = solve_matrix_field(geom, sigma0, sigma2, options.solver, options.jobs);
  const Eigen::Matrix3d sigma_star0 = base.J_average;
  result.rho_star0 = sigma_star0.inverse();
  result.max_iterations_used = base.iterations;

  Eigen::Vector3d axial;
  if (method == HallMethod::Direct) {
    auto rho_star = [&](double sign) {
      const Eigen::Matrix3d rho1 = rho * I + sign * R_H * cross_matrix(h);
      const Eigen::MatrixXd sigma1 = rho1.inverse();
      const Eigen::Matrix3d s = effective_conductivity<double>(geom, sigma1, sigma2, options.solver, options.jobs);
      return Eigen::Matrix3d(s.inverse());
    };
    axial = 0.5 * (axial_vector(rho_star(1.0)) - axial_vector(rho_star(-1.0)));
  } else {
    // d(sigma_1) = -(R_H / rho^2) [h]x to first order in h.
    const Eigen::Matrix3d dsigma = -(R_H / (rho * rho)) * cross_matrix(h);
    Eigen::Matrix3d dsigma_star = Eigen::Matrix3d::Zero();
    const auto& chi = geom.indicator();
    for (std::size_t c = 0; c < base.cell_count(); ++c) {
      if (!chi[c]) continue;
      const Eigen::Matrix3d E = base.E(c);
      dsigma_star += E.transpose() * dsigma * E;
    }
    dsigma_star /= static_cast<double>(base.cell_count());
    const Eigen::Matrix3d drho_star = -result.rho_star0 * dsigma_star * result.rho_star0;
    axial = axial_vector(drho_star);
  }
  result.R_star = axial.dot(h) / (hn * hn);
  return result;
}

template struct FieldSolutionT<double>;
template struct FieldSolutionT<cplx>;
template FieldSolution solve_cell_tensor<double>(const CellGeometry&, const Eigen::MatrixXd&,
                                                 const Eigen::MatrixXd&, const Eigen::MatrixXd&,
                                                 const SolverOptions&);
template FieldSolutionT<cplx> solve_cell_tensor<cplx>(const CellGeometry&, const MatX<cplx>&,
                                                      const MatX<cplx>&, const MatX<cplx>&,
                                                      const SolverOptions&);
template FieldSolution solve_cell<double>(const CellGeometry&, const BlockTensor&, const BlockTensor&,
                                          const Field2n&, const SolverOptions&);
template FieldSolutionT<cplx> solve_cell<cplx>(const CellGeometry&, const CBlockTensor&,
                                               const CBlockTensor&, const CField2n&,
                                               const SolverOptions&);
template BlockTensor effective_tensor_cell<double>(const CellGeometry&, const BlockTensor&,
                                                   const BlockTensor&, const SolverOptions&, int);
template CBlockTensor effective_tensor_cell<cplx>(const CellGeometry&, const CBlockTensor&,
                                                  const CBlockTensor&, const SolverOptions&, int);
template Eigen::MatrixXd effective_conductivity<double>(const CellGeometry&, const Eigen::MatrixXd&,
                                                        const Eigen::MatrixXd&, const SolverOptions&,
                                                        int);
template MatX<cplx> effective_conductivity<cplx>(const CellGeometry&, const MatX<cplx>&,
                                                 const MatX<cplx>&, const SolverOptions&, int);

}  // namespace compolab
