#include "compolab/analytic_checks.hpp"

#include <cmath>
#include <sstream>

#include "compolab/digest.hpp"
#include "compolab/errors.hpp"
#include "compolab/format.hpp"

namespace compolab {

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Laminate: return "laminate";
    case Provenance::Cell: return "cell";
    case Provenance::Oracle: return "oracle";
  }
  return "unknown";
}

std::string check_csv_header() { return "check,provenance,residual,tolerance,pass"; }

std::string CheckReport::csv_row() const {
  return name + "," + to_string(provenance) + "," + format_double(residual) + "," +
         format_double(tolerance) + "," + (pass ? "true" : "false");
}

namespace {

void append(std::ostringstream& out, const cplx& z) {
  out << format_double(z.real()) << "," << format_double(z.imag()) << ";";
}

std::string digest_of(const std::string& name, const std::ostringstream& inputs) {
  return sha256_hex(name + "|" + inputs.str());
}

double max_abs(const MatX<cplx>& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

double default_herglotz_tol(Provenance p) { return p == Provenance::Cell ? 1e-6 : 1e-10; }

CheckReport herglotz_check(const std::vector<ConductivitySample>& samples, std::optional<double> tol) {
  CheckReport rep;
  rep.name = "herglotz";
  rep.provenance = samples.empty() ? Provenance::Laminate : samples.front().provenance;
  rep.tolerance = tol.value_or(default_herglotz_tol(rep.provenance));
  std::ostringstream in;
  double min_eig = INFINITY;
  for (const auto& s : samples) {
    if (!(s.sigma.imag() > 0.0)) fail(ErrorKind::WrongHalfPlane, "Herglotz samples need Im sigma > 0");
    const MatX<cplx> im = (s.sigma_star - s.sigma_star.adjoint()) / cplx(0.0, 2.0);
    Eigen::SelfAdjointEigenSolver<MatX<cplx>> es(im, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues()(0));
    append(in, s.sigma);
    for (Eigen::Index i = 0; i < s.sigma_star.size(); ++i) append(in, s.sigma_star(i));
  }
  if (samples.empty()) min_eig = 0.0;
  rep.value = min_eig;
  rep.residual = std::max(0.0, -min_eig);
  rep.pass = min_eig >= -rep.tolerance;
  rep.digest = digest_of(rep.name, in);
  return rep;
}

CheckReport normalization_check(const SigmaFn& fn, double f, Provenance provenance,
                                const NormalizationOptions& options) {
  CheckReport rep;
  rep.name = "normalization";
  rep.provenance = provenance;
  rep.tolerance = options.slope_tol;
  const MatX<cplx> at_one = fn(cplx(1.0, 0.0));
  const int dim = static_cast<int>(at_one.rows());
  const MatX<cplx> I = MatX<cplx>::Identity(dim, dim);
  const double value_res = max_abs(at_one - I);
  const double h = options.step;
  const MatX<cplx> slope = (fn(cplx(1.0 + h, 0.0)) - fn(cplx(1.0 - h, 0.0))) / (2.0 * h);
  const double slope_res = max_abs(slope - f * I);
  rep.residual = std::max(value_res, slope_res);
  rep.value = slope_res;
  rep.pass = value_res <= options.value_tol && slope_res <= options.slope_tol;
  if (value_res > options.value_tol) rep.warnings.push_back("sigma*(1) differs from the identity");
  std::ostringstream in;
  in << format_double(f) << ";" << format_double(h);
  rep.digest = digest_of(rep.name, in);
  return rep;
}

double default_keller_dykhne_tol(Provenance p) { return p == Provenance::Cell ? 1e-2 : 1e-12; }

double keller_dykhne_residual(const MatX<cplx>& star_sigma, const MatX<cplx>& star_inverse_sigma) {
  if (star_sigma.rows() != 2 || star_inverse_sigma.rows() != 2)
    fail(ErrorKind::DimensionMismatch, "the duality relation holds in two dimensions only");
  const MatX<cplx> R = rotation_perp().cast<cplx>();
  const MatX<cplx> dual = R * star_sigma.inverse() * R.transpose();
  return (star_inverse_sigma - dual).norm() / star_inverse_sigma.norm();
}

CheckReport keller_dykhne_check(const SigmaFn& fn, cplx sigma, Provenance provenance,
                                std::optional<double> tol) {
  CheckReport rep;
  rep.name = "keller_dykhne";
  rep.provenance = provenance;
  rep.tolerance = tol.value_or(default_keller_dykhne_tol(provenance));
  const MatX<cplx> a = fn(sigma);
  if (a.rows() != 2) fail(ErrorKind::DimensionMismatch, "the duality relation holds in two dimensions only");
  const MatX<cplx> b = fn(cplx(1.0, 0.0) / sigma);
  rep.residual = keller_dykhne_residual(a, b);
  rep.value = rep.residual;
  rep.pass = rep.residual <= rep.tolerance;
  std::ostringstream in;
  append(in, sigma);
  rep.digest = digest_of(rep.name, in);
  return rep;
}

cplx scalar_part(const MatX<cplx>& m) { return m.trace() / static_cast<double>(m.rows()); }

double anisotropy(const MatX<cplx>& m) {
  const cplx s = scalar_part(m);
  const MatX<cplx> dev = m - s * MatX<cplx>::Identity(m.rows(), m.cols());
  return std::abs(s) > 0.0 ? dev.norm() / std::abs(s) : dev.norm();
}

CheckReport second_derivative_check(const SigmaFn& fn, double f, Provenance provenance,
                                    const SecondDerivativeOptions& options) {
  CheckReport rep;
  rep.name = "second_derivative";
  rep.provenance = provenance;
  rep.tolerance = options.relative_tol;
  const double h = options.step;
  const MatX<cplx> plus = fn(cplx(1.0 + h, 0.0));
  if (plus.rows() != 3) fail(ErrorKind::DimensionMismatch, "the second-derivative identity is three dimensional");
  const MatX<cplx> mid = fn(cplx(1.0, 0.0));
  const MatX<cplx> minus = fn(cplx(1.0 - h, 0.0));
  const double second =
      (scalar_part(plus) - 2.0 * scalar_part(mid) + scalar_part(minus)).real() / (h * h);
  const double target = -2.0 * f * (1.0 - f) / 3.0;
  rep.value = second;
  rep.residual = target != 0.0 ? std::abs(second - target) / std::abs(target) : std::abs(second);
  rep.pass = rep.residual <= rep.tolerance;
  // The first-order anisotropy of sigma* near 1 sits in the difference
  // quotient; compare it with the scalar slope.
  const MatX<cplx> slope = (plus - minus) / (2.0 * h);
  if (anisotropy(slope) > 0.01) rep.warnings.push_back("effective tensor is anisotropic beyond 1%");
  std::ostringstream in;
  in << format_double(f) << ";" << format_double(h);
  rep.digest = digest_of(rep.name, in);
  return rep;
}

double phase_interchange_lhs(double s_sigma, double s_inverse, double sigma) {
  return s_sigma * s_inverse + (s_sigma + sigma * s_inverse) / (sigma + 1.0);
}

CheckReport phase_interchange_check(const SigmaFn& fn, double sigma, Provenance provenance, double tol) {
  CheckReport rep;
  rep.name = "phase_interchange";
  rep.provenance = provenance;
  rep.tolerance = tol;
  if (!(sigma > 0.0)) fail(ErrorKind::InvalidInput, "phase interchange needs a positive real sigma");
  const MatX<cplx> a = fn(cplx(sigma, 0.0));
  const MatX<cplx> b = fn(cplx(1.0 / sigma, 0.0));
  if (anisotropy(a) > 0.01 || anisotropy(b) > 0.01)
    rep.warnings.push_back("effective tensor is anisotropic beyond 1%");
  const double lhs = phase_interchange_lhs(scalar_part(a).real(), scalar_part(b).real(), sigma);
  rep.value = lhs;
  rep.residual = std::max(0.0, 2.0 - lhs);
  rep.pass = lhs >= 2.0 - tol;
  std::ostringstream in;
  in << format_double(sigma);
  rep.digest = digest_of(rep.name, in);
  return rep;
}

double coated_sphere_oracle(double sigma, double f, int d, CoreWhich which) {
  if (d < 1) fail(ErrorKind::InvalidInput, "dimension must be positive");
  // Core of conductivity `core` occupying fraction phi, coating `coat`.
  const bool core1 = which == CoreWhich::CorePhase1;
  const double core = core1 ? sigma : 1.0;
  const double coat = core1 ? 1.0 : sigma;
  const double phi = core1 ? f : 1.0 - f;
  const double diff = core - coat;
  return coat + d * phi * coat * diff / (d * coat + (1.0 - phi) * diff);
}

std::string sigma_sweep_csv(const std::vector<ConductivitySample>& samples) {
  std::ostringstream out;
  out << "sigma_re,sigma_im";
  const Eigen::Index dim = samples.empty() ? 0 : samples.front().sigma_star.rows();
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) out << ",s" << i << j << "_re,s" << i << j << "_im";
  out << "\n";
  for (const auto& s : samples) {
    out << format_double(s.sigma.real()) << "," << format_double(s.sigma.imag());
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index j = 0; j < dim; ++j)
        out << "," << format_double(s.sigma_star(i, j).real()) << ","
            << format_double(s.sigma_star(i, j).imag());
    out << "\n";
  }
  return out.str();
}

}  // namespace compolab
