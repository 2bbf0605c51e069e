#include "compolab/elastic_bounds.hpp"

#include <limits>

#include "compolab/errors.hpp"

namespace compolab {

void IsoElastic::validate() const {
  if (!(kappa > 0.0)) fail(ErrorKind::InvalidInput, "bulk modulus must be positive");
  if (!(mu > 0.0) || !std::isfinite(mu)) fail(ErrorKind::InvalidInput, "shear modulus must be positive and finite");
}

double IsoElastic::young() const { return 4.0 * mu / (1.0 + mu / kappa); }

bool elementary_bounds_contain(const IsoElastic& phase, double kappa_star, double mu_star) {
  return kappa_star >= 0.0 && kappa_star <= phase.kappa && mu_star >= 0.0 && mu_star <= phase.mu;
}

bool shifted_bound_holds(const IsoElastic& phase, double kappa_star, double mu_star, double c) {
  if (!(c > 0.0)) fail(ErrorKind::InvalidInput, "c must be positive");
  return mu_star - c * kappa_star <= phase.mu;
}

Eigen::Matrix3d PlanarOrthotropic::matrix() const {
  Eigen::Matrix3d m;
  m << c1111, c1122, 0.0, c1122, c2222, 0.0, 0.0, 0.0, 2.0 * c1212;
  return m;
}

bool PlanarOrthotropic::is_positive_semidefinite(double tol) const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0) >= -tol;
}

PlanarOrthotropic sliced_material(double kappa, double mu, double eps, double c) {
  const IsoElastic phase{kappa, mu};
  phase.validate();
  if (!(eps > 0.0)) fail(ErrorKind::InvalidInput, "eps must be positive");
  return {eps, c * eps, phase.young(), mu};
}

IsoModuli polycrystal_extremes(const PlanarOrthotropic& mat, Aux3Variant variant) {
  const double c11 = mat.c1111, c22 = mat.c2222, c66 = mat.c1212;
  const double cx = variant == Aux3Variant::AsPrinted ? mat.c1212 : mat.c1122;
  if (!(c66 != 0.0)) fail(ErrorKind::DegenerateInput, "c1212 must be nonzero");
  const double det = c11 * c22 - cx * cx;
  const double kden = c11 + c22 - 2.0 * cx;
  if (kden == 0.0) fail(ErrorKind::DegenerateInput, "bulk modulus denominator vanishes");
  const double bracket = c11 - 2.0 * cx + det / c66;  // X - c22^2 = c22 * bracket
  const double X = c22 * (c22 + bracket);
  if (X < 0.0) return {det / kden, std::numeric_limits<double>::quiet_NaN()};
  const double root_plus = std::sqrt(X) + c22;
  if (root_plus == 0.0) fail(ErrorKind::DegenerateInput, "shear modulus denominator vanishes");
  const double mden = 2.0 * cx + 2.0 * c22 * bracket / root_plus;
  if (mden == 0.0) fail(ErrorKind::DegenerateInput, "shear modulus denominator vanishes");
  return {det / kden, det / mden};
}

IsoModuli auxetic_limit(double kappa, double mu) {
  const IsoElastic phase{kappa, mu};
  phase.validate();
  if (std::isinf(kappa)) return {0.0, 4.0 * mu / 5.0};
  return {0.0, 1.0 / (5.0 / (4.0 * mu) + 1.0 / (4.0 * kappa))};
}

double as_printed_kappa_limit(double kappa, double mu) {
  const IsoElastic phase{kappa, mu};
  phase.validate();
  if (std::isinf(kappa)) return -mu / 2.0;
  if (kappa == mu) fail(ErrorKind::DegenerateInput, "the as-printed limit diverges when kappa == mu");
  return -mu * (kappa + mu) / (2.0 * (kappa - mu));
}

}  // namespace compolab
