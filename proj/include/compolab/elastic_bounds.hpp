#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace compolab {

/// Marker for an incompressible phase; every formula uses 1/kappa = 0.
inline constexpr double kInfiniteBulk = INFINITY;

/// Planar isotropic phase with bulk modulus kappa (possibly kInfiniteBulk)
/// and shear modulus mu.
struct IsoElastic {
  double kappa = 1.0;
  double mu = 1.0;

  /// Throws InvalidInput unless kappa > 0 and 0 < mu < infinity.
  void validate() const;
  /// 4 kappa mu / (kappa + mu), written as 4 mu / (1 + mu / kappa).
  double young() const;
};

/// 0 <= kappa* <= kappa and 0 <= mu* <= mu.
bool elementary_bounds_contain(const IsoElastic& phase, double kappa_star, double mu_star);
/// mu* - c kappa* <= mu, implied by the elementary bounds for every c > 0.
bool shifted_bound_holds(const IsoElastic& phase, double kappa_star, double mu_star, double c);

/// Moduli of the planar orthotropic stiffness diag-block form
/// [[c1111, c1122, 0], [c1122, c2222, 0], [0, 0, 2 c1212]].
struct PlanarOrthotropic {
  double c1111 = 0.0;
  double c1122 = 0.0;
  double c2222 = 0.0;
  double c1212 = 0.0;

  Eigen::Matrix3d matrix() const;
  bool is_positive_semidefinite(double tol = 0.0) const;
};

/// Slab material with an easy compression mode: (eps, c eps, E, mu).
PlanarOrthotropic sliced_material(double kappa, double mu, double eps, double c);

/**
 * Which modulus sits in the first three slots of the extremal polycrystal
 * formulas: c1212 exactly as usually displayed, or c1122 (the final division
 * stays by c1212 in both).
 */
enum class Aux3Variant { AsPrinted, C1122Variant };

struct IsoModuli {
  double kappa_star = 0.0;
  double mu_star = 0.0;
};

/**
 * Extremal bulk and shear moduli of a planar polycrystal of the given crystal.
 * The shear denominator is evaluated in the rationalized form
 * 2 c_x + 2 c2222 [c1111 - 2 c_x + det / c1212] / (sqrt(X) + c2222), which
 * avoids cancellation as c1111 -> 0. A negative radicand (which the
 * as-printed variant produces for the sliced material with finite kappa)
 * leaves mu_star as NaN while kappa_star is still reported. Throws
 * DegenerateInput on vanishing denominators.
 */
IsoModuli polycrystal_extremes(const PlanarOrthotropic& mat, Aux3Variant variant = Aux3Variant::C1122Variant);

/// (0, 1 / (5 / (4 mu) + 1 / (4 kappa))); exactly 4 mu / 5 for infinite kappa.
IsoModuli auxetic_limit(double kappa, double mu);

/// Limit of the as-printed kappa* for the sliced material as eps -> 0:
/// -mu (kappa + mu) / (2 (kappa - mu)).
double as_printed_kappa_limit(double kappa, double mu);

}  // namespace compolab
