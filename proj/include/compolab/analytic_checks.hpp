#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "compolab/tensor_core.hpp"

namespace compolab {

enum class Provenance { Laminate, Cell, Oracle };
const char* to_string(Provenance p);

/// One evaluation sigma -> sigma*(sigma) of an effective conductivity function.
struct ConductivitySample {
  cplx sigma;
  MatX<cplx> sigma_star;
  double f = 0.0;
  int dim = 2;
  Provenance provenance = Provenance::Laminate;
};

struct CheckReport {
  std::string name;
  Provenance provenance = Provenance::Laminate;
  bool pass = false;
  double residual = 0.0;
  double tolerance = 0.0;
  /// SHA-256 of the canonical text of the inputs.
  std::string digest;
  /// The checked quantity itself (minimum eigenvalue, second derivative, LHS, ...).
  std::optional<double> value;
  std::vector<std::string> warnings;

  /// check,provenance,residual,tolerance,pass
  std::string csv_row() const;
};

std::string check_csv_header();

using SigmaFn = std::function<MatX<cplx>(cplx)>;

/// Default Herglotz tolerance: 1e-10 for laminates and oracles, 1e-6 for cells.
double default_herglotz_tol(Provenance p);

/**
 * Smallest eigenvalue of the Hermitian imaginary part (A - A^H) / 2i over all
 * samples must be >= -tol. Throws WrongHalfPlane when some Im sigma <= 0.
 */
CheckReport herglotz_check(const std::vector<ConductivitySample>& samples,
                           std::optional<double> tol = std::nullopt);

struct NormalizationOptions {
  double value_tol = 1e-12;
  double slope_tol = 1e-4;
  double step = 1e-5;
};

/// sigma*(1) == I and the central-difference slope at 1 equals f I; the
/// residual is the larger of the two max-entry errors.
CheckReport normalization_check(const SigmaFn& fn, double f, Provenance provenance,
                                const NormalizationOptions& options = {});

double default_keller_dykhne_tol(Provenance p);

/// ||sigma*(1/sigma) - R_perp sigma*(sigma)^{-1} R_perp^T||_F / ||sigma*(1/sigma)||_F.
double keller_dykhne_residual(const MatX<cplx>& star_sigma, const MatX<cplx>& star_inverse_sigma);

/// Throws DimensionMismatch unless fn returns 2 x 2 matrices.
CheckReport keller_dykhne_check(const SigmaFn& fn, cplx sigma, Provenance provenance,
                                std::optional<double> tol = std::nullopt);

struct SecondDerivativeOptions {
  double step = 1e-3;
  double relative_tol = 0.05;
};

/// tr(sigma*) / dim of a matrix, the scalar part used by isotropic identities.
cplx scalar_part(const MatX<cplx>& m);
/// ||m - scalar_part(m) I||_F / |scalar_part(m)|.
double anisotropy(const MatX<cplx>& m);

/**
 * Central second difference of the scalar part of sigma* at sigma = 1 against
 * -2 f (1 - f) / 3. Throws DimensionMismatch unless fn is 3 x 3.
 */
CheckReport second_derivative_check(const SigmaFn& fn, double f, Provenance provenance,
                                    const SecondDerivativeOptions& options = {});

/// s(sigma) s(1/sigma) + (s(sigma) + sigma s(1/sigma)) / (sigma + 1).
double phase_interchange_lhs(double s_sigma, double s_inverse, double sigma);

/// LHS >= 2 - tol on the scalar parts of fn(sigma) and fn(1/sigma).
CheckReport phase_interchange_check(const SigmaFn& fn, double sigma, Provenance provenance,
                                    double tol = 1e-9);

enum class CoreWhich { CorePhase1, CorePhase2 };

/**
 * Coated sphere (d = 3) or coated disk (d = 2) assemblage with phase 1 of
 * conductivity sigma, phase 2 of conductivity 1, phase 1 volume fraction f.
 */
double coated_sphere_oracle(double sigma, double f, int d, CoreWhich which);

/// CSV with columns sigma_re,sigma_im and re/im of every sigma* entry (row major).
std::string sigma_sweep_csv(const std::vector<ConductivitySample>& samples);

}  // namespace compolab
