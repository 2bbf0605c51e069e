#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace compolab {

/**
 * Periodic two-phase pixel (dim = 2, N x N) or voxel (dim = 3, N x N x N)
 * indicator on the unit cell; 1 marks phase 1.
 *
 * Cells are stored with x fastest: index = x + N * (y + N * z).
 */
class CellGeometry {
 public:
  CellGeometry() = default;
  /// Throws InvalidInput unless dim is 2 or 3, N is a power of two and the
  /// indicator has N^dim entries in {0, 1}.
  CellGeometry(int dim, int N, std::vector<std::uint8_t> indicator);

  static CellGeometry uniform(int dim, int N, int phase);

  int dim() const { return dim_; }
  int N() const { return N_; }
  std::size_t cell_count() const { return indicator_.size(); }
  const std::vector<std::uint8_t>& indicator() const { return indicator_; }

  std::size_t index(int x, int y, int z = 0) const;
  /// Periodic access.
  std::uint8_t at(int x, int y, int z = 0) const;

  double volume_fraction() const;
  /// Invariance of the indicator under every swap of two axes.
  bool is_cubic_symmetric() const;
  /// Each cell becomes a block of factor^dim cells.
  CellGeometry upsample(int factor) const;

  friend bool operator==(const CellGeometry& a, const CellGeometry& b) {
    return a.dim_ == b.dim_ && a.N_ == b.N_ && a.indicator_ == b.indicator_;
  }

 private:
  int dim_ = 0;
  int N_ = 0;
  std::vector<std::uint8_t> indicator_;
};

bool is_power_of_two(int n);

/// Layers normal to x with phase 1 occupying x < f.
CellGeometry make_stripes(int dim, int N, double f = 0.5);
/// Two-by-two (two-by-two-by-two in 3D) alternating checkerboard.
CellGeometry make_checkerboard(int dim, int N);
/**
 * Independent Bernoulli(f) cells on a coarse `base`^dim lattice, upsampled to
 * N, so the same seed describes the same geometry at every resolution N that
 * is a multiple of base.
 */
CellGeometry make_random(int dim, int N, std::uint64_t seed, double f, int base = 16);
/// 3D random geometry whose coarse cells are drawn once per orbit of the
/// axis permutations, hence cubic symmetric.
CellGeometry make_random_cubic(int N, std::uint64_t seed, double f, int base = 8);
/// One centred cube of phase 1 with side round(cbrt(f) N) per cell (3D).
CellGeometry make_cubes(int N, double f);
/// One centred ball of phase 1 of volume fraction f per cell (3D).
CellGeometry make_spheres(int N, double f);
/// Cubic-symmetric array of interlinked square rings of phase 1 (3D).
CellGeometry make_tori_chain(int N, double a = 0.4, double w = 0.125);

/**
 * Geometry from a name such as "checkerboard@256", "random(7,0.5)@64",
 * "random3(7,0.5)@32", "random-cubic(3,0.6)@16", "cubes(0.125)@32",
 * "spheres(0.3)@32", "stripes(0.25)@64", "stripes3@32", "checkerboard3@32",
 * "tori-chain@32" (ring half-size and wire width via "tori-chain(0.4,0.125)@32").
 * Throws InvalidInput for unknown names.
 */
CellGeometry make_named(const std::string& spec);

}  // namespace compolab
