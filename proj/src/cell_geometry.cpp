#include "compolab/cell_geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <regex>
#include <sstream>

#include "compolab/errors.hpp"

namespace compolab {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

CellGeometry::CellGeometry(int dim, int N, std::vector<std::uint8_t> indicator)
    : dim_(dim), N_(N), indicator_(std::move(indicator)) {
  if (dim != 2 && dim != 3) fail(ErrorKind::InvalidInput, "geometry dim must be 2 or 3");
  if (!is_power_of_two(N)) fail(ErrorKind::InvalidInput, "geometry N must be a power of two");
  std::size_t expected = 1;
  for (int d = 0; d < dim; ++d) expected *= static_cast<std::size_t>(N);
  if (indicator_.size() != expected)
    fail(ErrorKind::InvalidInput, "geometry indicator has wrong size");
  for (auto v : indicator_)
    if (v > 1) fail(ErrorKind::InvalidInput, "geometry indicator must be 0 or 1");
}

CellGeometry CellGeometry::uniform(int dim, int N, int phase) {
  std::size_t count = 1;
  for (int d = 0; d < dim; ++d) count *= static_cast<std::size_t>(N);
  return CellGeometry(dim, N, std::vector<std::uint8_t>(count, phase == 1 ? 1 : 0));
}

std::size_t CellGeometry::index(int x, int y, int z) const {
  return static_cast<std::size_t>(x) +
         static_cast<std::size_t>(N_) * (static_cast<std::size_t>(y) +
                                         static_cast<std::size_t>(N_) * static_cast<std::size_t>(z));
}

std::uint8_t CellGeometry::at(int x, int y, int z) const {
  auto wrap = [this](int v) { return ((v % N_) + N_) % N_; };
  return indicator_[index(wrap(x), wrap(y), dim_ == 3 ? wrap(z) : 0)];
}

double CellGeometry::volume_fraction() const {
  if (indicator_.empty()) return 0.0;
  std::size_t ones = 0;
  for (auto v : indicator_) ones += v;
  return static_cast<double>(ones) / static_cast<double>(indicator_.size());
}

bool CellGeometry::is_cubic_symmetric() const {
  const int zn = dim_ == 3 ? N_ : 1;
  for (int z = 0; z < zn; ++z)
    for (int y = 0; y < N_; ++y)
      for (int x = 0; x < N_; ++x) {
        const auto v = at(x, y, z);
        if (at(y, x, z) != v) return false;
        if (dim_ == 3 && (at(z, y, x) != v || at(x, z, y) != v)) return false;
      }
  return true;
}

CellGeometry CellGeometry::upsample(int factor) const {
  if (factor < 1) fail(ErrorKind::InvalidInput, "upsample factor must be positive");
  const int M = N_ * factor;
  CellGeometry out = uniform(dim_, M, 2);
  const int zn = dim_ == 3 ? M : 1;
  for (int z = 0; z < zn; ++z)
    for (int y = 0; y < M; ++y)
      for (int x = 0; x < M; ++x)
        out.indicator_[out.index(x, y, z)] = at(x / factor, y / factor, dim_ == 3 ? z / factor : 0);
  return out;
}

namespace {

// Uniform double in [0, 1) from the top 53 bits, independent of the standard
// library's distribution implementations.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void require_fraction(double f) {
  if (!(f >= 0.0 && f <= 1.0)) fail(ErrorKind::InvalidInput, "volume fraction must lie in [0, 1]");
}

template <class Pred>
CellGeometry from_predicate(int dim, int N, Pred&& inside) {
  CellGeometry g = CellGeometry::uniform(dim, N, 2);
  std::vector<std::uint8_t> chi(g.cell_count());
  const int zn = dim == 3 ? N : 1;
  for (int z = 0; z < zn; ++z)
    for (int y = 0; y < N; ++y)
      for (int x = 0; x < N; ++x)
        chi[g.index(x, y, z)] = inside((x + 0.5) / N, (y + 0.5) / N, (z + 0.5) / N) ? 1 : 0;
  return CellGeometry(dim, N, std::move(chi));
}

}  // namespace

CellGeometry make_stripes(int dim, int N, double f) {
  require_fraction(f);
  return from_predicate(dim, N, [f](double x, double, double) { return x < f; });
}

CellGeometry make_checkerboard(int dim, int N) {
  return from_predicate(dim, N, [dim](double x, double y, double z) {
    int parity = (x < 0.5) + (y < 0.5) + (dim == 3 ? (z < 0.5) : 0);
    return parity % 2 == 0;
  });
}

CellGeometry make_random(int dim, int N, std::uint64_t seed, double f, int base) {
  require_fraction(f);
  base = std::min(base, N);
  if (!is_power_of_two(base)) fail(ErrorKind::InvalidInput, "random base must be a power of two");
  std::mt19937_64 rng(seed);
  std::size_t count = 1;
  for (int d = 0; d < dim; ++d) count *= static_cast<std::size_t>(base);
  std::vector<std::uint8_t> coarse(count);
  for (auto& v : coarse) v = unit_uniform(rng) < f ? 1 : 0;
  return CellGeometry(dim, base, std::move(coarse)).upsample(N / base);
}

CellGeometry make_random_cubic(int N, std::uint64_t seed, double f, int base) {
  require_fraction(f);
  base = std::min(base, N);
  if (!is_power_of_two(base)) fail(ErrorKind::InvalidInput, "random base must be a power of two");
  std::mt19937_64 rng(seed);
  CellGeometry coarse = CellGeometry::uniform(3, base, 2);
  std::vector<std::uint8_t> chi(coarse.cell_count());
  // Visit orbit representatives i <= j <= k in lexicographic order and paint
  // the whole orbit under coordinate permutations.
  for (int i = 0; i < base; ++i)
    for (int j = i; j < base; ++j)
      for (int k = j; k < base; ++k) {
        const std::uint8_t v = unit_uniform(rng) < f ? 1 : 0;
        std::array<int, 3> p{i, j, k};
        do {
          chi[coarse.index(p[0], p[1], p[2])] = v;
        } while (std::next_permutation(p.begin(), p.end()));
      }
  return CellGeometry(3, base, std::move(chi)).upsample(N / base);
}

CellGeometry make_cubes(int N, double f) {
  require_fraction(f);
  const int side = static_cast<int>(std::lround(std::cbrt(f) * N));
  const int lo = (N - side) / 2;
  CellGeometry g = CellGeometry::uniform(3, N, 2);
  std::vector<std::uint8_t> chi(g.cell_count(), 0);
  for (int z = lo; z < lo + side; ++z)
    for (int y = lo; y < lo + side; ++y)
      for (int x = lo; x < lo + side; ++x) chi[g.index(x, y, z)] = 1;
  return CellGeometry(3, N, std::move(chi));
}

CellGeometry make_spheres(int N, double f) {
  require_fraction(f);
  const double r = std::cbrt(3.0 * f / (4.0 * std::numbers::pi));
  return from_predicate(3, N, [r](double x, double y, double z) {
    const double dx = x - 0.5, dy = y - 0.5, dz = z - 0.5;
    return dx * dx + dy * dy + dz * dz < r * r;
  });
}

CellGeometry make_tori_chain(int N, double a, double w) {
  // A square ring of half-size a and wire width w lying in the plane z = u,
  // centred at (u, v) with v = u + a - w/2, links the ring obtained from it by
  // the cyclic permutation of axes. The union over all axis permutations is
  // cubic symmetric. With the default a = 0.4, w = 0.125 rings of different
  // orientation touch across cell faces, so phase 1 percolates and the
  // effective resistivity stays finite when phase 2 is nearly void.
  if (!(w > 0.0) || !(a > w) || a > 0.5)
    fail(ErrorKind::InvalidInput, "tori-chain needs 0 < w < a <= 0.5");
  const double u = 0.5;
  const double v = u + a - 0.5 * w;
  auto periodic_gap = [](double p, double q) {
    double d = std::fmod(std::abs(p - q), 1.0);
    return std::min(d, 1.0 - d);
  };
  auto ring = [&](double px, double py, double pz, double cx, double cy, double plane) {
    if (periodic_gap(pz, plane) >= 0.5 * w) return false;
    const double r = std::max(periodic_gap(px, cx), periodic_gap(py, cy));
    return r <= a && r >= a - w;
  };
  return from_predicate(3, N, [&](double x, double y, double z) {
    const std::array<double, 3> p{x, y, z};
    std::array<int, 3> perm{0, 1, 2};
    do {
      if (ring(p[perm[0]], p[perm[1]], p[perm[2]], u, v, u)) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
  });
}

CellGeometry make_named(const std::string& spec) {
  static const std::regex re(R"(^\s*([A-Za-z0-9\-]+)\s*(?:\(([^)]*)\))?\s*@\s*(\d+)\s*$)");
  std::smatch m;
  if (!std::regex_match(spec, m, re))
    fail(ErrorKind::InvalidInput, "cannot parse geometry name '" + spec + "' (expected name(args)@N)");
  const std::string name = m[1];
  const int N = std::stoi(m[3]);
  std::vector<double> args;
  {
    std::stringstream ss(m[2].str());
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.find_first_not_of(" \t") == std::string::npos) continue;
      try {
        args.push_back(std::stod(tok));
      } catch (const std::exception&) {
        fail(ErrorKind::InvalidInput, "bad geometry argument '" + tok + "'");
      }
    }
  }
  auto arg = [&](std::size_t i, double fallback) { return i < args.size() ? args[i] : fallback; };
  auto need = [&](std::size_t count) {
    if (args.size() < count)
      fail(ErrorKind::InvalidInput, "geometry '" + name + "' needs " + std::to_string(count) + " arguments");
  };
  auto seed = [&](double s) {
    if (s < 0 || s != std::floor(s)) fail(ErrorKind::InvalidInput, "seed must be a non-negative integer");
    return static_cast<std::uint64_t>(s);
  };
  if (!is_power_of_two(N)) fail(ErrorKind::InvalidInput, "geometry N must be a power of two");

  if (name == "stripes") return make_stripes(2, N, arg(0, 0.5));
  if (name == "stripes3") return make_stripes(3, N, arg(0, 0.5));
  if (name == "checkerboard") return make_checkerboard(2, N);
  if (name == "checkerboard3") return make_checkerboard(3, N);
  if (name == "uniform") return CellGeometry::uniform(2, N, static_cast<int>(arg(0, 1)));
  if (name == "uniform3") return CellGeometry::uniform(3, N, static_cast<int>(arg(0, 1)));
  if (name == "random") {
    need(2);
    return make_random(2, N, seed(args[0]), args[1], static_cast<int>(arg(2, 16)));
  }
  if (name == "random3") {
    need(2);
    return make_random(3, N, seed(args[0]), args[1], static_cast<int>(arg(2, 8)));
  }
  if (name == "random-cubic") {
    need(2);
    return make_random_cubic(N, seed(args[0]), args[1], static_cast<int>(arg(2, 8)));
  }
  if (name == "cubes") return make_cubes(N, arg(0, 0.125));
  if (name == "spheres") return make_spheres(N, arg(0, 0.3));
  if (name == "tori-chain") return make_tori_chain(N, arg(0, 0.4), arg(1, 0.125));
  fail(ErrorKind::InvalidInput, "unknown geometry '" + name + "'");
}

}  // namespace compolab
