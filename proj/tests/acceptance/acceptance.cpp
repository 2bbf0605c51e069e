// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "compolab/analytic_checks.hpp"
#include "compolab/cell_geometry.hpp"
#include "compolab/cell_solver.hpp"
#include "compolab/elastic_bounds.hpp"
#include "compolab/laminate.hpp"
#include "compolab/parallel.hpp"
#include "compolab/two_well.hpp"
#include "../support/generators.hpp"

#ifndef COMPOLAB_BIN
#error "COMPOLAB_BIN must name the command line tool"
#endif

using namespace compolab;
using testgen::Rng;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int threads() { return static_cast<int>(std::max(1u, std::min(8u, std::thread::hardware_concurrency()))); }

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

MatX<cplx> laminate_sigma(const LaminateTree& t, cplx s) {
  return effective_tensor<cplx>(t, CBlockTensor::scalar_multiple(1, s), CBlockTensor::scalar_multiple(1, 1.0)).flat();
}

double rel_err(const MatX<cplx>& a, const MatX<cplx>& b) { return (a - b).norm() / b.norm(); }

// ---------------------------------------------------------------- criteria

Verdict keller_dykhne() {
  Rng rng(101);
  double worst_lam = 0.0;
  for (int k = 0; k < 20; ++k) {
    const LaminateTree t = testgen::random_tree(rng, 4);
    for (cplx s : {cplx(2.0), cplx(5.0), cplx(10.0), cplx(3.0, 4.0)})
      worst_lam = std::max(worst_lam, keller_dykhne_residual(laminate_sigma(t, s), laminate_sigma(t, 1.0 / s)));
  }
  bool decreasing = true;
  double worst_grid = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double prev = INFINITY;
    for (int N : {32, 64, 128}) {
      const CellGeometry g = make_random(2, N, seed, 0.5);
      const double r = keller_dykhne_residual(sigma_star_fn(g, 5.0, {}, threads()), sigma_star_fn(g, 0.2, {}, threads()));
      decreasing = decreasing && r < prev;
      prev = r;
    }
    worst_grid = std::max(worst_grid, prev);
  }
  return {worst_lam <= 1e-12 && worst_grid <= 1e-2 && decreasing,
          "laminates max " + num(worst_lam) + ", 128^2 grids max " + num(worst_grid) +
              (decreasing ? ", decreasing in N" : ", NOT decreasing in N")};
}

Verdict normalization() {
  Rng rng(202);
  const NormalizationOptions lam{1e-12, 1e-5, 1e-5};
  double worst_lam = 0.0;
  bool ok = true;
  for (int k = 0; k < 20; ++k) {
    const LaminateTree t = testgen::random_tree(rng, 4, true);
    const CheckReport r =
        normalization_check([&](cplx s) { return laminate_sigma(t, s); }, volume_fraction(t), Provenance::Laminate, lam);
    ok = ok && r.pass;
    worst_lam = std::max(worst_lam, r.residual);
  }
  const NormalizationOptions pix{1e-12, 1e-3, 1e-5};
  double worst_pix = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const CellGeometry g = make_random(2, 64, seed, 0.4);
    const CheckReport r = normalization_check([&](cplx s) { return sigma_star_fn(g, s, {}, threads()); },
                                              g.volume_fraction(), Provenance::Cell, pix);
    ok = ok && r.pass;
    worst_pix = std::max(worst_pix, r.residual);
  }
  return {ok, "laminate residual max " + num(worst_lam) + ", pixel residual max " + num(worst_pix)};
}

Verdict herglotz() {
  Rng rng(303);
  double min_eig = INFINITY;
  for (int k = 0; k < 200; ++k) {
    const LaminateTree t = testgen::random_tree(rng, 4, true);
    const cplx s(rng.uniform(-10.0, 10.0), rng.uniform(1e-3, 10.0));
    const MatX<cplx> m = laminate_sigma(t, s);
    const MatX<cplx> im = (m - m.adjoint()) / cplx(0.0, 2.0);
    Eigen::SelfAdjointEigenSolver<MatX<cplx>> es(im, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues()(0));
  }
  return {min_eig >= -1e-12, "min eigenvalue of Im sigma* " + num(min_eig)};
}

Verdict second_derivative() {
  const CellGeometry g = make_cubes(32, 0.125);
  const double f = g.volume_fraction();
  const CheckReport r = second_derivative_check([&](cplx s) { return sigma_star_fn(g, s, {}, threads()); }, f,
                                                Provenance::Cell);
  const double want = -2.0 * f * (1.0 - f) / 3.0;
  const double got = r.value.value_or(NAN);
  return {std::abs(got - want) <= 0.05 * std::abs(want), "d2 = " + num(got) + " vs " + num(want)};
}

Verdict phase_interchange() {
  double min_lhs = INFINITY, worst_eq = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double s = 0.1 * std::pow(100.0, i / 19.0);
    for (double f : {0.1, 0.3, 0.5, 0.7, 0.9})
      for (CoreWhich w : {CoreWhich::CorePhase1, CoreWhich::CorePhase2}) {
        const double lhs = phase_interchange_lhs(coated_sphere_oracle(s, f, 3, w),
                                                 coated_sphere_oracle(1.0 / s, f, 3, w), s);
        min_lhs = std::min(min_lhs, lhs);
      }
    worst_eq = std::max(worst_eq, std::abs(phase_interchange_lhs(s, 1.0 / s, s) - 2.0));
  }
  for (double f : {0.1, 0.5, 0.9})
    worst_eq = std::max(worst_eq, std::abs(phase_interchange_lhs(coated_sphere_oracle(1.0, f, 3, CoreWhich::CorePhase1),
                                                                 coated_sphere_oracle(1.0, f, 3, CoreWhich::CorePhase1),
                                                                 1.0) -
                                           2.0));
  return {min_lhs >= 2.0 - 1e-9 && worst_eq <= 1e-12,
          "min LHS " + std::to_string(min_lhs) + ", equality cases off by " + num(worst_eq)};
}

Verdict augmented() {
  Rng rng(606);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int n = rng.integer(1, 2);
    const LaminateTree t = testgen::random_tree_exact(rng, rng.integer(1, 3));
    const AugmentedTensor K1 = testgen::random_augmented(rng, n), K2 = testgen::random_augmented(rng, n);
    const AugmentedTensor direct = augmented_effective(t, K1, K2);
    const VcStar vc = vstar_cstar_from_Lstar(K1.L, K2.L, K1.V, K2.V, K1.c, K2.c, direct.L, volume_fraction(t));
    worst = std::max({worst, (vc.V - direct.V).cwiseAbs().maxCoeff(), std::abs(vc.c - direct.c)});
  }
  return {worst <= 1e-10, "max deviation " + num(worst)};
}

Verdict auxetic() {
  bool ok = true;
  for (double mu : {1.0, 2.5, 0.3}) {
    const IsoModuli l = auxetic_limit(kInfiniteBulk, mu);
    ok = ok && l.kappa_star == 0.0 && l.mu_star == 4.0 * mu / 5.0;
  }
  double worst_variant = 0.0, worst_printed = 0.0, min_gap = INFINITY;
  for (double kappa : {kInfiniteBulk, 2.0, 10.0}) {
    const PlanarOrthotropic m = sliced_material(kappa, 1.0, 1e-9, 0.0);
    const IsoModuli v = polycrystal_extremes(m);
    const double target = auxetic_limit(kappa, 1.0).mu_star;
    worst_variant = std::max(worst_variant, std::abs(v.mu_star - target) / target);
    const double printed = polycrystal_extremes(m, Aux3Variant::AsPrinted).kappa_star;
    const double limit = as_printed_kappa_limit(kappa, 1.0);
    worst_printed = std::max(worst_printed, std::abs(printed - limit) / std::abs(limit));
    min_gap = std::min(min_gap, std::abs(printed));
  }
  ok = ok && worst_variant <= 1e-6 && worst_printed <= 1e-6 && min_gap > 0.1;
  return {ok, "c1122 variant rel err " + num(worst_variant) + ", as-printed limit rel err " + num(worst_printed) +
                  ", |as-printed kappa*| >= " + num(min_gap)};
}

Verdict two_well() {
  Rng rng(808);
  std::vector<TwoWellSpec> specs;
  std::vector<Field2n> points;
  for (int k = 0; k < 1000; ++k) {
    specs.push_back(testgen::random_spec(rng, 2));
    points.push_back(testgen::random_field(rng, 2, 1.5));
  }
  std::vector<double> excess(specs.size());
  parallel_for(specs.size(), threads(), [&](std::size_t i) {
    excess[i] = translation_lower_bound(specs[i], points[i]).value - lamination_upper_bound(specs[i], points[i]).value;
  });
  const double worst_order = *std::max_element(excess.begin(), excess.end());

  Field2n R = Field2n::Zero(2, 2);
  R.row(0) << 1.0, 0.5;
  const BlockTensor I = BlockTensor::identity(2);
  const TwoWellSpec compat = TwoWellSpec::from_wells(I, Field2n::Zero(2, 2), 0.0, I, R, 0.0);
  double worst_compat = 0.0;
  for (int i = 0; i <= 10; ++i) {
    const Field2n F = (i / 10.0) * R;
    worst_compat = std::max({worst_compat, lamination_upper_bound(compat, F).value,
                             std::abs(translation_lower_bound(compat, F).value)});
  }

  double worst_null = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int m = rng.integer(2, 4);
    const Translation T{m, testgen::random_vector(rng, Translation::pair_count(m))};
    const Field2n A = testgen::rank_one(testgen::random_unit(rng), testgen::random_vector(rng, m));
    worst_null = std::max(worst_null, std::abs(T.value(A)) / (1.0 + A.squaredNorm() * T.c.norm()));
  }
  return {worst_order <= 1e-10 && worst_compat <= 1e-6 && worst_null <= 1e-12,
          "max(lower - upper) " + num(worst_order) + ", compatible segment max " + num(worst_compat) +
              ", null Lagrangian max " + num(worst_null)};
}

Verdict raster() {
  const LaminateTree l1 = LaminateTree::leaf(1), l2 = LaminateTree::leaf(2);
  double worst1 = 0.0;
  for (const LaminateTree& t : {LaminateTree::branch(l1, l2, {1, 0}, 0.5), LaminateTree::branch(l1, l2, {0, 1}, 0.25)}) {
    const MatX<cplx> want = laminate_sigma(t, 4.0);
    worst1 = std::max(worst1, (sigma_star_fn(rasterize(t, 64, 8), 4.0, {}, threads()) - want).cwiseAbs().maxCoeff());
  }
  const LaminateTree inner = LaminateTree::branch(l1, l2, {0, 1}, 0.5);
  const LaminateTree outer = LaminateTree::branch(inner, l2, {1, 0}, 0.5);
  const double err2 = rel_err(sigma_star_fn(rasterize(outer, 256, 8), 4.0, {}, threads()), laminate_sigma(outer, 4.0));
  return {worst1 <= 1e-8 && err2 <= 0.01, "rank 1 max abs err " + num(worst1) + ", rank 2 rel err " + num(err2)};
}

Verdict fields_and_hall() {
  Rng rng(1010);
  double min_det = INFINITY;
  for (int k = 0; k < 100; ++k) {
    const LaminateTree t = testgen::random_tree(rng, 4, true);
    const BlockTensor L1 = BlockTensor::repeated(2, Mat2(testgen::random_spd(rng, 2, 0.1)));
    const BlockTensor L2 = BlockTensor::repeated(2, Mat2(testgen::random_spd(rng, 2, 0.1)));
    min_det = std::min(min_det, leaf_fields(t, L1, L2, Field2n::Identity(2, 2)).min_det.value_or(-INFINITY));
  }

  HallOptions ho;
  ho.jobs = threads();
  const Eigen::Vector3d h(0, 0, 1e-4);
  const CellGeometry rc = make_random_cubic(16, 3, 0.6);
  const double direct = hall_coefficient(rc, 1.0, 1.0, h, HallMethod::Direct, ho).R_star;
  const double pert = hall_coefficient(rc, 1.0, 1.0, h, HallMethod::Perturbation, ho).R_star;
  const double rel = std::abs(direct - pert) / std::abs(pert);

  const CellGeometry hom = CellGeometry::uniform(3, 8, 1);
  double worst_hom = 0.0;
  for (HallMethod m : {HallMethod::Direct, HallMethod::Perturbation})
    worst_hom = std::max(worst_hom, std::abs(hall_coefficient(hom, 1.0, 0.7, h, m, ho).R_star - 0.7));

  const CellGeometry tori = make_tori_chain(32);
  const HallResult tr = hall_coefficient(tori, 1.0, 1.0, h, HallMethod::Perturbation, ho);
  const double rho1 = 1.0, sigma_void = ho.void_ratio / rho1;
  const CofactorReport cof = cofactor_diagnostics(
      solve_matrix_field(tori, Eigen::MatrixXd::Identity(3, 3) / rho1, sigma_void * Eigen::MatrixXd::Identity(3, 3),
                         ho.solver, threads()));
  const bool tori_ok = std::isfinite(tr.R_star) && cof.cells == tori.cell_count() && cof.min_tr_cof.has_value();
  return {min_det > 0.0 && rel <= 1e-3 && worst_hom <= 1e-8 && tori_ok,
          "laminate min det E " + num(min_det) + ", Hall direct/perturbation rel diff " + num(rel) +
              ", homogeneous err " + num(worst_hom) + ", tori-chain R*/R_H " + num(tr.R_star) +
              " with negative det fraction " + num(cof.negative_det_fraction)};
}

// Runs the tool and returns the output directory it prints, or "" on failure.
std::string run_tool(const std::string& args) {
  const std::string cmd = std::string("\"") + COMPOLAB_BIN + "\" " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {};
  std::string out;
  std::array<char, 512> buf{};
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) out += buf.data();
  if (pclose(pipe) != 0) return {};
  while (!out.empty() && out.back() == '\n') out.pop_back();
  std::string last = out.substr(out.find_last_of('\n') + 1);
  if (last.rfind("cached ", 0) == 0) last.erase(0, 7);
  return last;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "compolab-acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::string>> jobs = {
      {"laminate",
       R"({"tree": {"branch": {"a": {"branch": {"a": {"leaf": {"phase": 1}}, "b": {"leaf": {"phase": 2}},
           "normal": [0, 1], "fraction": 0.3}}, "b": {"leaf": {"phase": 2, "rotation": 0.4}},
           "normal": [0.6, 0.8], "fraction": 0.5}}, "herglotz_samples": 50})"},
      {"cell", R"({"geometry": "random(4,0.5)@32", "sigmas": [2, [3, 1]]})"},
      {"twowell", R"({"preset": {"kind": "random", "seed": 5}, "grid": {"points": 2}})"},
      {"bounds", R"({})"},
      {"generate-geometry", R"({"name": "random-cubic(2,0.5)@16"})"},
  };
  std::size_t files = 0;
  for (const auto& [sub, text] : jobs) {
    const fs::path cfg = root / (sub + ".json");
    std::ofstream(cfg) << text;
    std::vector<fs::path> dirs;
    for (const auto& [tag, j] : std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", 1}, {"c", 3}}) {
      const std::string dir = run_tool(sub + " --config \"" + cfg.string() + "\" --out \"" + (root / tag).string() +
                                       "\" --jobs " + std::to_string(j) + " --force");
      if (dir.empty() || !fs::exists(dir)) return {false, sub + " failed to run"};
      dirs.emplace_back(dir);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const std::string name = entry.path().filename().string();
      if (name == "envelope.json") continue;
      const std::string ref = slurp(entry.path());
      for (std::size_t k = 1; k < dirs.size(); ++k)
        if (slurp(dirs[k] / name) != ref) return {false, sub + "/" + name + " differs between runs"};
      ++files;
    }
  }
  fs::remove_all(root);
  return {true, std::to_string(files) + " payload files identical across 3 runs (jobs 1, 1, 3)"};
}

struct Criterion {
  const char* name;
  double limit_seconds;
  std::function<Verdict()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"01 duality on laminates and pixel grids", 120, keller_dykhne},
      {"02 normalization and unit slope", 60, normalization},
      {"03 Herglotz property of laminates", 60, herglotz},
      {"04 second derivative on the cube array", 300, second_derivative},
      {"05 phase-interchange inequality", 1, phase_interchange},
      {"06 closed-form V* and c*", 60, augmented},
      {"07 auxetic limit and the as-printed discrepancy", 1, auxetic},
      {"08 two-well bound ordering and compatible wells", 600, two_well},
      {"09 rasterized laminates against the cell solver", 180, raster},
      {"10 field determinants and Hall coefficients", 900, fields_and_hall},
      {"11 deterministic command line payloads", 600, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.body();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_seconds) {
      v.pass = false;
      v.detail += " (over the " + num(c.limit_seconds) + " s budget)";
    }
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << v.detail << " [" << num(secs) << " s]"
              << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
