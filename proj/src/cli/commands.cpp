#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "compolab/analytic_checks.hpp"
#include "compolab/cell_geometry.hpp"
#include "compolab/cell_solver.hpp"
#include "compolab/cli.hpp"
#include "compolab/elastic_bounds.hpp"
#include "compolab/errors.hpp"
#include "compolab/format.hpp"
#include "compolab/laminate.hpp"
#include "compolab/parallel.hpp"
#include "compolab/two_well.hpp"

namespace compolab::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad_config(const std::string& what) { fail(ErrorKind::InvalidInput, "config: " + what); }

json value_or(const json& raw, const char* key, json fallback) {
  auto it = raw.find(key);
  return it == raw.end() ? std::move(fallback) : *it;
}

double number_at(const json& j, const std::string& what) {
  if (!j.is_number()) bad_config(what + " must be a number");
  return j.get<double>();
}

int int_at(const json& j, const std::string& what) {
  if (!j.is_number_integer()) bad_config(what + " must be an integer");
  return j.get<int>();
}

std::uint64_t seed_at(const json& j) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    bad_config("seed must be a non-negative integer");
  return j.get<std::uint64_t>();
}

/// Accepts a number or a [re, im] pair; returns the canonical [re, im] form.
json canonical_complex(const json& j) {
  if (j.is_number()) return json::array({j.get<double>(), 0.0});
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return json::array({j[0].get<double>(), j[1].get<double>()});
  bad_config("sigma values must be numbers or [re, im] pairs");
}

json canonical_complex_list(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) bad_config(what + " must be a non-empty array");
  json out = json::array();
  for (const auto& v : j) out.push_back(canonical_complex(v));
  return out;
}

cplx complex_from(const json& j) { return {j[0].get<double>(), j[1].get<double>()}; }

std::vector<cplx> complex_list(const json& j) {
  std::vector<cplx> out;
  for (const auto& v : j) out.push_back(complex_from(v));
  return out;
}

fs::path existing_file(const fs::path& base, const json& j, const std::string& what) {
  if (!j.is_string()) bad_config(what + " must be a path string");
  fs::path p(j.get<std::string>());
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) fail(ErrorKind::InvalidInput, what + " " + p.string() + " does not exist");
  return p;
}

std::string sigma_columns(int dim) {
  std::ostringstream out;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) out << ",s" << i << j << "_re,s" << i << j << "_im";
  return out.str();
}

std::string sigma_row(cplx sigma, const MatX<cplx>& s) {
  std::ostringstream out;
  out << format_double(sigma.real()) << "," << format_double(sigma.imag());
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      out << "," << format_double(s(i, j).real()) << "," << format_double(s(i, j).imag());
  return out.str();
}

std::string checks_csv(const std::vector<CheckReport>& reports) {
  std::string out = check_csv_header() + ",value,digest\n";
  for (const auto& r : reports)
    out += r.csv_row() + "," + (r.value ? format_double(*r.value) : std::string()) + "," + r.digest + "\n";
  return out;
}

json report_json(const CheckReport& r) {
  json j = {{"check", r.name},          {"provenance", to_string(r.provenance)},
            {"pass", r.pass},           {"residual", r.residual},
            {"tolerance", r.tolerance}, {"digest", r.digest},
            {"warnings", r.warnings}};
  if (r.value) j["value"] = *r.value;
  return j;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

/**
 * Memoized sigma -> sigma*(sigma). Points are evaluated up front in parallel
 * so that later lookups are cheap; a miss falls back to a direct evaluation.
 */
class SigmaCache {
 public:
  explicit SigmaCache(SigmaFn fn) : fn_(std::move(fn)) {}

  void prefetch(const std::vector<cplx>& points, int jobs) {
    std::vector<cplx> todo;
    for (const auto& z : points)
      if (std::find(todo.begin(), todo.end(), z) == todo.end() && !has(z)) todo.push_back(z);
    std::vector<MatX<cplx>> values(todo.size());
    parallel_for(todo.size(), jobs, [&](std::size_t i) { values[i] = fn_(todo[i]); });
    std::lock_guard<std::mutex> lock(mutex_);
    for (std::size_t i = 0; i < todo.size(); ++i) cache_.emplace(key(todo[i]), values[i]);
  }

  MatX<cplx> operator()(cplx z) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = cache_.find(key(z));
      if (it != cache_.end()) return it->second;
    }
    MatX<cplx> v = fn_(z);
    std::lock_guard<std::mutex> lock(mutex_);
    cache_.emplace(key(z), v);
    return v;
  }

  SigmaFn as_fn() {
    return [this](cplx z) { return (*this)(z); };
  }

 private:
  static std::pair<double, double> key(cplx z) { return {z.real(), z.imag()}; }
  bool has(cplx z) {
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.count(key(z)) != 0;
  }

  SigmaFn fn_;
  std::mutex mutex_;
  std::map<std::pair<double, double>, MatX<cplx>> cache_;
};

// ---------------------------------------------------------------- laminate

json default_block(int n, double s) { return to_json(BlockTensor::scalar_multiple(n, s)); }

}  // namespace

json resolve_laminate(const json& raw, const RunOptions& options) {
  const fs::path base = config_base(options);
  json cfg;
  if (raw.contains("tree")) {
    cfg["tree"] = raw["tree"];
  } else if (raw.contains("tree_file")) {
    cfg["tree"] = read_json_file(existing_file(base, raw["tree_file"], "tree_file"));
  } else {
    bad_config("laminate needs \"tree\" or \"tree_file\"");
  }
  // Validate early so a bad tree is reported before any work starts.
  (void)laminate_tree_from_json(cfg["tree"]);
  cfg["sigmas"] = canonical_complex_list(value_or(raw, "sigmas", json::array({2.0, 5.0, 10.0, json::array({3.0, 4.0})})), "sigmas");
  cfg["herglotz_samples"] = int_at(value_or(raw, "herglotz_samples", 200), "herglotz_samples");
  cfg["seed"] = options.seed ? *options.seed : seed_at(value_or(raw, "seed", 0));
  cfg["kd_tol"] = options.tol ? *options.tol : number_at(value_or(raw, "kd_tol", 1e-12), "kd_tol");
  cfg["L1"] = value_or(raw, "L1", default_block(2, 4.0));
  cfg["L2"] = value_or(raw, "L2", default_block(2, 1.0));
  const BlockTensor L1 = block_tensor_from_json(cfg["L1"]);
  const BlockTensor L2 = block_tensor_from_json(cfg["L2"]);
  if (L1.n() != L2.n()) bad_config("L1 and L2 must have the same n");
  cfg["E0"] = value_or(raw, "E0", field_to_json(Field2n::Identity(2, L1.n())));
  if (field_from_json(cfg["E0"]).cols() != L1.n()) bad_config("E0 must have n columns");
  return cfg;
}

Payload run_laminate(const json& cfg, int jobs) {
  const LaminateTree tree = laminate_tree_from_json(cfg["tree"]);
  const double f = volume_fraction(tree);
  const std::vector<cplx> sigmas = complex_list(cfg["sigmas"]);
  const SigmaFn fn = [&tree](cplx s) -> MatX<cplx> {
    return effective_tensor<cplx>(tree, CBlockTensor::scalar_multiple(1, s),
                                  CBlockTensor::scalar_multiple(1, cplx(1.0, 0.0)))
        .flat();
  };
  SigmaCache cache(fn);

  std::vector<cplx> points = sigmas;
  for (const auto& s : sigmas) points.push_back(cplx(1.0, 0.0) / s);
  cache.prefetch(points, jobs);

  Payload out;
  std::ostringstream sweep;
  sweep << "sigma_re,sigma_im" << sigma_columns(2) << ",kd_residual\n";
  std::vector<CheckReport> reports;
  const double kd_tol = cfg["kd_tol"].get<double>();
  for (const auto& s : sigmas) {
    const double kd = keller_dykhne_residual(cache(s), cache(cplx(1.0, 0.0) / s));
    sweep << sigma_row(s, cache(s)) << "," << format_double(kd) << "\n";
    reports.push_back(keller_dykhne_check(cache.as_fn(), s, Provenance::Laminate, kd_tol));
  }
  out["sigma_sweep.csv"] = sweep.str();

  std::mt19937_64 rng(cfg["seed"].get<std::uint64_t>());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int samples = cfg["herglotz_samples"].get<int>();
  std::vector<cplx> upper(static_cast<std::size_t>(std::max(samples, 0)));
  for (auto& z : upper) {
    const double re = -10.0 + 20.0 * unit(rng);
    const double im = 10.0 * (1.0 - unit(rng));
    z = {re, im};
  }
  std::vector<ConductivitySample> hs(upper.size());
  parallel_for(upper.size(), jobs, [&](std::size_t i) {
    hs[i] = {upper[i], fn(upper[i]), f, 2, Provenance::Laminate};
  });
  if (!hs.empty()) reports.push_back(herglotz_check(hs));
  reports.push_back(normalization_check(fn, f, Provenance::Laminate));
  out["checks.csv"] = checks_csv(reports);

  const BlockTensor L1 = block_tensor_from_json(cfg["L1"]);
  const BlockTensor L2 = block_tensor_from_json(cfg["L2"]);
  const LeafFieldReport leaves = leaf_fields(tree, L1, L2, field_from_json(cfg["E0"]));
  json leaf_list = json::array();
  std::size_t positive = 0, with_det = 0;
  for (const auto& lf : leaves.leaves) {
    json l = {{"phase", lf.phase}, {"weight", lf.weight}, {"E", field_to_json(lf.E)}, {"J", field_to_json(lf.J)}};
    if (lf.det) {
      l["det"] = *lf.det;
      ++with_det;
      if (*lf.det > 0.0) ++positive;
    }
    leaf_list.push_back(std::move(l));
  }
  json det_stats = nullptr;
  if (leaves.min_det)
    det_stats = {{"min_det", *leaves.min_det},
                 {"leaves_with_positive_det", positive},
                 {"leaves", with_det},
                 {"all_positive", positive == with_det}};
  json checks = json::array();
  for (const auto& r : reports) checks.push_back(report_json(r));
  const json effective = {{"volume_fraction", f},
                          {"rank", tree.rank()},
                          {"leaf_count", tree.leaf_count()},
                          {"L_star", to_json(effective_tensor<double>(tree, L1, L2))},
                          {"E_average", field_to_json(leaves.E_average)},
                          {"J_average", field_to_json(leaves.J_average)},
                          {"det_statistics", det_stats},
                          {"leaf_fields", leaf_list},
                          {"checks", checks}};
  out["effective.json"] = dump(effective);
  return out;
}

// -------------------------------------------------------------------- cell

namespace {

CellGeometry geometry_from_config(const json& g) {
  if (g.is_string()) return make_named(g.get<std::string>());
  return geometry_from_json(g);
}

std::vector<std::string> default_checks(int dim) {
  if (dim == 2) return {"keller_dykhne", "normalization", "herglotz"};
  return {"normalization", "second_derivative", "herglotz"};
}

const std::vector<std::string> kKnownChecks = {"keller_dykhne", "normalization", "herglotz",
                                               "second_derivative", "phase_interchange"};

}  // namespace

json resolve_cell(const json& raw, const RunOptions& options) {
  const fs::path base = config_base(options);
  json cfg;
  if (raw.contains("geometry")) {
    cfg["geometry"] = raw["geometry"];
  } else if (raw.contains("geometry_file")) {
    cfg["geometry"] = read_json_file(existing_file(base, raw["geometry_file"], "geometry_file"));
  } else {
    bad_config("cell needs \"geometry\" (generator string or object) or \"geometry_file\"");
  }
  const CellGeometry geom = geometry_from_config(cfg["geometry"]);
  cfg["sigmas"] = canonical_complex_list(value_or(raw, "sigmas", json::array({2.0, 5.0, 10.0})), "sigmas");
  cfg["herglotz_sigmas"] =
      canonical_complex_list(value_or(raw, "herglotz_sigmas", json::array({json::array({2.0, 1.0})})), "herglotz_sigmas");
  const json checks = value_or(raw, "checks", default_checks(geom.dim()));
  if (!checks.is_array()) bad_config("checks must be an array of names");
  for (const auto& c : checks)
    if (!c.is_string() || std::find(kKnownChecks.begin(), kKnownChecks.end(), c.get<std::string>()) == kKnownChecks.end())
      bad_config("unknown check " + c.dump());
  cfg["checks"] = checks;

  const json solver = value_or(raw, "solver", json::object());
  cfg["solver"] = {{"tol", options.tol ? *options.tol : number_at(value_or(solver, "tol", 1e-10), "solver.tol")},
                   {"max_iterations", int_at(value_or(solver, "max_iterations", 0), "solver.max_iterations")},
                   {"max_contrast", number_at(value_or(solver, "max_contrast", 1e6), "solver.max_contrast")}};
  cfg["normalization_slope_tol"] = number_at(value_or(raw, "normalization_slope_tol", 1e-3), "normalization_slope_tol");
  cfg["cofactor"] = value_or(raw, "cofactor", false);
  if (!cfg["cofactor"].is_boolean()) bad_config("cofactor must be a boolean");

  if (raw.contains("hall")) {
    if (geom.dim() != 3) bad_config("the Hall pipeline needs a three-dimensional geometry");
    const json& h = raw["hall"];
    if (!h.is_object()) bad_config("hall must be an object");
    json hv = value_or(h, "h", json::array({1e-3, 0.0, 0.0}));
    if (!hv.is_array() || hv.size() != 3) bad_config("hall.h must have three entries");
    json methods = value_or(h, "methods", json::array({"direct", "perturbation"}));
    for (const auto& m : methods)
      if (m != "direct" && m != "perturbation") bad_config("unknown Hall method " + m.dump());
    cfg["hall"] = {{"rho", number_at(value_or(h, "rho", 1.0), "hall.rho")},
                   {"R_H", number_at(value_or(h, "R_H", 1.0), "hall.R_H")},
                   {"h", hv},
                   {"methods", methods},
                   {"void_ratio", number_at(value_or(h, "void_ratio", 1e-6), "hall.void_ratio")}};
  }
  return cfg;
}

Payload run_cell(const json& cfg, int jobs) {
  const CellGeometry geom = geometry_from_config(cfg["geometry"]);
  const int dim = geom.dim();
  const double f = geom.volume_fraction();
  SolverOptions opts;
  opts.tol = cfg["solver"]["tol"].get<double>();
  opts.max_iterations = cfg["solver"]["max_iterations"].get<int>();
  opts.max_contrast = cfg["solver"]["max_contrast"].get<double>();

  const std::vector<cplx> sigmas = complex_list(cfg["sigmas"]);
  const std::vector<cplx> herglotz = complex_list(cfg["herglotz_sigmas"]);
  std::vector<std::string> checks;
  for (const auto& c : cfg["checks"]) checks.push_back(c.get<std::string>());
  auto wants = [&](const char* name) { return std::find(checks.begin(), checks.end(), name) != checks.end(); };

  SigmaCache cache([&](cplx s) { return sigma_star_fn(geom, s, opts, 1); });
  const NormalizationOptions norm{1e-12, cfg["normalization_slope_tol"].get<double>(), 1e-5};
  const SecondDerivativeOptions second{};

  std::vector<cplx> points = sigmas;
  const bool kd = dim == 2 && wants("keller_dykhne");
  if (kd)
    for (const auto& s : sigmas) points.push_back(cplx(1.0, 0.0) / s);
  if (wants("normalization"))
    for (double x : {1.0, 1.0 + norm.step, 1.0 - norm.step}) points.emplace_back(x, 0.0);
  if (wants("second_derivative"))
    for (double x : {1.0, 1.0 + second.step, 1.0 - second.step}) points.emplace_back(x, 0.0);
  if (wants("herglotz")) points.insert(points.end(), herglotz.begin(), herglotz.end());
  if (wants("phase_interchange"))
    for (const auto& s : sigmas)
      if (s.imag() == 0.0 && s.real() > 0.0) points.push_back(cplx(1.0 / s.real(), 0.0));
  cache.prefetch(points, jobs);

  Payload out;
  std::ostringstream sweep;
  sweep << "sigma_re,sigma_im" << sigma_columns(dim) << (kd ? ",kd_residual" : "") << "\n";
  for (const auto& s : sigmas) {
    sweep << sigma_row(s, cache(s));
    if (kd) sweep << "," << format_double(keller_dykhne_residual(cache(s), cache(cplx(1.0, 0.0) / s)));
    sweep << "\n";
  }
  out["sigma_sweep.csv"] = sweep.str();

  std::vector<CheckReport> reports;
  const SigmaFn fn = cache.as_fn();
  if (kd)
    for (const auto& s : sigmas) reports.push_back(keller_dykhne_check(fn, s, Provenance::Cell));
  if (wants("normalization")) reports.push_back(normalization_check(fn, f, Provenance::Cell, norm));
  if (wants("second_derivative")) {
    if (dim != 3) bad_config("second_derivative needs a three-dimensional geometry");
    reports.push_back(second_derivative_check(fn, f, Provenance::Cell, second));
  }
  if (wants("herglotz")) {
    std::vector<ConductivitySample> hs;
    for (const auto& s : herglotz) hs.push_back({s, cache(s), f, dim, Provenance::Cell});
    reports.push_back(herglotz_check(hs));
  }
  if (wants("phase_interchange"))
    for (const auto& s : sigmas)
      if (s.imag() == 0.0 && s.real() > 0.0)
        reports.push_back(phase_interchange_check(fn, s.real(), Provenance::Cell));
  out["checks.csv"] = checks_csv(reports);

  out["geometry_summary.json"] = dump({{"dim", dim},
                                       {"N", geom.N()},
                                       {"volume_fraction", f},
                                       {"cubic_symmetric", dim == 3 && geom.is_cubic_symmetric()},
                                       {"max_iterations", resolved_max_iterations(opts, geom.N())}});

  auto cofactor_json = [](const CofactorReport& c) {
    json j = {{"cells", c.cells},
              {"min_det", c.min_det},
              {"max_det", c.max_det},
              {"negative_det_fraction", c.negative_det_fraction}};
    if (c.min_tr_cof) j["min_tr_cof"] = *c.min_tr_cof;
    if (c.max_tr_cof) j["max_tr_cof"] = *c.max_tr_cof;
    if (c.negative_tr_cof_fraction) j["negative_tr_cof_fraction"] = *c.negative_tr_cof_fraction;
    return j;
  };

  if (cfg["cofactor"].get<bool>()) {
    auto real_sigma = std::find_if(sigmas.begin(), sigmas.end(), [](cplx s) { return s.imag() == 0.0 && s.real() > 0.0; });
    if (real_sigma == sigmas.end()) bad_config("cofactor diagnostics need a positive real sigma");
    const double s1 = real_sigma->real();
    const FieldSolution sol = solve_matrix_field(geom, s1 * Eigen::MatrixXd::Identity(dim, dim),
                                                 Eigen::MatrixXd::Identity(dim, dim), opts, jobs);
    json j = cofactor_json(cofactor_diagnostics(sol));
    j["sigma1"] = s1;
    j["E_average"] = matrix_json(sol.E_average);
    j["iterations"] = sol.iterations;
    out["cofactor.json"] = dump(j);
  }

  if (cfg.contains("hall")) {
    const json& h = cfg["hall"];
    const double rho = h["rho"].get<double>();
    const double R_H = h["R_H"].get<double>();
    const Eigen::Vector3d hv(h["h"][0].get<double>(), h["h"][1].get<double>(), h["h"][2].get<double>());
    HallOptions ho;
    ho.void_ratio = h["void_ratio"].get<double>();
    ho.solver = opts;
    ho.jobs = jobs;
    json results = json::array();
    bool cubic = true;
    Eigen::Matrix3d rho0 = Eigen::Matrix3d::Zero();
    std::size_t reversed = 0;
    for (const auto& m : h["methods"]) {
      const HallMethod method = m == "direct" ? HallMethod::Direct : HallMethod::Perturbation;
      const HallResult r = hall_coefficient(geom, rho, R_H, hv, method, ho);
      cubic = r.cubic_symmetric;
      rho0 = r.rho_star0;
      const bool rev = r.R_star * R_H < 0.0;
      if (rev) ++reversed;
      results.push_back({{"method", m},
                         {"R_star", r.R_star},
                         {"ratio", r.R_star / R_H},
                         {"sign_reversed", rev},
                         {"max_iterations_used", r.max_iterations_used}});
    }
    // Sign statistics of the zero-field current pattern: det and cofactor
    // trace of the local field matrix with the void phase in place.
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
    const FieldSolution sol = solve_matrix_field(geom, I / rho, (ho.void_ratio / rho) * I, opts, jobs);
    json warnings = json::array();
    if (!cubic) warnings.push_back("geometry lacks cubic symmetry; rho* need not be isotropic");
    out["hall.json"] = dump({{"rho", rho},
                             {"R_H", R_H},
                             {"h", h["h"]},
                             {"cubic_symmetric", cubic},
                             {"rho_star0", matrix_json(rho0)},
                             {"results", results},
                             {"sign_reversed_count", reversed},
                             {"field_sign_statistics", cofactor_json(cofactor_diagnostics(sol))},
                             {"warnings", warnings}});
  }
  return out;
}

// ----------------------------------------------------------------- twowell

namespace {

Eigen::MatrixXd random_spd(int size, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(size, size);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) a(i, j) = g(rng);
  return a * a.transpose() / size + 0.5 * Eigen::MatrixXd::Identity(size, size);
}

Field2n random_field(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Field2n F(2, m);
  for (int k = 0; k < F.size(); ++k) F(k) = g(rng);
  return F;
}

TwoWellSpec preset_spec(const json& preset) {
  if (!preset.is_object()) bad_config("preset must be an object");
  const std::string kind = value_or(preset, "kind", "convex").get<std::string>();
  const int m = int_at(value_or(preset, "m", 2), "preset.m");
  if (m < 1) bad_config("preset.m must be positive");
  std::mt19937_64 rng(seed_at(value_or(preset, "seed", 0)));
  const BlockTensor I = BlockTensor::identity(m);
  if (kind == "convex") {
    const Field2n F = Field2n::Zero(2, m);
    return TwoWellSpec::from_wells(I, F, 0.0, I, F, 0.0);
  }
  if (kind == "compatible") {
    Field2n F2 = Field2n::Zero(2, m);
    F2.row(0).setOnes();  // (1, 0) tensor (1, ..., 1)
    return TwoWellSpec::from_wells(I, Field2n::Zero(2, m), 0.0, I, F2, 0.0);
  }
  if (kind == "random") {
    const BlockTensor L1 = BlockTensor::from_flat(Eigen::MatrixXd(random_spd(2 * m, rng)), -1.0);
    const BlockTensor L2 = BlockTensor::from_flat(Eigen::MatrixXd(random_spd(2 * m, rng)), -1.0);
    const Field2n F1 = random_field(m, rng);
    const Field2n F2 = random_field(m, rng);
    std::uniform_real_distribution<double> k(0.0, 1.0);
    const double k1 = k(rng);
    return TwoWellSpec::from_wells(L1, F1, k1, L2, F2, k(rng));
  }
  bad_config("unknown preset kind '" + kind + "' (convex, compatible, random)");
}

}  // namespace

json resolve_twowell(const json& raw, const RunOptions& options) {
  const fs::path base = config_base(options);
  json cfg;
  TwoWellSpec spec;
  if (raw.contains("spec")) {
    spec = two_well_spec_from_json(raw["spec"]);
  } else if (raw.contains("spec_file")) {
    spec = two_well_spec_from_json(read_json_file(existing_file(base, raw["spec_file"], "spec_file")));
  } else if (raw.contains("preset")) {
    spec = preset_spec(raw["preset"]);
    cfg["preset"] = raw["preset"];
  } else {
    bad_config("twowell needs \"spec\", \"spec_file\" or \"preset\"");
  }
  spec.validate();
  cfg["spec"] = to_json(spec);
  const int m = spec.m;

  if (raw.contains("fields")) {
    if (!raw["fields"].is_array() || raw["fields"].empty()) bad_config("fields must be a non-empty array");
    json fields = json::array();
    for (const auto& F : raw["fields"]) {
      const Field2n v = field_from_json(F);
      if (v.cols() != m) bad_config("every field must have m columns");
      fields.push_back(field_to_json(v));
    }
    cfg["fields"] = fields;
  } else if (raw.contains("segment")) {
    const json& s = raw["segment"];
    const Field2n a = field_from_json(value_or(s, "from", field_to_json(Field2n::Zero(2, m))));
    const Field2n b = field_from_json(value_or(s, "to", field_to_json(Field2n::Zero(2, m))));
    if (a.cols() != m || b.cols() != m) bad_config("segment endpoints must have m columns");
    cfg["segment"] = {{"from", field_to_json(a)}, {"to", field_to_json(b)},
                      {"points", int_at(value_or(s, "points", 11), "segment.points")}};
    if (cfg["segment"]["points"].get<int>() < 2) bad_config("segment.points must be at least 2");
  } else {
    const json g = value_or(raw, "grid", json::object());
    cfg["grid"] = {{"lo", number_at(value_or(g, "lo", -1.0), "grid.lo")},
                   {"hi", number_at(value_or(g, "hi", 1.0), "grid.hi")},
                   {"points", int_at(value_or(g, "points", 3), "grid.points")}};
  }

  const json up = value_or(raw, "upper", json::object());
  cfg["upper"] = {{"max_rank", int_at(value_or(up, "max_rank", 2), "upper.max_rank")},
                  {"restarts", int_at(value_or(up, "restarts", 3), "upper.restarts")},
                  {"angle_samples", int_at(value_or(up, "angle_samples", 32), "upper.angle_samples")},
                  {"refine_sweeps", int_at(value_or(up, "refine_sweeps", 2), "upper.refine_sweeps")}};
  const json lo = value_or(raw, "lower", json::object());
  cfg["lower"] = {{"search_budget", int_at(value_or(lo, "search_budget", 40), "lower.search_budget")},
                  {"starts", int_at(value_or(lo, "starts", 16), "lower.starts")},
                  {"seed", options.seed ? *options.seed : seed_at(value_or(lo, "seed", value_or(raw, "seed", 0)))}};
  return cfg;
}

Payload run_twowell(const json& cfg, int jobs) {
  const TwoWellSpec spec = two_well_spec_from_json(cfg["spec"]);
  const int m = spec.m;
  std::vector<Field2n> grid;
  if (cfg.contains("fields")) {
    for (const auto& F : cfg["fields"]) grid.push_back(field_from_json(F));
  } else if (cfg.contains("segment")) {
    const Field2n a = field_from_json(cfg["segment"]["from"]);
    const Field2n b = field_from_json(cfg["segment"]["to"]);
    const int points = cfg["segment"]["points"].get<int>();
    for (int i = 0; i < points; ++i) {
      const double t = static_cast<double>(i) / (points - 1);
      grid.push_back((1.0 - t) * a + t * b);
    }
  } else {
    grid = make_F_grid(m, cfg["grid"]["lo"].get<double>(), cfg["grid"]["hi"].get<double>(),
                       cfg["grid"]["points"].get<int>());
  }
  UpperBoundOptions upper;
  upper.max_rank = cfg["upper"]["max_rank"].get<int>();
  upper.restarts = cfg["upper"]["restarts"].get<int>();
  upper.angle_samples = cfg["upper"]["angle_samples"].get<int>();
  upper.refine_sweeps = cfg["upper"]["refine_sweeps"].get<int>();
  LowerBoundOptions lower;
  lower.search_budget = cfg["lower"]["search_budget"].get<int>();
  lower.starts = cfg["lower"]["starts"].get<int>();
  lower.seed = cfg["lower"]["seed"].get<std::uint64_t>();

  const GapReport report = gap_scan(spec, grid, upper, lower, jobs);

  std::ostringstream csv;
  csv << "index";
  for (int k = 0; k < m; ++k) csv << ",F0" << k << ",F1" << k;
  csv << ",lower,upper,gap\n";
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    const GapRecord& r = report.records[i];
    csv << i;
    for (int k = 0; k < m; ++k) csv << "," << format_double(r.F(0, k)) << "," << format_double(r.F(1, k));
    csv << "," << format_double(r.lower) << "," << format_double(r.upper) << "," << format_double(r.gap) << "\n";
  }
  Payload out;
  out["gap_scan.csv"] = csv.str();
  json summary = {{"points", report.records.size()},
                  {"max_gap", report.max_gap},
                  {"min_gap", report.min_gap},
                  {"upper_budget", cfg["upper"]},
                  {"lower_budget", cfg["lower"]},
                  {"caveat", kGapCaveat}};
  if (!report.records.empty()) {
    summary["argmax_index"] = report.argmax;
    summary["argmax_F"] = field_to_json(report.records[report.argmax].F);
  }
  out["summary.json"] = dump(summary);
  return out;
}

// ------------------------------------------------------------------ bounds

namespace {

double kappa_from(const json& j) {
  if (j.is_string() && (j == "inf" || j == "infinity")) return kInfiniteBulk;
  return number_at(j, "kappa");
}

json kappa_to(double kappa) { return std::isinf(kappa) ? json("inf") : json(kappa); }

const char* variant_name(Aux3Variant v) { return v == Aux3Variant::AsPrinted ? "as-printed" : "c1122-variant"; }

}  // namespace

json resolve_bounds(const json& raw, const RunOptions& options) {
  json cfg;
  const json phases = value_or(raw, "phases", json::array({{{"kappa", "inf"}, {"mu", 1.0}},
                                                            {{"kappa", 2.0}, {"mu", 1.0}},
                                                            {{"kappa", 10.0}, {"mu", 1.0}}}));
  if (!phases.is_array() || phases.empty()) bad_config("phases must be a non-empty array");
  cfg["phases"] = json::array();
  for (const auto& p : phases) {
    const IsoElastic iso{kappa_from(value_or(p, "kappa", 1.0)), number_at(value_or(p, "mu", 1.0), "mu")};
    iso.validate();
    cfg["phases"].push_back({{"kappa", kappa_to(iso.kappa)}, {"mu", iso.mu}});
  }
  cfg["eps"] = value_or(raw, "eps", json::array({1e-3, 1e-6, 1e-9}));
  cfg["c"] = value_or(raw, "c", json::array({0.0}));
  for (const auto* key : {"eps", "c"})
    for (const auto& v : cfg[key]) number_at(v, key);
  cfg["variants"] = value_or(raw, "variants", json::array({"c1122-variant", "as-printed"}));
  for (const auto& v : cfg["variants"])
    if (v != "c1122-variant" && v != "as-printed") bad_config("unknown variant " + v.dump());
  const json ic = value_or(raw, "interchange", json::object());
  cfg["interchange"] = {{"dim", int_at(value_or(ic, "dim", 3), "interchange.dim")},
                        {"sigma_min", number_at(value_or(ic, "sigma_min", 0.1), "interchange.sigma_min")},
                        {"sigma_max", number_at(value_or(ic, "sigma_max", 10.0), "interchange.sigma_max")},
                        {"points", int_at(value_or(ic, "points", 20), "interchange.points")},
                        {"fractions", value_or(ic, "fractions", json::array({0.1, 0.3, 0.5, 0.7, 0.9}))},
                        {"tol", options.tol ? *options.tol : number_at(value_or(ic, "tol", 1e-9), "interchange.tol")}};
  const json& icr = cfg["interchange"];
  if (!(icr["sigma_min"].get<double>() > 0.0) || icr["sigma_max"].get<double>() < icr["sigma_min"].get<double>())
    bad_config("interchange sigma range must satisfy 0 < sigma_min <= sigma_max");
  if (icr["points"].get<int>() < 1) bad_config("interchange.points must be positive");
  return cfg;
}

Payload run_bounds(const json& cfg, int /*jobs*/) {
  json records = json::array();
  json limits = json::array();
  for (const auto& p : cfg["phases"]) {
    const IsoElastic phase{kappa_from(p["kappa"]), p["mu"].get<double>()};
    const IsoModuli lim = auxetic_limit(phase.kappa, phase.mu);
    json l = {{"inputs", {{"kappa", kappa_to(phase.kappa)}, {"mu", phase.mu}}},
              {"auxetic_limit", {{"kappa_star", lim.kappa_star}, {"mu_star", lim.mu_star}}}};
    if (phase.kappa != phase.mu) l["as_printed_kappa_limit"] = as_printed_kappa_limit(phase.kappa, phase.mu);
    limits.push_back(std::move(l));

    for (const auto& e : cfg["eps"])
      for (const auto& c : cfg["c"]) {
        const PlanarOrthotropic mat = sliced_material(phase.kappa, phase.mu, e.get<double>(), c.get<double>());
        for (const auto& v : cfg["variants"]) {
          const Aux3Variant variant = v == "as-printed" ? Aux3Variant::AsPrinted : Aux3Variant::C1122Variant;
          json rec = {{"inputs", {{"kappa", kappa_to(phase.kappa)}, {"mu", phase.mu}, {"eps", e}, {"c", c}}},
                      {"variant", variant_name(variant)},
                      {"positive_semidefinite", mat.is_positive_semidefinite()}};
          try {
            const IsoModuli m = polycrystal_extremes(mat, variant);
            rec["kappa_star"] = m.kappa_star;
            rec["mu_star"] = std::isnan(m.mu_star) ? json(nullptr) : json(m.mu_star);
            if (std::isnan(m.mu_star)) rec["note"] = "shear formula has a negative radicand";
            rec["within_elementary_bounds"] = elementary_bounds_contain(phase, m.kappa_star, m.mu_star);
          } catch (const Error& err) {
            if (err.kind() != ErrorKind::DegenerateInput) throw;
            rec["kappa_star"] = nullptr;
            rec["mu_star"] = nullptr;
            rec["error"] = err.what();
          }
          records.push_back(std::move(rec));
        }
      }
  }

  const json& ic = cfg["interchange"];
  const int dim = ic["dim"].get<int>();
  const int points = ic["points"].get<int>();
  const double lo = ic["sigma_min"].get<double>(), hi = ic["sigma_max"].get<double>();
  const double tol = ic["tol"].get<double>();
  std::ostringstream csv;
  csv << "sigma,f,core,lhs,pass\n";
  std::size_t failures = 0, total = 0;
  double min_lhs = INFINITY;
  for (int i = 0; i < points; ++i) {
    const double t = points > 1 ? static_cast<double>(i) / (points - 1) : 0.0;
    const double sigma = lo * std::pow(hi / lo, t);
    for (const auto& fj : ic["fractions"]) {
      const double f = fj.get<double>();
      for (CoreWhich which : {CoreWhich::CorePhase1, CoreWhich::CorePhase2}) {
        const SigmaFn fn = [&](cplx s) -> MatX<cplx> {
          return coated_sphere_oracle(s.real(), f, dim, which) * MatX<cplx>::Identity(dim, dim);
        };
        const CheckReport rep = phase_interchange_check(fn, sigma, Provenance::Oracle, tol);
        ++total;
        if (!rep.pass) ++failures;
        min_lhs = std::min(min_lhs, *rep.value);
        csv << format_double(sigma) << "," << format_double(f) << ","
            << (which == CoreWhich::CorePhase1 ? "phase1" : "phase2") << "," << format_double(*rep.value) << ","
            << (rep.pass ? "true" : "false") << "\n";
      }
    }
  }
  Payload out;
  out["aux.json"] = dump({{"records", records}, {"limits", limits}});
  out["interchange.csv"] = csv.str();
  out["interchange_summary.json"] =
      dump({{"evaluations", total}, {"failures", failures}, {"min_lhs", min_lhs}, {"threshold", 2.0 - tol}});
  return out;
}

// ------------------------------------------------------- generate-geometry

json resolve_generate(const json& raw, const RunOptions& options) {
  json cfg;
  if (options.name) {
    cfg["name"] = *options.name;
  } else if (raw.contains("name")) {
    if (!raw["name"].is_string()) bad_config("name must be a generator string");
    cfg["name"] = raw["name"];
  } else {
    bad_config("generate-geometry needs a generator name (--name or \"name\")");
  }
  (void)make_named(cfg["name"].get<std::string>());
  cfg["encoding"] = value_or(raw, "encoding", "rle");
  if (cfg["encoding"] != "rle" && cfg["encoding"] != "dense") bad_config("encoding must be \"rle\" or \"dense\"");
  return cfg;
}

Payload run_generate(const json& cfg, int /*jobs*/) {
  const CellGeometry geom = make_named(cfg["name"].get<std::string>());
  const GeometryEncoding enc = cfg["encoding"] == "dense" ? GeometryEncoding::Dense : GeometryEncoding::RunLength;
  Payload out;
  out["geometry.json"] = dump(to_json(geom, enc));
  out["summary.json"] = dump({{"name", cfg["name"]},
                              {"dim", geom.dim()},
                              {"N", geom.N()},
                              {"volume_fraction", geom.volume_fraction()},
                              {"cubic_symmetric", geom.dim() == 3 && geom.is_cubic_symmetric()}});
  return out;
}

// --------------------------------------------------------------- front end

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Effective-tensor experiments for two-phase composites"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunOptions options;
  std::string config_path, out_dir = "out", name;
  std::uint64_t seed = 0;
  double tol = 0.0;

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"laminate", "Effective tensors, duality and Herglotz checks for a laminate tree"},
      {"cell", "Periodic cell solve on a pixel/voxel geometry"},
      {"twowell", "Lower/upper bound gap scan for a two-well energy"},
      {"bounds", "Elastic auxiliary formulas and phase-interchange sweeps"},
      {"generate-geometry", "Write a named generator geometry to disk"},
  };
  std::map<std::string, CLI::Option*> seed_opts, tol_opts, name_opts;
  for (const auto& [cmd, help] : commands) {
    CLI::App* sub = app.add_subcommand(cmd, help);
    sub->add_option("--config", config_path, "Experiment configuration (JSON)");
    sub->add_option("--jobs", options.jobs, "Worker threads")->check(CLI::PositiveNumber);
    seed_opts[cmd] = sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--out", out_dir, "Output root directory");
    sub->add_flag("--force", options.force, "Recompute even when a cached result exists");
    tol_opts[cmd] = sub->add_option("--tol", tol, "Override the primary tolerance");
    if (std::string(cmd) == "generate-geometry")
      name_opts[cmd] = sub->add_option("--name", name, "Generator string, e.g. random(7,0.5)@64");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string cmd = chosen->get_name();
  if (!config_path.empty()) options.config = config_path;
  options.out = out_dir;
  if (seed_opts[cmd]->count() > 0) options.seed = seed;
  if (tol_opts[cmd]->count() > 0) {
    if (!(tol > 0.0)) {
      err << "error: --tol must be positive\n";
      return 2;
    }
    options.tol = tol;
  }
  if (name_opts.count(cmd) && name_opts[cmd]->count() > 0) options.name = name;

  try {
    execute(cmd, options, out);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (classify(e.kind())) {
      case ErrorClass::Input: return 2;
      case ErrorClass::Numerical: return 3;
      case ErrorClass::Internal: return 4;
    }
    return 4;
  } catch (const json::exception& e) {
    err << "error [Parse]: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error [InvalidInput]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace compolab::cli
