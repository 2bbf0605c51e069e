#include "compolab/json_io.hpp"

#include <fstream>
#include <sstream>

#include "compolab/errors.hpp"

namespace compolab {

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorKind::Parse, what); }

const json& member(const json& j, const char* key) {
  if (!j.is_object()) bad(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) bad(what + " must be a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& what) {
  if (!j.is_number_integer()) bad(what + " must be an integer");
  return j.get<int>();
}

const json& array(const json& j, std::size_t size, const std::string& what) {
  if (!j.is_array() || j.size() != size) bad(what + " must be an array of " + std::to_string(size));
  return j;
}

json blocks_json(const Eigen::MatrixXd& flat, int n) {
  json rows = json::array();
  for (int k = 0; k < n; ++k) {
    json row = json::array();
    for (int l = 0; l < n; ++l)
      row.push_back({flat(2 * k, 2 * l), flat(2 * k, 2 * l + 1), flat(2 * k + 1, 2 * l),
                     flat(2 * k + 1, 2 * l + 1)});
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd blocks_from_json(const json& j, int n, const std::string& what) {
  Eigen::MatrixXd flat(2 * n, 2 * n);
  array(j, static_cast<std::size_t>(n), what);
  for (int k = 0; k < n; ++k) {
    const json& row = array(j[static_cast<std::size_t>(k)], static_cast<std::size_t>(n), what + " row");
    for (int l = 0; l < n; ++l) {
      const json& b = array(row[static_cast<std::size_t>(l)], 4, what + " block");
      flat(2 * k, 2 * l) = number(b[0], what);
      flat(2 * k, 2 * l + 1) = number(b[1], what);
      flat(2 * k + 1, 2 * l) = number(b[2], what);
      flat(2 * k + 1, 2 * l + 1) = number(b[3], what);
    }
  }
  return flat;
}

int tensor_n(const json& j) {
  const int n = integer(member(j, "n"), "n");
  if (n < 1) bad("n must be positive");
  return n;
}

}  // namespace

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << source << ":" << line << ":" << col << ": malformed JSON";
    fail(ErrorKind::Parse, msg.str());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path.string());
}

json to_json(const BlockTensor& L) { return {{"n", L.n()}, {"blocks", blocks_json(L.flat(), L.n())}}; }

json to_json(const CBlockTensor& L) {
  return {{"n", L.n()},
          {"blocks", blocks_json(L.flat().real(), L.n())},
          {"imag", blocks_json(L.flat().imag(), L.n())}};
}

BlockTensor block_tensor_from_json(const json& j) {
  const int n = tensor_n(j);
  if (j.contains("imag")) {
    const Eigen::MatrixXd im = blocks_from_json(j["imag"], n, "imag");
    if (im.cwiseAbs().maxCoeff() != 0.0) bad("a real tensor was expected but 'imag' is nonzero");
  }
  return BlockTensor::from_flat(blocks_from_json(member(j, "blocks"), n, "blocks"));
}

CBlockTensor cblock_tensor_from_json(const json& j) {
  const int n = tensor_n(j);
  MatX<cplx> flat = blocks_from_json(member(j, "blocks"), n, "blocks").cast<cplx>();
  if (j.contains("imag")) flat += cplx(0.0, 1.0) * blocks_from_json(j["imag"], n, "imag").cast<cplx>();
  return CBlockTensor::from_flat(flat);
}

json to_json(const AugmentedTensor& K) {
  json j = to_json(K.L);
  json v = json::array();
  const Eigen::VectorXd flatV = flatten<double>(K.V);
  for (int i = 0; i < flatV.size(); ++i) v.push_back(flatV(i));
  j["V"] = std::move(v);
  j["c"] = K.c;
  return j;
}

AugmentedTensor augmented_from_json(const json& j) {
  AugmentedTensor K;
  K.L = block_tensor_from_json(j);
  const int n = K.L.n();
  const json& v = array(member(j, "V"), static_cast<std::size_t>(2 * n), "V");
  Eigen::VectorXd flatV(2 * n);
  for (int i = 0; i < 2 * n; ++i) flatV(i) = number(v[static_cast<std::size_t>(i)], "V");
  K.V = unflatten<double>(flatV, n);
  K.c = number(member(j, "c"), "c");
  return K;
}

json to_json(const LaminateTree& tree) {
  if (tree.is_leaf()) return {{"leaf", {{"phase", tree.phase()}, {"rotation", tree.rotation()}}}};
  return {{"branch",
           {{"a", to_json(tree.child_a())},
            {"b", to_json(tree.child_b())},
            {"normal", {tree.normal().x(), tree.normal().y()}},
            {"fraction", tree.fraction()}}}};
}

LaminateTree laminate_tree_from_json(const json& j) {
  if (j.is_object() && j.contains("leaf")) {
    const json& leaf = j["leaf"];
    const int phase = integer(member(leaf, "phase"), "phase");
    const double rotation = leaf.contains("rotation") ? number(leaf["rotation"], "rotation") : 0.0;
    return LaminateTree::leaf(phase, rotation);
  }
  if (j.is_object() && j.contains("branch")) {
    const json& br = j["branch"];
    const json& nu = array(member(br, "normal"), 2, "normal");
    return LaminateTree::branch(laminate_tree_from_json(member(br, "a")),
                                laminate_tree_from_json(member(br, "b")),
                                Eigen::Vector2d(number(nu[0], "normal"), number(nu[1], "normal")),
                                number(member(br, "fraction"), "fraction"));
  }
  bad("laminate tree node must be {\"leaf\": ...} or {\"branch\": ...}");
}

json to_json(const TwoWellSpec& spec) {
  return {{"m", spec.m}, {"K1", to_json(spec.K1)}, {"K2", to_json(spec.K2)}};
}

TwoWellSpec two_well_spec_from_json(const json& j) {
  TwoWellSpec spec;
  spec.m = integer(member(j, "m"), "m");
  spec.K1 = augmented_from_json(member(j, "K1"));
  spec.K2 = augmented_from_json(member(j, "K2"));
  spec.validate();
  return spec;
}

json field_to_json(const Field2n& F) {
  json rows = json::array();
  for (int i = 0; i < 2; ++i) {
    json row = json::array();
    for (int c = 0; c < F.cols(); ++c) row.push_back(F(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Field2n field_from_json(const json& j) {
  const json& rows = array(j, 2, "field");
  if (!rows[0].is_array() || rows[0].empty() || !rows[1].is_array() || rows[1].size() != rows[0].size())
    bad("field must be two rows of equal positive length");
  const int n = static_cast<int>(rows[0].size());
  Field2n F(2, n);
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < n; ++c)
      F(i, c) = number(rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)], "field entry");
  return F;
}

json to_json(const CellGeometry& geom, GeometryEncoding encoding) {
  const std::size_t slice = static_cast<std::size_t>(geom.N()) * geom.N();
  const std::size_t slices = geom.dim() == 3 ? static_cast<std::size_t>(geom.N()) : 1;
  json payload = json::array();
  const auto& chi = geom.indicator();
  for (std::size_t z = 0; z < slices; ++z) {
    std::string s;
    if (encoding == GeometryEncoding::Dense) {
      s.reserve(slice);
      for (std::size_t i = 0; i < slice; ++i) s.push_back(chi[z * slice + i] ? '1' : '0');
    } else {
      std::size_t i = 0;
      while (i < slice) {
        std::size_t len = 1;
        while (i + len < slice && chi[z * slice + i + len] == chi[z * slice + i]) ++len;
        if (!s.empty()) s.push_back(',');
        s += (chi[z * slice + i] ? "1:" : "0:") + std::to_string(len);
        i += len;
      }
    }
    payload.push_back(std::move(s));
  }
  return {{"dim", geom.dim()},
          {"N", geom.N()},
          {"encoding", encoding == GeometryEncoding::Dense ? "dense" : "rle"},
          {"payload", std::move(payload)}};
}

CellGeometry geometry_from_json(const json& j) {
  const int dim = integer(member(j, "dim"), "dim");
  const int N = integer(member(j, "N"), "N");
  if ((dim != 2 && dim != 3) || !is_power_of_two(N)) bad("geometry needs dim 2 or 3 and N a power of two");
  const json& enc = member(j, "encoding");
  if (!enc.is_string() || (enc != "dense" && enc != "rle")) bad("encoding must be \"dense\" or \"rle\"");
  const bool dense = enc == "dense";
  const std::size_t slice = static_cast<std::size_t>(N) * N;
  const std::size_t slices = dim == 3 ? static_cast<std::size_t>(N) : 1;
  const json& payload = array(member(j, "payload"), slices, "payload");
  std::vector<std::uint8_t> chi;
  chi.reserve(slice * slices);
  for (std::size_t z = 0; z < slices; ++z) {
    if (!payload[z].is_string()) bad("payload slices must be strings");
    const std::string s = payload[z].get<std::string>();
    const std::size_t before = chi.size();
    if (dense) {
      for (char c : s) {
        if (c != '0' && c != '1') bad("dense payload may only contain '0' and '1'");
        chi.push_back(c == '1' ? 1 : 0);
      }
    } else {
      std::stringstream ss(s);
      std::string run;
      while (std::getline(ss, run, ',')) {
        if (run.size() < 3 || (run[0] != '0' && run[0] != '1') || run[1] != ':')
          bad("rle runs must look like c:len");
        std::size_t len = 0;
        try {
          std::size_t used = 0;
          len = std::stoul(run.substr(2), &used);
          if (used != run.size() - 2) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          bad("bad rle run length in '" + run + "'");
        }
        if (len == 0 || len > slice) bad("rle run length out of range");
        chi.insert(chi.end(), len, run[0] == '1' ? 1 : 0);
      }
    }
    if (chi.size() - before != slice) bad("payload slice does not hold N*N cells");
  }
  return CellGeometry(dim, N, std::move(chi));
}

}  // namespace compolab
