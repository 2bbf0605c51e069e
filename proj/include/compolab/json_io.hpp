#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

#include "compolab/cell_geometry.hpp"
#include "compolab/laminate.hpp"
#include "compolab/tensor_core.hpp"
#include "compolab/two_well.hpp"

namespace compolab {

using json = nlohmann::json;

/// Parses JSON text; throws Parse with line and column on malformed input.
json parse_json_text(const std::string& text, const std::string& source = "<input>");
json read_json_file(const std::filesystem::path& path);

/// {"n", "blocks": n x n grid of row-major 4-number blocks, optional "imag"}.
json to_json(const BlockTensor& L);
json to_json(const CBlockTensor& L);
BlockTensor block_tensor_from_json(const json& j);
/// Accepts a missing "imag" companion (purely real tensor).
CBlockTensor cblock_tensor_from_json(const json& j);

/// Block tensor fields plus "V" (2n numbers, column-stacked) and "c".
json to_json(const AugmentedTensor& K);
AugmentedTensor augmented_from_json(const json& j);

json to_json(const LaminateTree& tree);
LaminateTree laminate_tree_from_json(const json& j);

/// {"m", "K1", "K2"}.
json to_json(const TwoWellSpec& spec);
TwoWellSpec two_well_spec_from_json(const json& j);

/// 2 x n matrix as a list of its two rows.
json field_to_json(const Field2n& F);
Field2n field_from_json(const json& j);

enum class GeometryEncoding { Dense, RunLength };

/**
 * {"dim", "N", "encoding": "dense" | "rle", "payload": [one string per
 * z-slice]}. A dense slice holds N*N characters '0'/'1' in row-major order
 * (y outer, x inner); an rle slice is "c:len,c:len,..." over the same order.
 */
json to_json(const CellGeometry& geom, GeometryEncoding encoding = GeometryEncoding::RunLength);
CellGeometry geometry_from_json(const json& j);

}  // namespace compolab
