#pragma once

// JSON encodings of set descriptors and RIFS, and CSV point-cloud I/O.
//
// Descriptor schema (indices zero-based):
//   {"kind": "sparse", "m": 3, "n": 3, "s": 1}
//   {"kind": "fixed_support", "m": 2, "n": 2, "support": [[0, 0], [1, 1]]}
//   {"kind": "low_rank", "m": 3, "n": 3, "r": 1}
//   {"kind": "orthogonal", "m": 3}
//   {"kind": "upper_triangular_sparse", "m": 3, "n": 3, "s": 2}
//   {"kind": "rifs_attractor", "rifs": <rifs>}
//   {"kind": "union", "children": [<descriptor>, ...]}
//   {"kind": "matrix_product" | "sum" | "kronecker" | "minkowski_diff",
//    "left": <descriptor>, "right": <descriptor>}
//   {"kind": "gram_square", "child": <descriptor>}
//   {"kind": "bounded_by", "child": <descriptor>, "radius": 1.0}
//
// RIFS schema:
//   {"m": 2, "R": 1.5,
//    "maps": [{"scale": 0.2, "rotation": [1, 0, 0, 1], "translation": [0, 0]}, ...],
//    "P": [row-major n*n entries]}
// "rotation" is row-major and defaults to the identity.

#include "lowdim/dimest.hpp"
#include "lowdim/rifs.hpp"
#include "lowdim/setmodel.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace lowdim {

nlohmann::json descriptor_to_json(const SetDescriptor& d);
/// Throws ConfigError naming the offending field path.
SetDescriptor descriptor_from_json(const nlohmann::json& j, const std::string& path = "");

nlohmann::json rifs_to_json(const Rifs& rifs);
Rifs rifs_from_json(const nlohmann::json& j, const std::string& path = "");

nlohmann::json estimate_to_json(const DimensionEstimate& est);

/// One point per line, comma separated, no header.
PointCloud read_cloud_csv(std::istream& in);

/// Columns component,x_1,...,x_m with a header row.
void write_attractor_csv(std::ostream& out, const AttractorSample& sample);

}  // namespace lowdim
