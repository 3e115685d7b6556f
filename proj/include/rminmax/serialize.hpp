#pragma once

#include "rminmax/manifold.hpp"
#include "rminmax/problems.hpp"

#include <json.hpp>

#include <string>
#include <utility>

// JSON forms of points and problem instances. Matrices are stored row-major
// as flat arrays; doubles use shortest round-trip formatting, so a dump/load
// cycle is bit-exact.
namespace rminmax {

using Json = nlohmann::json;

// {"kind": "sphere"|"euclidean"|"spd", "rows": r, "cols": c, "payload": [...]}
// or {"kind": "product", "payload": [<point>, ...]}.
Json point_to_json(const Manifold& m, const Point& x);
Point point_from_json(const Manifold& m, const Json& j);

Json instance_to_json(const RpcaInstance& inst);
Json instance_to_json(const KarcherInstance& inst);
Json instance_to_json(const BilinearInstance& inst);
RpcaInstance rpca_instance_from_json(const Json& j);
KarcherInstance karcher_instance_from_json(const Json& j);
BilinearInstance bilinear_instance_from_json(const Json& j);

Json matrix_to_json(const Eigen::MatrixXd& a);
Eigen::MatrixXd matrix_from_json(const Json& j);

Json read_json_file(const std::string& path);
// Writes `j.dump(2)` followed by a newline.
void write_json_file(const std::string& path, const Json& j);

}  // namespace rminmax
