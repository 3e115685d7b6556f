#include "rminmax/serialize.hpp"

#include <fstream>
#include <stdexcept>

namespace rminmax {

Json matrix_to_json(const Eigen::MatrixXd& a) {
  Json j;
  j["rows"] = a.rows();
  j["cols"] = a.cols();
  Json flat = Json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index k = 0; k < a.cols(); ++k) flat.push_back(a(i, k));
  }
  j["payload"] = std::move(flat);
  return j;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const Json& flat = j.at("payload");
  if (rows < 0 || cols < 0 || !flat.is_array() ||
      flat.size() != static_cast<std::size_t>(rows * cols)) {
    throw std::invalid_argument("matrix json: payload size mismatch");
  }
  Eigen::MatrixXd a(rows, cols);
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) a(i, k) = flat[n++].get<double>();
  }
  return a;
}

Json point_to_json(const Manifold& m, const Point& x) {
  if (!m.has_shape(x)) throw std::invalid_argument("point_to_json: shape mismatch");
  if (m.kind() == ManifoldKind::kProduct) {
    Json parts = Json::array();
    for (std::size_t i = 0; i < m.factors().size(); ++i) {
      parts.push_back(point_to_json(m.factors()[i], x.parts[i]));
    }
    return Json{{"kind", "product"}, {"payload", std::move(parts)}};
  }
  Json j = matrix_to_json(x.leaf);
  j["kind"] = to_string(m.kind());
  return j;
}

Point point_from_json(const Manifold& m, const Json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind != to_string(m.kind())) {
    throw std::invalid_argument("point json: kind '" + kind +
                                "' does not match " + m.name());
  }
  Point x;
  if (m.kind() == ManifoldKind::kProduct) {
    const Json& parts = j.at("payload");
    if (!parts.is_array() || parts.size() != m.factors().size()) {
      throw std::invalid_argument("point json: factor count mismatch");
    }
    std::vector<Point> out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      out.push_back(point_from_json(m.factors()[i], parts[i]));
    }
    x = Point(std::move(out));
  } else {
    x = Point(matrix_from_json(j));
  }
  m.check_point(x);
  return x;
}

namespace {

Json matrices_to_json(const std::vector<Eigen::MatrixXd>& ms) {
  Json arr = Json::array();
  for (const auto& m : ms) arr.push_back(matrix_to_json(m));
  return arr;
}

std::vector<Eigen::MatrixXd> matrices_from_json(const Json& j) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& e : j) out.push_back(matrix_from_json(e));
  return out;
}

void require_problem(const Json& j, const char* name) {
  if (j.at("problem").get<std::string>() != name) {
    throw std::invalid_argument(std::string("instance json: expected problem '") +
                                name + "'");
  }
}

}  // namespace

Json instance_to_json(const RpcaInstance& inst) {
  return Json{{"problem", "rpca"},
              {"d", inst.d},
              {"n", inst.n},
              {"alpha", inst.alpha},
              {"data", matrices_to_json(inst.data)}};
}

Json instance_to_json(const KarcherInstance& inst) {
  return Json{{"problem", "karcher"},
              {"d", inst.d},
              {"N", inst.N},
              {"gamma", inst.gamma},
              {"anchors", matrices_to_json(inst.anchors)}};
}

Json instance_to_json(const BilinearInstance& inst) {
  return Json{{"problem", "bilinear"},
              {"k", inst.k},
              {"coupling", matrix_to_json(inst.coupling)}};
}

RpcaInstance rpca_instance_from_json(const Json& j) {
  require_problem(j, "rpca");
  RpcaInstance inst;
  inst.d = j.at("d").get<int>();
  inst.n = j.at("n").get<int>();
  inst.alpha = j.at("alpha").get<double>();
  inst.data = matrices_from_json(j.at("data"));
  validate(inst);
  return inst;
}

KarcherInstance karcher_instance_from_json(const Json& j) {
  require_problem(j, "karcher");
  KarcherInstance inst;
  inst.d = j.at("d").get<int>();
  inst.N = j.at("N").get<int>();
  inst.gamma = j.at("gamma").get<double>();
  inst.anchors = matrices_from_json(j.at("anchors"));
  validate(inst);
  return inst;
}

BilinearInstance bilinear_instance_from_json(const Json& j) {
  require_problem(j, "bilinear");
  BilinearInstance inst;
  inst.k = j.at("k").get<int>();
  inst.coupling = matrix_from_json(j.at("coupling"));
  if (inst.coupling.rows() != inst.k || inst.coupling.cols() != inst.k) {
    throw std::invalid_argument("bilinear json: coupling must be k x k");
  }
  return inst;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw std::invalid_argument("invalid JSON in '" + path + "': " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace rminmax
