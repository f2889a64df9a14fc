#include "bmpc/problem_io.hpp"

#include <fstream>
#include <sstream>

#include "bmpc/error.hpp"
#include "json.hpp"

namespace bmpc {

namespace {

using nlohmann::json;

Matrix to_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::kParse, std::string(what) + ": expected a non-empty 2-D array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j.front().is_array()) fail(ErrorCode::kParse, std::string(what) + ": expected rows");
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      fail(ErrorCode::kParse, std::string(what) + ": ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) fail(ErrorCode::kParse, std::string(what) + ": non-numeric entry");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

Vector to_vector(const json& j, const char* what) {
  if (!j.is_array()) fail(ErrorCode::kParse, std::string(what) + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorCode::kParse, std::string(what) + ": non-numeric entry");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

bool is_matrix(const json& j) { return j.is_array() && !j.empty() && j.front().is_array() && !j.front().empty() && j.front().front().is_number(); }

std::vector<Matrix> cost_list(const json& j, int horizon, Eigen::Index dim, const char* what) {
  if (j.is_number()) return std::vector<Matrix>(static_cast<std::size_t>(horizon), j.get<double>() * Matrix::Identity(dim, dim));
  if (is_matrix(j)) return std::vector<Matrix>(static_cast<std::size_t>(horizon), to_matrix(j, what));
  if (j.is_array() && static_cast<int>(j.size()) == horizon) {
    std::vector<Matrix> out;
    for (const auto& item : j) out.push_back(item.is_number() ? item.get<double>() * Matrix::Identity(dim, dim) : to_matrix(item, what));
    return out;
  }
  fail(ErrorCode::kParse, std::string(what) + ": expected number, matrix, or list of T matrices");
}

Polytope to_polytope(const json& j, const char* what) {
  if (!j.is_object() || !j.contains("A") || !j.contains("b")) {
    fail(ErrorCode::kParse, std::string(what) + ": expected {\"A\": .., \"b\": ..}");
  }
  return Polytope(to_matrix(j.at("A"), what), to_vector(j.at("b"), what));
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace

MpcSpec parse_problem(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, e.what());
  }
  for (const char* key : {"A", "B", "Q", "R", "T", "X", "U"}) {
    if (!j.contains(key)) fail(ErrorCode::kParse, std::string("missing key \"") + key + "\"");
  }
  if (!j.at("T").is_number_integer()) fail(ErrorCode::kParse, "T must be an integer");
  MpcSpec spec;
  spec.sys.a = to_matrix(j.at("A"), "A");
  spec.sys.b = to_matrix(j.at("B"), "B");
  spec.sys.validate();
  spec.horizon = j.at("T").get<int>();
  if (spec.horizon < 1) fail(ErrorCode::kInvalidArgument, "T must be >= 1");
  spec.q = cost_list(j.at("Q"), spec.horizon, spec.sys.state_dim(), "Q");
  spec.r = cost_list(j.at("R"), spec.horizon, spec.sys.input_dim(), "R");
  spec.state_set = to_polytope(j.at("X"), "X");
  spec.input_set = to_polytope(j.at("U"), "U");
  if (j.contains("hessian")) {
    if (!j.at("hessian").is_string()) fail(ErrorCode::kParse, "hessian must be a string");
    spec.hessian = parse_hessian_convention(j.at("hessian").get<std::string>());
  }
  spec.validate();
  return spec;
}

MpcSpec load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open problem file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

std::string problem_to_json(const MpcSpec& spec) {
  json j;
  j["A"] = matrix_json(spec.sys.a);
  j["B"] = matrix_json(spec.sys.b);
  j["T"] = spec.horizon;
  j["Q"] = json::array();
  j["R"] = json::array();
  for (const auto& q : spec.q) j["Q"].push_back(matrix_json(q));
  for (const auto& r : spec.r) j["R"].push_back(matrix_json(r));
  j["X"] = {{"A", matrix_json(spec.state_set.a())}, {"b", vector_json(spec.state_set.b())}};
  j["U"] = {{"A", matrix_json(spec.input_set.a())}, {"b", vector_json(spec.input_set.b())}};
  if (spec.hessian != HessianConvention::kStageCost) j["hessian"] = to_string(spec.hessian);
  return j.dump(2);
}

HessianConvention parse_hessian_convention(const std::string& name) {
  if (name == "stage-cost") return HessianConvention::kStageCost;
  if (name == "half") return HessianConvention::kHalfHessian;
  fail(ErrorCode::kInvalidArgument, "unknown hessian convention '" + name + "' (stage-cost, half)");
}

std::string to_string(HessianConvention c) {
  return c == HessianConvention::kStageCost ? "stage-cost" : "half";
}

MpcSpec double_integrator_spec(int horizon) {
  MpcSpec spec;
  spec.sys.a = (Matrix(2, 2) << 1.0, 1.0, 0.0, 1.0).finished();
  spec.sys.b = (Matrix(2, 1) << 0.0, 1.0).finished();
  spec.horizon = horizon;
  spec.q.assign(static_cast<std::size_t>(horizon), Matrix::Identity(2, 2));
  spec.r.assign(static_cast<std::size_t>(horizon), Matrix::Constant(1, 1, 0.01));
  spec.state_set = Polytope::box(2, 10.0);
  spec.input_set = Polytope::box(1, 1.0);
  spec.validate();
  return spec;
}

}  // namespace bmpc
