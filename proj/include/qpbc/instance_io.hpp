#pragma once

// Instance files: JSON with a dense row-major objective matrix, inequality
// rows, and optional equality rows that are stored internally as paired
// inequalities.

#include <fstream>
#include <json.hpp>
#include <optional>
#include <string>

#include "qpbc/model.hpp"

namespace qpbc {

struct InstanceFile {
  std::string name;
  MatrixXd Q;
  VectorXd c;
  MatrixXd A;
  VectorXd b;
  std::optional<MatrixXd> E;
  std::optional<VectorXd> f;
  std::optional<double> known_optimum;

  QpInstance to_instance() const {
    QpInstance inst;
    inst.Q = SymMatrix::from_dense(Q);
    inst.c = c;
    inst.name = name;
    inst.known_optimum = known_optimum;
    const int me = E ? static_cast<int>(E->rows()) : 0;
    inst.polytope.A = MatrixXd(A.rows() + 2 * me, A.cols());
    inst.polytope.b = VectorXd(b.size() + 2 * me);
    inst.polytope.A.topRows(A.rows()) = A;
    inst.polytope.b.head(b.size()) = b;
    if (me > 0) {
      inst.polytope.A.middleRows(A.rows(), me) = *E;
      inst.polytope.b.segment(b.size(), me) = *f;
      inst.polytope.A.bottomRows(me) = -*E;
      inst.polytope.b.tail(me) = -*f;
    }
    inst.validate();
    return inst;
  }
};

namespace detail {

inline nlohmann::json matrix_to_json(const MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MatrixXd matrix_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw std::invalid_argument(std::string("instance: ") + what + " must be a 2-d array");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw std::invalid_argument(std::string("instance: ragged rows in ") + what);
    for (int k = 0; k < cols; ++k) M(i, k) = j[i][k].get<double>();
  }
  if (!M.allFinite())
    throw std::invalid_argument(std::string("instance: non-finite entries in ") + what);
  return M;
}

inline VectorXd vector_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array())
    throw std::invalid_argument(std::string("instance: ") + what + " must be an array");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  if (!v.allFinite())
    throw std::invalid_argument(std::string("instance: non-finite entries in ") + what);
  return v;
}

}  // namespace detail

inline nlohmann::json to_json(const InstanceFile& f) {
  nlohmann::json j;
  j["name"] = f.name;
  j["n"] = f.c.size();
  j["Q"] = detail::matrix_to_json(f.Q);
  nlohmann::json c = nlohmann::json::array();
  for (int i = 0; i < f.c.size(); ++i) c.push_back(f.c[i]);
  j["c"] = std::move(c);
  j["A"] = detail::matrix_to_json(f.A);
  nlohmann::json b = nlohmann::json::array();
  for (int i = 0; i < f.b.size(); ++i) b.push_back(f.b[i]);
  j["b"] = std::move(b);
  if (f.E) {
    j["equalities"]["E"] = detail::matrix_to_json(*f.E);
    nlohmann::json fv = nlohmann::json::array();
    for (int i = 0; i < f.f->size(); ++i) fv.push_back((*f.f)[i]);
    j["equalities"]["f"] = std::move(fv);
  }
  if (f.known_optimum) j["known_optimum"] = *f.known_optimum;
  return j;
}

inline InstanceFile instance_from_json(const nlohmann::json& j) {
  InstanceFile f;
  f.name = j.value("name", "unnamed");
  const int n = j.at("n").get<int>();
  f.Q = detail::matrix_from_json(j.at("Q"), "Q");
  if (f.Q.rows() != n || f.Q.cols() != n)
    throw std::invalid_argument("instance: Q must be n x n");
  if ((f.Q - f.Q.transpose()).cwiseAbs().maxCoeff() > tol::input_sym)
    throw std::invalid_argument("instance: Q is not symmetric");
  f.c = detail::vector_from_json(j.at("c"), "c");
  if (f.c.size() != n) throw std::invalid_argument("instance: c must have length n");
  f.A = detail::matrix_from_json(j.at("A"), "A");
  if (f.A.cols() != n) throw std::invalid_argument("instance: A must have n columns");
  f.b = detail::vector_from_json(j.at("b"), "b");
  if (f.b.size() != f.A.rows()) throw std::invalid_argument("instance: b length mismatch");
  if (j.contains("equalities")) {
    f.E = detail::matrix_from_json(j.at("equalities").at("E"), "E");
    f.f = detail::vector_from_json(j.at("equalities").at("f"), "f");
    if (f.E->cols() != n || f.f->size() != f.E->rows())
      throw std::invalid_argument("instance: equality dimensions mismatch");
  }
  if (j.contains("known_optimum") && !j.at("known_optimum").is_null())
    f.known_optimum = j.at("known_optimum").get<double>();
  return f;
}

inline InstanceFile read_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open instance file: " + path);
  nlohmann::json j;
  in >> j;
  return instance_from_json(j);
}

inline void write_instance_file(const InstanceFile& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write instance file: " + path);
  out << to_json(f).dump(2) << "\n";
}

}  // namespace qpbc
