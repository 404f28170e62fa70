#include "fblup/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace fblup {

namespace {

void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

void append_double(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
  // Keep a syntactic marker that the value is floating point.
  if (out.find_first_of(".eE", out.size() - std::strlen(buf)) == std::string::npos) out += ".0";
}

void dump_rec(std::string& out, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent) * depth, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        append_escaped(out, it.key());
        out += ": ";
        dump_rec(out, it.value(), indent, depth + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        dump_rec(out, item, indent, depth + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::string:
      append_escaped(out, j.get<std::string>());
      return;
    case Json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      return;
    case Json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      return;
    case Json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      return;
    case Json::value_t::number_float:
      append_double(out, j.get<double>());
      return;
    default:
      out += "null";
      return;
  }
}

}  // namespace

std::string dump_deterministic(const Json& j, int indent) {
  std::string out;
  dump_rec(out, j, indent, 0);
  out += "\n";
  return out;
}

Json to_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Json to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidInput("vector_from_json: expected an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidInput("vector_from_json: expected numbers");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw InvalidInput("matrix_from_json: expected a row array");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw InvalidInput("matrix_from_json: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<int>(r), static_cast<int>(c)) = j[r][c].get<double>();
  }
  return m;
}

Json to_json(const Subspace& s) {
  Json j;
  j["ambient"] = s.ambient_dim();
  Json cols = Json::array();
  for (int c = 0; c < s.dim(); ++c) cols.push_back(to_json(Eigen::VectorXd(s.basis().col(c))));
  j["basis"] = std::move(cols);
  return j;
}

Subspace subspace_from_json(const Json& j) {
  if (!j.contains("ambient") || !j.contains("basis"))
    throw InvalidInput("subspace_from_json: missing 'ambient' or 'basis'");
  const int ambient = j["ambient"].get<int>();
  const auto& cols = j["basis"];
  Eigen::MatrixXd basis(ambient, static_cast<int>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    Eigen::VectorXd col = vector_from_json(cols[c]);
    if (col.size() != ambient) throw InvalidInput("subspace_from_json: column size mismatch");
    basis.col(static_cast<int>(c)) = col;
  }
  return Subspace(ambient, std::move(basis));
}

Json to_json(const FoliationModule& f) {
  Json j;
  j["n"] = f.ambient_dim();
  Json gens = Json::array();
  for (int g = 0; g < f.num_generators(); ++g) {
    Json comps = Json::array();
    for (int c = 0; c < f.ambient_dim(); ++c) {
      Json terms = Json::array();
      for (const auto& [e, coeff] : f.generator(g).component(c).terms()) {
        Json term;
        term["exponents"] = e;
        term["coeff"] = coeff;
        terms.push_back(std::move(term));
      }
      comps.push_back(std::move(terms));
    }
    Json gen;
    gen["components"] = std::move(comps);
    gens.push_back(std::move(gen));
  }
  j["generators"] = std::move(gens);
  j["coeff_degree"] = f.coeff_degree();
  return j;
}

FoliationModule foliation_from_json(const Json& j) {
  if (!j.contains("n") || !j.contains("generators"))
    throw InvalidInput("foliation_from_json: missing 'n' or 'generators'");
  const int n = j["n"].get<int>();
  if (n <= 0) throw InvalidInput("foliation_from_json: n must be positive");
  std::vector<PolyVectorField> gens;
  for (const auto& gj : j["generators"]) {
    if (!gj.contains("components") || !gj["components"].is_array() ||
        gj["components"].size() != static_cast<std::size_t>(n))
      throw InvalidInput("foliation_from_json: each generator needs n component term lists");
    PolyVectorField field(n);
    for (int c = 0; c < n; ++c) {
      Polynomial p(n);
      for (const auto& term : gj["components"][c]) {
        if (!term.contains("exponents") || !term.contains("coeff"))
          throw InvalidInput("foliation_from_json: term needs 'exponents' and 'coeff'");
        std::vector<int> e = term["exponents"].get<std::vector<int>>();
        if (static_cast<int>(e.size()) != n)
          throw InvalidInput("foliation_from_json: exponent arity mismatch");
        p.add_term(e, term["coeff"].get<double>());
      }
      field.component(c) = std::move(p);
    }
    gens.push_back(std::move(field));
  }
  const int degree = j.contains("coeff_degree") ? j["coeff_degree"].get<int>() : 2;
  return FoliationModule(std::move(gens), degree);
}

Json to_json(const LieAlgebraAction& a) {
  Json j;
  j["n"] = a.ambient_dim();
  Json basis = Json::array();
  for (int i = 0; i < a.algebra_dim(); ++i) basis.push_back(to_json(a.basis_matrix(i)));
  j["basis"] = std::move(basis);
  if (a.has_affine()) {
    Json aff = Json::array();
    for (int i = 0; i < a.algebra_dim(); ++i) aff.push_back(to_json(a.affine_part(i)));
    j["affine"] = std::move(aff);
  } else {
    j["affine"] = nullptr;
  }
  return j;
}

LieAlgebraAction action_from_json(const Json& j) {
  if (!j.contains("n") || !j.contains("basis"))
    throw InvalidInput("action_from_json: missing 'n' or 'basis'");
  const int n = j["n"].get<int>();
  std::vector<Eigen::MatrixXd> basis;
  for (const auto& bj : j["basis"]) {
    Eigen::MatrixXd m = matrix_from_json(bj);
    if (m.rows() != n || m.cols() != n)
      throw InvalidInput("action_from_json: basis matrices must be n x n");
    basis.push_back(std::move(m));
  }
  std::vector<Eigen::VectorXd> affine;
  if (j.contains("affine") && !j["affine"].is_null()) {
    for (const auto& aj : j["affine"]) {
      Eigen::VectorXd b = vector_from_json(aj);
      if (b.size() != n) throw InvalidInput("action_from_json: affine parts must have size n");
      affine.push_back(std::move(b));
    }
  }
  return LieAlgebraAction(std::move(basis), std::move(affine));
}

}  // namespace fblup
