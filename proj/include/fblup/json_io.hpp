#pragma once

#include <string>

#include <json.hpp>

#include "fblup/foliation.hpp"
#include "fblup/group_action.hpp"
#include "fblup/subspace.hpp"

namespace fblup {

using Json = nlohmann::ordered_json;

/// Deterministic serialization: stable key order (insertion order) and all
/// floating-point numbers rendered with 17 significant digits, so identical
/// trees produce byte-identical text.
std::string dump_deterministic(const Json& j, int indent = 2);

Json to_json(const Eigen::VectorXd& v);
Json to_json(const Eigen::MatrixXd& m);  // list of rows
Eigen::VectorXd vector_from_json(const Json& j);
Eigen::MatrixXd matrix_from_json(const Json& j);

/// {"ambient": d, "basis": [basis columns]}
Json to_json(const Subspace& s);
Subspace subspace_from_json(const Json& j);

/// {"n": ..., "generators": [{"components": [[term...] x n]}], "coeff_degree": ...}
/// with term = {"exponents": [...], "coeff": ...}
Json to_json(const FoliationModule& f);
FoliationModule foliation_from_json(const Json& j);

/// {"n": ..., "basis": [matrix...], "affine": [vector...] | null}
Json to_json(const LieAlgebraAction& a);
LieAlgebraAction action_from_json(const Json& j);

}  // namespace fblup
