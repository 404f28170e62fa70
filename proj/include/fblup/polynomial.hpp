#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "fblup/errors.hpp"

namespace fblup {

/// Multivariate real polynomial stored as a map from exponent vectors to
/// coefficients. Adequate at desk scale (few variables, low degree); exact
/// under ring operations up to floating-point rounding of the coefficients.
class Polynomial {
 public:
  using Exponents = std::vector<int>;

  explicit Polynomial(int nvars = 0) : nvars_(nvars) {}

  static Polynomial constant(int nvars, double c);
  /// The coordinate monomial x_i.
  static Polynomial variable(int nvars, int i);

  int nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;

  /// Adds c * x^exponents.
  void add_term(const Exponents& exponents, double c);
  double coefficient(const Exponents& exponents) const;

  double evaluate(const Eigen::VectorXd& x) const;
  Polynomial derivative(int var) const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator*(double s) const;
  Polynomial operator-() const { return *this * -1.0; }

  const std::map<Exponents, double>& terms() const { return terms_; }

 private:
  int nvars_;
  std::map<Exponents, double> terms_;
};

/// Enumerates all exponent vectors in `nvars` variables of total degree
/// <= max_degree, in a fixed deterministic order (graded lexicographic).
std::vector<Polynomial::Exponents> monomials_up_to_degree(int nvars, int max_degree);

}  // namespace fblup
