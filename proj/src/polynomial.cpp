#include "fblup/polynomial.hpp"

#include <cmath>
#include <numeric>

namespace fblup {

Polynomial Polynomial::constant(int nvars, double c) {
  Polynomial p(nvars);
  p.add_term(Exponents(nvars, 0), c);
  return p;
}

Polynomial Polynomial::variable(int nvars, int i) {
  if (i < 0 || i >= nvars) throw InvalidInput("Polynomial::variable: index out of range");
  Polynomial p(nvars);
  Exponents e(nvars, 0);
  e[i] = 1;
  p.add_term(e, 1.0);
  return p;
}

int Polynomial::degree() const {
  int deg = 0;
  for (const auto& [e, c] : terms_)
    deg = std::max(deg, std::accumulate(e.begin(), e.end(), 0));
  return deg;
}

void Polynomial::add_term(const Exponents& exponents, double c) {
  if (static_cast<int>(exponents.size()) != nvars_)
    throw DimensionMismatch("Polynomial::add_term: exponent arity mismatch");
  if (!std::isfinite(c)) throw InvalidInput("Polynomial::add_term: non-finite coefficient");
  if (c == 0.0) return;
  auto it = terms_.find(exponents);
  if (it == terms_.end()) {
    terms_.emplace(exponents, c);
  } else {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::coefficient(const Exponents& exponents) const {
  auto it = terms_.find(exponents);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::evaluate(const Eigen::VectorXd& x) const {
  if (x.size() != nvars_) throw DimensionMismatch("Polynomial::evaluate: arity mismatch");
  double acc = 0.0;
  for (const auto& [e, c] : terms_) {
    double term = c;
    for (int i = 0; i < nvars_; ++i)
      for (int p = 0; p < e[i]; ++p) term *= x[i];
    acc += term;
  }
  return acc;
}

Polynomial Polynomial::derivative(int var) const {
  if (var < 0 || var >= nvars_) throw InvalidInput("Polynomial::derivative: index out of range");
  Polynomial out(nvars_);
  for (const auto& [e, c] : terms_) {
    if (e[var] == 0) continue;
    Exponents d = e;
    d[var] -= 1;
    out.add_term(d, c * static_cast<double>(e[var]));
  }
  return out;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  if (nvars_ != other.nvars_) throw DimensionMismatch("Polynomial::+: arity mismatch");
  Polynomial out = *this;
  for (const auto& [e, c] : other.terms_) out.add_term(e, c);
  return out;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
  if (nvars_ != other.nvars_) throw DimensionMismatch("Polynomial::-: arity mismatch");
  Polynomial out = *this;
  for (const auto& [e, c] : other.terms_) out.add_term(e, -c);
  return out;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  if (nvars_ != other.nvars_) throw DimensionMismatch("Polynomial::*: arity mismatch");
  Polynomial out(nvars_);
  for (const auto& [ea, ca] : terms_) {
    for (const auto& [eb, cb] : other.terms_) {
      Exponents e(nvars_);
      for (int i = 0; i < nvars_; ++i) e[i] = ea[i] + eb[i];
      out.add_term(e, ca * cb);
    }
  }
  return out;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial out(nvars_);
  if (s == 0.0) return out;
  for (const auto& [e, c] : terms_) out.add_term(e, c * s);
  return out;
}

std::vector<Polynomial::Exponents> monomials_up_to_degree(int nvars, int max_degree) {
  std::vector<Polynomial::Exponents> out;
  Polynomial::Exponents cur(nvars, 0);
  // Graded enumeration: degree 0, 1, ..., max_degree.
  for (int deg = 0; deg <= max_degree; ++deg) {
    // Enumerate compositions of deg into nvars parts, lexicographically.
    std::vector<int> comp(nvars, 0);
    if (nvars == 0) {
      if (deg == 0) out.push_back(cur);
      continue;
    }
    comp[0] = deg;
    while (true) {
      out.push_back(comp);
      // next composition
      int i = nvars - 2;
      while (i >= 0 && comp[i] == 0) --i;
      if (i < 0) break;
      comp[i] -= 1;
      int rest = deg;
      for (int j = 0; j <= i; ++j) rest -= comp[j];
      comp[i + 1] = rest;
      for (int j = i + 2; j < nvars; ++j) comp[j] = 0;
    }
  }
  return out;
}

}  // namespace fblup
