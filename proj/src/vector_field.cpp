#include "fblup/vector_field.hpp"

#include <cmath>

#include "fblup/errors.hpp"

namespace fblup {

PolyVectorField::PolyVectorField(int ambient_dim)
    : components_(ambient_dim, Polynomial(ambient_dim)) {
  if (ambient_dim <= 0) throw InvalidInput("PolyVectorField: ambient_dim must be positive");
}

PolyVectorField::PolyVectorField(std::vector<Polynomial> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw InvalidInput("PolyVectorField: no components");
  for (const auto& p : components_)
    if (p.nvars() != ambient_dim())
      throw DimensionMismatch("PolyVectorField: component arity mismatch");
}

int PolyVectorField::degree() const {
  int deg = 0;
  for (const auto& p : components_) deg = std::max(deg, p.degree());
  return deg;
}

Eigen::VectorXd PolyVectorField::evaluate(const Eigen::VectorXd& y) const {
  Eigen::VectorXd v(ambient_dim());
  for (int i = 0; i < ambient_dim(); ++i) v[i] = components_[i].evaluate(y);
  return v;
}

Eigen::MatrixXd PolyVectorField::jacobian(const Eigen::VectorXd& y) const {
  const int n = ambient_dim();
  Eigen::MatrixXd j(n, n);
  for (int i = 0; i < n; ++i)
    for (int v = 0; v < n; ++v) j(i, v) = components_[i].derivative(v).evaluate(y);
  return j;
}

PolyVectorField PolyVectorField::extend(int extra) const {
  const int n = ambient_dim();
  std::vector<Polynomial> comps;
  comps.reserve(n + extra);
  for (const auto& p : components_) {
    Polynomial q(n + extra);
    for (const auto& [e, c] : p.terms()) {
      Polynomial::Exponents ext = e;
      ext.resize(n + extra, 0);
      q.add_term(ext, c);
    }
    comps.push_back(std::move(q));
  }
  for (int i = 0; i < extra; ++i) comps.emplace_back(Polynomial(n + extra));
  return PolyVectorField(std::move(comps));
}

PolyVectorField PolyVectorField::operator+(const PolyVectorField& other) const {
  if (ambient_dim() != other.ambient_dim())
    throw DimensionMismatch("PolyVectorField::+: ambient mismatch");
  std::vector<Polynomial> comps;
  comps.reserve(ambient_dim());
  for (int i = 0; i < ambient_dim(); ++i) comps.push_back(components_[i] + other.components_[i]);
  return PolyVectorField(std::move(comps));
}

PolyVectorField PolyVectorField::operator*(double s) const {
  std::vector<Polynomial> comps;
  comps.reserve(ambient_dim());
  for (const auto& p : components_) comps.push_back(p * s);
  return PolyVectorField(std::move(comps));
}

PolyVectorField bracket(const PolyVectorField& x, const PolyVectorField& y) {
  if (x.ambient_dim() != y.ambient_dim())
    throw DimensionMismatch("bracket: ambient mismatch");
  const int n = x.ambient_dim();
  std::vector<Polynomial> comps;
  comps.reserve(n);
  for (int l = 0; l < n; ++l) {
    Polynomial acc(n);
    for (int j = 0; j < n; ++j) {
      acc = acc + y.component(l).derivative(j) * x.component(j);
      acc = acc - x.component(l).derivative(j) * y.component(j);
    }
    comps.push_back(std::move(acc));
  }
  return PolyVectorField(std::move(comps));
}

double StructureTensor::antisymmetry_defect() const {
  double worst = 0.0;
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < k_; ++j)
      for (int l = 0; l < k_; ++l)
        worst = std::max(worst, std::abs(a_[idx(i, j, l)] + a_[idx(j, i, l)]));
  return worst;
}

Eigen::MatrixXd VectorFieldFamily::generator_jacobian(const Eigen::VectorXd& y, int i) const {
  const int n = ambient_dim();
  const double h = 1e-6;
  Eigen::MatrixXd j(n, n);
  for (int v = 0; v < n; ++v) {
    Eigen::VectorXd yp = y, ym = y;
    yp[v] += h;
    ym[v] -= h;
    j.col(v) = (eval_matrix(yp).col(i) - eval_matrix(ym).col(i)) / (2.0 * h);
  }
  return j;
}

double BumpFlowField::rho(double x) {
  if (std::abs(x) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - x * x));
}

double BumpFlowField::rho_prime(double x) {
  if (std::abs(x) >= 1.0) return 0.0;
  const double d = 1.0 - x * x;
  return rho(x) * (-2.0 * x / (d * d));
}

Eigen::MatrixXd BumpFlowField::eval_matrix(const Eigen::VectorXd& y) const {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = rho(y[0]);
  return m;
}

Eigen::MatrixXd BumpFlowField::generator_jacobian(const Eigen::VectorXd& y, int) const {
  Eigen::MatrixXd j(1, 1);
  j(0, 0) = rho_prime(y[0]);
  return j;
}

VectorFieldFamily::StructureFit BumpFlowField::structure_functions_at(const Eigen::VectorXd&) const {
  // One generator: [X, X] = 0, so all structure functions vanish.
  return {StructureTensor(1), 0.0};
}

PullbackFamily::PullbackFamily(std::shared_ptr<const VectorFieldFamily> base, int extra_dims)
    : base_(std::move(base)), extra_(extra_dims) {
  if (!base_) throw InvalidInput("PullbackFamily: null base");
  if (extra_ < 1) throw InvalidInput("PullbackFamily: extra_dims must be >= 1");
}

int PullbackFamily::ambient_dim() const { return base_->ambient_dim() + extra_; }
int PullbackFamily::num_generators() const { return base_->num_generators() + extra_; }

Eigen::MatrixXd PullbackFamily::eval_matrix(const Eigen::VectorXd& y) const {
  const int n = base_->ambient_dim();
  const int k = base_->num_generators();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + extra_, k + extra_);
  m.topLeftCorner(n, k) = base_->eval_matrix(y.head(n));
  m.bottomRightCorner(extra_, extra_).setIdentity();
  return m;
}

Eigen::MatrixXd PullbackFamily::generator_jacobian(const Eigen::VectorXd& y, int i) const {
  const int n = base_->ambient_dim();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n + extra_, n + extra_);
  if (i < base_->num_generators())
    j.topLeftCorner(n, n) = base_->generator_jacobian(y.head(n), i);
  return j;
}

VectorFieldFamily::StructureFit PullbackFamily::structure_functions_at(const Eigen::VectorXd& x) const {
  const int k = base_->num_generators();
  const int K = num_generators();
  StructureFit base_fit = base_->structure_functions_at(x.head(base_->ambient_dim()));
  StructureFit out{StructureTensor(K), base_fit.residual};
  // Extended generators bracket like the base ones; coordinate fields in the
  // auxiliary directions commute with everything.
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      for (int l = 0; l < k; ++l) out.tensor.set(i, j, l, base_fit.tensor(i, j, l));
  return out;
}

}  // namespace fblup
