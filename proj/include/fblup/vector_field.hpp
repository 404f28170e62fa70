#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "fblup/polynomial.hpp"

namespace fblup {

/// Vector field on R^n with polynomial components.
class PolyVectorField {
 public:
  explicit PolyVectorField(int ambient_dim);
  explicit PolyVectorField(std::vector<Polynomial> components);

  int ambient_dim() const { return static_cast<int>(components_.size()); }
  const Polynomial& component(int i) const { return components_[i]; }
  Polynomial& component(int i) { return components_[i]; }
  const std::vector<Polynomial>& components() const { return components_; }

  int degree() const;
  Eigen::VectorXd evaluate(const Eigen::VectorXd& y) const;
  /// Jacobian matrix (d component_i / d y_j) at y.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& y) const;

  /// Constant extension to R^{n+extra}: same components, extra zero slots.
  PolyVectorField extend(int extra) const;

  PolyVectorField operator+(const PolyVectorField& other) const;
  PolyVectorField operator*(double s) const;

 private:
  std::vector<Polynomial> components_;
};

/// Lie bracket of vector fields with the convention
///   [X, Y] = (DY) X - (DX) Y,
/// computed exactly in polynomial arithmetic.
PolyVectorField bracket(const PolyVectorField& x, const PolyVectorField& y);

/// Antisymmetric k x k x k tensor of structure functions/constants,
/// c(i,j,l) giving the l-th coefficient of the bracket of generators i and j.
class StructureTensor {
 public:
  explicit StructureTensor(int k = 0) : k_(k), a_(static_cast<std::size_t>(k) * k * k, 0.0) {}
  int size() const { return k_; }
  double operator()(int i, int j, int l) const { return a_[idx(i, j, l)]; }
  void set(int i, int j, int l, double v) {
    a_[idx(i, j, l)] = v;
    a_[idx(j, i, l)] = -v;
  }
  /// max |c(i,j,l) + c(j,i,l)|, zero by construction.
  double antisymmetry_defect() const;

 private:
  std::size_t idx(int i, int j, int l) const {
    return (static_cast<std::size_t>(i) * k_ + j) * k_ + l;
  }
  int k_;
  std::vector<double> a_;
};

/// A finite ordered family of vector fields on R^n: the minimal interface the
/// blow-up and holonomy machinery needs. Implementations must be pure and
/// safe for concurrent evaluation.
class VectorFieldFamily {
 public:
  virtual ~VectorFieldFamily() = default;

  virtual int ambient_dim() const = 0;
  virtual int num_generators() const = 0;
  /// n x k matrix whose column i is generator i evaluated at y.
  virtual Eigen::MatrixXd eval_matrix(const Eigen::VectorXd& y) const = 0;
  /// Jacobian of generator i at y. Default: central finite differences.
  virtual Eigen::MatrixXd generator_jacobian(const Eigen::VectorXd& y, int i) const;

  /// Structure functions at x: f with [X_i, X_j] = sum_l f_ij^l X_l near x,
  /// together with the relative collocation residual.
  struct StructureFit {
    StructureTensor tensor;
    double residual = 0.0;
  };
  virtual StructureFit structure_functions_at(const Eigen::VectorXd& x) const = 0;
};

/// Smooth one-generator flow family on R: rho(x) d/dx with
/// rho(x) = exp(-1/(1-x^2)) on (-1,1) and 0 outside.
class BumpFlowField final : public VectorFieldFamily {
 public:
  int ambient_dim() const override { return 1; }
  int num_generators() const override { return 1; }
  Eigen::MatrixXd eval_matrix(const Eigen::VectorXd& y) const override;
  Eigen::MatrixXd generator_jacobian(const Eigen::VectorXd& y, int i) const override;
  StructureFit structure_functions_at(const Eigen::VectorXd& x) const override;

  static double rho(double x);
  static double rho_prime(double x);
};

/// Pullback of a family along the projection R^{n+m} -> R^n: the constant
/// extensions of the base generators followed by the m coordinate fields in
/// the auxiliary directions.
class PullbackFamily final : public VectorFieldFamily {
 public:
  PullbackFamily(std::shared_ptr<const VectorFieldFamily> base, int extra_dims);

  int ambient_dim() const override;
  int num_generators() const override;
  Eigen::MatrixXd eval_matrix(const Eigen::VectorXd& y) const override;
  Eigen::MatrixXd generator_jacobian(const Eigen::VectorXd& y, int i) const override;
  StructureFit structure_functions_at(const Eigen::VectorXd& x) const override;

  const VectorFieldFamily& base() const { return *base_; }
  int extra_dims() const { return extra_; }

 private:
  std::shared_ptr<const VectorFieldFamily> base_;
  int extra_;
};

}  // namespace fblup
