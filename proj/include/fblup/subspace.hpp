#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fblup/errors.hpp"

namespace fblup {

/// A point of a Grassmannian: a linear subspace of R^d stored as a d x m
/// matrix with orthonormal columns. The zero subspace (m = 0) is valid.
/// Values are immutable after construction and safe to share across threads.
class Subspace {
 public:
  /// The zero subspace of the zero-dimensional space; useful as a
  /// placeholder before assignment.
  Subspace() : ambient_dim_(0), basis_(0, 0) {}

  /// Wraps an already-orthonormal basis. Throws InvalidInput if the columns
  /// are not orthonormal to 1e-12 or contain non-finite entries.
  Subspace(int ambient_dim, Eigen::MatrixXd basis);

  /// The zero subspace of R^d.
  static Subspace zero(int ambient_dim);

  /// The full space R^d.
  static Subspace full(int ambient_dim);

  /// Span of the given coordinate axes.
  static Subspace coordinate_span(int ambient_dim, const std::vector<int>& axes);

  int ambient_dim() const { return ambient_dim_; }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Eigen::MatrixXd& basis() const { return basis_; }

  /// Orthogonal projector onto the subspace (d x d).
  Eigen::MatrixXd projector() const;

  /// Component of v orthogonal to the subspace.
  Eigen::VectorXd orthogonal_component(const Eigen::VectorXd& v) const;

 private:
  int ambient_dim_;
  Eigen::MatrixXd basis_;  // d x m, orthonormal columns
};

/// Orthonormalizes the column span of `raw`, dropping numerically
/// rank-deficient directions at the relative threshold `tol`.
Subspace orthonormalize(const Eigen::MatrixXd& raw, double tol = 1e-8);

/// Right nullspace of `m` at relative singular-value threshold `tol`
/// (absolute when the matrix is zero). Ambient dimension is cols(m).
/// Columns are equilibrated to unit norm before the rank cut, which keeps
/// exact kernels detectable when column scales diverge along a limit.
Subspace kernel(const Eigen::MatrixXd& m, double tol = 1e-8);

/// Span of the columns of `m`, with the same equilibrated rank decision as
/// kernel (rank + kernel dimension = number of columns always holds).
Subspace column_span(const Eigen::MatrixXd& m, double tol = 1e-8);

/// Frobenius distance between orthogonal projectors. A metric on subspaces of
/// fixed dimension; subspaces of different dimension are at distance >= 1.
double distance(const Subspace& v, const Subspace& w);

/// Whether w is contained in v: ||(I - P_v) basis(w)||_F <= tol.
bool contains(const Subspace& v, const Subspace& w, double tol = 1e-8);

/// Orthogonal complement.
Subspace annihilator(const Subspace& v);

/// Outcome of the Cauchy-tail detection for one subspace sequence.
struct TailLimit {
  bool converged = false;
  std::optional<Subspace> representative;  // set iff converged
  int length = 0;                          // points inspected
};

/// Detects whether `seq` has a stabilized tail: the trailing successive
/// distances are < conv_tol and the dimension is constant on that tail.
/// Returns the last element as representative when it does.
TailLimit tail_limit(const std::vector<Subspace>& seq, double conv_tol);

struct ClusterReport {
  std::vector<Subspace> representatives;  // pairwise >= cluster_tol apart
  int convergent_tails = 0;
  int non_convergent_tails = 0;
  /// representative index per tail, -1 when the tail did not converge
  std::vector<int> tail_to_cluster;
};

/// Collapses the limits of several subspace sequences ("tails") into cluster
/// representatives separated by at least cluster_tol. Tails that do not
/// stabilize are counted, never silently dropped. Throws InvalidInput when
/// no tails are supplied or conv_tol >= cluster_tol.
ClusterReport limit_cluster(const std::vector<std::vector<Subspace>>& tails,
                            double conv_tol, double cluster_tol);

/// Single-sequence convenience wrapper: one tail.
ClusterReport limit_cluster(const std::vector<Subspace>& seq, double conv_tol,
                            double cluster_tol);

}  // namespace fblup
