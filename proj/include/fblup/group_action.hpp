#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fblup/blowup.hpp"
#include "fblup/errors.hpp"
#include "fblup/foliation.hpp"
#include "fblup/periodic.hpp"
#include "fblup/subspace.hpp"

namespace fblup {

/// A matrix Lie algebra acting on R^n by X_i(x) = A_i x (+ b_i for affine
/// actions). Construction validates linear independence of the basis and
/// exact bracket closure, and stores the structure constants of the
/// commutator [A_i, A_j] = A_i A_j - A_j A_i = sum_l c_ij^l A_l.
class LieAlgebraAction {
 public:
  explicit LieAlgebraAction(std::vector<Eigen::MatrixXd> algebra_basis,
                            std::vector<Eigen::VectorXd> affine_parts = {});

  int ambient_dim() const { return n_; }
  int algebra_dim() const { return static_cast<int>(basis_.size()); }
  bool has_affine() const { return !affine_.empty(); }
  const Eigen::MatrixXd& basis_matrix(int i) const { return basis_[i]; }
  const Eigen::VectorXd& affine_part(int i) const { return affine_[i]; }
  const StructureTensor& structure_constants() const { return constants_; }

  /// sum_i w_i A_i.
  Eigen::MatrixXd algebra_element(const Eigen::VectorXd& coords) const;

  /// Least-squares coordinates of an n x n matrix in the algebra basis;
  /// throws NotInAlgebra when the residual exceeds tol.
  Eigen::VectorXd coordinates_of(const Eigen::MatrixXd& m, double tol = 1e-8) const;

  /// n x k anchor matrix at x: column i is A_i x + b_i.
  Eigen::MatrixXd anchor_matrix(const Eigen::VectorXd& x) const;

  /// exp(sum w_i A_i (+ b_i)) applied to y; exact via the matrix exponential
  /// (homogeneous embedding for affine parts).
  Eigen::VectorXd exp_apply(const Eigen::VectorXd& coords, const Eigen::VectorXd& y) const;

  /// The induced polynomial foliation with generators X_i(x) = A_i x + b_i.
  FoliationModule induced_foliation() const;

 private:
  int n_ = 0;
  std::vector<Eigen::MatrixXd> basis_;
  std::vector<Eigen::VectorXd> affine_;
  StructureTensor constants_;
  Eigen::MatrixXd vec_basis_;  // n^2 x k, for coordinate extraction
};

/// Kernel of the anchor at x, in algebra coordinates.
Subspace isotropy_subalgebra(const LieAlgebraAction& act, const Eigen::VectorXd& x,
                             double tol = 1e-8);

/// Blow-up fiber of the action at x via the induced foliation.
BlowupFiberReport blowup_fiber_action(const LieAlgebraAction& act, const Eigen::VectorXd& x,
                                      const BlowupConfig& cfg = {});

/// Pushes the subspace V (algebra coordinates) through Ad(g): each basis
/// element W maps to g W g^{-1}, re-expressed in the algebra basis.
Subspace adjoint_transport(const LieAlgebraAction& act, const Eigen::MatrixXd& g,
                           const Subspace& v, double tol = 1e-8);

/// One arrow of the blow-up groupoid: the class of (g exp(V), x).
/// Representatives g and g exp(w), w in V, denote the same arrow; equality
/// must go through coset_equal, never through matrix comparison.
struct GroupoidElement {
  Eigen::MatrixXd g;
  Subspace v;
  Eigen::VectorXd x;
};

GroupoidElement unit_element(const BlowupPoint& p);
BlowupPoint source(const GroupoidElement& gamma);
BlowupPoint target(const LieAlgebraAction& act, const GroupoidElement& gamma);

/// (g1 exp(Ad(g2) V), g2 x) * (g2 exp(V), x) = (g1 g2 exp(V), x).
/// Throws NotComposable when target(gamma2) does not match source(gamma1)
/// within match_tol.
GroupoidElement compose(const LieAlgebraAction& act, const GroupoidElement& gamma1,
                        const GroupoidElement& gamma2, double match_tol = 1e-8);

GroupoidElement inverse_element(const LieAlgebraAction& act, const GroupoidElement& gamma);

/// Lemma-style local membership: when h is in the certified log chart and
/// ||log h|| < eta2, decides log(h) in V; otherwise Inconclusive.
Decision local_log_membership(const LieAlgebraAction& act, const Eigen::MatrixXd& h,
                              const Subspace& v, double eta2, double tol = 1e-9);

/// Semi-decision of coset equality g1 exp(V) = g2 exp(V): conclusive local
/// log where possible, otherwise up to 50 projected-descent reduction steps
/// within exp(V). Throws InvalidInput when the two arrows do not share
/// (V, x) within match_tol.
Decision coset_equal(const LieAlgebraAction& act, const GroupoidElement& gamma1,
                     const GroupoidElement& gamma2, double tol = 1e-8,
                     double match_tol = 1e-6);

/// Upper-bound estimator of the groupoid quotient metric:
/// d_M(x, y) + d_Grass(V, W) + min pairwise Frobenius distance between
/// sampled coset point clouds {g exp(w)}, w in V scaled in [0, 1].
double groupoid_metric(const LieAlgebraAction& act, const GroupoidElement& gamma1,
                       const GroupoidElement& gamma2, int sample_count = 64,
                       std::uint64_t seed = 3);

/// Periodic bounding constant search over a compact box (optionally
/// filtered): witnesses are (y, Y) with exp(Y) y = y within return_tol and
/// direction away from the isotropy.
PeriodicBoundResult periodic_bound(const LieAlgebraAction& act, const PeriodicBoundConfig& cfg);

struct EmbeddingConfig {
  double ball_radius = 0.1;
  int transversal_samples = 10;
  int perturbed_checks = 4;   // nearby (W, y) re-checks drawn from fiber rays
  double tol = 1e-8;          // coset equality tolerance
  double separation_tol = 1e-7;  // metric threshold for inconclusive pairs
  int metric_samples = 64;
  std::uint64_t seed = 5;
  /// Optional explicit transversal coordinates (in the annihilator chart).
  std::vector<Eigen::VectorXd> explicit_points;
};

struct EmbeddingReport {
  bool ok = true;
  int pairs_checked = 0;
  int collisions = 0;
  int inconclusive = 0;
};

/// Checks local injectivity of X -> exp(X) exp(V) on a transversal ball:
/// distinct transversal samples must map to distinct cosets. Inconclusive
/// pairs are reported, not counted as collisions.
EmbeddingReport embedding_check(const LieAlgebraAction& act, const BlowupPoint& p,
                                const BlowupFiberReport* fiber, const EmbeddingConfig& cfg);

struct ClosedSubgroupConfig {
  int words = 4000;
  int max_word_length = 12;
  double coeff_scale = 1.0;
  double tol = 1e-8;
  double eta2 = 0.5;
  std::uint64_t seed = 11;
};

struct ClosedSubgroupReport {
  bool ok = true;
  int words_sampled = 0;
  int words_in_chart = 0;
  int violations = 0;
};

/// Samples words exp(w_1)...exp(w_m) with w_i in V; every word landing in
/// the certified log chart must have its log inside V. A violation exhibits
/// non-closed behavior (dense-winding style).
ClosedSubgroupReport closed_subgroup_check(const LieAlgebraAction& act, const Subspace& v,
                                           const ClosedSubgroupConfig& cfg);

}  // namespace fblup
