#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fblup/subspace.hpp"
#include "fblup/vector_field.hpp"

namespace fblup {

/// Collocation configuration for fitting coefficient functions in the
/// generators of a family near a basepoint.
struct CollocationConfig {
  int degree = 2;          // polynomial ansatz degree in (y - x)
  double radius = 0.05;    // sampling radius around the basepoint
  int samples = 0;         // 0: choose 4 * #monomials * k automatically
  double rank_tol = 1e-10; // relative SVD threshold of the collocation system
  std::uint64_t seed = 17;
};

/// Constant terms of the fitted coefficient functions plus the worst relative
/// collocation error over the sample set.
struct GeneratorFit {
  Eigen::VectorXd constant_terms;
  double residual = 0.0;
};

/// Solves rhs(y_s) = sum_i f_i(y_s) X_i(y_s) in least squares over samples
/// y_s near x, with each f_i a polynomial of degree <= cfg.degree in (y - x).
GeneratorFit fit_in_generators(const VectorFieldFamily& family, const Eigen::VectorXd& x,
                               const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& rhs,
                               const CollocationConfig& cfg = {});

/// Data-driven variant over precomputed sample points and right-hand values.
/// When generator_points is supplied, the generators are evaluated there
/// instead of at the sample points (the ansatz stays in (sample - x)).
GeneratorFit fit_in_generators_data(const VectorFieldFamily& family, const Eigen::VectorXd& x,
                                    const std::vector<Eigen::VectorXd>& sample_points,
                                    const std::vector<Eigen::VectorXd>& rhs_values,
                                    const CollocationConfig& cfg,
                                    const std::vector<Eigen::VectorXd>* generator_points = nullptr);

/// Deterministic collocation sample points in the ball B(x, cfg.radius).
std::vector<Eigen::VectorXd> collocation_points(const VectorFieldFamily& family,
                                                const Eigen::VectorXd& x,
                                                const CollocationConfig& cfg);

/// A singular foliation presented by polynomial vector-field generators.
/// Bracket closure is a checked property (see check_bracket_closure), not a
/// construction-time assumption.
class FoliationModule final : public VectorFieldFamily {
 public:
  FoliationModule(std::vector<PolyVectorField> generators, int coeff_degree = 2);

  int ambient_dim() const override { return ambient_; }
  int num_generators() const override { return static_cast<int>(generators_.size()); }
  int coeff_degree() const { return coeff_degree_; }
  const PolyVectorField& generator(int i) const { return generators_[i]; }
  const std::vector<PolyVectorField>& generators() const { return generators_; }

  Eigen::MatrixXd eval_matrix(const Eigen::VectorXd& y) const override;
  Eigen::MatrixXd generator_jacobian(const Eigen::VectorXd& y, int i) const override;

  /// Structure functions at x by collocation least squares; throws
  /// NotBracketClosed when the residual exceeds the configured tolerance.
  StructureFit structure_functions_at(const Eigen::VectorXd& x) const override;
  StructureFit structure_functions_at(const Eigen::VectorXd& x, const CollocationConfig& cfg,
                                      double tol = 1e-6) const;

  /// Pullback along the projection R^{n+m} -> R^n as a polynomial module:
  /// constant extensions of the generators followed by the coordinate fields.
  FoliationModule pullback(int extra_dims) const;

 private:
  int ambient_;
  int coeff_degree_;
  std::vector<PolyVectorField> generators_;
  std::vector<PolyVectorField> brackets_;  // precomputed [X_i, X_j], i < j
  const PolyVectorField& bracket_of(int i, int j) const;
};

/// Isotropy fiber at x in generator coordinates: the kernel of the evaluation
/// matrix. When the generators are minimal at x this is the isotropy Lie
/// algebra; in general it is the generator-chart preimage of it.
Subspace isotropy(const VectorFieldFamily& family, const Eigen::VectorXd& x, double tol = 1e-8);

/// Pointwise span of the generator values at x.
Subspace tangent_fiber(const VectorFieldFamily& family, const Eigen::VectorXd& x, double tol = 1e-8);

struct RegularTestResult {
  bool is_regular = false;
  int dim_tangent = 0;
  int dim_isotropy = 0;
};

/// Samples the ball B(x, radius) and reports whether the pointwise tangent
/// dimension is constant across x and all samples.
RegularTestResult regular_test(const VectorFieldFamily& family, const Eigen::VectorXd& x,
                               double radius, int samples, double tol = 1e-8,
                               std::uint64_t seed = 2024);

/// A point of the blown-up space: basepoint x together with a subspace of the
/// generator-coordinate space R^k, optionally tagged with the approach ray.
struct BlowupPoint {
  Eigen::VectorXd base;
  Subspace subspace;
  std::optional<Eigen::VectorXd> direction_tag;
};

/// Checks the bracket-closure surrogate at the given probe points: structure
/// functions must fit with residual below tol at each of them.
void check_bracket_closure(const FoliationModule& f, const std::vector<Eigen::VectorXd>& probes,
                           double tol = 1e-6);

}  // namespace fblup
