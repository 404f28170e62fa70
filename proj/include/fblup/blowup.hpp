#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fblup/foliation.hpp"
#include "fblup/subspace.hpp"

namespace fblup {

struct BlowupConfig {
  int rays = 64;
  double decay = 0.5;           // geometric radius factor per step, in (0,1)
  int steps = 40;               // points per ray
  double initial_radius = 0.5;  // radius of the first ray point
  double tol = 1e-8;            // rank tolerance for kernels
  double conv_tol = 1e-7;
  double cluster_tol = 1e-3;
  bool regular_only = true;     // false: admit non-regular sample points
  int regular_samples = 8;
  double regular_radius_factor = 0.1;  // regularity probe ball, relative to ray radius
  std::uint64_t seed = 1;
  /// When non-empty, overrides the random unit directions.
  std::vector<Eigen::VectorXd> directions;
};

struct RayOutcome {
  Eigen::VectorXd direction;
  bool converged = false;
  int points_used = 0;
  int cluster = -1;  // index into clusters, -1 if none
};

struct FiberPropertyReport {
  bool containment_ok = false;
  double subalgebra_residual = 0.0;
  double structure_residual = 0.0;
};

/// Sampled under-approximation of the blow-up fiber at a basepoint: one
/// representative subspace per detected limit cluster plus per-ray
/// diagnostics. Clusters are pairwise at least cluster_tol apart.
struct BlowupFiberReport {
  Eigen::VectorXd base;
  std::vector<BlowupPoint> clusters;
  int rays_sampled = 0;
  int non_convergent_rays = 0;
  int rays_without_regular_points = 0;
  std::vector<RayOutcome> rays;
  std::optional<FiberPropertyReport> property_report;
};

/// Computes the blow-up fiber at x by following geometric-decay rays and
/// clustering the Grassmannian limits of the generator-coordinate kernels.
/// Throws NoRegularApproach when regular_only is set and no ray contains a
/// single regular point.
BlowupFiberReport blowup_fiber(const VectorFieldFamily& family, const Eigen::VectorXd& x,
                               const BlowupConfig& cfg = {});

/// Containment V <= isotropy(x) and the worst distance of structure-constant
/// combinations of cluster basis vectors from their cluster (the subalgebra
/// check). Propagates NotBracketClosed from the structure-function fit.
FiberPropertyReport verify_fiber_properties(const VectorFieldFamily& family,
                                            const Eigen::VectorXd& x,
                                            const BlowupFiberReport& report, double tol = 1e-6);

/// Canonical complement model of the algebroid fiber at a blow-up point:
/// the annihilator of V inside R^k, of dimension k - dim V.
Subspace algebroid_fiber(const VectorFieldFamily& family, const BlowupPoint& p);

/// Annihilators of the fiber clusters inside the dual of R^k.
std::vector<Subspace> characteristic_set(const VectorFieldFamily& family,
                                         const Eigen::VectorXd& x,
                                         const BlowupFiberReport& report);

struct FunctorialityOptions {
  BlowupConfig fiber;
  double match_tol = 1e-3;
  /// Tilt angles applied to lifted ray directions in the auxiliary
  /// coordinates, exercising approach rays that leave the base slice.
  std::vector<double> tilts = {0.0, 0.35};
};

/// Verifies that the blow-up fiber of the pullback along R^{n+m} -> R^n at
/// (x, 0) projects onto the fiber at x and vice versa. Base rays and pullback
/// rays are coordinated: each base direction is lifted (with optional tilts)
/// so the two sampled under-approximations are comparable.
bool functoriality_check(const VectorFieldFamily& family, const Eigen::VectorXd& x, int extra_dims,
                         const FunctorialityOptions& opts = {});

}  // namespace fblup
