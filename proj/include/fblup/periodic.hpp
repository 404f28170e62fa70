#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "fblup/subspace.hpp"

namespace fblup {

/// Grid-and-refine search for the periodic bounding constant: the smallest
/// norm of a coordinate vector w outside the isotropy whose exponential or
/// flow returns the basepoint.
struct PeriodicBoundConfig {
  Eigen::VectorXd box_lo;
  Eigen::VectorXd box_hi;
  int grid_per_dim = 5;
  int directions = 128;
  int scale_steps = 160;
  double t_max = 12.0;
  double return_tol = 1e-6;
  /// Residual level at which a scanned minimum is promoted to accurate
  /// refinement; 0 means return_tol (exact appliers).
  double promote_tol = 0.0;
  int max_accurate_refines = 64;
  std::uint64_t seed = 7;
  /// Optional subset predicate on grid points (annulus and friends).
  std::function<bool(const Eigen::VectorXd&)> keep;
  bool refine_directions = true;
  int direction_polish_rounds = 60;
};

struct PeriodicWitness {
  Eigen::VectorXd point;
  Eigen::VectorXd coords;  // algebra/generator coordinates, norm = witness norm
  double norm = 0.0;
  double return_residual = 0.0;
  double direction_defect = 0.0;  // isotropy-direction defect at the witness
};

struct PeriodicBoundResult {
  double eta_hat = 0.0;     // min witness norm, or t_max when none found
  double scale_step = 0.0;  // scan resolution backing the estimate
  int grid_points = 0;
  int directions = 0;
  std::vector<PeriodicWitness> witnesses;  // sorted by norm
};

/// The abstract search problem. `apply` moves a point by a coordinate vector
/// (cheap, used for scanning); `apply_accurate` (same semantics, higher
/// accuracy) certifies witnesses and defaults to `apply`. `direction_defect`
/// measures how far the witness direction is from the isotropy at the point;
/// witnesses require defect > 10 * return_tol.
struct PeriodicSearchProblem {
  int point_dim = 0;
  int coord_dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& w, const Eigen::VectorXd& y)> apply;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& w, const Eigen::VectorXd& y)> apply_accurate;
  std::function<double(const Eigen::VectorXd& y, const Eigen::VectorXd& coords)> direction_defect;
};

PeriodicBoundResult periodic_bound_search(const PeriodicSearchProblem& problem,
                                          const PeriodicBoundConfig& cfg);

}  // namespace fblup
