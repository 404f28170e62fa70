#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fblup/foliation.hpp"
#include "fblup/periodic.hpp"
#include "fblup/subspace.hpp"

namespace fblup {

struct FlowConfig {
  int initial_steps = 16;
  double tol = 1e-10;        // step-halving convergence target
  int max_steps = 1 << 20;
  double escape_norm = 1e6;  // FlowEscape beyond this state norm
};

/// Unit-time RK4 flow of z' = sum_i t_i X_i(z) from y, refined by step
/// halving until two consecutive resolutions agree below cfg.tol.
Eigen::VectorXd flow(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& t, const FlowConfig& cfg = {});

/// Jacobian of the flow endpoint in the parameters t (n x k), via the
/// augmented variational ODE.
Eigen::MatrixXd flow_jacobian_t(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& t, const FlowConfig& cfg = {});

/// Jacobian of the flow endpoint in the starting point (n x n).
Eigen::MatrixXd flow_jacobian_y(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& t, const FlowConfig& cfg = {});

/// The canonical chart around a basepoint: source (y, t) -> y, range
/// (y, t) -> flow of sum t_i X_i from y. Minimal when the generator count
/// matches the fiber dimension at the basepoint (caller-asserted).
struct BiSubmersionChart {
  const VectorFieldFamily* family = nullptr;
  Eigen::VectorXd base;
  double radius = 0.5;
  FlowConfig integ;

  Eigen::VectorXd range(const Eigen::VectorXd& y, const Eigen::VectorXd& t) const {
    return flow(*family, y, t, integ);
  }
};

struct LeafConfig {
  double tol = 1e-6;            // kernel/membership tolerance
  CollocationConfig colloc;     // generator fit near the basepoint
  FlowConfig integ;
};

/// The leaf distribution at u = (y, t): directions tau in the kernel of the
/// parameter Jacobian whose source-side class lies in V. V must be contained
/// in the generator-coordinate isotropy at y. Returned in tau coordinates.
Subspace leaf_distribution(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& t, const Subspace& v,
                           const LeafConfig& cfg = {});

/// Range-side transport of V across u = (y, t): the span of the range-side
/// classes of the distribution directions. For group actions this is Ad of
/// the chart element.
Subspace leaf_transport(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& t, const Subspace& v,
                        const LeafConfig& cfg = {});

/// Exact reference for sign and normalization of the leaf distribution: the
/// tangent of g exp(V) at g in left trivialization is V itself.
Subspace group_leaf_oracle(const Subspace& v);

struct TraceConfig {
  int steps = 200;
  double step_size = 1e-2;
  double r_tol = 1e-6;       // allowed range drift along the trace
  LeafConfig leaf;
  std::uint64_t seed = 23;   // initial direction choice inside the distribution
};

struct LeafTrace {
  std::vector<Eigen::VectorXd> t_points;
  std::vector<double> r_residuals;  // ||range(point) - range(start)||
};

/// Traces an integral path of the leaf distribution inside the source fiber
/// {y} x R^k by projected Euler steps with range re-projection. The range
/// must stay constant along the trace; rank changes raise RankDrop.
LeafTrace leaf_trace(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& t0, const Subspace& v, const TraceConfig& cfg = {});

/// Dimension of the blow-up groupoid fiber over a blow-up point: the
/// generator count minus the leaf-distribution dimension at (x, 0), which
/// equals k - dim V.
int groupoid_fiber_dim(const VectorFieldFamily& family, const BlowupPoint& p,
                       const LeafConfig& cfg = {});

/// Flow-based periodic bounding search: witnesses are (y, t) with
/// flow(y, t) = y within return_tol and anchor value away from zero.
PeriodicBoundResult periodic_bound_flow(const VectorFieldFamily& family,
                                        const PeriodicBoundConfig& cfg,
                                        const FlowConfig& integ = {});

}  // namespace fblup
