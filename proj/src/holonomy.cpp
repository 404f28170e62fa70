#include "fblup/holonomy.hpp"

#include <cmath>

#include "fblup/errors.hpp"
#include "fblup/rng.hpp"

namespace fblup {

namespace {

/// One RK4 pass at fixed step count over the augmented state
/// (z, dz/dy, dz/dt); the Jacobian blocks are integrated only when requested.
struct AugmentedState {
  Eigen::VectorXd z;
  Eigen::MatrixXd my;  // n x n
  Eigen::MatrixXd mt;  // n x k
};

AugmentedState rk4_pass(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& t, int steps, double escape_norm,
                        bool want_jacobians) {
  const int n = family.ambient_dim();
  const int k = family.num_generators();
  AugmentedState s;
  s.z = y;
  if (want_jacobians) {
    s.my = Eigen::MatrixXd::Identity(n, n);
    s.mt = Eigen::MatrixXd::Zero(n, k);
  }

  auto combined_jacobian = [&](const Eigen::VectorXd& z) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < k; ++i)
      if (t[i] != 0.0) j += t[i] * family.generator_jacobian(z, i);
    return j;
  };

  auto derivative = [&](const AugmentedState& st) {
    AugmentedState d;
    const Eigen::MatrixXd ev = family.eval_matrix(st.z);
    d.z = ev * t;
    if (want_jacobians) {
      const Eigen::MatrixXd j = combined_jacobian(st.z);
      d.my = j * st.my;
      d.mt = j * st.mt + ev;
    }
    return d;
  };

  auto advance = [&](const AugmentedState& st, const AugmentedState& d, double h) {
    AugmentedState out;
    out.z = st.z + h * d.z;
    if (want_jacobians) {
      out.my = st.my + h * d.my;
      out.mt = st.mt + h * d.mt;
    }
    return out;
  };

  const double h = 1.0 / steps;
  for (int step = 0; step < steps; ++step) {
    AugmentedState k1 = derivative(s);
    AugmentedState k2 = derivative(advance(s, k1, 0.5 * h));
    AugmentedState k3 = derivative(advance(s, k2, 0.5 * h));
    AugmentedState k4 = derivative(advance(s, k3, h));
    s.z += (h / 6.0) * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z);
    if (want_jacobians) {
      s.my += (h / 6.0) * (k1.my + 2.0 * k2.my + 2.0 * k3.my + k4.my);
      s.mt += (h / 6.0) * (k1.mt + 2.0 * k2.mt + 2.0 * k3.mt + k4.mt);
    }
    if (s.z.norm() > escape_norm) throw FlowEscape("flow: state norm exceeded escape bound");
  }
  return s;
}

AugmentedState refined_flow(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& t, const FlowConfig& cfg,
                            bool want_jacobians) {
  if (y.size() != family.ambient_dim())
    throw DimensionMismatch("flow: point dimension mismatch");
  if (t.size() != family.num_generators())
    throw DimensionMismatch("flow: parameter dimension mismatch");
  int steps = cfg.initial_steps;
  AugmentedState prev = rk4_pass(family, y, t, steps, cfg.escape_norm, want_jacobians);
  while (2 * steps <= cfg.max_steps) {
    steps *= 2;
    AugmentedState next = rk4_pass(family, y, t, steps, cfg.escape_norm, want_jacobians);
    double diff = (next.z - prev.z).norm();
    if (want_jacobians) diff = std::max(diff, (next.mt - prev.mt).norm());
    prev = next;
    if (diff < cfg.tol) break;
  }
  return prev;
}

}  // namespace

Eigen::VectorXd flow(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& t, const FlowConfig& cfg) {
  return refined_flow(family, y, t, cfg, false).z;
}

Eigen::MatrixXd flow_jacobian_t(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& t, const FlowConfig& cfg) {
  return refined_flow(family, y, t, cfg, true).mt;
}

Eigen::MatrixXd flow_jacobian_y(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& t, const FlowConfig& cfg) {
  return refined_flow(family, y, t, cfg, true).my;
}

Subspace group_leaf_oracle(const Subspace& v) { return v; }

namespace {

void require_leaf_preconditions(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                                const Subspace& v, double tol) {
  if (v.ambient_dim() != family.num_generators())
    throw DimensionMismatch("leaf_distribution: V not in generator coordinates");
  if (!contains(isotropy(family, y, tol), v, std::max(1e-5, 10.0 * tol)))
    throw InvalidInput("leaf_distribution: V is not contained in the isotropy at y");
}

struct ClassData {
  Subspace kernel_dirs;      // K0 inside R^k
  Eigen::MatrixXd source_classes;  // k x dim(K0): c_s per kernel direction
  double worst_residual = 0.0;
};

/// Kernel directions of the parameter Jacobian together with their
/// source-side classes in generator coordinates.
ClassData source_class_map(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& t, const LeafConfig& cfg) {
  ClassData out;
  const Eigen::MatrixXd a = flow_jacobian_t(family, y, t, cfg.integ);
  out.kernel_dirs = kernel(a, 1e-8);
  const int k0 = out.kernel_dirs.dim();
  const int k = family.num_generators();
  out.source_classes.resize(k, k0);
  if (k0 == 0) return out;

  if (t.norm() < 1e-14) {
    // At the chart center the class map is the identity on kernel directions.
    out.source_classes = out.kernel_dirs.basis();
    return out;
  }

  // Sample points near y once; per sample, solve the chart linearization for
  // the source-side velocity of each kernel direction.
  std::vector<Eigen::VectorXd> pts = collocation_points(family, y, cfg.colloc);
  const int nsamples = static_cast<int>(pts.size());
  std::vector<Eigen::MatrixXd> velocities(nsamples);  // n x k0 per sample
  for (int s = 0; s < nsamples; ++s) {
    AugmentedState st = refined_flow(family, pts[s], t, cfg.integ, true);
    velocities[s] = st.my.partialPivLu().solve(st.mt * out.kernel_dirs.basis());
  }

  std::vector<Eigen::VectorXd> values(nsamples);
  for (int b = 0; b < k0; ++b) {
    for (int s = 0; s < nsamples; ++s) values[s] = velocities[s].col(b);
    GeneratorFit fit = fit_in_generators_data(family, y, pts, values, cfg.colloc);
    if (fit.residual > cfg.tol)
      throw ClassUnresolved("leaf_distribution: collocation residual " +
                            std::to_string(fit.residual));
    out.worst_residual = std::max(out.worst_residual, fit.residual);
    out.source_classes.col(b) = fit.constant_terms;
  }
  return out;
}

}  // namespace

Subspace leaf_distribution(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& t, const Subspace& v, const LeafConfig& cfg) {
  require_leaf_preconditions(family, y, v, cfg.tol);
  ClassData data = source_class_map(family, y, t, cfg);
  const int k0 = data.kernel_dirs.dim();
  if (k0 == 0) return Subspace::zero(family.num_generators());

  // Directions whose class lands inside V: kernel of (I - P_V) C in the
  // coefficient space of K0.
  Eigen::MatrixXd residual_map = data.source_classes;
  if (v.dim() > 0) residual_map -= v.projector() * data.source_classes;
  Subspace coeffs = kernel(residual_map, std::max(cfg.tol, 1e-8));
  if (coeffs.dim() == 0) return Subspace::zero(family.num_generators());
  return orthonormalize(data.kernel_dirs.basis() * coeffs.basis(), 1e-10);
}

Subspace leaf_transport(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& t, const Subspace& v, const LeafConfig& cfg) {
  Subspace dist = leaf_distribution(family, y, t, v, cfg);
  const int k = family.num_generators();
  if (dist.dim() == 0) return Subspace::zero(k);

  if (t.norm() < 1e-14) return dist;  // range-side class map is also the identity

  // Range-side class of each distribution direction: express the range
  // velocity field in the generators evaluated at the flowed points.
  std::vector<Eigen::VectorXd> pts = collocation_points(family, y, cfg.colloc);
  const int nsamples = static_cast<int>(pts.size());
  std::vector<Eigen::VectorXd> flowed(nsamples);
  std::vector<Eigen::MatrixXd> velocities(nsamples);  // n x dim per sample
  for (int s = 0; s < nsamples; ++s) {
    AugmentedState st = refined_flow(family, pts[s], t, cfg.integ, true);
    flowed[s] = st.z;
    velocities[s] = st.mt * dist.basis();
  }

  Eigen::MatrixXd classes(k, dist.dim());
  std::vector<Eigen::VectorXd> values(nsamples);
  for (int b = 0; b < dist.dim(); ++b) {
    for (int s = 0; s < nsamples; ++s) values[s] = velocities[s].col(b);
    GeneratorFit fit = fit_in_generators_data(family, y, pts, values, cfg.colloc, &flowed);
    if (fit.residual > cfg.tol)
      throw ClassUnresolved("leaf_transport: collocation residual " +
                            std::to_string(fit.residual));
    classes.col(b) = fit.constant_terms;
  }
  return orthonormalize(classes, 1e-8);
}

LeafTrace leaf_trace(const VectorFieldFamily& family, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& t0, const Subspace& v, const TraceConfig& cfg) {
  require_leaf_preconditions(family, y, v, cfg.leaf.tol);
  LeafTrace trace;
  Eigen::VectorXd t = t0;
  const Eigen::VectorXd r0 = flow(family, y, t0, cfg.leaf.integ);

  Subspace dist = leaf_distribution(family, y, t, v, cfg.leaf);
  const int dim0 = dist.dim();
  trace.t_points.push_back(t);
  trace.r_residuals.push_back(0.0);
  if (dim0 == 0) return trace;  // zero distribution: singleton trace

  std::mt19937_64 rng(cfg.seed);
  Eigen::VectorXd dir = dist.basis() * unit_vector(rng, dim0);

  for (int step = 0; step < cfg.steps; ++step) {
    Eigen::VectorXd t_next = t + cfg.step_size * dir;
    // Newton re-projection onto the range level set; the min-norm correction
    // is orthogonal to the kernel directions and so does not undo the step.
    for (int newton = 0; newton < 3; ++newton) {
      Eigen::VectorXd res = flow(family, y, t_next, cfg.leaf.integ) - r0;
      if (res.norm() < 0.05 * cfg.r_tol) break;
      Eigen::MatrixXd a = flow_jacobian_t(family, y, t_next, cfg.leaf.integ);
      Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
      svd.setThreshold(1e-10);
      t_next -= svd.solve(res);
    }
    Subspace dist_next = leaf_distribution(family, y, t_next, v, cfg.leaf);
    if (dist_next.dim() != dim0)
      throw RankDrop("leaf_trace: distribution rank changed at step " + std::to_string(step) +
                     " (dim " + std::to_string(dist_next.dim()) + " vs " + std::to_string(dim0) +
                     ")");
    Eigen::VectorXd projected = dist_next.projector() * dir;
    if (projected.norm() < 0.1)
      throw RankDrop("leaf_trace: direction lost under re-projection at step " +
                     std::to_string(step));
    dir = projected.normalized();
    t = t_next;
    trace.t_points.push_back(t);
    trace.r_residuals.push_back((flow(family, y, t, cfg.leaf.integ) - r0).norm());
  }
  return trace;
}

int groupoid_fiber_dim(const VectorFieldFamily& family, const BlowupPoint& p,
                       const LeafConfig& cfg) {
  Eigen::VectorXd t0 = Eigen::VectorXd::Zero(family.num_generators());
  Subspace dist = leaf_distribution(family, p.base, t0, p.subspace, cfg);
  return family.num_generators() - dist.dim();
}

PeriodicBoundResult periodic_bound_flow(const VectorFieldFamily& family,
                                        const PeriodicBoundConfig& cfg, const FlowConfig& integ) {
  PeriodicSearchProblem problem;
  problem.point_dim = family.ambient_dim();
  problem.coord_dim = family.num_generators();
  FlowConfig coarse = integ;
  coarse.initial_steps = std::max(32, integ.initial_steps);
  coarse.max_steps = coarse.initial_steps;  // single fixed-resolution pass
  problem.apply = [&family, coarse](const Eigen::VectorXd& w, const Eigen::VectorXd& y) {
    return flow(family, y, w, coarse);
  };
  problem.apply_accurate = [&family, integ](const Eigen::VectorXd& w, const Eigen::VectorXd& y) {
    return flow(family, y, w, integ);
  };
  problem.direction_defect = [&family](const Eigen::VectorXd& y, const Eigen::VectorXd& coords) {
    return (family.eval_matrix(y) * coords).norm();
  };
  PeriodicBoundConfig search = cfg;
  if (search.promote_tol <= 0.0) search.promote_tol = 1e-2;
  return periodic_bound_search(problem, search);
}

}  // namespace fblup
