#include "fblup/blowup.hpp"

#include <cmath>

#include "fblup/errors.hpp"
#include "fblup/rng.hpp"

namespace fblup {

BlowupFiberReport blowup_fiber(const VectorFieldFamily& family, const Eigen::VectorXd& x,
                               const BlowupConfig& cfg) {
  if (x.size() != family.ambient_dim())
    throw DimensionMismatch("blowup_fiber: basepoint dimension mismatch");
  if (cfg.directions.empty() && cfg.rays < 8)
    throw InvalidInput("blowup_fiber: need at least 8 rays");
  if (cfg.steps < 10) throw InvalidInput("blowup_fiber: need at least 10 steps");
  if (!(cfg.decay > 0.0 && cfg.decay < 1.0))
    throw InvalidInput("blowup_fiber: decay must lie in (0,1)");

  const int n = family.ambient_dim();

  std::vector<Eigen::VectorXd> directions = cfg.directions;
  if (directions.empty()) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 0xd1));
    directions.reserve(cfg.rays);
    for (int r = 0; r < cfg.rays; ++r) directions.push_back(unit_vector(rng, n));
  } else {
    for (auto& d : directions) {
      if (d.size() != n) throw DimensionMismatch("blowup_fiber: direction dimension mismatch");
      double nn = d.norm();
      if (nn < 1e-14) throw InvalidInput("blowup_fiber: zero ray direction");
      d /= nn;
    }
  }

  BlowupFiberReport report;
  report.base = x;
  report.rays_sampled = static_cast<int>(directions.size());

  std::vector<std::vector<Subspace>> tails;
  std::vector<int> tail_ray;  // originating ray per tail
  report.rays.resize(directions.size());

  for (std::size_t r = 0; r < directions.size(); ++r) {
    RayOutcome& ray = report.rays[r];
    ray.direction = directions[r];
    std::vector<Subspace> tail;
    for (int s = 1; s <= cfg.steps; ++s) {
      const double radius = cfg.initial_radius * std::pow(cfg.decay, s);
      const Eigen::VectorXd y = x + radius * directions[r];
      if (cfg.regular_only) {
        RegularTestResult reg =
            regular_test(family, y, cfg.regular_radius_factor * radius, cfg.regular_samples,
                         cfg.tol, derive_seed(cfg.seed, 0xab00 + r * cfg.steps + s));
        if (!reg.is_regular) continue;
      }
      tail.push_back(isotropy(family, y, cfg.tol));
    }
    ray.points_used = static_cast<int>(tail.size());
    if (tail.empty()) {
      ++report.rays_without_regular_points;
      continue;
    }
    tails.push_back(std::move(tail));
    tail_ray.push_back(static_cast<int>(r));
  }

  if (tails.empty()) {
    if (cfg.regular_only)
      throw NoRegularApproach("blowup_fiber: no ray contains regular points");
    return report;
  }

  ClusterReport clusters = limit_cluster(tails, cfg.conv_tol, cfg.cluster_tol);
  report.non_convergent_rays = clusters.non_convergent_tails;

  std::vector<int> cluster_first_ray(clusters.representatives.size(), -1);
  for (std::size_t t = 0; t < tails.size(); ++t) {
    RayOutcome& ray = report.rays[tail_ray[t]];
    ray.cluster = clusters.tail_to_cluster[t];
    ray.converged = ray.cluster >= 0;
    if (ray.converged && cluster_first_ray[ray.cluster] < 0)
      cluster_first_ray[ray.cluster] = tail_ray[t];
  }

  for (std::size_t c = 0; c < clusters.representatives.size(); ++c) {
    BlowupPoint p;
    p.base = x;
    p.subspace = clusters.representatives[c];
    if (cluster_first_ray[c] >= 0) p.direction_tag = directions[cluster_first_ray[c]];
    report.clusters.push_back(std::move(p));
  }

  report.property_report = verify_fiber_properties(family, x, report);
  return report;
}

FiberPropertyReport verify_fiber_properties(const VectorFieldFamily& family,
                                            const Eigen::VectorXd& x,
                                            const BlowupFiberReport& report, double tol) {
  FiberPropertyReport out;
  const Subspace iso = isotropy(family, x);
  out.containment_ok = true;
  for (const auto& cluster : report.clusters)
    if (!contains(iso, cluster.subspace, tol)) out.containment_ok = false;

  VectorFieldFamily::StructureFit fit = family.structure_functions_at(x);
  out.structure_residual = fit.residual;
  const int k = family.num_generators();
  double worst = 0.0;
  for (const auto& cluster : report.clusters) {
    const Eigen::MatrixXd& basis = cluster.subspace.basis();
    for (int a = 0; a < basis.cols(); ++a) {
      for (int b = 0; b < basis.cols(); ++b) {
        Eigen::VectorXd combo = Eigen::VectorXd::Zero(k);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j)
            for (int l = 0; l < k; ++l)
              combo[l] += basis(i, a) * basis(j, b) * fit.tensor(i, j, l);
        worst = std::max(worst, cluster.subspace.orthogonal_component(combo).norm());
      }
    }
  }
  out.subalgebra_residual = worst;
  return out;
}

Subspace algebroid_fiber(const VectorFieldFamily& family, const BlowupPoint& p) {
  if (p.subspace.ambient_dim() != family.num_generators())
    throw DimensionMismatch("algebroid_fiber: subspace not in generator coordinates");
  return annihilator(p.subspace);
}

std::vector<Subspace> characteristic_set(const VectorFieldFamily& family,
                                         const Eigen::VectorXd& /*x*/,
                                         const BlowupFiberReport& report) {
  std::vector<Subspace> out;
  out.reserve(report.clusters.size());
  for (const auto& cluster : report.clusters) {
    if (cluster.subspace.ambient_dim() != family.num_generators())
      throw DimensionMismatch("characteristic_set: subspace not in generator coordinates");
    out.push_back(annihilator(cluster.subspace));
  }
  return out;
}

namespace {

/// Drops the trailing `extra` coordinates of each basis vector and
/// re-orthonormalizes; valid because pullback kernels have no component in
/// the auxiliary coordinate fields.
Subspace project_out_auxiliary(const Subspace& v, int extra, double tol) {
  const int k = v.ambient_dim() - extra;
  if (v.dim() == 0) return Subspace::zero(k);
  Eigen::MatrixXd head = v.basis().topRows(k);
  return orthonormalize(head, tol);
}

}  // namespace

bool functoriality_check(const VectorFieldFamily& family, const Eigen::VectorXd& x, int extra_dims,
                         const FunctorialityOptions& opts) {
  if (extra_dims < 1) throw InvalidInput("functoriality_check: extra_dims must be >= 1");
  const int n = family.ambient_dim();

  BlowupConfig base_cfg = opts.fiber;
  if (base_cfg.directions.empty()) {
    std::mt19937_64 rng(derive_seed(base_cfg.seed, 0xfc));
    base_cfg.directions.reserve(base_cfg.rays);
    for (int r = 0; r < base_cfg.rays; ++r) base_cfg.directions.push_back(unit_vector(rng, n));
  }
  BlowupFiberReport base_report = blowup_fiber(family, x, base_cfg);

  // Lift every base direction into the product space, optionally tilted into
  // the auxiliary coordinates, so both fibers sample comparable approaches.
  PullbackFamily pulled(
      std::shared_ptr<const VectorFieldFamily>(&family, [](const VectorFieldFamily*) {}),
      extra_dims);
  BlowupConfig pull_cfg = opts.fiber;
  pull_cfg.directions.clear();
  std::mt19937_64 rng(derive_seed(opts.fiber.seed, 0xfd));
  for (const auto& v : base_cfg.directions) {
    for (double tilt : opts.tilts) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(n + extra_dims);
      w.head(n) = std::cos(tilt) * v;
      if (tilt != 0.0) w.tail(extra_dims) = std::sin(tilt) * unit_vector(rng, extra_dims);
      pull_cfg.directions.push_back(w);
    }
  }
  Eigen::VectorXd x_lift = Eigen::VectorXd::Zero(n + extra_dims);
  x_lift.head(n) = x;
  BlowupFiberReport pull_report = blowup_fiber(pulled, x_lift, pull_cfg);

  // Every projected pullback cluster must match a base cluster and vice versa.
  for (const auto& pc : pull_report.clusters) {
    // The auxiliary block of the kernel basis must vanish.
    if (pc.subspace.dim() > 0 &&
        pc.subspace.basis().bottomRows(extra_dims).norm() > opts.match_tol)
      return false;
    Subspace projected = project_out_auxiliary(pc.subspace, extra_dims, opts.fiber.tol);
    bool matched = false;
    for (const auto& bc : base_report.clusters)
      if (distance(projected, bc.subspace) < opts.match_tol) matched = true;
    if (!matched) return false;
  }
  for (const auto& bc : base_report.clusters) {
    bool matched = false;
    for (const auto& pc : pull_report.clusters) {
      Subspace projected = project_out_auxiliary(pc.subspace, extra_dims, opts.fiber.tol);
      if (distance(projected, bc.subspace) < opts.match_tol) matched = true;
    }
    if (!matched) return false;
  }
  return true;
}

}  // namespace fblup
