#include <doctest.h>

#include <random>

#include "fblup/blowup.hpp"
#include "fblup/group_action.hpp"
#include "fblup/rng.hpp"

using namespace fblup;

namespace {

LieAlgebraAction sl2_action() {
  Eigen::MatrixXd h(2, 2), e(2, 2), f(2, 2);
  h << 1, 0, 0, -1;
  e << 0, 1, 0, 0;
  f << 0, 0, 1, 0;
  return LieAlgebraAction({h, e, f});
}

// Exact isotropy of the sl2 action at direction v, in (H, E, F) coordinates:
// span{(v1 v2, -v1^2, v2^2)}.
Subspace sl2_direction_isotropy(const Eigen::Vector2d& v) {
  Eigen::MatrixXd b(3, 1);
  b << v[0] * v[1], -v[0] * v[0], v[1] * v[1];
  return orthonormalize(b, 1e-12);
}

FoliationModule vanish_origin_module() {
  std::vector<PolyVectorField> gens;
  for (int comp = 0; comp < 2; ++comp)
    for (int var = 0; var < 2; ++var) {
      PolyVectorField f(2);
      f.component(comp) = Polynomial::variable(2, var);
      gens.push_back(std::move(f));
    }
  return FoliationModule(std::move(gens), 0);
}

// Exact fiber cluster of the vanishing module along direction v:
// {L : L v = 0} in (x d/dx, y d/dx, x d/dy, y d/dy) coordinates.
Subspace vanish_direction_cluster(const Eigen::Vector2d& v) {
  Eigen::MatrixXd b(4, 2);
  b << -v[1], 0,
        v[0], 0,
        0, -v[1],
        0, v[0];
  return orthonormalize(b, 1e-12);
}

FoliationModule regular_module() {
  PolyVectorField dx(2);
  dx.component(0) = Polynomial::constant(2, 1.0);
  return FoliationModule({dx}, 0);
}

BlowupConfig bump_config() {
  BlowupConfig cfg;
  cfg.rays = 8;
  cfg.decay = 0.8;
  cfg.steps = 28;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("regular module has the single zero cluster everywhere") {
  FoliationModule f = regular_module();
  BlowupConfig cfg;
  cfg.rays = 12;
  BlowupFiberReport rep = blowup_fiber(f, Eigen::Vector2d(0.4, -1.2), cfg);
  REQUIRE(rep.clusters.size() == 1);
  CHECK(rep.clusters[0].subspace.dim() == 0);
  CHECK(rep.non_convergent_rays == 0);
  REQUIRE(rep.property_report.has_value());
  CHECK(rep.property_report->containment_ok);
  CHECK(rep.property_report->subalgebra_residual < 1e-12);
}

TEST_CASE("sl2 fiber at the origin matches the direction isotropies per ray") {
  FoliationModule f = sl2_action().induced_foliation();
  BlowupConfig cfg;
  cfg.rays = 16;
  cfg.seed = 21;
  BlowupFiberReport rep = blowup_fiber(f, Eigen::Vector2d::Zero(), cfg);
  CHECK(rep.non_convergent_rays == 0);
  for (const auto& ray : rep.rays) {
    REQUIRE(ray.converged);
    const Subspace& limit = rep.clusters[ray.cluster].subspace;
    CHECK(limit.dim() == 1);
    CHECK(distance(limit, sl2_direction_isotropy(ray.direction)) < 1e-6);
  }
  REQUIRE(rep.property_report.has_value());
  CHECK(rep.property_report->containment_ok);
  CHECK(rep.property_report->subalgebra_residual < 1e-5);
}

TEST_CASE("sl2 fiber at a regular point is its isotropy") {
  FoliationModule f = sl2_action().induced_foliation();
  Eigen::Vector2d x(1.0, 0.3);
  BlowupConfig cfg;
  cfg.rays = 12;
  BlowupFiberReport rep = blowup_fiber(f, x, cfg);
  REQUIRE(rep.clusters.size() == 1);
  CHECK(distance(rep.clusters[0].subspace, isotropy(f, x)) < 1e-6);
  CHECK(rep.non_convergent_rays == 0);
}

TEST_CASE("bump fiber table across the support boundary") {
  BumpFlowField bump;
  auto dims_at = [&](double x) {
    Eigen::VectorXd p(1);
    p << x;
    BlowupFiberReport rep = blowup_fiber(bump, p, bump_config());
    std::vector<int> dims;
    for (const auto& c : rep.clusters) dims.push_back(c.subspace.dim());
    std::sort(dims.begin(), dims.end());
    return dims;
  };
  CHECK(dims_at(0.0) == std::vector<int>{0});
  CHECK(dims_at(1.0) == std::vector<int>{0, 1});
  CHECK(dims_at(-1.0) == std::vector<int>{0, 1});
  CHECK(dims_at(1.5) == std::vector<int>{1});
  CHECK(dims_at(-1.5) == std::vector<int>{1});
}

TEST_CASE("vanishing module fiber at the origin matches the kernel description") {
  FoliationModule f = vanish_origin_module();
  BlowupConfig cfg;
  cfg.rays = 16;
  cfg.seed = 9;
  BlowupFiberReport rep = blowup_fiber(f, Eigen::Vector2d::Zero(), cfg);
  CHECK(rep.non_convergent_rays == 0);
  for (const auto& ray : rep.rays) {
    REQUIRE(ray.converged);
    const Subspace& limit = rep.clusters[ray.cluster].subspace;
    CHECK(limit.dim() == 2);
    CHECK(distance(limit, vanish_direction_cluster(ray.direction)) < 1e-6);
  }
  REQUIRE(rep.property_report.has_value());
  CHECK(rep.property_report->containment_ok);
  CHECK(rep.property_report->subalgebra_residual < 1e-6);
}

TEST_CASE("fiber report clusters are pairwise separated") {
  FoliationModule f = sl2_action().induced_foliation();
  BlowupConfig cfg;
  cfg.rays = 24;
  cfg.seed = 33;
  BlowupFiberReport rep = blowup_fiber(f, Eigen::Vector2d::Zero(), cfg);
  for (std::size_t a = 0; a < rep.clusters.size(); ++a)
    for (std::size_t b = a + 1; b < rep.clusters.size(); ++b)
      CHECK(distance(rep.clusters[a].subspace, rep.clusters[b].subspace) >= cfg.cluster_tol);
}

TEST_CASE("fiber is invariant under rescaling the initial radius") {
  FoliationModule f = sl2_action().induced_foliation();
  std::mt19937_64 rng(51);
  BlowupConfig base;
  base.rays = 6;
  for (int r = 0; r < 6; ++r) base.directions.push_back(unit_vector(rng, 2));
  BlowupFiberReport ref = blowup_fiber(f, Eigen::Vector2d::Zero(), base);
  for (double scale : {0.1, 0.5, 2.0, 10.0}) {
    BlowupConfig cfg = base;
    cfg.initial_radius = 0.5 * scale;
    BlowupFiberReport rep = blowup_fiber(f, Eigen::Vector2d::Zero(), cfg);
    REQUIRE(rep.clusters.size() == ref.clusters.size());
    for (const auto& c : ref.clusters) {
      double best = 1e9;
      for (const auto& d : rep.clusters)
        best = std::min(best, distance(c.subspace, d.subspace));
      CHECK(best < 1e-6);
    }
  }
}

TEST_CASE("no regular approach raises on an everywhere-singular ray") {
  // Vertical ray of the pulled-back vanishing module: every sample point has
  // a non-constant tangent dimension in any ball.
  FoliationModule pulled = vanish_origin_module().pullback(1);
  BlowupConfig cfg;
  Eigen::VectorXd vertical = Eigen::VectorXd::Zero(3);
  vertical[2] = 1.0;
  cfg.directions = {vertical};
  CHECK_THROWS_AS(blowup_fiber(pulled, Eigen::VectorXd::Zero(3), cfg), NoRegularApproach);
}

TEST_CASE("config preconditions are enforced") {
  FoliationModule f = regular_module();
  BlowupConfig too_few_rays;
  too_few_rays.rays = 4;
  CHECK_THROWS_AS(blowup_fiber(f, Eigen::Vector2d::Zero(), too_few_rays), InvalidInput);
  BlowupConfig too_few_steps;
  too_few_steps.steps = 5;
  CHECK_THROWS_AS(blowup_fiber(f, Eigen::Vector2d::Zero(), too_few_steps), InvalidInput);
}

TEST_CASE("algebroid fiber is the annihilator complement") {
  FoliationModule f = sl2_action().induced_foliation();
  BlowupPoint zero{Eigen::Vector2d::Zero(), Subspace::zero(3), std::nullopt};
  CHECK(algebroid_fiber(f, zero).dim() == 3);

  BlowupPoint line{Eigen::Vector2d::Zero(), sl2_direction_isotropy({1.0, 0.0}), std::nullopt};
  Subspace fiber = algebroid_fiber(f, line);
  CHECK(fiber.dim() == 2);
  CHECK(distance(fiber, annihilator(line.subspace)) < 1e-12);

  // At a regular point with V the isotropy, the complement models the
  // pointwise tangent span: dimensions agree by rank-nullity.
  Eigen::Vector2d x(0.8, -0.1);
  BlowupPoint reg{x, isotropy(f, x), std::nullopt};
  CHECK(algebroid_fiber(f, reg).dim() == tangent_fiber(f, x).dim());
}

TEST_CASE("characteristic set collects annihilators of the clusters") {
  FoliationModule reg = regular_module();
  BlowupConfig cfg;
  cfg.rays = 12;
  BlowupFiberReport rep = blowup_fiber(reg, Eigen::Vector2d(0.2, 0.2), cfg);
  auto ann = characteristic_set(reg, Eigen::Vector2d(0.2, 0.2), rep);
  REQUIRE(ann.size() == 1);
  CHECK(ann[0].dim() == reg.num_generators());  // full dual at a regular point

  BumpFlowField bump;
  Eigen::VectorXd one(1);
  one << 1.0;
  BlowupFiberReport bump_rep = blowup_fiber(bump, one, bump_config());
  auto bump_ann = characteristic_set(bump, one, bump_rep);
  REQUIRE(bump_ann.size() == 2);
  std::vector<int> dims = {bump_ann[0].dim(), bump_ann[1].dim()};
  std::sort(dims.begin(), dims.end());
  CHECK(dims == std::vector<int>{0, 1});

  FoliationModule sl2 = sl2_action().induced_foliation();
  BlowupConfig scfg;
  scfg.rays = 8;
  scfg.seed = 77;
  BlowupFiberReport srep = blowup_fiber(sl2, Eigen::Vector2d::Zero(), scfg);
  for (const auto& a : characteristic_set(sl2, Eigen::Vector2d::Zero(), srep))
    CHECK(a.dim() == 2);
}

TEST_CASE("regular annihilators approach the characteristic set along rays") {
  // Along a convergent ray toward a regular basepoint, the annihilator of the
  // kernel approaches the fiber's characteristic representative monotonically
  // (up to 10 percent noise).
  FoliationModule f = sl2_action().induced_foliation();
  Eigen::Vector2d x(0.9, 0.4);
  BlowupConfig cfg;
  cfg.rays = 8;
  cfg.seed = 10;
  BlowupFiberReport rep = blowup_fiber(f, x, cfg);
  REQUIRE(rep.clusters.size() == 1);
  Subspace target = annihilator(rep.clusters[0].subspace);
  Eigen::Vector2d v = rep.rays[0].direction;
  double previous = 1e18;
  for (int s = 1; s <= 20; ++s) {
    Eigen::Vector2d y = x + std::pow(0.5, s) * 0.5 * v;
    double h = distance(annihilator(isotropy(f, y)), target);
    CHECK(h <= 1.1 * previous + 1e-12);
    previous = h;
  }
  CHECK(previous < 1e-4);
}

TEST_CASE("functoriality holds for the built-in modules") {
  FunctorialityOptions opts;
  opts.fiber.rays = 10;
  opts.fiber.seed = 5;

  CHECK(functoriality_check(regular_module(), Eigen::Vector2d(0.3, 0.1), 1, opts));
  CHECK(functoriality_check(regular_module(), Eigen::Vector2d(-0.2, 0.5), 2, opts));

  FoliationModule sl2 = sl2_action().induced_foliation();
  CHECK(functoriality_check(sl2, Eigen::Vector2d::Zero(), 1, opts));

  FoliationModule vanish = vanish_origin_module();
  CHECK(functoriality_check(vanish, Eigen::Vector2d::Zero(), 1, opts));

  BumpFlowField bump;
  FunctorialityOptions bump_opts;
  bump_opts.fiber = bump_config();
  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK(functoriality_check(bump, one, 1, bump_opts));
}

TEST_CASE("verify_fiber_properties flags containment violations") {
  FoliationModule f = sl2_action().induced_foliation();
  Eigen::Vector2d x(1.0, 0.0);
  BlowupConfig cfg;
  cfg.rays = 8;
  BlowupFiberReport rep = blowup_fiber(f, x, cfg);
  // Replace the cluster with a subspace that is not inside the isotropy.
  rep.clusters[0].subspace = Subspace::coordinate_span(3, {0});
  FiberPropertyReport fp = verify_fiber_properties(f, x, rep, 1e-6);
  CHECK_FALSE(fp.containment_ok);
}
