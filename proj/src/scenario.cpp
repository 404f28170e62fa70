#include "fblup/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include "fblup/blowup.hpp"
#include "fblup/errors.hpp"
#include "fblup/holonomy.hpp"
#include "fblup/log.hpp"
#include "fblup/matrix_util.hpp"
#include "fblup/rng.hpp"

namespace fblup {

namespace {

// ---------------------------------------------------------------------------
// Parameter helpers
// ---------------------------------------------------------------------------

double get_num(const Json& p, const std::string& key, double fallback) {
  return p.contains(key) ? p.at(key).get<double>() : fallback;
}

int get_int(const Json& p, const std::string& key, int fallback) {
  return p.contains(key) ? p.at(key).get<int>() : fallback;
}

bool get_bool(const Json& p, const std::string& key, bool fallback) {
  return p.contains(key) ? p.at(key).get<bool>() : fallback;
}

Eigen::VectorXd require_vec(const Json& p, const std::string& key) {
  if (!p.contains(key)) throw InvalidInput("probe params: missing '" + key + "'");
  return vector_from_json(p.at(key));
}

Eigen::VectorXd get_vec(const Json& p, const std::string& key, const Eigen::VectorXd& fallback) {
  return p.contains(key) ? vector_from_json(p.at(key)) : fallback;
}

BlowupConfig blowup_config_from(const Json& p, std::uint64_t seed) {
  BlowupConfig cfg;
  cfg.rays = get_int(p, "rays", cfg.rays);
  cfg.steps = get_int(p, "steps", cfg.steps);
  cfg.decay = get_num(p, "decay", cfg.decay);
  cfg.initial_radius = get_num(p, "initial_radius", cfg.initial_radius);
  cfg.tol = get_num(p, "tol", cfg.tol);
  cfg.conv_tol = get_num(p, "conv_tol", cfg.conv_tol);
  cfg.cluster_tol = get_num(p, "cluster_tol", cfg.cluster_tol);
  cfg.regular_only = get_bool(p, "regular_only", cfg.regular_only);
  cfg.regular_samples = get_int(p, "regular_samples", cfg.regular_samples);
  cfg.seed = seed;
  if (p.contains("directions"))
    for (const auto& d : p.at("directions")) cfg.directions.push_back(vector_from_json(d));
  return cfg;
}

const LieAlgebraAction& require_action(const Scenario& s, const char* op) {
  if (!s.action) throw InvalidInput(std::string(op) + ": requires a lie_action scenario");
  return *s.action;
}

// ---------------------------------------------------------------------------
// Report fragments
// ---------------------------------------------------------------------------

Json cluster_json(const BlowupPoint& p) {
  Json j;
  j["subspace"] = to_json(p.subspace);
  j["dim"] = p.subspace.dim();
  if (p.direction_tag) j["direction_tag"] = to_json(*p.direction_tag);
  return j;
}

Json fiber_report_json(const BlowupFiberReport& r) {
  Json j;
  j["base"] = to_json(r.base);
  Json clusters = Json::array();
  for (const auto& c : r.clusters) clusters.push_back(cluster_json(c));
  j["clusters"] = std::move(clusters);
  j["rays_sampled"] = r.rays_sampled;
  j["non_convergent_rays"] = r.non_convergent_rays;
  j["rays_without_regular_points"] = r.rays_without_regular_points;
  if (r.property_report) {
    Json p;
    p["containment_ok"] = r.property_report->containment_ok;
    p["subalgebra_residual"] = r.property_report->subalgebra_residual;
    p["structure_residual"] = r.property_report->structure_residual;
    j["property_report"] = std::move(p);
  }
  Json rays = Json::array();
  for (const auto& ray : r.rays) {
    Json rj;
    rj["direction"] = to_json(ray.direction);
    rj["converged"] = ray.converged;
    rj["points_used"] = ray.points_used;
    rj["cluster"] = ray.cluster;
    rays.push_back(std::move(rj));
  }
  j["rays"] = std::move(rays);
  return j;
}

Json fiber_csv(const BlowupFiberReport& r) {
  // One row per cluster: index, approach direction, dim, basis (column-major).
  Json rows = Json::array();
  for (std::size_t c = 0; c < r.clusters.size(); ++c) {
    Json row = Json::array();
    row.push_back(static_cast<int>(c));
    if (r.clusters[c].direction_tag)
      for (int i = 0; i < r.clusters[c].direction_tag->size(); ++i)
        row.push_back((*r.clusters[c].direction_tag)[i]);
    row.push_back(r.clusters[c].subspace.dim());
    const auto& b = r.clusters[c].subspace.basis();
    for (int col = 0; col < b.cols(); ++col)
      for (int rr = 0; rr < b.rows(); ++rr) row.push_back(b(rr, col));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json periodic_json(const PeriodicBoundResult& r, double t_max) {
  Json j;
  j["eta_hat"] = r.eta_hat;
  j["t_max"] = t_max;
  j["scale_step"] = r.scale_step;
  j["grid_points"] = r.grid_points;
  j["directions"] = r.directions;
  Json ws = Json::array();
  for (const auto& w : r.witnesses) {
    Json wj;
    wj["point"] = to_json(w.point);
    wj["coords"] = to_json(w.coords);
    wj["norm"] = w.norm;
    wj["return_residual"] = w.return_residual;
    wj["direction_defect"] = w.direction_defect;
    ws.push_back(std::move(wj));
  }
  j["witnesses"] = std::move(ws);
  return j;
}

Json periodic_csv(const PeriodicBoundResult& r) {
  Json rows = Json::array();
  for (const auto& w : r.witnesses) {
    Json row = Json::array();
    for (int i = 0; i < w.point.size(); ++i) row.push_back(w.point[i]);
    for (int i = 0; i < w.coords.size(); ++i) row.push_back(w.coords[i]);
    row.push_back(w.norm);
    row.push_back(w.return_residual);
    rows.push_back(std::move(row));
  }
  return rows;
}

PeriodicBoundConfig periodic_config_from(const Json& p, std::uint64_t seed, int point_dim) {
  PeriodicBoundConfig cfg;
  cfg.box_lo = get_vec(p, "box_lo", Eigen::VectorXd::Constant(point_dim, -2.0));
  cfg.box_hi = get_vec(p, "box_hi", Eigen::VectorXd::Constant(point_dim, 2.0));
  cfg.grid_per_dim = get_int(p, "grid_per_dim", 5);
  cfg.directions = get_int(p, "directions", 128);
  cfg.scale_steps = get_int(p, "scale_steps", 160);
  cfg.t_max = get_num(p, "t_max", 12.0);
  cfg.return_tol = get_num(p, "return_tol", 1e-6);
  cfg.seed = seed;
  if (p.contains("annulus")) {
    const double rmin = p.at("annulus").at("min").get<double>();
    const double rmax = p.at("annulus").at("max").get<double>();
    cfg.keep = [rmin, rmax](const Eigen::VectorXd& y) {
      return y.norm() >= rmin && y.norm() <= rmax;
    };
  }
  return cfg;
}

/// Resolves a subspace parameter: explicit basis, the isotropy at a point, or
/// a cluster of a freshly computed fiber.
Subspace resolve_subspace(const Scenario& s, const Json& p, std::uint64_t seed) {
  if (p.contains("subspace")) return subspace_from_json(p.at("subspace"));
  if (p.contains("isotropy_at"))
    return isotropy(*s.family, vector_from_json(p.at("isotropy_at")));
  if (p.contains("cluster_at")) {
    Eigen::VectorXd x = vector_from_json(p.at("cluster_at"));
    BlowupConfig cfg = blowup_config_from(p.contains("fiber") ? p.at("fiber") : Json::object(),
                                          derive_seed(seed, 0x5b));
    BlowupFiberReport rep = blowup_fiber(*s.family, x, cfg);
    const int idx = get_int(p, "cluster_index", 0);
    if (idx < 0 || idx >= static_cast<int>(rep.clusters.size()))
      throw InvalidInput("resolve_subspace: cluster_index out of range");
    return rep.clusters[idx].subspace;
  }
  throw InvalidInput("probe params: expected 'subspace', 'isotropy_at' or 'cluster_at'");
}

// ---------------------------------------------------------------------------
// Probe handlers
// ---------------------------------------------------------------------------

struct HandlerOutput {
  Json report;
  Json csv;  // array of rows; empty when the op has no tabular mirror
};

HandlerOutput op_isotropy(const Scenario& s, const Json& p, std::uint64_t) {
  Eigen::VectorXd x = require_vec(p, "x");
  Subspace iso = isotropy(*s.family, x, get_num(p, "tol", 1e-8));
  Json j;
  j["x"] = to_json(x);
  j["subspace"] = to_json(iso);
  j["dim"] = iso.dim();
  return {std::move(j), Json::array()};
}

HandlerOutput op_tangent_fiber(const Scenario& s, const Json& p, std::uint64_t) {
  Eigen::VectorXd x = require_vec(p, "x");
  Subspace tf = tangent_fiber(*s.family, x, get_num(p, "tol", 1e-8));
  Json j;
  j["x"] = to_json(x);
  j["subspace"] = to_json(tf);
  j["dim"] = tf.dim();
  return {std::move(j), Json::array()};
}

HandlerOutput op_regular_test(const Scenario& s, const Json& p, std::uint64_t seed) {
  Eigen::VectorXd x = require_vec(p, "x");
  RegularTestResult r = regular_test(*s.family, x, get_num(p, "radius", 0.1),
                                     get_int(p, "samples", 16), get_num(p, "tol", 1e-8), seed);
  Json j;
  j["x"] = to_json(x);
  j["is_regular"] = r.is_regular;
  j["dim_tangent"] = r.dim_tangent;
  j["dim_isotropy"] = r.dim_isotropy;
  return {std::move(j), Json::array()};
}

HandlerOutput op_structure_functions(const Scenario& s, const Json& p, std::uint64_t seed) {
  Eigen::VectorXd x = require_vec(p, "x");
  CollocationConfig cc;
  cc.seed = seed;
  cc.degree = get_int(p, "degree", -1);
  VectorFieldFamily::StructureFit fit;
  if (cc.degree >= 0) {
    const auto* fm = dynamic_cast<const FoliationModule*>(s.family.get());
    if (!fm) throw InvalidInput("structure_functions: degree override needs a polynomial module");
    fit = fm->structure_functions_at(x, cc, get_num(p, "tol", 1e-6));
  } else {
    fit = s.family->structure_functions_at(x);
  }
  const int k = s.family->num_generators();
  Json tensor = Json::array();
  for (int i = 0; i < k; ++i) {
    Json plane = Json::array();
    for (int j2 = 0; j2 < k; ++j2) {
      Json line = Json::array();
      for (int l = 0; l < k; ++l) line.push_back(fit.tensor(i, j2, l));
      plane.push_back(std::move(line));
    }
    tensor.push_back(std::move(plane));
  }
  Json j;
  j["x"] = to_json(x);
  j["tensor"] = std::move(tensor);
  j["residual"] = fit.residual;
  return {std::move(j), Json::array()};
}

HandlerOutput op_blowup_fiber(const Scenario& s, const Json& p, std::uint64_t seed) {
  Eigen::VectorXd x = require_vec(p, "x");
  BlowupConfig cfg = blowup_config_from(p, seed);
  BlowupFiberReport rep = blowup_fiber(*s.family, x, cfg);
  return {fiber_report_json(rep), fiber_csv(rep)};
}

HandlerOutput op_verify_fiber_properties(const Scenario& s, const Json& p, std::uint64_t seed) {
  Eigen::VectorXd x = require_vec(p, "x");
  BlowupConfig cfg = blowup_config_from(p, seed);
  BlowupFiberReport rep = blowup_fiber(*s.family, x, cfg);
  FiberPropertyReport fp = verify_fiber_properties(*s.family, x, rep, get_num(p, "tol", 1e-6));
  Json j;
  j["x"] = to_json(x);
  j["containment_ok"] = fp.containment_ok;
  j["subalgebra_residual"] = fp.subalgebra_residual;
  j["structure_residual"] = fp.structure_residual;
  j["clusters"] = static_cast<int>(rep.clusters.size());
  return {std::move(j), Json::array()};
}

HandlerOutput op_algebroid_fiber(const Scenario& s, const Json& p, std::uint64_t seed) {
  Eigen::VectorXd x = require_vec(p, "x");
  BlowupConfig cfg = blowup_config_from(p, seed);
  BlowupFiberReport rep = blowup_fiber(*s.family, x, cfg);
  Json out = Json::array();
  for (const auto& c : rep.clusters) {
    Subspace fiber = algebroid_fiber(*s.family, c);
    Json j;
    j["cluster_dim"] = c.subspace.dim();
    j["fiber_dim"] = fiber.dim();
    j["fiber"] = to_json(fiber);
    out.push_back(std::move(j));
  }
  Json j;
  j["x"] = to_json(x);
  j["fibers"] = std::move(out);
  return {std::move(j), Json::array()};
}

HandlerOutput op_characteristic_set(const Scenario& s, const Json& p, std::uint64_t seed) {
  Eigen::VectorXd x = require_vec(p, "x");
  BlowupConfig cfg = blowup_config_from(p, seed);
  BlowupFiberReport rep = blowup_fiber(*s.family, x, cfg);
  std::vector<Subspace> ann = characteristic_set(*s.family, x, rep);
  Json arr = Json::array();
  for (const auto& a : ann) {
    Json j;
    j["dim"] = a.dim();
    j["subspace"] = to_json(a);
    arr.push_back(std::move(j));
  }
  Json j;
  j["x"] = to_json(x);
  j["annihilators"] = std::move(arr);
  return {std::move(j), Json::array()};
}

HandlerOutput op_functoriality_check(const Scenario& s, const Json& p, std::uint64_t seed) {
  Eigen::VectorXd x = require_vec(p, "x");
  FunctorialityOptions opts;
  opts.fiber = blowup_config_from(p, seed);
  opts.match_tol = get_num(p, "match_tol", 1e-3);
  const int m = get_int(p, "m", 1);
  bool ok = functoriality_check(*s.family, x, m, opts);
  Json j;
  j["x"] = to_json(x);
  j["m"] = m;
  j["ok"] = ok;
  return {std::move(j), Json::array()};
}

HandlerOutput op_periodic_bound(const Scenario& s, const Json& p, std::uint64_t seed) {
  PeriodicBoundConfig cfg = periodic_config_from(p, seed, s.family->ambient_dim());
  PeriodicBoundResult r;
  if (s.action && !get_bool(p, "use_flow", false)) {
    r = periodic_bound(*s.action, cfg);
  } else {
    r = periodic_bound_flow(*s.family, cfg);
  }
  return {periodic_json(r, cfg.t_max), periodic_csv(r)};
}

HandlerOutput op_embedding_check(const Scenario& s, const Json& p, std::uint64_t seed) {
  const LieAlgebraAction& act = require_action(s, "embedding_check");
  Eigen::VectorXd x = require_vec(p, "x");
  Subspace v = resolve_subspace(s, p, seed);
  EmbeddingConfig cfg;
  cfg.ball_radius = get_num(p, "ball_radius", cfg.ball_radius);
  cfg.transversal_samples = get_int(p, "transversal_samples", cfg.transversal_samples);
  cfg.perturbed_checks = get_int(p, "perturbed_checks", cfg.perturbed_checks);
  cfg.seed = seed;
  BlowupPoint point{x, v, std::nullopt};
  std::optional<BlowupFiberReport> fiber;
  if (get_bool(p, "with_fiber_perturbations", true)) {
    BlowupConfig bc = blowup_config_from(p.contains("fiber") ? p.at("fiber") : Json::object(),
                                         derive_seed(seed, 0xeb));
    fiber = blowup_fiber(*s.family, x, bc);
  }
  EmbeddingReport rep = embedding_check(act, point, fiber ? &*fiber : nullptr, cfg);
  Json j;
  j["x"] = to_json(x);
  j["ok"] = rep.ok;
  j["pairs_checked"] = rep.pairs_checked;
  j["collisions"] = rep.collisions;
  j["inconclusive"] = rep.inconclusive;
  return {std::move(j), Json::array()};
}

HandlerOutput op_closed_subgroup_check(const Scenario& s, const Json& p, std::uint64_t seed) {
  const LieAlgebraAction& act = require_action(s, "closed_subgroup_check");
  Subspace v = resolve_subspace(s, p, seed);
  ClosedSubgroupConfig cfg;
  cfg.words = get_int(p, "words", cfg.words);
  cfg.max_word_length = get_int(p, "max_word_length", cfg.max_word_length);
  cfg.coeff_scale = get_num(p, "coeff_scale", cfg.coeff_scale);
  cfg.seed = seed;
  ClosedSubgroupReport rep = closed_subgroup_check(act, v, cfg);
  Json j;
  j["ok"] = rep.ok;
  j["words_sampled"] = rep.words_sampled;
  j["words_in_chart"] = rep.words_in_chart;
  j["violations"] = rep.violations;
  return {std::move(j), Json::array()};
}

/// Random composable triples with representative perturbations: unit laws,
/// inverse laws, associativity under coset equality.
HandlerOutput op_groupoid_axioms(const Scenario& s, const Json& p, std::uint64_t seed) {
  const LieAlgebraAction& act = require_action(s, "groupoid_axioms");
  const int samples = get_int(p, "samples", 200);
  const double scale = get_num(p, "scale", 0.4);
  const double tol = get_num(p, "tol", 1e-8);
  std::mt19937_64 rng(derive_seed(seed, 0x6a));

  int conclusive = 0, inconclusive = 0, failures = 0, total = 0;
  auto tally = [&](Decision d) {
    ++total;
    if (d == Decision::Inconclusive) ++inconclusive;
    else {
      ++conclusive;
      if (d == Decision::No) ++failures;
    }
  };

  const int n = act.ambient_dim();
  for (int it = 0; it < samples; ++it) {
    // Base point away from the singular origin; V is its isotropy.
    Eigen::VectorXd x = unit_vector(rng, n) * (0.5 + 0.9 * std::generate_canonical<double, 53>(rng));
    Subspace v = isotropy_subalgebra(act, x);
    auto rand_g = [&] {
      return matrix_exp(act.algebra_element(scale * gaussian_vector(rng, act.algebra_dim())));
    };
    GroupoidElement g3{rand_g(), v, x};
    BlowupPoint t3 = target(act, g3);
    GroupoidElement g2{rand_g(), t3.subspace, t3.base};
    BlowupPoint t2 = target(act, g2);
    GroupoidElement g1{rand_g(), t2.subspace, t2.base};

    // Unit laws.
    GroupoidElement gu = compose(act, g3, unit_element(source(g3)), 1e-6);
    tally(coset_equal(act, gu, g3, tol));
    GroupoidElement ug = compose(act, unit_element(target(act, g3)), g3, 1e-6);
    tally(coset_equal(act, ug, g3, tol));

    // Inverse law.
    GroupoidElement inv = inverse_element(act, g3);
    GroupoidElement id_back = compose(act, inv, g3, 1e-6);
    tally(coset_equal(act, id_back, unit_element(source(g3)), tol));

    // Associativity with a perturbed middle representative.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(act.algebra_dim());
    if (g2.v.dim() > 0)
      w = g2.v.basis() * (scale * gaussian_vector(rng, g2.v.dim()));
    GroupoidElement g2p{g2.g * matrix_exp(act.algebra_element(w)), g2.v, g2.x};
    GroupoidElement left = compose(act, compose(act, g1, g2p, 1e-6), g3, 1e-6);
    GroupoidElement right = compose(act, g1, compose(act, g2p, g3, 1e-6), 1e-6);
    tally(coset_equal(act, left, right, tol));
    GroupoidElement mixed = compose(act, g1, compose(act, g2, g3, 1e-6), 1e-6);
    tally(coset_equal(act, left, mixed, tol));
  }

  Json j;
  j["samples"] = samples;
  j["checks"] = total;
  j["conclusive"] = conclusive;
  j["inconclusive"] = inconclusive;
  j["failures"] = failures;
  j["conclusive_rate"] = total > 0 ? static_cast<double>(conclusive) / total : 1.0;
  j["ok"] = failures == 0;
  return {std::move(j), Json::array()};
}

/// Transported clusters reappear in the recomputed fiber at the moved base.
HandlerOutput op_ad_equivariance(const Scenario& s, const Json& p, std::uint64_t seed) {
  const LieAlgebraAction& act = require_action(s, "ad_equivariance");
  const int samples = get_int(p, "samples", 10);
  const double scale = get_num(p, "scale", 0.4);
  const double match_tol = get_num(p, "match_tol", 1e-3);
  std::mt19937_64 rng(derive_seed(seed, 0xad));
  const int n = act.ambient_dim();

  double worst = 0.0;
  int checked = 0;
  for (int it = 0; it < samples; ++it) {
    const bool singular = (it % 2 == 1);
    Eigen::MatrixXd g = matrix_exp(act.algebra_element(scale * gaussian_vector(rng, act.algebra_dim())));
    BlowupConfig cfg;
    cfg.rays = 8;
    cfg.seed = derive_seed(seed, 0x100 + it);
    Eigen::VectorXd x;
    if (singular) {
      x = Eigen::VectorXd::Zero(n);
      cfg.directions = {unit_vector(rng, n)};
    } else {
      x = unit_vector(rng, n) * (0.5 + std::generate_canonical<double, 53>(rng));
    }
    BlowupFiberReport fiber = blowup_fiber_action(act, x, cfg);
    for (const auto& cluster : fiber.clusters) {
      Subspace moved = adjoint_transport(act, g, cluster.subspace);
      BlowupConfig cfg2 = cfg;
      cfg2.seed = derive_seed(seed, 0x200 + it);
      if (singular && cluster.direction_tag) {
        Eigen::VectorXd dir = g * *cluster.direction_tag;
        cfg2.directions = {dir / dir.norm()};
      }
      BlowupFiberReport fiber2 = blowup_fiber_action(act, g * x, cfg2);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c2 : fiber2.clusters)
        best = std::min(best, distance(moved, c2.subspace));
      worst = std::max(worst, best);
      ++checked;
    }
  }
  Json j;
  j["samples"] = samples;
  j["clusters_checked"] = checked;
  j["worst_mismatch"] = worst;
  j["ok"] = worst < match_tol;
  return {std::move(j), Json::array()};
}

HandlerOutput op_groupoid_fiber_dim(const Scenario& s, const Json& p, std::uint64_t seed) {
  Eigen::VectorXd x = require_vec(p, "x");
  BlowupConfig cfg = blowup_config_from(p, seed);
  BlowupFiberReport rep = blowup_fiber(*s.family, x, cfg);
  const int k = s.family->num_generators();
  Json arr = Json::array();
  bool consistent = true;
  for (const auto& c : rep.clusters) {
    const int fiber_dim = groupoid_fiber_dim(*s.family, c);
    const int algebroid_dim = algebroid_fiber(*s.family, c).dim();
    Json j;
    j["cluster_dim"] = c.subspace.dim();
    j["fiber_dim"] = fiber_dim;
    j["algebroid_dim"] = algebroid_dim;
    j["expected"] = k - c.subspace.dim();
    arr.push_back(std::move(j));
    if (fiber_dim != k - c.subspace.dim() || fiber_dim != algebroid_dim) consistent = false;
  }
  Json j;
  j["x"] = to_json(x);
  j["clusters"] = std::move(arr);
  j["ok"] = consistent;
  return {std::move(j), Json::array()};
}

HandlerOutput op_leaf_distribution(const Scenario& s, const Json& p, std::uint64_t seed) {
  Eigen::VectorXd y = require_vec(p, "y");
  Eigen::VectorXd t =
      get_vec(p, "t", Eigen::VectorXd::Zero(s.family->num_generators()));
  Json vp = p.contains("v") ? p.at("v") : Json{{"isotropy_at", p.at("y")}};
  Subspace v = resolve_subspace(s, vp, seed);
  Subspace dist = leaf_distribution(*s.family, y, t, v);
  Json j;
  j["y"] = to_json(y);
  j["t"] = to_json(t);
  j["v_dim"] = v.dim();
  j["distribution"] = to_json(dist);
  j["dim"] = dist.dim();
  return {std::move(j), Json::array()};
}

HandlerOutput op_leaf_trace(const Scenario& s, const Json& p, std::uint64_t seed) {
  Eigen::VectorXd y = require_vec(p, "y");
  Eigen::VectorXd t0 =
      get_vec(p, "t0", Eigen::VectorXd::Zero(s.family->num_generators()));
  Json vp = p.contains("v") ? p.at("v") : Json{{"isotropy_at", p.at("y")}};
  Subspace v = resolve_subspace(s, vp, seed);
  TraceConfig cfg;
  cfg.steps = get_int(p, "steps", 100);
  cfg.step_size = get_num(p, "step_size", 1e-2);
  cfg.seed = seed;
  LeafTrace trace = leaf_trace(*s.family, y, t0, v, cfg);
  double worst = 0.0;
  Json pts = Json::array();
  Json csv = Json::array();
  for (std::size_t i = 0; i < trace.t_points.size(); ++i) {
    pts.push_back(to_json(trace.t_points[i]));
    worst = std::max(worst, trace.r_residuals[i]);
    Json row = Json::array();
    for (int c = 0; c < trace.t_points[i].size(); ++c) row.push_back(trace.t_points[i][c]);
    row.push_back(trace.r_residuals[i]);
    csv.push_back(std::move(row));
  }
  Json residuals = Json::array();
  for (double r : trace.r_residuals) residuals.push_back(r);
  Json j;
  j["y"] = to_json(y);
  j["points"] = std::move(pts);
  j["r_residuals"] = std::move(residuals);
  j["max_r_drift"] = worst;
  return {std::move(j), std::move(csv)};
}

HandlerOutput op_flow(const Scenario& s, const Json& p, std::uint64_t) {
  Eigen::VectorXd y = require_vec(p, "y");
  Eigen::VectorXd t = require_vec(p, "t");
  Eigen::VectorXd z = flow(*s.family, y, t);
  Json j;
  j["y"] = to_json(y);
  j["t"] = to_json(t);
  j["endpoint"] = to_json(z);
  return {std::move(j), Json::array()};
}

using Handler = HandlerOutput (*)(const Scenario&, const Json&, std::uint64_t);

const std::map<std::string, Handler>& handler_registry() {
  static const std::map<std::string, Handler> registry = {
      {"isotropy", op_isotropy},
      {"tangent_fiber", op_tangent_fiber},
      {"regular_test", op_regular_test},
      {"structure_functions", op_structure_functions},
      {"blowup_fiber", op_blowup_fiber},
      {"verify_fiber_properties", op_verify_fiber_properties},
      {"algebroid_fiber", op_algebroid_fiber},
      {"characteristic_set", op_characteristic_set},
      {"functoriality_check", op_functoriality_check},
      {"periodic_bound", op_periodic_bound},
      {"embedding_check", op_embedding_check},
      {"closed_subgroup_check", op_closed_subgroup_check},
      {"groupoid_axioms", op_groupoid_axioms},
      {"ad_equivariance", op_ad_equivariance},
      {"groupoid_fiber_dim", op_groupoid_fiber_dim},
      {"leaf_distribution", op_leaf_distribution},
      {"leaf_trace", op_leaf_trace},
      {"flow", op_flow},
  };
  return registry;
}

// ---------------------------------------------------------------------------
// Assertions
// ---------------------------------------------------------------------------

Json assertion(const std::string& name, bool passed, const std::string& detail) {
  Json a;
  a["name"] = name;
  a["passed"] = passed;
  a["detail"] = detail;
  return a;
}

std::vector<int> cluster_dims_of(const Json& report) {
  std::vector<int> dims;
  if (report.contains("clusters") && report["clusters"].is_array())
    for (const auto& c : report["clusters"])
      if (c.contains("dim")) dims.push_back(c["dim"].get<int>());
  std::sort(dims.begin(), dims.end());
  return dims;
}

Json evaluate_assertions(const Json& report, const Json& asserts) {
  Json out = Json::array();
  for (auto it = asserts.begin(); it != asserts.end(); ++it) {
    const std::string& key = it.key();
    const Json& expected = it.value();
    std::ostringstream detail;
    bool passed = false;
    try {
      if (key == "cluster_count") {
        const int got = static_cast<int>(report.at("clusters").size());
        passed = got == expected.get<int>();
        detail << "got " << got;
      } else if (key == "cluster_dims") {
        std::vector<int> got = cluster_dims_of(report);
        std::vector<int> want = expected.get<std::vector<int>>();
        std::sort(want.begin(), want.end());
        passed = got == want;
        detail << "got [";
        for (int d : got) detail << d << " ";
        detail << "]";
      } else if (key == "cluster_dims_all") {
        passed = !report.at("clusters").empty();
        for (const auto& c : report.at("clusters"))
          if (c.at("dim").get<int>() != expected.get<int>()) passed = false;
        detail << "clusters " << report.at("clusters").size();
      } else if (key == "containment") {
        passed = report.at("property_report").at("containment_ok").get<bool>() ==
                 expected.get<bool>();
      } else if (key == "max_subalgebra_residual") {
        const double got = report.at("property_report").at("subalgebra_residual").get<double>();
        passed = got <= expected.get<double>();
        detail << "residual " << got;
      } else if (key == "non_convergent_rays_max") {
        const int got = report.at("non_convergent_rays").get<int>();
        passed = got <= expected.get<int>();
        detail << "got " << got;
      } else if (key == "expect_regular") {
        passed = report.at("is_regular").get<bool>() == expected.get<bool>();
      } else if (key == "dim") {
        passed = report.at("dim").get<int>() == expected.get<int>();
        detail << "got " << report.at("dim").get<int>();
      } else if (key == "expect_true") {
        passed = report.at("ok").get<bool>() == expected.get<bool>();
      } else if (key == "eta_min") {
        passed = report.at("eta_hat").get<double>() >= expected.get<double>();
        detail << "eta " << report.at("eta_hat").get<double>();
      } else if (key == "eta_max") {
        passed = report.at("eta_hat").get<double>() <= expected.get<double>();
        detail << "eta " << report.at("eta_hat").get<double>();
      } else if (key == "eta_at_tmax") {
        const bool at = std::abs(report.at("eta_hat").get<double>() -
                                 report.at("t_max").get<double>()) < 1e-12;
        passed = at == expected.get<bool>();
        detail << "eta " << report.at("eta_hat").get<double>();
      } else if (key == "witness_norm_near") {
        const double value = expected.at("value").get<double>();
        const double rel = expected.at("rel_tol").get<double>();
        if (report.at("witnesses").empty()) {
          passed = false;
          detail << "no witnesses";
        } else {
          const double got = report.at("witnesses")[0].at("norm").get<double>();
          passed = std::abs(got - value) <= rel * std::abs(value);
          detail << "norm " << got;
        }
      } else if (key == "max_r_drift") {
        const double got = report.at("max_r_drift").get<double>();
        passed = got <= expected.get<double>();
        detail << "drift " << got;
      } else if (key == "min_conclusive_rate") {
        const double got = report.at("conclusive_rate").get<double>();
        passed = got >= expected.get<double>();
        detail << "rate " << got;
      } else if (key == "max_failures") {
        const int got = report.at("failures").get<int>();
        passed = got <= expected.get<int>();
        detail << "failures " << got;
      } else if (key == "trace_points") {
        const int got = static_cast<int>(report.at("points").size());
        passed = got == expected.get<int>();
        detail << "got " << got;
      } else if (key == "min_trace_points") {
        const int got = static_cast<int>(report.at("points").size());
        passed = got >= expected.get<int>();
        detail << "got " << got;
      } else {
        detail << "unknown assertion key";
      }
    } catch (const std::exception& e) {
      passed = false;
      detail << "error: " << e.what();
    }
    out.push_back(assertion(key, passed, detail.str()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Built-in fixtures
// ---------------------------------------------------------------------------

LieAlgebraAction make_sl2_action() {
  Eigen::MatrixXd h(2, 2), e(2, 2), f(2, 2);
  h << 1, 0, 0, -1;
  e << 0, 1, 0, 0;
  f << 0, 0, 1, 0;
  return LieAlgebraAction({h, e, f});
}

LieAlgebraAction make_sln_action(int n) {
  std::vector<Eigen::MatrixXd> basis;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
      m(i, j) = 1.0;
      basis.push_back(std::move(m));
    }
  for (int i = 0; i + 1 < n; ++i) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m(i, i) = 1.0;
    m(i + 1, i + 1) = -1.0;
    basis.push_back(std::move(m));
  }
  return LieAlgebraAction(std::move(basis));
}

FoliationModule make_vanish_origin() {
  // x d/dx, y d/dx, x d/dy, y d/dy
  std::vector<PolyVectorField> gens;
  for (int comp = 0; comp < 2; ++comp) {
    for (int var = 0; var < 2; ++var) {
      PolyVectorField f(2);
      f.component(comp) = Polynomial::variable(2, var);
      gens.push_back(std::move(f));
    }
  }
  // order: x d/dx, y d/dx, x d/dy, y d/dy
  return FoliationModule(std::move(gens), 0);
}

FoliationModule make_regular() {
  PolyVectorField dx(2);
  dx.component(0) = Polynomial::constant(2, 1.0);
  return FoliationModule({dx}, 0);
}

void set_scenario_action(Scenario& s, LieAlgebraAction act) {
  auto shared = std::make_shared<LieAlgebraAction>(std::move(act));
  s.action = shared;
  s.family = std::make_shared<FoliationModule>(shared->induced_foliation());
  s.payload = to_json(*shared);
}

Json probe(const std::string& op, Json params, Json asserts = Json::object()) {
  Json j;
  j["op"] = op;
  j["params"] = std::move(params);
  j["assert"] = std::move(asserts);
  return j;
}

void add_probes(Scenario& s, const Json& list) {
  for (const auto& pj : list) {
    ProbeSpec spec;
    spec.op = pj.at("op").get<std::string>();
    spec.params = pj.value("params", Json::object());
    spec.asserts = pj.value("assert", Json::object());
    s.probes.push_back(std::move(spec));
  }
}

Scenario make_builtin_sl2() {
  Scenario s;
  s.name = "sl2";
  s.kind = "lie_action";
  s.seed = 42;
  set_scenario_action(s, make_sl2_action());
  const double two_pi_sqrt2 = 2.0 * M_PI * std::sqrt(2.0);
  add_probes(s, Json::array({
    probe("blowup_fiber", {{"x", {0.0, 0.0}}, {"rays", 64}},
          {{"cluster_dims_all", 1}, {"containment", true},
           {"max_subalgebra_residual", 1e-5}, {"non_convergent_rays_max", 0}}),
    probe("blowup_fiber", {{"x", {1.0, 0.0}}},
          {{"cluster_count", 1}, {"cluster_dims", {1}}, {"containment", true}}),
    probe("groupoid_axioms", {{"samples", 150}, {"scale", 0.4}},
          {{"min_conclusive_rate", 0.95}, {"max_failures", 0}}),
    probe("periodic_bound",
          {{"box_lo", {-2.0, -2.0}}, {"box_hi", {2.0, 2.0}},
           {"annulus", {{"min", 0.5}, {"max", 2.0}}}, {"grid_per_dim", 5},
           {"directions", 192}, {"scale_steps", 160}, {"t_max", 12.0},
           {"return_tol", 1e-6}},
          {{"eta_min", 1e-6}, {"eta_max", two_pi_sqrt2 + 0.075},
           {"witness_norm_near", {{"value", two_pi_sqrt2}, {"rel_tol", 0.02}}}}),
    probe("groupoid_fiber_dim", {{"x", {0.0, 0.0}}, {"rays", 16}}, {{"expect_true", true}}),
    probe("characteristic_set", {{"x", {0.0, 0.0}}, {"rays", 16}}),
    probe("functoriality_check", {{"x", {0.0, 0.0}}, {"m", 1}, {"rays", 16}},
          {{"expect_true", true}}),
    probe("ad_equivariance", {{"samples", 8}}, {{"expect_true", true}}),
    probe("embedding_check",
          {{"x", {0.0, 0.0}}, {"cluster_at", {0.0, 0.0}}, {"cluster_index", 0},
           {"fiber", {{"rays", 16}}}, {"ball_radius", 0.1}},
          {{"expect_true", true}}),
    probe("closed_subgroup_check",
          {{"cluster_at", {0.0, 0.0}}, {"cluster_index", 0}, {"fiber", {{"rays", 16}}},
           {"words", 1500}},
          {{"expect_true", true}}),
  }));
  return s;
}

Scenario make_builtin_sln() {
  Scenario s;
  s.name = "sln";
  s.kind = "lie_action";
  s.seed = 43;
  const int n = 3;
  set_scenario_action(s, make_sln_action(n));
  const int expected_dim = n * n - 1 - n;
  add_probes(s, Json::array({
    probe("blowup_fiber", {{"x", {0.0, 0.0, 0.0}}, {"rays", 24}},
          {{"cluster_dims_all", expected_dim}, {"containment", true},
           {"max_subalgebra_residual", 1e-5}}),
    probe("isotropy", {{"x", {1.0, 0.0, 0.0}}}, {{"dim", expected_dim}}),
    probe("blowup_fiber", {{"x", {1.0, 0.0, 0.0}}, {"rays", 12}},
          {{"cluster_count", 1}, {"containment", true}}),
    probe("groupoid_fiber_dim", {{"x", {0.0, 0.0, 0.0}}, {"rays", 12}},
          {{"expect_true", true}}),
  }));
  return s;
}

Scenario make_builtin_bump() {
  Scenario s;
  s.name = "bump";
  s.kind = "bump_flow";
  s.seed = 44;
  s.family = std::make_shared<BumpFlowField>();
  s.payload = Json{{"description", "rho(x) d/dx with rho = exp(-1/(1-x^2)) on (-1,1), 0 outside"}};
  // The flat factor underflows within ~7e-4 of the support boundary; rays use
  // a gentler decay so every sample stays representable.
  Json ray_cfg = {{"decay", 0.8}, {"steps", 28}, {"rays", 8}};
  Json fiber_dim_params = ray_cfg;
  fiber_dim_params["x"] = {1.0};
  auto fiber_probe = [&](double x, Json dims) {
    Json params = ray_cfg;
    params["x"] = {x};
    return probe("blowup_fiber", params,
                 {{"cluster_dims", std::move(dims)}, {"containment", true},
                  {"max_subalgebra_residual", 1e-5}, {"non_convergent_rays_max", 0}});
  };
  add_probes(s, Json::array({
    fiber_probe(0.0, {0}),
    fiber_probe(1.0, {0, 1}),
    fiber_probe(-1.0, {0, 1}),
    fiber_probe(1.5, {1}),
    fiber_probe(-1.5, {1}),
    probe("periodic_bound",
          {{"box_lo", {-2.0}}, {"box_hi", {-1.5}}, {"grid_per_dim", 4},
           {"directions", 4}, {"scale_steps", 40}, {"t_max", 5.0}},
          {{"eta_at_tmax", true}}),
    probe("groupoid_fiber_dim", fiber_dim_params, {{"expect_true", true}}),
    probe("leaf_trace", {{"y", {1.5}}, {"steps", 40}, {"step_size", 0.05}},
          {{"max_r_drift", 1e-6}, {"min_trace_points", 41}}),
  }));
  return s;
}

Scenario make_builtin_vanish_origin() {
  Scenario s;
  s.name = "vanish_origin";
  s.kind = "poly_foliation";
  s.seed = 45;
  auto fm = std::make_shared<FoliationModule>(make_vanish_origin());
  s.family = fm;
  s.payload = to_json(*fm);
  add_probes(s, Json::array({
    probe("blowup_fiber", {{"x", {0.0, 0.0}}, {"rays", 32}},
          {{"cluster_dims_all", 2}, {"containment", true},
           {"max_subalgebra_residual", 1e-5}}),
    probe("regular_test", {{"x", {1.0, 1.0}}, {"radius", 0.1}}, {{"expect_regular", true}}),
    probe("regular_test", {{"x", {0.0, 0.0}}, {"radius", 0.1}}, {{"expect_regular", false}}),
    probe("structure_functions", {{"x", {0.0, 0.0}}}),
    probe("functoriality_check", {{"x", {0.0, 0.0}}, {"m", 1}, {"rays", 16}},
          {{"expect_true", true}}),
    probe("groupoid_fiber_dim", {{"x", {0.0, 0.0}}, {"rays", 12}}, {{"expect_true", true}}),
  }));
  return s;
}

Scenario make_builtin_regular() {
  Scenario s;
  s.name = "regular";
  s.kind = "poly_foliation";
  s.seed = 46;
  auto fm = std::make_shared<FoliationModule>(make_regular());
  s.family = fm;
  s.payload = to_json(*fm);
  // Trace with the zero subspace: the distribution vanishes, singleton trace.
  Json zero_subspace;
  zero_subspace["ambient"] = 1;
  zero_subspace["basis"] = Json::array();
  Json zero_trace_params;
  zero_trace_params["y"] = {0.0, 0.0};
  zero_trace_params["v"] = Json{{"subspace", zero_subspace}};
  zero_trace_params["steps"] = 10;
  add_probes(s, Json::array({
    probe("blowup_fiber", {{"x", {0.3, -0.2}}},
          {{"cluster_count", 1}, {"cluster_dims", {0}}, {"containment", true}}),
    probe("regular_test", {{"x", {0.3, -0.2}}, {"radius", 0.2}}, {{"expect_regular", true}}),
    probe("functoriality_check", {{"x", {0.1, 0.4}}, {"m", 1}, {"rays", 12}},
          {{"expect_true", true}}),
    probe("functoriality_check", {{"x", {-0.7, 0.2}}, {"m", 2}, {"rays", 12}},
          {{"expect_true", true}}),
    probe("leaf_trace", zero_trace_params, {{"trace_points", 1}}),
  }));
  return s;
}

Scenario make_builtin_pullback(const std::string& name, const FoliationModule& base, int m,
                               std::uint64_t seed, const Eigen::VectorXd& probe_base) {
  Scenario s;
  s.name = name;
  s.kind = "poly_foliation";
  s.seed = seed;
  auto fm = std::make_shared<FoliationModule>(base.pullback(m));
  s.family = fm;
  s.payload = to_json(*fm);
  Json x = Json::array();
  for (int i = 0; i < probe_base.size(); ++i) x.push_back(probe_base[i]);
  for (int i = 0; i < m; ++i) x.push_back(0.0);
  add_probes(s, Json::array({
    probe("blowup_fiber", {{"x", x}, {"rays", 24}},
          {{"containment", true}, {"max_subalgebra_residual", 1e-5}}),
    probe("functoriality_check", {{"x", x}, {"m", 1}, {"rays", 12}}, {{"expect_true", true}}),
    probe("isotropy", {{"x", x}}),
  }));
  return s;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> builtin_scenarios() {
  return {
      {"sl2", "special linear algebra acting on the plane: fiber, groupoid, periodic bound"},
      {"sln", "parametric special linear action (n = 3)"},
      {"bump", "one-parameter flow of a compactly supported bump field on the line"},
      {"vanish_origin", "linear fields vanishing at the origin of the plane"},
      {"regular", "single constant field on the plane (regular foliation)"},
      {"sl2_pullback", "pullback of the sl2 module along a projection (one extra variable)"},
      {"regular_pullback", "pullback of the regular module (two extra variables)"},
  };
}

Scenario load_builtin(const std::string& name) {
  if (name == "sl2") return make_builtin_sl2();
  if (name == "sln") return make_builtin_sln();
  if (name == "bump") return make_builtin_bump();
  if (name == "vanish_origin") return make_builtin_vanish_origin();
  if (name == "regular") return make_builtin_regular();
  if (name == "sl2_pullback") {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
    return make_builtin_pullback("sl2_pullback", make_sl2_action().induced_foliation(), 1, 47, x);
  }
  if (name == "regular_pullback") {
    Eigen::VectorXd x(2);
    x << 0.2, -0.1;
    return make_builtin_pullback("regular_pullback", make_regular(), 2, 48, x);
  }
  throw InvalidInput("unknown builtin scenario: " + name);
}

namespace {

std::pair<int, int> line_col_of(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open scenario file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = line_col_of(text, e.byte > 0 ? e.byte - 1 : 0);
    throw InvalidInput(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                       ": JSON parse error: " + e.what());
  }

  Scenario s;
  s.name = std::filesystem::path(path).stem().string();
  if (!doc.contains("kind")) throw InvalidInput(path + ": /kind is required");
  s.kind = doc["kind"].get<std::string>();
  if (!doc.contains("payload")) throw InvalidInput(path + ": /payload is required");
  s.payload = doc["payload"];
  s.seed = doc.value("seed", std::uint64_t{0});
  if (doc.contains("output")) {
    s.out_format = doc["output"].value("format", "json");
    if (s.out_format != "json" && s.out_format != "csv")
      throw InvalidInput(path + ": /output/format must be json or csv");
  }

  if (s.kind == "lie_action") {
    auto act = std::make_shared<LieAlgebraAction>(action_from_json(s.payload));
    s.action = act;
    s.family = std::make_shared<FoliationModule>(act->induced_foliation());
  } else if (s.kind == "poly_foliation") {
    s.family = std::make_shared<FoliationModule>(foliation_from_json(s.payload));
  } else {
    throw InvalidInput(path + ": /kind must be lie_action or poly_foliation");
  }

  if (!doc.contains("probes") || !doc["probes"].is_array())
    throw InvalidInput(path + ": /probes must be an array");
  int index = 0;
  std::vector<Eigen::VectorXd> closure_probes;
  for (const auto& pj : doc["probes"]) {
    if (!pj.contains("op"))
      throw InvalidInput(path + ": /probes/" + std::to_string(index) + "/op is required");
    ProbeSpec spec;
    spec.op = pj["op"].get<std::string>();
    if (handler_registry().find(spec.op) == handler_registry().end())
      throw InvalidInput(path + ": /probes/" + std::to_string(index) + ": unknown operation '" +
                         spec.op + "'");
    spec.params = pj.value("params", Json::object());
    spec.asserts = pj.value("assert", Json::object());
    if (spec.params.contains("x") && closure_probes.size() < 8)
      closure_probes.push_back(vector_from_json(spec.params["x"]));
    s.probes.push_back(std::move(spec));
    ++index;
  }

  // Bracket closure is a checked property of user-supplied modules.
  if (s.kind == "poly_foliation" && !closure_probes.empty()) {
    const auto* fm = dynamic_cast<const FoliationModule*>(s.family.get());
    check_bracket_closure(*fm, closure_probes, 1e-6);
  }
  return s;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write report file: " + path);
  out << text;
}

std::string csv_text(const Json& rows) {
  std::string out;
  for (const auto& row : rows) {
    bool first = true;
    for (const auto& cell : row) {
      if (!first) out += ",";
      first = false;
      if (cell.is_number_float()) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", cell.get<double>());
        out += buf;
      } else if (cell.is_number_integer()) {
        out += std::to_string(cell.get<std::int64_t>());
      } else if (cell.is_string()) {
        out += cell.get<std::string>();
      } else {
        out += cell.dump();
      }
    }
    out += "\n";
  }
  return out;
}

ProbeResult run_probe(const Scenario& scenario, const ProbeSpec& spec, int index,
                      const std::string& out_dir, const std::string& format) {
  ProbeResult result;
  result.op = spec.op;
  const std::uint64_t probe_seed = derive_seed(scenario.seed, static_cast<std::uint64_t>(index));

  Json envelope;
  envelope["op"] = spec.op;
  envelope["params"] = spec.params;
  envelope["seed"] = probe_seed;

  Json csv = Json::array();
  try {
    HandlerOutput out = handler_registry().at(spec.op)(scenario, spec.params, probe_seed);
    envelope["status"] = "ok";
    envelope["result"] = std::move(out.report);
    csv = std::move(out.csv);
    result.executed = true;
  } catch (const std::exception& e) {
    envelope["status"] = "error";
    envelope["error"] = e.what();
    result.executed = false;
    result.error = e.what();
    log_msg(LogLevel::Error, scenario.name + " probe " + std::to_string(index) + " (" + spec.op +
                                 "): " + e.what());
  }

  if (result.executed && !spec.asserts.empty()) {
    Json evaluations = evaluate_assertions(envelope["result"], spec.asserts);
    for (const auto& a : evaluations)
      if (!a.at("passed").get<bool>()) result.assertions_passed = false;
    envelope["assertions"] = std::move(evaluations);
  }

  const std::string stem = std::to_string(index) + "-" + spec.op;
  result.report_file = (std::filesystem::path(out_dir) / (stem + ".json")).string();
  write_text(result.report_file, dump_deterministic(envelope));
  if (format == "csv" && !csv.empty())
    write_text((std::filesystem::path(out_dir) / (stem + ".csv")).string(), csv_text(csv));

  result.report = std::move(envelope);
  return result;
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, const std::string& out_dir, bool parallel) {
  std::filesystem::create_directories(out_dir);
  RunResult run;

  if (parallel) {
    std::vector<std::future<ProbeResult>> futures;
    for (std::size_t i = 0; i < scenario.probes.size(); ++i)
      futures.push_back(std::async(std::launch::async, run_probe, std::cref(scenario),
                                   std::cref(scenario.probes[i]), static_cast<int>(i),
                                   out_dir, scenario.out_format));
    for (auto& f : futures) run.probes.push_back(f.get());
  } else {
    for (std::size_t i = 0; i < scenario.probes.size(); ++i) {
      log_msg(LogLevel::Info, scenario.name + ": probe " + std::to_string(i) + " (" +
                                  scenario.probes[i].op + ")");
      run.probes.push_back(run_probe(scenario, scenario.probes[i], static_cast<int>(i), out_dir,
                                     scenario.out_format));
    }
  }

  for (const auto& p : run.probes)
    if (!p.executed || !p.assertions_passed) run.exit_code = 2;
  return run;
}

}  // namespace fblup
