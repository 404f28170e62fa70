#include "fblup/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fblup/errors.hpp"
#include "fblup/rng.hpp"

namespace fblup {

namespace {

using Apply = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

double return_residual(const Apply& apply, const Eigen::VectorXd& u, double s,
                       const Eigen::VectorXd& y) {
  return (apply(s * u, y) - y).norm();
}

/// Golden-section minimization of the return residual over [a, b].
double golden_minimize(const Apply& apply, const Eigen::VectorXd& u, const Eigen::VectorXd& y,
                       double a, double b, int iters = 48) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = return_residual(apply, u, c, y);
  double fd = return_residual(apply, u, d, y);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = return_residual(apply, u, c, y);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = return_residual(apply, u, d, y);
    }
  }
  return fc < fd ? c : d;
}

struct Candidate {
  Eigen::VectorXd y;
  Eigen::VectorXd u;
  double s = 0.0;
  double residual = 0.0;
};

}  // namespace

PeriodicBoundResult periodic_bound_search(const PeriodicSearchProblem& problem,
                                          const PeriodicBoundConfig& cfg) {
  if (cfg.box_lo.size() != problem.point_dim || cfg.box_hi.size() != problem.point_dim)
    throw DimensionMismatch("periodic_bound_search: box dimension mismatch");
  if (cfg.scale_steps < 2 || cfg.directions < 1 || cfg.grid_per_dim < 1)
    throw InvalidInput("periodic_bound_search: degenerate search configuration");

  const Apply& cheap = problem.apply;
  const Apply& accurate = problem.apply_accurate ? problem.apply_accurate : problem.apply;
  const double promote_tol = cfg.promote_tol > 0.0 ? cfg.promote_tol : cfg.return_tol;

  PeriodicBoundResult result;
  result.scale_step = cfg.t_max / cfg.scale_steps;
  result.directions = cfg.directions;

  // Rectangular grid over the box, optionally filtered.
  std::vector<Eigen::VectorXd> points;
  const int n = problem.point_dim;
  std::vector<int> idx(n, 0);
  while (true) {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      double t = cfg.grid_per_dim == 1 ? 0.5 : static_cast<double>(idx[i]) / (cfg.grid_per_dim - 1);
      y[i] = cfg.box_lo[i] + t * (cfg.box_hi[i] - cfg.box_lo[i]);
    }
    if (!cfg.keep || cfg.keep(y)) points.push_back(y);
    int carry = 0;
    while (carry < n) {
      if (++idx[carry] < cfg.grid_per_dim) break;
      idx[carry] = 0;
      ++carry;
    }
    if (carry == n) break;
  }
  result.grid_points = static_cast<int>(points.size());

  std::mt19937_64 rng(derive_seed(cfg.seed, 0xe7a));
  std::vector<Eigen::VectorXd> dirs;
  dirs.reserve(cfg.directions);
  for (int d = 0; d < cfg.directions; ++d) dirs.push_back(unit_vector(rng, problem.coord_dim));

  const double ds = result.scale_step;

  // Scan phase: locate local minima of the cheap return residual.
  std::vector<Candidate> candidates;
  std::vector<double> ret(cfg.scale_steps + 1, 0.0);
  for (const auto& y : points) {
    for (const auto& u : dirs) {
      for (int j = 1; j <= cfg.scale_steps; ++j) ret[j] = return_residual(cheap, u, j * ds, y);
      int refined = 0;
      for (int j = 2; j < cfg.scale_steps && refined < 4; ++j) {
        if (!(ret[j] <= ret[j - 1] && ret[j] <= ret[j + 1])) continue;
        double s = golden_minimize(cheap, u, y, (j - 1) * ds, (j + 1) * ds);
        double r = return_residual(cheap, u, s, y);
        ++refined;
        if (r <= promote_tol && problem.direction_defect(y, s * u) > 10.0 * cfg.return_tol)
          candidates.push_back({y, u, s, r});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.s < b.s; });

  // Certification phase: accurate refinement of the smallest candidates.
  std::vector<Candidate> certified;
  double best = std::numeric_limits<double>::infinity();
  int refines = 0;
  for (const auto& cand : candidates) {
    if (refines >= cfg.max_accurate_refines) break;
    if (cand.s >= best * 1.05 + ds) break;  // only near-minimal witnesses matter
    ++refines;
    const double lo = std::max(0.25 * ds, cand.s - 2.0 * ds);
    const double hi = std::min(cfg.t_max, cand.s + 2.0 * ds);
    double s = golden_minimize(accurate, cand.u, cand.y, lo, hi);
    double r = return_residual(accurate, cand.u, s, cand.y);
    if (r <= cfg.return_tol && problem.direction_defect(cand.y, s * cand.u) > 10.0 * cfg.return_tol) {
      certified.push_back({cand.y, cand.u, s, r});
      best = std::min(best, s);
    }
  }

  // Polish the best witness by local direction search with shrinking radius;
  // scanning uses the cheap applier, the end result is re-certified.
  if (cfg.refine_directions && !certified.empty()) {
    auto best_it = std::min_element(certified.begin(), certified.end(),
                                    [](const Candidate& a, const Candidate& b) { return a.s < b.s; });
    Candidate polish = *best_it;
    double radius = 0.2;
    for (int round = 0; round < cfg.direction_polish_rounds; ++round) {
      Eigen::VectorXd u = polish.u + radius * gaussian_vector(rng, problem.coord_dim);
      u.normalize();
      const double lo = std::max(ds, polish.s * 0.9);
      const double hi = std::min(cfg.t_max, polish.s * 1.1);
      double s = golden_minimize(cheap, u, polish.y, lo, hi);
      double r = return_residual(cheap, u, s, polish.y);
      if (r <= promote_tol && s < polish.s &&
          problem.direction_defect(polish.y, s * u) > 10.0 * cfg.return_tol) {
        polish = {polish.y, u, s, r};
      }
      if ((round + 1) % 12 == 0) radius *= 0.5;
    }
    double s = golden_minimize(accurate, polish.u, polish.y,
                               std::max(0.25 * ds, polish.s - 2.0 * ds),
                               std::min(cfg.t_max, polish.s + 2.0 * ds));
    double r = return_residual(accurate, polish.u, s, polish.y);
    if (r <= cfg.return_tol &&
        problem.direction_defect(polish.y, s * polish.u) > 10.0 * cfg.return_tol)
      certified.push_back({polish.y, polish.u, s, r});
  }

  result.eta_hat = cfg.t_max;
  for (const auto& c : certified) {
    PeriodicWitness w;
    w.point = c.y;
    w.coords = c.s * c.u;
    w.norm = c.s;
    w.return_residual = c.residual;
    w.direction_defect = problem.direction_defect(c.y, w.coords);
    result.witnesses.push_back(std::move(w));
    result.eta_hat = std::min(result.eta_hat, c.s);
  }
  std::sort(result.witnesses.begin(), result.witnesses.end(),
            [](const PeriodicWitness& a, const PeriodicWitness& b) { return a.norm < b.norm; });
  return result;
}

}  // namespace fblup
