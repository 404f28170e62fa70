#include "fblup/group_action.hpp"

#include <cmath>
#include <limits>

#include "fblup/matrix_util.hpp"
#include "fblup/rng.hpp"

namespace fblup {

namespace {

Eigen::VectorXd vectorize(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

}  // namespace

LieAlgebraAction::LieAlgebraAction(std::vector<Eigen::MatrixXd> algebra_basis,
                                   std::vector<Eigen::VectorXd> affine_parts)
    : basis_(std::move(algebra_basis)), affine_(std::move(affine_parts)) {
  if (basis_.empty()) throw InvalidInput("LieAlgebraAction: empty basis");
  n_ = static_cast<int>(basis_[0].rows());
  const int k = algebra_dim();
  for (const auto& a : basis_) {
    if (a.rows() != n_ || a.cols() != n_)
      throw DimensionMismatch("LieAlgebraAction: basis matrices must be square of equal size");
    if (!a.allFinite()) throw InvalidInput("LieAlgebraAction: non-finite basis matrix");
  }
  if (!affine_.empty()) {
    if (static_cast<int>(affine_.size()) != k)
      throw DimensionMismatch("LieAlgebraAction: affine parts must match basis size");
    for (const auto& b : affine_)
      if (b.size() != n_) throw DimensionMismatch("LieAlgebraAction: affine part dimension mismatch");
  }

  vec_basis_.resize(n_ * n_, k);
  for (int i = 0; i < k; ++i) vec_basis_.col(i) = vectorize(basis_[i]);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(vec_basis_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() < k || sv(k - 1) <= 1e-10 * sv(0))
    throw InvalidInput("LieAlgebraAction: basis matrices are not linearly independent");

  constants_ = StructureTensor(k);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      Eigen::MatrixXd comm = basis_[i] * basis_[j] - basis_[j] * basis_[i];
      Eigen::VectorXd c = svd.solve(vectorize(comm));
      if ((vec_basis_ * c - vectorize(comm)).norm() > 1e-10)
        throw InvalidInput("LieAlgebraAction: basis is not closed under commutators");
      for (int l = 0; l < k; ++l) constants_.set(i, j, l, c[l]);
    }
  }
}

Eigen::MatrixXd LieAlgebraAction::algebra_element(const Eigen::VectorXd& coords) const {
  if (coords.size() != algebra_dim())
    throw DimensionMismatch("algebra_element: coordinate size mismatch");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < algebra_dim(); ++i) m += coords[i] * basis_[i];
  return m;
}

Eigen::VectorXd LieAlgebraAction::coordinates_of(const Eigen::MatrixXd& m, double tol) const {
  if (m.rows() != n_ || m.cols() != n_)
    throw DimensionMismatch("coordinates_of: matrix size mismatch");
  Eigen::VectorXd target = vectorize(m);
  Eigen::VectorXd c = vec_basis_.colPivHouseholderQr().solve(target);
  if ((vec_basis_ * c - target).norm() > tol)
    throw NotInAlgebra("coordinates_of: residual exceeds tolerance");
  return c;
}

Eigen::MatrixXd LieAlgebraAction::anchor_matrix(const Eigen::VectorXd& x) const {
  if (x.size() != n_) throw DimensionMismatch("anchor_matrix: point dimension mismatch");
  Eigen::MatrixXd m(n_, algebra_dim());
  for (int i = 0; i < algebra_dim(); ++i) {
    m.col(i) = basis_[i] * x;
    if (has_affine()) m.col(i) += affine_[i];
  }
  return m;
}

Eigen::VectorXd LieAlgebraAction::exp_apply(const Eigen::VectorXd& coords,
                                            const Eigen::VectorXd& y) const {
  if (y.size() != n_) throw DimensionMismatch("exp_apply: point dimension mismatch");
  if (!has_affine()) return matrix_exp(algebra_element(coords)) * y;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_ + 1, n_ + 1);
  h.topLeftCorner(n_, n_) = algebra_element(coords);
  for (int i = 0; i < algebra_dim(); ++i) h.block(0, n_, n_, 1) += coords[i] * affine_[i];
  Eigen::VectorXd yh(n_ + 1);
  yh.head(n_) = y;
  yh[n_] = 1.0;
  return (matrix_exp(h) * yh).head(n_);
}

FoliationModule LieAlgebraAction::induced_foliation() const {
  std::vector<PolyVectorField> gens;
  gens.reserve(algebra_dim());
  for (int i = 0; i < algebra_dim(); ++i) {
    PolyVectorField field(n_);
    for (int row = 0; row < n_; ++row) {
      Polynomial p(n_);
      for (int col = 0; col < n_; ++col) {
        if (basis_[i](row, col) != 0.0)
          p = p + Polynomial::variable(n_, col) * basis_[i](row, col);
      }
      if (has_affine() && affine_[i][row] != 0.0)
        p = p + Polynomial::constant(n_, affine_[i][row]);
      field.component(row) = std::move(p);
    }
    gens.push_back(std::move(field));
  }
  // Structure functions of an action are constants: degree-0 ansatz.
  return FoliationModule(std::move(gens), 0);
}

Subspace isotropy_subalgebra(const LieAlgebraAction& act, const Eigen::VectorXd& x, double tol) {
  return kernel(act.anchor_matrix(x), tol);
}

BlowupFiberReport blowup_fiber_action(const LieAlgebraAction& act, const Eigen::VectorXd& x,
                                      const BlowupConfig& cfg) {
  return blowup_fiber(act.induced_foliation(), x, cfg);
}

Subspace adjoint_transport(const LieAlgebraAction& act, const Eigen::MatrixXd& g,
                           const Subspace& v, double tol) {
  if (v.ambient_dim() != act.algebra_dim())
    throw DimensionMismatch("adjoint_transport: subspace not in algebra coordinates");
  if (v.dim() == 0) return v;
  const Eigen::MatrixXd g_inv = g.partialPivLu().inverse();
  Eigen::MatrixXd cols(act.algebra_dim(), v.dim());
  for (int j = 0; j < v.dim(); ++j) {
    Eigen::MatrixXd w = act.algebra_element(v.basis().col(j));
    cols.col(j) = act.coordinates_of(g * w * g_inv, tol);
  }
  return orthonormalize(cols, 1e-10);
}

GroupoidElement unit_element(const BlowupPoint& p) {
  return GroupoidElement{Eigen::MatrixXd::Identity(p.base.size(), p.base.size()), p.subspace,
                         p.base};
}

BlowupPoint source(const GroupoidElement& gamma) {
  return BlowupPoint{gamma.x, gamma.v, std::nullopt};
}

BlowupPoint target(const LieAlgebraAction& act, const GroupoidElement& gamma) {
  if (act.has_affine())
    throw InvalidInput("target: groupoid arrows require a linear action");
  return BlowupPoint{gamma.g * gamma.x, adjoint_transport(act, gamma.g, gamma.v), std::nullopt};
}

GroupoidElement compose(const LieAlgebraAction& act, const GroupoidElement& gamma1,
                        const GroupoidElement& gamma2, double match_tol) {
  BlowupPoint mid = target(act, gamma2);
  if ((mid.base - gamma1.x).norm() > match_tol ||
      distance(mid.subspace, gamma1.v) > match_tol)
    throw NotComposable("compose: target of the right factor does not match the left source");
  return GroupoidElement{gamma1.g * gamma2.g, gamma2.v, gamma2.x};
}

GroupoidElement inverse_element(const LieAlgebraAction& act, const GroupoidElement& gamma) {
  BlowupPoint tgt = target(act, gamma);
  return GroupoidElement{gamma.g.inverse(), tgt.subspace, tgt.base};
}

Decision local_log_membership(const LieAlgebraAction& act, const Eigen::MatrixXd& h,
                              const Subspace& v, double eta2, double tol) {
  std::optional<Eigen::MatrixXd> l = principal_log(h);
  if (!l) return Decision::Inconclusive;
  if (l->norm() >= eta2) return Decision::Inconclusive;
  Eigen::VectorXd coords;
  try {
    coords = act.coordinates_of(*l, 1e-8);
  } catch (const NotInAlgebra&) {
    return Decision::Inconclusive;
  }
  const double nc = coords.norm();
  if (nc < 1e-14) return Decision::Yes;
  const double orth = v.orthogonal_component(coords).norm() / nc;
  return orth <= tol ? Decision::Yes : Decision::No;
}

Decision coset_equal(const LieAlgebraAction& act, const GroupoidElement& gamma1,
                     const GroupoidElement& gamma2, double tol, double match_tol) {
  if ((gamma1.x - gamma2.x).norm() > match_tol ||
      distance(gamma1.v, gamma2.v) > match_tol)
    throw InvalidInput("coset_equal: arrows do not share (V, x)");
  const Subspace& v = gamma1.v;
  Eigen::MatrixXd h = gamma1.g.partialPivLu().solve(gamma2.g);

  if (v.dim() == 0) {
    // The coset is a single group element; equality is decidable.
    const double dev = (h - Eigen::MatrixXd::Identity(h.rows(), h.cols())).norm();
    return dev <= tol ? Decision::Yes : Decision::No;
  }

  for (int iter = 0; iter < 50; ++iter) {
    const double dev = (h - Eigen::MatrixXd::Identity(h.rows(), h.cols())).norm();
    if (dev <= tol) return Decision::Yes;

    if (dev < 0.5) {
      // Certified chart: decide by the orthogonal component of the log.
      Decision d = local_log_membership(act, h, v, 0.7, tol);
      if (d != Decision::Inconclusive) return d;
    }

    // Projected descent: strip the V-component of a log proposal.
    std::optional<Eigen::MatrixXd> lp = log_proposal(h);
    if (!lp) return Decision::Inconclusive;
    Eigen::VectorXd coords;
    try {
      coords = act.coordinates_of(*lp, 1e-6);
    } catch (const NotInAlgebra&) {
      return Decision::Inconclusive;
    }
    Eigen::VectorXd w = coords - v.orthogonal_component(coords);
    if (w.norm() < 1e-13) return Decision::Inconclusive;

    bool stepped = false;
    for (double alpha = 1.0; alpha >= 1.0 / 64.0; alpha *= 0.5) {
      Eigen::MatrixXd candidate = matrix_exp(-alpha * act.algebra_element(w)) * h;
      if ((candidate - Eigen::MatrixXd::Identity(h.rows(), h.cols())).norm() < dev) {
        h = candidate;
        stepped = true;
        break;
      }
    }
    if (!stepped) return Decision::Inconclusive;
  }
  return Decision::Inconclusive;
}

double groupoid_metric(const LieAlgebraAction& act, const GroupoidElement& gamma1,
                       const GroupoidElement& gamma2, int sample_count, std::uint64_t seed) {
  const double d_base = (gamma1.x - gamma2.x).norm();
  const double d_grass = distance(gamma1.v, gamma2.v);

  auto cloud = [&](const GroupoidElement& gamma, std::uint64_t stream) {
    std::vector<Eigen::MatrixXd> pts;
    pts.push_back(gamma.g);
    if (gamma.v.dim() > 0) {
      std::mt19937_64 rng(derive_seed(seed, stream));
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (int s = 0; s < sample_count; ++s) {
        Eigen::VectorXd u = unit_vector(rng, gamma.v.dim());
        Eigen::VectorXd w = unif(rng) * (gamma.v.basis() * u);
        pts.push_back(gamma.g * matrix_exp(act.algebra_element(w)));
      }
    }
    return pts;
  };

  const auto c1 = cloud(gamma1, 0x31);
  const auto c2 = cloud(gamma2, 0x32);
  double d_group = std::numeric_limits<double>::infinity();
  for (const auto& a : c1)
    for (const auto& b : c2) d_group = std::min(d_group, (a - b).norm());
  return d_base + d_grass + d_group;
}

PeriodicBoundResult periodic_bound(const LieAlgebraAction& act, const PeriodicBoundConfig& cfg) {
  PeriodicSearchProblem problem;
  problem.point_dim = act.ambient_dim();
  problem.coord_dim = act.algebra_dim();
  problem.apply = [&act](const Eigen::VectorXd& w, const Eigen::VectorXd& y) {
    return act.exp_apply(w, y);
  };
  problem.direction_defect = [&act](const Eigen::VectorXd& y, const Eigen::VectorXd& coords) {
    const double nc = coords.norm();
    if (nc < 1e-300) return 0.0;
    return isotropy_subalgebra(act, y).orthogonal_component(coords / nc).norm();
  };
  return periodic_bound_search(problem, cfg);
}

EmbeddingReport embedding_check(const LieAlgebraAction& act, const BlowupPoint& p,
                                const BlowupFiberReport* fiber, const EmbeddingConfig& cfg) {
  EmbeddingReport report;

  auto check_at = [&](const Subspace& v, const Eigen::VectorXd& base, std::uint64_t stream) {
    const Subspace transversal = annihilator(v);
    std::vector<Eigen::VectorXd> xs = cfg.explicit_points;
    if (xs.empty()) {
      std::mt19937_64 rng(derive_seed(cfg.seed, stream));
      for (int s = 0; s < cfg.transversal_samples; ++s) {
        if (transversal.dim() == 0) break;
        xs.push_back(transversal.basis() * ball_point(rng, transversal.dim(), cfg.ball_radius));
      }
    }
    for (std::size_t a = 0; a < xs.size(); ++a) {
      for (std::size_t b = a + 1; b < xs.size(); ++b) {
        if ((xs[a] - xs[b]).norm() < 1e-12) continue;
        GroupoidElement ga{matrix_exp(act.algebra_element(xs[a])), v, base};
        GroupoidElement gb{matrix_exp(act.algebra_element(xs[b])), v, base};
        ++report.pairs_checked;
        Decision d = coset_equal(act, ga, gb, cfg.tol);
        if (d == Decision::Yes) {
          ++report.collisions;
          report.ok = false;
        } else if (d == Decision::Inconclusive) {
          if (groupoid_metric(act, ga, gb, cfg.metric_samples, derive_seed(cfg.seed, stream + b)) >
              cfg.separation_tol) {
            // Distinct with metric evidence; not a collision.
          } else {
            ++report.inconclusive;
          }
        }
      }
    }
  };

  check_at(p.subspace, p.base, 0xe0);

  if (fiber) {
    int used = 0;
    for (const auto& ray : fiber->rays) {
      if (used >= cfg.perturbed_checks) break;
      if (!ray.converged) continue;
      // A nearby blow-up point drawn from the approach data of the fiber.
      const Eigen::VectorXd y = fiber->base + 1e-3 * ray.direction;
      const Subspace w = fiber->clusters[ray.cluster].subspace;
      check_at(w, y, 0xf0 + used);
      ++used;
    }
  }
  return report;
}

ClosedSubgroupReport closed_subgroup_check(const LieAlgebraAction& act, const Subspace& v,
                                           const ClosedSubgroupConfig& cfg) {
  if (v.ambient_dim() != act.algebra_dim())
    throw DimensionMismatch("closed_subgroup_check: subspace not in algebra coordinates");
  ClosedSubgroupReport report;
  std::mt19937_64 rng(derive_seed(cfg.seed, 0xc5));
  std::uniform_int_distribution<int> len_dist(1, cfg.max_word_length);
  std::uniform_real_distribution<double> coeff(-cfg.coeff_scale, cfg.coeff_scale);
  const int n = act.ambient_dim();

  for (int wi = 0; wi < cfg.words; ++wi) {
    ++report.words_sampled;
    Eigen::MatrixXd word = Eigen::MatrixXd::Identity(n, n);
    const int len = len_dist(rng);
    for (int step = 0; step < len; ++step) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(act.algebra_dim());
      if (v.dim() > 0) {
        Eigen::VectorXd u(v.dim());
        for (int i = 0; i < v.dim(); ++i) u[i] = coeff(rng);
        w = v.basis() * u;
      }
      word = word * matrix_exp(act.algebra_element(w));
    }
    Decision d = local_log_membership(act, word, v, cfg.eta2, cfg.tol);
    if (d == Decision::Inconclusive) continue;
    ++report.words_in_chart;
    if (d == Decision::No) {
      ++report.violations;
      report.ok = false;
    }
  }
  return report;
}

}  // namespace fblup
