#include "fblup/foliation.hpp"

#include <cmath>

#include "fblup/errors.hpp"
#include "fblup/rng.hpp"

namespace fblup {

std::vector<Eigen::VectorXd> collocation_points(const VectorFieldFamily& family,
                                                const Eigen::VectorXd& x,
                                                const CollocationConfig& cfg) {
  const int n = family.ambient_dim();
  const int k = family.num_generators();
  const int nbasis = static_cast<int>(monomials_up_to_degree(n, cfg.degree).size());
  int nsamples = cfg.samples > 0 ? cfg.samples : 4 * nbasis * k;
  nsamples = std::max(nsamples, (nbasis * k + n - 1) / n + 1);
  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::VectorXd> pts(nsamples);
  for (int s = 0; s < nsamples; ++s) pts[s] = x + ball_point(rng, n, cfg.radius);
  return pts;
}

GeneratorFit fit_in_generators_data(const VectorFieldFamily& family, const Eigen::VectorXd& x,
                                    const std::vector<Eigen::VectorXd>& sample_points,
                                    const std::vector<Eigen::VectorXd>& rhs_values,
                                    const CollocationConfig& cfg,
                                    const std::vector<Eigen::VectorXd>* generator_points) {
  const int n = family.ambient_dim();
  const int k = family.num_generators();
  const auto monomials = monomials_up_to_degree(n, cfg.degree);
  const int nbasis = static_cast<int>(monomials.size());
  const int nsamples = static_cast<int>(sample_points.size());
  if (rhs_values.size() != sample_points.size())
    throw DimensionMismatch("fit_in_generators_data: sample/value count mismatch");
  if (generator_points && generator_points->size() != sample_points.size())
    throw DimensionMismatch("fit_in_generators_data: generator point count mismatch");
  if (nsamples * n < nbasis * k)
    throw InvalidInput("fit_in_generators_data: underdetermined collocation system");

  Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(static_cast<long>(nsamples) * n, k * nbasis);
  Eigen::VectorXd rhs_vec(static_cast<long>(nsamples) * n);
  double rhs_scale = 0.0;

  for (int s = 0; s < nsamples; ++s) {
    const Eigen::VectorXd delta = sample_points[s] - x;
    const Eigen::MatrixXd ev =
        family.eval_matrix(generator_points ? (*generator_points)[s] : sample_points[s]);
    Eigen::VectorXd mono(nbasis);
    for (int b = 0; b < nbasis; ++b) {
      double m = 1.0;
      for (int v = 0; v < n; ++v)
        for (int p = 0; p < monomials[b][v]; ++p) m *= delta[v];
      mono[b] = m;
    }
    for (int i = 0; i < k; ++i)
      for (int b = 0; b < nbasis; ++b)
        lhs.block(static_cast<long>(s) * n, i * nbasis + b, n, 1) = ev.col(i) * mono[b];
    const Eigen::VectorXd& r = rhs_values[s];
    if (r.size() != n) throw DimensionMismatch("fit_in_generators_data: rhs size mismatch");
    rhs_vec.segment(static_cast<long>(s) * n, n) = r;
    rhs_scale = std::max(rhs_scale, r.norm());
  }

  // Minimum-norm least squares; rank deficiency is expected whenever the
  // generators satisfy module relations near x.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(lhs, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(cfg.rank_tol);
  Eigen::VectorXd coeffs = svd.solve(rhs_vec);

  double worst = 0.0;
  Eigen::VectorXd fitted = lhs * coeffs;
  for (int s = 0; s < nsamples; ++s) {
    double err = (fitted.segment(static_cast<long>(s) * n, n) -
                  rhs_vec.segment(static_cast<long>(s) * n, n))
                     .norm();
    worst = std::max(worst, err);
  }

  GeneratorFit out;
  out.constant_terms.resize(k);
  // Monomial 0 is the constant term in the graded enumeration.
  for (int i = 0; i < k; ++i) out.constant_terms[i] = coeffs[i * nbasis];
  out.residual = worst / std::max(1.0, rhs_scale);
  return out;
}

GeneratorFit fit_in_generators(const VectorFieldFamily& family, const Eigen::VectorXd& x,
                               const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& rhs,
                               const CollocationConfig& cfg) {
  std::vector<Eigen::VectorXd> pts = collocation_points(family, x, cfg);
  std::vector<Eigen::VectorXd> values;
  values.reserve(pts.size());
  for (const auto& y : pts) values.push_back(rhs(y));
  return fit_in_generators_data(family, x, pts, values, cfg);
}

FoliationModule::FoliationModule(std::vector<PolyVectorField> generators, int coeff_degree)
    : coeff_degree_(coeff_degree), generators_(std::move(generators)) {
  if (generators_.empty()) throw InvalidInput("FoliationModule: at least one generator required");
  if (coeff_degree_ < 0) throw InvalidInput("FoliationModule: negative coefficient degree");
  ambient_ = generators_[0].ambient_dim();
  for (const auto& g : generators_)
    if (g.ambient_dim() != ambient_)
      throw DimensionMismatch("FoliationModule: generators on different ambient spaces");
  const int k = num_generators();
  brackets_.reserve(static_cast<std::size_t>(k) * (k - 1) / 2);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) brackets_.push_back(bracket(generators_[i], generators_[j]));
}

const PolyVectorField& FoliationModule::bracket_of(int i, int j) const {
  // i < j required; index into the packed upper triangle.
  const int k = num_generators();
  int idx = i * k - i * (i + 1) / 2 + (j - i - 1);
  return brackets_[idx];
}

Eigen::MatrixXd FoliationModule::eval_matrix(const Eigen::VectorXd& y) const {
  if (y.size() != ambient_) throw DimensionMismatch("eval_matrix: point dimension mismatch");
  if (!y.allFinite()) throw InvalidInput("eval_matrix: non-finite point");
  Eigen::MatrixXd m(ambient_, num_generators());
  for (int i = 0; i < num_generators(); ++i) m.col(i) = generators_[i].evaluate(y);
  return m;
}

Eigen::MatrixXd FoliationModule::generator_jacobian(const Eigen::VectorXd& y, int i) const {
  return generators_[i].jacobian(y);
}

VectorFieldFamily::StructureFit FoliationModule::structure_functions_at(const Eigen::VectorXd& x) const {
  CollocationConfig cfg;
  cfg.degree = coeff_degree_;
  return structure_functions_at(x, cfg);
}

VectorFieldFamily::StructureFit FoliationModule::structure_functions_at(
    const Eigen::VectorXd& x, const CollocationConfig& cfg, double tol) const {
  const int k = num_generators();
  StructureFit fit{StructureTensor(k), 0.0};
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const PolyVectorField& br = bracket_of(i, j);
      GeneratorFit g = fit_in_generators(
          *this, x, [&br](const Eigen::VectorXd& y) { return br.evaluate(y); }, cfg);
      for (int l = 0; l < k; ++l) fit.tensor.set(i, j, l, g.constant_terms[l]);
      fit.residual = std::max(fit.residual, g.residual);
    }
  }
  if (fit.residual > tol)
    throw NotBracketClosed("structure_functions_at: collocation residual " +
                           std::to_string(fit.residual) + " exceeds tolerance");
  return fit;
}

FoliationModule FoliationModule::pullback(int extra_dims) const {
  if (extra_dims < 1) throw InvalidInput("pullback: extra_dims must be >= 1");
  std::vector<PolyVectorField> gens;
  gens.reserve(num_generators() + extra_dims);
  for (const auto& g : generators_) gens.push_back(g.extend(extra_dims));
  for (int i = 0; i < extra_dims; ++i) {
    PolyVectorField coord(ambient_ + extra_dims);
    coord.component(ambient_ + i) = Polynomial::constant(ambient_ + extra_dims, 1.0);
    gens.push_back(std::move(coord));
  }
  return FoliationModule(std::move(gens), coeff_degree_);
}

Subspace isotropy(const VectorFieldFamily& family, const Eigen::VectorXd& x, double tol) {
  return kernel(family.eval_matrix(x), tol);
}

Subspace tangent_fiber(const VectorFieldFamily& family, const Eigen::VectorXd& x, double tol) {
  return column_span(family.eval_matrix(x), tol);
}

RegularTestResult regular_test(const VectorFieldFamily& family, const Eigen::VectorXd& x,
                               double radius, int samples, double tol, std::uint64_t seed) {
  if (radius <= 0) throw InvalidInput("regular_test: radius must be positive");
  if (samples < 8) throw InvalidInput("regular_test: need at least 8 samples");
  RegularTestResult out;
  out.dim_tangent = tangent_fiber(family, x, tol).dim();
  out.dim_isotropy = family.num_generators() - out.dim_tangent;
  std::mt19937_64 rng(seed);
  out.is_regular = true;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd y = x + ball_point(rng, family.ambient_dim(), radius);
    if (tangent_fiber(family, y, tol).dim() != out.dim_tangent) {
      out.is_regular = false;
      break;
    }
  }
  return out;
}

void check_bracket_closure(const FoliationModule& f, const std::vector<Eigen::VectorXd>& probes,
                           double tol) {
  CollocationConfig cfg;
  cfg.degree = f.coeff_degree();
  for (const auto& x : probes) f.structure_functions_at(x, cfg, tol);
}

}  // namespace fblup
