#include <doctest.h>

#include <random>

#include "fblup/foliation.hpp"
#include "fblup/rng.hpp"

using namespace fblup;

namespace {

PolyVectorField constant_field(int n, int direction) {
  PolyVectorField f(n);
  f.component(direction) = Polynomial::constant(n, 1.0);
  return f;
}

// x d/dx - y d/dy, y d/dx, x d/dy on the plane.
std::vector<PolyVectorField> sl2_fields() {
  PolyVectorField h(2), e(2), f(2);
  h.component(0) = Polynomial::variable(2, 0);
  h.component(1) = Polynomial::variable(2, 1) * -1.0;
  e.component(0) = Polynomial::variable(2, 1);
  f.component(1) = Polynomial::variable(2, 0);
  return {h, e, f};
}

// x d/dx, y d/dx, x d/dy, y d/dy.
std::vector<PolyVectorField> vanish_fields() {
  std::vector<PolyVectorField> gens;
  for (int comp = 0; comp < 2; ++comp)
    for (int var = 0; var < 2; ++var) {
      PolyVectorField f(2);
      f.component(comp) = Polynomial::variable(2, var);
      gens.push_back(std::move(f));
    }
  return gens;
}

bool poly_equal(const Polynomial& a, const Polynomial& b) { return (a - b).is_zero(); }

bool field_equal(const PolyVectorField& a, const PolyVectorField& b) {
  for (int i = 0; i < a.ambient_dim(); ++i)
    if (!poly_equal(a.component(i), b.component(i))) return false;
  return true;
}

PolyVectorField random_int_field(std::mt19937_64& rng, int n, int degree) {
  std::uniform_int_distribution<int> coeff(-3, 3);
  PolyVectorField f(n);
  const auto monos = monomials_up_to_degree(n, degree);
  for (int c = 0; c < n; ++c) {
    Polynomial p(n);
    for (const auto& e : monos) p.add_term(e, static_cast<double>(coeff(rng)));
    f.component(c) = std::move(p);
  }
  return f;
}

}  // namespace

TEST_CASE("polynomial arithmetic basics") {
  Polynomial x = Polynomial::variable(2, 0);
  Polynomial y = Polynomial::variable(2, 1);
  Polynomial p = x * x + y * 3.0;
  Eigen::Vector2d at(2.0, 5.0);
  CHECK(p.evaluate(at) == doctest::Approx(19.0));
  CHECK(p.derivative(0).evaluate(at) == doctest::Approx(4.0));
  CHECK(p.derivative(1).evaluate(at) == doctest::Approx(3.0));
  CHECK(p.degree() == 2);
  CHECK((p - p).is_zero());
}

TEST_CASE("eval_matrix on the constant field") {
  FoliationModule f({constant_field(1, 0)}, 0);
  Eigen::VectorXd y(1);
  y << 5.0;
  Eigen::MatrixXd m = f.eval_matrix(y);
  CHECK(m.rows() == 1);
  CHECK(m.cols() == 1);
  CHECK(m(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("eval_matrix of the sl2 fields at (1,0)") {
  FoliationModule f(sl2_fields(), 0);
  Eigen::Vector2d x(1.0, 0.0);
  Eigen::MatrixXd m = f.eval_matrix(x);
  Eigen::MatrixXd expected(2, 3);
  expected << 1, 0, 0,
              0, 0, 1;
  CHECK((m - expected).norm() < 1e-14);
}

TEST_CASE("eval_matrix vanishes at the origin for the vanishing module") {
  FoliationModule f(vanish_fields(), 0);
  CHECK(f.eval_matrix(Eigen::Vector2d::Zero()).norm() == doctest::Approx(0.0));
}

TEST_CASE("isotropy fibers") {
  FoliationModule regular({constant_field(2, 0)}, 0);
  CHECK(isotropy(regular, Eigen::Vector2d(0.7, -0.3)).dim() == 0);

  FoliationModule sl2(sl2_fields(), 0);
  Subspace iso = isotropy(sl2, Eigen::Vector2d(1.0, 0.0));
  REQUIRE(iso.dim() == 1);
  CHECK(std::abs(std::abs(iso.basis()(1, 0)) - 1.0) < 1e-12);  // the E coordinate

  FoliationModule vanish(vanish_fields(), 0);
  CHECK(isotropy(vanish, Eigen::Vector2d::Zero()).dim() == 4);
}

TEST_CASE("tangent fibers and rank-nullity") {
  FoliationModule regular({constant_field(2, 0)}, 0);
  Subspace t = tangent_fiber(regular, Eigen::Vector2d(3.0, 4.0));
  CHECK(t.dim() == 1);
  CHECK(std::abs(std::abs(t.basis()(0, 0)) - 1.0) < 1e-12);

  FoliationModule sl2(sl2_fields(), 0);
  CHECK(tangent_fiber(sl2, Eigen::Vector2d(1.0, 0.0)).dim() == 2);
  CHECK(tangent_fiber(sl2, Eigen::Vector2d::Zero()).dim() == 0);

  std::mt19937_64 rng(5);
  for (int it = 0; it < 20; ++it) {
    Eigen::Vector2d x(gaussian_vector(rng, 1)[0], gaussian_vector(rng, 1)[0]);
    CHECK(tangent_fiber(sl2, x).dim() + isotropy(sl2, x).dim() == sl2.num_generators());
  }
}

TEST_CASE("regular_test classifies the standard examples") {
  FoliationModule regular({constant_field(2, 0)}, 0);
  CHECK(regular_test(regular, Eigen::Vector2d(0.1, 0.2), 0.3, 16).is_regular);

  FoliationModule sl2(sl2_fields(), 0);
  RegularTestResult at0 = regular_test(sl2, Eigen::Vector2d::Zero(), 0.1, 16);
  CHECK_FALSE(at0.is_regular);
  CHECK(at0.dim_tangent == 0);

  // x d/dx on the line: singular at 0, regular at 1.
  PolyVectorField xdx(1);
  xdx.component(0) = Polynomial::variable(1, 0);
  FoliationModule euler({xdx}, 0);
  CHECK_FALSE(regular_test(euler, Eigen::VectorXd::Zero(1), 0.1, 16).is_regular);
  CHECK(regular_test(euler, Eigen::VectorXd::Ones(1), 0.1, 16).is_regular);

  CHECK_THROWS_AS(regular_test(regular, Eigen::Vector2d::Zero(), 0.1, 4), InvalidInput);
}

TEST_CASE("bracket of coordinate fields vanishes") {
  PolyVectorField dx = constant_field(2, 0), dy = constant_field(2, 1);
  CHECK(field_equal(bracket(dx, dy), PolyVectorField(2)));
}

TEST_CASE("bracket [x d/dx, d/dx] = -d/dx") {
  PolyVectorField xdx(1);
  xdx.component(0) = Polynomial::variable(1, 0);
  PolyVectorField dx = constant_field(1, 0);
  PolyVectorField expected = dx * -1.0;
  CHECK(field_equal(bracket(xdx, dx), expected));
}

TEST_CASE("bracket of the sl2 nilpotent pair") {
  // With [X, Y] = (DY)X - (DX)Y, linear fields obey [X_A, X_B] = X_{BA - AB},
  // so [y d/dx, x d/dy] = y d/dy - x d/dx.
  auto fields = sl2_fields();
  PolyVectorField got = bracket(fields[1], fields[2]);
  PolyVectorField expected = fields[0] * -1.0;
  CHECK(field_equal(got, expected));
}

TEST_CASE("Jacobi identity holds exactly for integer fields") {
  std::mt19937_64 rng(29);
  for (int it = 0; it < 15; ++it) {
    PolyVectorField x = random_int_field(rng, 2, 2);
    PolyVectorField y = random_int_field(rng, 2, 2);
    PolyVectorField z = random_int_field(rng, 2, 2);
    PolyVectorField jac = bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) +
                          bracket(z, bracket(x, y));
    CHECK(field_equal(jac, PolyVectorField(2)));
  }
}

TEST_CASE("structure functions of the sl2 action fields") {
  FoliationModule sl2(sl2_fields(), 0);
  auto fit = sl2.structure_functions_at(Eigen::Vector2d(0.2, -0.1));
  CHECK(fit.residual < 1e-10);
  // Field brackets give the negative of the matrix commutator constants.
  CHECK(fit.tensor(0, 1, 1) == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(fit.tensor(0, 2, 2) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(fit.tensor(1, 2, 0) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(fit.tensor(1, 0, 1) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::abs(fit.tensor(0, 1, 0)) < 1e-9);
  CHECK(std::abs(fit.tensor(0, 1, 2)) < 1e-9);
  CHECK(fit.tensor.antisymmetry_defect() == 0.0);
}

TEST_CASE("structure functions of an abelian module vanish") {
  FoliationModule abelian({constant_field(2, 0), constant_field(2, 1)}, 0);
  auto fit = abelian.structure_functions_at(Eigen::Vector2d(0.3, 0.4));
  CHECK(fit.residual < 1e-12);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l) CHECK(std::abs(fit.tensor(i, j, l)) < 1e-12);
}

TEST_CASE("single-generator module has zero structure functions") {
  PolyVectorField xdx(1);
  xdx.component(0) = Polynomial::variable(1, 0);
  FoliationModule euler({xdx}, 0);
  auto fit = euler.structure_functions_at(Eigen::VectorXd::Ones(1));
  CHECK(std::abs(fit.tensor(0, 0, 0)) < 1e-12);
}

TEST_CASE("structure functions of the vanishing module are exact constants") {
  FoliationModule vanish(vanish_fields(), 0);
  auto fit = vanish.structure_functions_at(Eigen::Vector2d::Zero());
  CHECK(fit.residual < 1e-10);
  // [x d/dx, y d/dx] = -y d/dx (generator 1).
  CHECK(fit.tensor(0, 1, 1) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("a module that is not bracket closed is rejected") {
  // d/dx together with x^2 d/dy: their bracket 2x d/dy needs the coefficient
  // 2/x, which no polynomial ansatz fits on a neighborhood.
  PolyVectorField dx = constant_field(2, 0);
  PolyVectorField x2dy(2);
  x2dy.component(1) = Polynomial::variable(2, 0) * Polynomial::variable(2, 0);
  FoliationModule bad({dx, x2dy}, 2);
  CHECK_THROWS_AS(check_bracket_closure(bad, {Eigen::Vector2d(0.5, 0.0)}, 1e-8),
                  NotBracketClosed);
}

TEST_CASE("fit_in_generators recovers known coefficient functions") {
  FoliationModule sl2(sl2_fields(), 0);
  Eigen::Vector2d x(0.8, 0.2);
  auto rhs = [&sl2](const Eigen::VectorXd& y) {
    Eigen::MatrixXd ev = sl2.eval_matrix(y);
    return Eigen::VectorXd(2.0 * ev.col(0) - 0.5 * ev.col(2));
  };
  CollocationConfig cfg;
  cfg.degree = 1;
  GeneratorFit fit = fit_in_generators(sl2, x, rhs, cfg);
  CHECK(fit.residual < 1e-10);
  CHECK(fit.constant_terms[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(fit.constant_terms[1] == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(fit.constant_terms[2] == doctest::Approx(-0.5).epsilon(1e-8));
}

TEST_CASE("pullback extends generators and appends coordinate fields") {
  FoliationModule regular({constant_field(1, 0)}, 0);
  FoliationModule pulled = regular.pullback(1);
  CHECK(pulled.ambient_dim() == 2);
  CHECK(pulled.num_generators() == 2);
  Eigen::MatrixXd m = pulled.eval_matrix(Eigen::Vector2d(0.5, -1.0));
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 0, 0, 1;
  CHECK((m - expected).norm() < 1e-14);

  FoliationModule sl2(sl2_fields(), 0);
  CHECK(sl2.pullback(1).num_generators() == 4);
  CHECK(sl2.pullback(1).ambient_dim() == 3);
}

TEST_CASE("pullback isotropy is the base isotropy in the leading block") {
  FoliationModule sl2(sl2_fields(), 0);
  FoliationModule pulled = sl2.pullback(2);
  std::mt19937_64 rng(31);
  for (int it = 0; it < 10; ++it) {
    Eigen::Vector2d x(gaussian_vector(rng, 1)[0], gaussian_vector(rng, 1)[0]);
    Eigen::VectorXd xt(4);
    xt << x[0], x[1], 0.4, -0.7;
    Subspace base = isotropy(sl2, x);
    Subspace lifted = isotropy(pulled, xt);
    REQUIRE(lifted.dim() == base.dim());
    if (lifted.dim() == 0) continue;
    // No component along the auxiliary coordinate fields.
    CHECK(lifted.basis().bottomRows(2).norm() < 1e-10);
    Subspace dropped = orthonormalize(lifted.basis().topRows(3), 1e-10);
    CHECK(distance(dropped, base) < 1e-9);
  }
}

TEST_CASE("foliation construction validates input") {
  CHECK_THROWS_AS(FoliationModule({}, 0), InvalidInput);
  CHECK_THROWS_AS(FoliationModule({constant_field(1, 0), constant_field(2, 0)}, 0),
                  DimensionMismatch);
}

TEST_CASE("bump flow field evaluates the flat bump") {
  BumpFlowField bump;
  Eigen::VectorXd inside(1), outside(1), edge(1);
  inside << 0.0;
  outside << 1.5;
  edge << 1.0;
  CHECK(bump.eval_matrix(inside)(0, 0) == doctest::Approx(std::exp(-1.0)));
  CHECK(bump.eval_matrix(outside)(0, 0) == 0.0);
  CHECK(bump.eval_matrix(edge)(0, 0) == 0.0);
  CHECK(bump.generator_jacobian(outside, 0)(0, 0) == 0.0);
  Eigen::VectorXd near(1);
  near << 0.5;
  const double h = 1e-6;
  Eigen::VectorXd up(1), dn(1);
  up << 0.5 + h;
  dn << 0.5 - h;
  double fd = (bump.eval_matrix(up)(0, 0) - bump.eval_matrix(dn)(0, 0)) / (2 * h);
  CHECK(bump.generator_jacobian(near, 0)(0, 0) == doctest::Approx(fd).epsilon(1e-6));
}
