#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <random>

#include "fblup/rng.hpp"
#include "fblup/subspace.hpp"

using namespace fblup;

namespace {

// Exact rank of an integer matrix by fraction-free Gaussian elimination,
// independent of any floating-point path.
int exact_rank(std::vector<std::vector<std::int64_t>> m) {
  const int rows = static_cast<int>(m.size());
  const int cols = rows ? static_cast<int>(m[0].size()) : 0;
  int rank = 0;
  for (int col = 0; col < cols && rank < rows; ++col) {
    int pivot = -1;
    for (int r = rank; r < rows; ++r)
      if (m[r][col] != 0) {
        pivot = r;
        break;
      }
    if (pivot < 0) continue;
    std::swap(m[rank], m[pivot]);
    for (int r = rank + 1; r < rows; ++r) {
      if (m[r][col] == 0) continue;
      const std::int64_t a = m[rank][col], b = m[r][col];
      for (int c = 0; c < cols; ++c) m[r][c] = m[r][c] * a - m[rank][c] * b;
    }
    ++rank;
  }
  return rank;
}

Subspace line(double x, double y) {
  Eigen::MatrixXd b(2, 1);
  b << x, y;
  return orthonormalize(b, 1e-10);
}

}  // namespace

TEST_CASE("orthonormalize identity gives the full space") {
  Subspace s = orthonormalize(Eigen::MatrixXd::Identity(3, 3), 1e-10);
  CHECK(s.dim() == 3);
  CHECK(s.ambient_dim() == 3);
}

TEST_CASE("orthonormalize drops collinear columns") {
  Eigen::MatrixXd raw(3, 2);
  raw << 1, 2, 0, 0, 0, 0;
  Subspace s = orthonormalize(raw, 1e-10);
  CHECK(s.dim() == 1);
  CHECK(std::abs(std::abs(s.basis()(0, 0)) - 1.0) < 1e-12);
}

TEST_CASE("orthonormalize rank matches exact row reduction") {
  // Integer 5x3 matrix whose third column is the sum of the first two.
  std::vector<std::vector<std::int64_t>> im = {
      {3, -1, 2}, {1, 4, 5}, {-2, 2, 0}, {7, 0, 7}, {1, 1, 2}};
  CHECK(exact_rank(im) == 2);
  Eigen::MatrixXd raw(5, 3);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 3; ++c) raw(r, c) = static_cast<double>(im[r][c]);
  CHECK(orthonormalize(raw, 1e-10).dim() == 2);
}

TEST_CASE("orthonormalize rejects non-finite input") {
  Eigen::MatrixXd raw(2, 1);
  raw << 1.0, std::nan("");
  CHECK_THROWS_AS(orthonormalize(raw, 1e-10), InvalidInput);
  CHECK_THROWS_AS(orthonormalize(Eigen::MatrixXd::Identity(2, 2), 0.0), InvalidInput);
}

TEST_CASE("kernel of the zero map is everything") {
  Subspace s = kernel(Eigen::MatrixXd::Zero(2, 3), 1e-10);
  CHECK(s.dim() == 3);
}

TEST_CASE("kernel of an injective map is zero") {
  CHECK(kernel(Eigen::MatrixXd::Identity(3, 3), 1e-10).dim() == 0);
}

TEST_CASE("kernel of the sl2 evaluation at (1,0)") {
  // Columns H(1,0), E(1,0), F(1,0): nullspace is the E coordinate by hand.
  Eigen::MatrixXd m(2, 3);
  m << 1, 0, 0,
       0, 0, 1;
  Subspace s = kernel(m, 1e-10);
  REQUIRE(s.dim() == 1);
  CHECK(std::abs(std::abs(s.basis()(1, 0)) - 1.0) < 1e-12);
}

TEST_CASE("distance basics") {
  Subspace e1 = Subspace::coordinate_span(2, {0});
  Subspace e2 = Subspace::coordinate_span(2, {1});
  CHECK(distance(e1, e1) == doctest::Approx(0.0));
  CHECK(distance(e1, e2) == doctest::Approx(std::sqrt(2.0)));
  // Line at 45 degrees: gap is sqrt(2) sin(pi/4) = 1.
  CHECK(distance(e1, line(std::cos(M_PI / 4), std::sin(M_PI / 4))) == doctest::Approx(1.0));
  CHECK_THROWS_AS(distance(e1, Subspace::zero(3)), DimensionMismatch);
}

TEST_CASE("distance across dimensions is at least one") {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 50; ++it) {
    Eigen::MatrixXd a(4, 2), b(4, 1);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 2; ++c) a(r, c) = gaussian_vector(rng, 1)[0];
      b(r, 0) = gaussian_vector(rng, 1)[0];
    }
    Subspace va = orthonormalize(a, 1e-10);
    Subspace vb = orthonormalize(b, 1e-10);
    if (va.dim() != 2 || vb.dim() != 1) continue;
    CHECK(distance(va, vb) >= 1.0 - 1e-9);
  }
}

TEST_CASE("distance is a metric on fixed-dimension subspaces") {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 100; ++it) {
    auto random_plane = [&] {
      Eigen::MatrixXd m(4, 2);
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 2; ++c) m(r, c) = gaussian_vector(rng, 1)[0];
      return orthonormalize(m, 1e-10);
    };
    Subspace a = random_plane(), b = random_plane(), c = random_plane();
    if (a.dim() != 2 || b.dim() != 2 || c.dim() != 2) continue;
    CHECK(distance(a, b) >= 0.0);
    CHECK(distance(a, b) == doctest::Approx(distance(b, a)));
    CHECK(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
  }
}

TEST_CASE("kernel is orthogonal to the row action") {
  std::mt19937_64 rng(13);
  const double tol = 1e-8;
  for (int it = 0; it < 50; ++it) {
    Eigen::MatrixXd m(3, 5);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 5; ++c) m(r, c) = gaussian_vector(rng, 1)[0];
    // Force rank deficiency.
    m.col(4) = m.col(0) + m.col(1);
    m.col(3) = 2.0 * m.col(2);
    Subspace k = kernel(m, tol);
    const double smax = m.jacobiSvd().singularValues()(0);
    if (k.dim() > 0) CHECK((m * k.basis()).norm() <= 10.0 * tol * smax * k.dim());
  }
}

TEST_CASE("contains basics and partial order") {
  Subspace full = Subspace::full(3);
  Subspace zero = Subspace::zero(3);
  Subspace e1 = Subspace::coordinate_span(3, {0});
  CHECK(contains(e1, zero, 1e-10));
  CHECK(contains(full, e1, 1e-10));
  Eigen::MatrixXd diag(2, 1);
  diag << 1, 1;
  CHECK_FALSE(contains(orthonormalize(diag, 1e-10), Subspace::coordinate_span(2, {0}), 1e-8));

  // Reflexivity and transitivity along random chains.
  std::mt19937_64 rng(17);
  for (int it = 0; it < 30; ++it) {
    Eigen::MatrixXd m(5, 3);
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = gaussian_vector(rng, 1)[0];
    Subspace v3 = orthonormalize(m, 1e-10);
    Subspace v2 = orthonormalize(Eigen::MatrixXd(m.leftCols(2)), 1e-10);
    Subspace v1 = orthonormalize(Eigen::MatrixXd(m.leftCols(1)), 1e-10);
    CHECK(contains(v2, v2, 1e-9));
    CHECK(contains(v2, v1, 1e-9));
    CHECK(contains(v3, v2, 1e-9));
    CHECK(contains(v3, v1, 1e-9));
  }
}

TEST_CASE("annihilator complements") {
  CHECK(annihilator(Subspace::zero(3)).dim() == 3);
  CHECK(annihilator(Subspace::full(3)).dim() == 0);
  Subspace e1 = Subspace::coordinate_span(3, {0});
  Subspace ann = annihilator(e1);
  CHECK(ann.dim() == 2);
  CHECK(distance(ann, Subspace::coordinate_span(3, {1, 2})) < 1e-12);
  // Involution within 1e-10.
  std::mt19937_64 rng(19);
  Eigen::MatrixXd m(4, 2);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) = gaussian_vector(rng, 1)[0];
  Subspace v = orthonormalize(m, 1e-10);
  CHECK(distance(annihilator(annihilator(v)), v) < 1e-10);
}

TEST_CASE("limit_cluster detects constant and alternating sequences") {
  Subspace e1 = Subspace::coordinate_span(2, {0});
  Subspace e2 = Subspace::coordinate_span(2, {1});

  ClusterReport constant = limit_cluster(std::vector<Subspace>(8, e1), 1e-7, 1e-3);
  CHECK(constant.representatives.size() == 1);
  CHECK(constant.non_convergent_tails == 0);

  std::vector<Subspace> alternating;
  for (int i = 0; i < 10; ++i) alternating.push_back(i % 2 ? e1 : e2);
  ClusterReport alt = limit_cluster(alternating, 1e-7, 1e-3);
  CHECK(alt.representatives.empty());
  CHECK(alt.non_convergent_tails == 1);

  CHECK_THROWS_AS(limit_cluster(std::vector<std::vector<Subspace>>{}, 1e-7, 1e-3), InvalidInput);
  CHECK_THROWS_AS(limit_cluster(alternating, 1e-3, 1e-7), InvalidInput);
}

TEST_CASE("limit_cluster separates two exponentially convergent tails") {
  auto tail_to_angle = [](double target, int len) {
    std::vector<Subspace> tail;
    for (int i = 0; i < len; ++i) {
      double angle = target + 0.5 * std::pow(2.0, -i - 1);
      tail.push_back(line(std::cos(angle), std::sin(angle)));
    }
    return tail;
  };
  std::vector<std::vector<Subspace>> tails = {tail_to_angle(0.0, 40), tail_to_angle(M_PI / 2, 40)};
  ClusterReport rep = limit_cluster(tails, 1e-7, 1e-3);
  REQUIRE(rep.representatives.size() == 2);
  CHECK(rep.non_convergent_tails == 0);
  double d1 = std::min(distance(rep.representatives[0], line(1, 0)),
                       distance(rep.representatives[1], line(1, 0)));
  double d2 = std::min(distance(rep.representatives[0], line(0, 1)),
                       distance(rep.representatives[1], line(0, 1)));
  CHECK(d1 < 1e-3);
  CHECK(d2 < 1e-3);
}

TEST_CASE("limit_cluster representatives are permutation invariant") {
  std::mt19937_64 rng(23);
  std::vector<std::vector<Subspace>> tails;
  for (int t = 0; t < 5; ++t) {
    double target = 0.4 * t;
    std::vector<Subspace> tail;
    for (int i = 0; i < 30; ++i)
      tail.push_back(line(std::cos(target + std::pow(2.0, -i - 2)),
                          std::sin(target + std::pow(2.0, -i - 2))));
    tails.push_back(std::move(tail));
  }
  ClusterReport base = limit_cluster(tails, 1e-7, 1e-2);
  for (int perm = 0; perm < 5; ++perm) {
    std::shuffle(tails.begin(), tails.end(), rng);
    ClusterReport shuffled = limit_cluster(tails, 1e-7, 1e-2);
    REQUIRE(shuffled.representatives.size() == base.representatives.size());
    for (const auto& r : base.representatives) {
      double best = 1e9;
      for (const auto& s : shuffled.representatives) best = std::min(best, distance(r, s));
      CHECK(best < 1e-2);
    }
  }
}

TEST_CASE("subspace constructor validates orthonormality") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 1, 0, 1;
  CHECK_THROWS_AS(Subspace(2, bad), InvalidInput);
}
