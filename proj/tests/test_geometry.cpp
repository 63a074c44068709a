#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "planehash/geometry.hpp"

using namespace planehash;

namespace {
Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("angle_between: perpendicular, parallel and diagonal") {
  auto a = angle_between(v2(0, 1), v2(1, 0));
  CHECK(a.theta == doctest::Approx(oracle::pi / 2).epsilon(1e-15));
  CHECK(a.alpha == doctest::Approx(0.0));

  a = angle_between(v2(1, 0), v2(1, 0));
  CHECK(a.theta == doctest::Approx(0.0));
  CHECK(a.alpha == doctest::Approx(oracle::pi / 2));

  a = angle_between(v2(1, 1) / std::sqrt(2.0), v2(1, 0));
  CHECK(a.theta == doctest::Approx(std::acos(1 / std::sqrt(2.0))));
  CHECK(a.theta == doctest::Approx(oracle::pi / 4));
  CHECK(a.alpha == doctest::Approx(oracle::pi / 4));
}

TEST_CASE("angle_between on DataPoint and HyperplaneQuery") {
  DataPoint x{3, v2(3, 4)};
  HyperplaneQuery q(v2(1, 0));
  CHECK(angle_between(x, q).alpha == doctest::Approx(oracle::alpha(x.coords, q.normal())));
  CHECK(point_to_hyperplane_distance(x, q) == doctest::Approx(3.0));
}

TEST_CASE("point_to_hyperplane_distance") {
  CHECK(point_to_hyperplane_distance(v2(0, 5), v2(2, 0)) == 0.0);
  Vector w = v2(0.6, 0.8);
  CHECK(point_to_hyperplane_distance(w, w) == doctest::Approx(1.0));
  CHECK(point_to_hyperplane_distance(v2(3, 4), v2(1, 0)) == doctest::Approx(3.0));
}

TEST_CASE("abs_cosine") {
  CHECK(abs_cosine(v2(1, 0), v2(0, 3)) == 0.0);
  CHECK(abs_cosine(v2(1, 2), v2(-1, -2)) == doctest::Approx(1.0));
  CHECK(abs_cosine(v2(1, 1), v2(1, 0)) == doctest::Approx(1 / std::sqrt(2.0)));
}

TEST_CASE("zero vectors and mismatched dimensions are rejected") {
  CHECK_THROWS_AS(HyperplaneQuery(Vector::Zero(3)), InvalidInput);
  CHECK_THROWS_AS(angle_between(Vector::Zero(2), v2(1, 0)), InvalidInput);
  CHECK_THROWS_AS(abs_cosine(v2(1, 0), Vector::Ones(3)), InvalidInput);
  Matrix m = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(normalize_columns(m), InvalidInput);
}

TEST_CASE("geometry invariants on random inputs") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> beta(-5, 5);
  for (int t = 0; t < 200; ++t) {
    Vector x(6), w(6), y(6);
    for (int i = 0; i < 6; ++i) x[i] = n01(rng), w[i] = n01(rng), y[i] = n01(rng);
    double b = beta(rng);
    if (b == 0) b = 1;
    const auto a = angle_between(x, w);
    CHECK(a.alpha == doctest::Approx(std::abs(a.theta - oracle::pi / 2)).epsilon(1e-12));
    CHECK(angle_between(Vector(b * x), w).alpha == doctest::Approx(a.alpha).epsilon(1e-12));
    CHECK(std::abs(std::sin(a.alpha) - std::abs(w.dot(x)) / (w.norm() * x.norm())) < 1e-9);
    CHECK(a.alpha == doctest::Approx(oracle::alpha(x, w)).epsilon(1e-9));
    CHECK(abs_cosine(x, y) == doctest::Approx(abs_cosine(y, x)));
    CHECK(abs_cosine(Vector(-x), y) == doctest::Approx(abs_cosine(x, Vector(-y))));
  }
}

TEST_CASE("normalize_columns and augment_with_bias") {
  Matrix m(2, 2);
  m << 3, 0, 4, 2;
  normalize_columns(m);
  CHECK(m.col(0).norm() == doctest::Approx(1.0));
  CHECK(m(1, 1) == doctest::Approx(1.0));
  const Matrix a = augment_with_bias(m);
  CHECK(a.rows() == 3);
  CHECK(a(2, 0) == 1.0);
  CHECK(a(2, 1) == 1.0);
  CHECK(a.topRows(2) == m);
}
