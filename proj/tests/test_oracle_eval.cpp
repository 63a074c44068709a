#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "planehash/oracle_eval.hpp"

using namespace planehash;

namespace {
Matrix gaussian_points(Eigen::Index d, Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  return gaussian_matrix(rng, d, n);
}
std::vector<Vector> gaussian_queries(Eigen::Index d, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> q;
  for (int i = 0; i < count; ++i) q.push_back(gaussian_vector(rng, d));
  return q;
}
}  // namespace

TEST_CASE("brute_force_search ranks by margin then id") {
  Matrix pts = gaussian_points(4, 50, 1);
  Vector w = Vector::Zero(4);
  w[0] = 1;
  pts(0, 23) = 0.0;
  const auto gt = brute_force_search(w, pts, 5);
  CHECK(gt.size() == 5);
  CHECK(gt[0].id == 23);
  CHECK(gt[0].margin == 0.0);
  std::vector<std::pair<double, PointId>> all;
  for (PointId i = 0; i < 50; ++i) all.push_back({std::abs(pts(0, i)), i});
  std::sort(all.begin(), all.end());
  for (int r = 0; r < 5; ++r) CHECK(gt[r].id == all[r].second);

  Matrix same = Matrix::Ones(3, 6);
  const auto ties = brute_force_search(Vector::Ones(3), same, 6);
  for (PointId i = 0; i < 6; ++i) CHECK(ties[i].id == i);
}

TEST_CASE("brute_force_search is invariant to scaling w and to point order") {
  const Matrix pts = gaussian_points(5, 80, 2);
  Rng rng(3);
  const Vector w = gaussian_vector(rng, 5);
  const auto a = brute_force_search(w, pts, 10);
  const auto b = brute_force_search(Vector(7.5 * w), pts, 10);
  for (int i = 0; i < 10; ++i) CHECK(a[i].id == b[i].id);
  std::vector<Eigen::Index> perm(80);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  Matrix shuffled(5, 80);
  for (int i = 0; i < 80; ++i) shuffled.col(i) = pts.col(perm[i]);
  const auto c = brute_force_search(w, shuffled, 10);
  for (int i = 0; i < 10; ++i) CHECK(perm[c[i].id] == a[i].id);
}

TEST_CASE("full-radius evaluation reproduces the oracle") {
  const Matrix pts = gaussian_points(8, 500, 4);
  const auto idx = build_index(pts, HashFamily::random(Scheme::BH, 8, 12, 4));
  const auto qs = gaussian_queries(8, 20, 5);
  const auto rep = evaluate_scheme(idx, qs, pts, 12, 1, 0);
  CHECK(rep.recall_at_n == 1.0);
  CHECK(rep.mean_margin == rep.oracle_mean_margin);
  CHECK(rep.mean_angle == rep.oracle_mean_angle);
  CHECK(rep.empty_lookup_rate == 0.0);
  for (const auto& q : qs) {
    const auto gt = brute_force_search(q, pts, 1);
    CHECK(*query_hyperplane(idx, HyperplaneQuery(q), 12, pts).best_id == gt[0].id);
  }
}

TEST_CASE("empty index has an empty-lookup rate of one") {
  const auto idx = build_index(Matrix(4, 0), HashFamily::random(Scheme::BH, 4, 8, 1));
  const auto rep = evaluate_scheme(idx, gaussian_queries(4, 5, 1), Matrix(4, 0), 2, 1, 0);
  CHECK(rep.empty_lookup_rate == 1.0);
  CHECK(std::isnan(rep.mean_angle));
}

TEST_CASE("recall does not decrease with radius; reports are reproducible") {
  const Matrix pts = gaussian_points(6, 800, 6);
  const auto idx = build_index(pts, HashFamily::random(Scheme::BH, 6, 10, 6));
  const auto qs = gaussian_queries(6, 30, 7);
  for (std::size_t n : {1, 5, 20}) {
    double prev = -1;
    for (int r = 0; r <= 10; ++r) {
      const auto rep = evaluate_scheme(idx, qs, pts, r, n, 3);
      CHECK(rep.recall_at_n >= prev);
      prev = rep.recall_at_n;
    }
  }
  const auto a = evaluate_scheme(idx, qs, pts, 2, 5, 3);
  const auto b = evaluate_scheme(idx, qs, pts, 2, 5, 3);
  CHECK(report_csv_rows("BH", a) == report_csv_rows("BH", b));
}

TEST_CASE("mean angle agrees with a direct computation over nonempty lookups") {
  const Matrix pts = gaussian_points(6, 400, 8);
  const auto idx = build_index(pts, HashFamily::random(Scheme::BH, 6, 10, 8));
  const auto qs = gaussian_queries(6, 25, 9);
  const auto rep = evaluate_scheme(idx, qs, pts, 2, 1, 0);
  double sum = 0;
  int nonempty = 0;
  for (const auto& q : qs) {
    const auto res = query_hyperplane(idx, HyperplaneQuery(q), 2, pts);
    if (res.candidate_ids.empty()) continue;
    const auto best = oracle::argmin_margin(q, pts, res.candidate_ids);
    sum += oracle::alpha(pts.col(best), q);
    ++nonempty;
  }
  CHECK(rep.mean_angle == doctest::Approx(sum / nonempty).epsilon(1e-12));
  CHECK(rep.empty_lookup_rate == doctest::Approx(1.0 - nonempty / 25.0));
}

TEST_CASE("random point baseline is near the mean angle of a random point") {
  const Matrix pts = gaussian_points(16, 2000, 10);
  const auto qs = gaussian_queries(16, 50, 11);
  const double base = random_point_mean_angle(qs, pts, 1);
  CHECK(base > 0.1);
  CHECK(base == random_point_mean_angle(qs, pts, 1));
  const auto best = brute_force_search(qs[0], pts, 1);
  CHECK(oracle::alpha(pts.col(best[0].id), qs[0]) < base);
}
