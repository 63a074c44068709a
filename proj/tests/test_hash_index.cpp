#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "oracles.hpp"
#include "planehash/hash_index.hpp"

using namespace planehash;

namespace {

Matrix gaussian_points(Eigen::Index d, Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  return gaussian_matrix(rng, d, n);
}

// Every id whose database code lies within `radius` of `key`, by direct scan.
std::vector<PointId> brute_ball(const HammingIndex& idx, const Matrix& pts, std::size_t t, const HashCode& key,
                                int radius) {
  std::vector<PointId> out;
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const auto c = idx.family(t).encode(pts.col(i), InputRole::DatabasePoint);
    if (oracle::popcount(c.bits ^ key.bits) <= radius) out.push_back(static_cast<PointId>(i));
  }
  return out;
}

}  // namespace

TEST_CASE("HashCode packing") {
  const std::vector<int> s = {1, -1, -1, 1, 1, 1, -1, 1, -1, -1, 1, -1, 1, 1, -1, 1};
  const auto c = HashCode::from_signs(s);
  CHECK(c.k == 16);
  CHECK(c.to_signs() == s);
  CHECK(hamming_distance(c, c.flipped()) == 16);
  CHECK(c.flipped().flipped() == c);
  HashCode full{~std::uint64_t{0}, 64};
  CHECK(full.flipped().bits == 0);
}

TEST_CASE("encode: LBH/BH normal code is the NOT of the point code, and scale invariant") {
  const Matrix pts = gaussian_points(6, 50, 2);
  for (auto scheme : {Scheme::BH, Scheme::AH, Scheme::EH}) {
    const auto fam = HashFamily::random(scheme, 6, 12, 4);
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
      const auto p = encode(pts.col(i), InputRole::DatabasePoint, fam);
      const auto n = encode(pts.col(i), InputRole::HyperplaneNormal, fam);
      if (scheme == Scheme::BH) {
        CHECK(n == p.flipped());
        CHECK(encode(Vector(-3.5 * pts.col(i)), InputRole::DatabasePoint, fam) == p);
      }
      if (scheme == Scheme::EH) CHECK(n == p.flipped());
      if (scheme == Scheme::AH)
        for (int j = 0; j < 6; ++j) {
          CHECK(n.sign(2 * j) == p.sign(2 * j));
          CHECK(n.sign(2 * j + 1) == -p.sign(2 * j + 1));
        }
    }
  }
}

TEST_CASE("AH and BH share projections for equal seeds") {
  const auto ah = HashFamily::random(Scheme::AH, 5, 8, 3);
  const auto bh = HashFamily::random(Scheme::BH, 5, 4, 3);
  REQUIRE(ah.pairs().size() == 4);
  for (int j = 0; j < 4; ++j) CHECK(ah.pairs()[j].u == bh.pairs()[j].u);
  CHECK_THROWS_AS(HashFamily::random(Scheme::AH, 5, 7, 3), InvalidInput);
  CHECK_THROWS(HashFamily::random(Scheme::LBH, 5, 8, 3));
}

TEST_CASE("build_index: empty, duplicates and self-retrieval") {
  const auto fam = HashFamily::random(Scheme::BH, 4, 10, 1);
  const auto empty = build_index(Matrix(4, 0), fam);
  CHECK(empty.size() == 0);
  CHECK(hamming_ball_lookup(empty, HashCode{0, 10}, 10).empty());

  Matrix pts = gaussian_points(4, 100, 5);
  pts.col(7) = pts.col(3);
  const auto idx = build_index(pts, fam);
  const auto k3 = fam.encode(pts.col(3), InputRole::DatabasePoint);
  const auto& bucket = idx.buckets(0).at(k3.bits);
  CHECK(std::count(bucket.begin(), bucket.end(), PointId{3}) == 1);
  CHECK(std::count(bucket.begin(), bucket.end(), PointId{7}) == 1);
  std::size_t total = 0;
  std::set<PointId> seen;
  for (const auto& [key, ids] : idx.buckets(0)) {
    total += ids.size();
    seen.insert(ids.begin(), ids.end());
  }
  CHECK(total == 100);
  CHECK(seen.size() == 100);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const auto hits = hamming_ball_lookup(idx, fam.encode(pts.col(i), InputRole::DatabasePoint), 0);
    CHECK(std::binary_search(hits.begin(), hits.end(), static_cast<PointId>(i)));
  }
}

TEST_CASE("hamming_ball_lookup equals the brute-force Hamming filter") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix pts = gaussian_points(8, 500, 100 + seed);
    const auto idx = build_index(pts, HashFamily::random(Scheme::BH, 8, 12, seed));
    Rng rng(seed);
    std::uniform_int_distribution<std::uint64_t> kd(0, (1u << 12) - 1);
    for (int radius : {0, 1, 2, 3, 6, 12}) {
      const HashCode key{kd(rng), 12};
      CHECK(hamming_ball_lookup(idx, key, radius) == brute_ball(idx, pts, 0, key, radius));
    }
    const HashCode any{kd(rng), 12};
    const auto all = hamming_ball_lookup(idx, any, 12);
    CHECK(all.size() == 500);
    const auto b0 = hamming_ball_lookup(idx, any, 0);
    const auto it = idx.buckets(0).find(any.bits);
    CHECK(b0.size() == (it == idx.buckets(0).end() ? 0 : it->second.size()));
  }
}

TEST_CASE("query_hyperplane candidates are codes at distance >= k - radius from H(w)") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix pts = gaussian_points(6, 300, 200 + seed);
    const auto fam = HashFamily::random(Scheme::BH, 6, 10, seed);
    const auto idx = build_index(pts, fam);
    Rng rng(seed + 7);
    const Vector w = gaussian_vector(rng, 6);
    const auto hw = fam.encode(w, InputRole::DatabasePoint);
    for (int radius : {0, 2, 4, 10}) {
      const auto res = query_hyperplane(idx, HyperplaneQuery(w), radius, pts);
      std::vector<PointId> expect;
      for (Eigen::Index i = 0; i < pts.cols(); ++i)
        if (oracle::popcount(fam.encode(pts.col(i), InputRole::DatabasePoint).bits ^ hw.bits) >= 10 - radius)
          expect.push_back(static_cast<PointId>(i));
      CHECK(res.candidate_ids == expect);
      if (!expect.empty()) {
        REQUIRE(res.best_id.has_value());
        CHECK(*res.best_id == oracle::argmin_margin(w, pts, expect));
      } else {
        CHECK(!res.best_id.has_value());
      }
    }
  }
}

TEST_CASE("full-radius query returns the exact nearest point, ties to the lowest id") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Matrix pts = gaussian_points(8, 500, 300 + seed);
    pts.col(400) = pts.col(17);  // tie partner
    const auto idx = build_index(pts, HashFamily::random(Scheme::BH, 8, 12, seed));
    Rng rng(seed);
    Vector w = gaussian_vector(rng, 8);
    std::vector<PointId> all(500);
    for (PointId i = 0; i < 500; ++i) all[i] = i;
    const auto res = query_hyperplane(idx, HyperplaneQuery(w), 12, pts);
    CHECK(res.candidate_ids.size() == 500);
    CHECK(*res.best_id == oracle::argmin_margin(w, pts, all));
    // Make 17/400 the exact best.
    w -= w.dot(pts.col(17)) / pts.col(17).squaredNorm() * pts.col(17);
    const auto tie = query_hyperplane(idx, HyperplaneQuery(w), 12, pts);
    CHECK(*tie.best_id == 17);
  }
}

TEST_CASE("a point on the hyperplane coded as the full negation of H(w) is in the radius-0 set") {
  Vector w(3), x(3);
  w << 1, 0, 0;
  x << 0, 1, 0;
  // u = e1 + e2, v = e1 - e2: u'w w'v = 1 > 0 and u'x x'v = -1 < 0.
  ProjectionPair pp;
  pp.u = Vector(3);
  pp.v = Vector(3);
  pp.u << 1, 1, 0;
  pp.v << 1, -1, 0;
  LearnedHashFamily lf;
  lf.dim = 3;
  lf.pairs = {pp};
  const auto fam = HashFamily::lbh(lf);
  Matrix pts(3, 2);
  pts.col(0) = x;
  pts.col(1) = w;
  const auto idx = build_index(pts, fam);
  const auto res = query_hyperplane(idx, HyperplaneQuery(w), 0, pts);
  CHECK(res.candidate_ids == std::vector<PointId>{0});
  CHECK(*res.best_id == 0);
  CHECK(res.best_margin == 0.0);
}

TEST_CASE("multi-table union is a superset of every single table") {
  const Matrix pts = gaussian_points(6, 400, 9);
  std::vector<HashFamily> fams;
  for (int t = 0; t < 3; ++t) fams.push_back(HashFamily::random(Scheme::BH, 6, 10, derive_seed(1, t)));
  const auto multi = build_index(pts, fams);
  Rng rng(2);
  for (int q = 0; q < 10; ++q) {
    const Vector w = gaussian_vector(rng, 6);
    const auto all = query_hyperplane(multi, HyperplaneQuery(w), 2, pts).candidate_ids;
    std::set<PointId> uni;
    for (int t = 0; t < 3; ++t) {
      const auto single = build_index(pts, fams[t]);
      const auto c = query_hyperplane(single, HyperplaneQuery(w), 2, pts).candidate_ids;
      uni.insert(c.begin(), c.end());
      CHECK(std::includes(all.begin(), all.end(), c.begin(), c.end()));
    }
    CHECK(std::vector<PointId>(uni.begin(), uni.end()) == all);
  }
}

TEST_CASE("excluded ids are dropped and queries are deterministic") {
  const Matrix pts = gaussian_points(5, 200, 3);
  const auto idx = build_index(pts, HashFamily::random(Scheme::BH, 5, 8, 3));
  Rng rng(1);
  const Vector w = gaussian_vector(rng, 5);
  const auto a = query_hyperplane(idx, HyperplaneQuery(w), 8, pts);
  std::vector<bool> excl(200, false);
  excl[*a.best_id] = true;
  const auto b = query_hyperplane(idx, HyperplaneQuery(w), 8, pts, &excl);
  CHECK(b.candidate_ids.size() == 199);
  CHECK(*b.best_id != *a.best_id);
  const auto c = query_hyperplane(idx, HyperplaneQuery(w), 8, pts);
  CHECK(c.candidate_ids == a.candidate_ids);
  CHECK(c.best_id == a.best_id);
  CHECK(c.best_margin == a.best_margin);
}

TEST_CASE("AH, EH and LBH indexes match the brute-force filter") {
  const Matrix pts = gaussian_points(4, 300, 77);
  std::vector<HashFamily> fams = {HashFamily::random(Scheme::AH, 4, 12, 1), HashFamily::random(Scheme::EH, 4, 12, 1)};
  LearnConfig lc;
  lc.k = 12;
  lc.num_samples = 60;
  lc.seed = 1;
  fams.push_back(HashFamily::lbh(train_lbh(pts, lc).family));
  for (auto& fam : fams) {
    const auto idx = build_index(pts, fam);
    Rng rng(5);
    for (int q = 0; q < 5; ++q) {
      const Vector w = gaussian_vector(rng, 4);
      const auto key = hyperplane_keys(idx, w).front();
      CHECK(key == fam.encode(w, InputRole::HyperplaneNormal));
      for (int radius : {1, 3, 5})
        CHECK(query_hyperplane(idx, HyperplaneQuery(w), radius, pts).candidate_ids ==
              brute_ball(idx, pts, 0, key, radius));
    }
  }
}

TEST_CASE("index save/load round trip") {
  const Matrix pts = gaussian_points(5, 120, 4);
  std::vector<HashFamily> fams = {HashFamily::random(Scheme::EH, 5, 9, 1), HashFamily::random(Scheme::EH, 5, 9, 2)};
  const auto idx = build_index(pts, fams);
  const auto path = (std::filesystem::temp_directory_path() / "planehash_test_index.phx").string();
  idx.save(path);
  const auto back = HammingIndex::load(path);
  CHECK(back.scheme() == Scheme::EH);
  CHECK(back.num_tables() == 2);
  CHECK(back.bits() == 9);
  CHECK(back.size() == 120);
  Rng rng(3);
  for (int q = 0; q < 5; ++q) {
    const Vector w = gaussian_vector(rng, 5);
    const auto a = query_hyperplane(idx, HyperplaneQuery(w), 3, pts);
    const auto b = query_hyperplane(back, HyperplaneQuery(w), 3, pts);
    CHECK(a.candidate_ids == b.candidate_ids);
    CHECK(a.best_id == b.best_id);
  }
  std::filesystem::remove(path);
  CHECK_THROWS(HammingIndex::load(path));
}

TEST_CASE("theoretical_table_plan") {
  const auto p = lsh_params(Family::BH, 0.5, 3.0, 1000000);
  const auto plan = theoretical_table_plan(p);
  CHECK(plan.k_bits == 6);
  CHECK(plan.num_tables == p.num_tables);
  CHECK(plan.probe_cost ==
        doctest::Approx(std::pow(1e6, p.rho) * std::log(1e6) / std::log(1 / p.p2)).epsilon(1e-12));
  // p2 near 1/2 gives log2 n bits.
  const auto q = lsh_params(Family::BH, 1e-9, 1e-3, 1024);
  CHECK(q.k_bits == 10);
}
