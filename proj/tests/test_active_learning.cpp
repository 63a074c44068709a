#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <set>

#include "oracles.hpp"
#include "planehash/active_learning.hpp"
#include "planehash/dataset_io.hpp"

using namespace planehash;

namespace {

std::vector<int> signs_of(const std::vector<int>& labels, int positive) {
  std::vector<int> y;
  for (int l : labels) y.push_back(l == positive ? 1 : -1);
  return y;
}

double accuracy(const Vector& w, const Matrix& x, const std::vector<int>& y) {
  int ok = 0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) ok += (w.dot(x.col(i)) > 0 ? 1 : -1) == y[i];
  return double(ok) / double(x.cols());
}

// Splits one generated set so train and test share the hidden hyperplane.
std::pair<Dataset, Dataset> split(const Dataset& d, Eigen::Index first) {
  Dataset a{d.points.leftCols(first), {d.labels.begin(), d.labels.begin() + first}};
  Dataset b{d.points.rightCols(d.size() - first), {d.labels.begin() + first, d.labels.end()}};
  return {a, b};
}

Dataset separable(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  SyntheticConfig c;
  c.kind = SyntheticKind::TwoClassSeparable;
  c.n = n;
  c.d = d;
  c.seed = seed;
  return gen_synthetic(c);
}

}  // namespace

TEST_CASE("average_precision") {
  CHECK(average_precision(std::vector<double>{3, 2, 1, 0}, std::vector<int>{1, 1, 0, 0}) == 1.0);
  CHECK(average_precision(std::vector<double>{2, 1}, std::vector<int>{0, 1}) == 0.5);
  CHECK_THROWS_AS(average_precision(std::vector<double>{1, 2}, std::vector<int>{0, 0}), UndefinedMetric);
  Rng rng(1);
  std::uniform_real_distribution<double> u;
  std::vector<double> s(20000);
  std::vector<int> p(20000);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = u(rng), p[i] = i % 2;
  const double ap = average_precision(s, p);
  CHECK(std::abs(ap - 0.5) < 0.05);
  CHECK(ap == doctest::Approx(oracle::average_precision(s, p)).epsilon(1e-12));
}

TEST_CASE("linear SVM separates 2D blobs") {
  Rng rng(3);
  Dataset d{gaussian_matrix(rng, 2, 200) * 0.5, std::vector<int>(200)};
  for (int i = 0; i < 200; ++i) {
    d.labels[i] = i % 2;
    d.points(0, i) += i % 2 ? 3.0 : -3.0;
    d.points(1, i) += 1.0;
  }
  const Matrix x = augment_with_bias(d.points);
  const auto y = signs_of(d.labels, 1);
  const auto m = train_linear_svm(x, y, {1e-3, 50, 1});
  CHECK(accuracy(m.w, x, y) == 1.0);
}

TEST_CASE("zero epochs return the zero vector; single-class input is rejected") {
  const Matrix x = Matrix::Ones(3, 4);
  const std::vector<int> y = {1, -1, 1, -1};
  CHECK(train_linear_svm(x, y, {1e-4, 0, 0}).w.norm() == 0.0);
  CHECK_THROWS(train_linear_svm(x, std::vector<int>{1, 1, 1, 1}, {}));
}

TEST_CASE("separable generator admits a zero-error linear model") {
  const Dataset d = separable(1000, 8, 4);
  const Matrix x = augment_with_bias(d.points);
  const auto y = signs_of(d.labels, 1);
  const auto m = train_linear_svm(x, y, {1e-5, 100, 2});
  CHECK(accuracy(m.w, x, y) == 1.0);
}

TEST_CASE("SVM test accuracy is stable across seeds") {
  const auto [train, test] = split(separable(4000, 16, 5), 2000);
  const Matrix xtr = augment_with_bias(train.points), xte = augment_with_bias(test.points);
  std::vector<double> acc;
  for (std::uint64_t s = 0; s < 5; ++s)
    acc.push_back(accuracy(train_linear_svm(xtr, signs_of(train.labels, 1), {1e-4, 20, s}).w, xte,
                           signs_of(test.labels, 1)));
  const double mean = std::accumulate(acc.begin(), acc.end(), 0.0) / 5;
  double var = 0;
  for (double a : acc) var += (a - mean) * (a - mean) / 5;
  CHECK(std::sqrt(var) < 0.05);
  CHECK(mean > 0.9);
}

TEST_CASE("svm objective history is recorded and the returned iterate is the best epoch") {
  const Dataset d = separable(300, 4, 7);
  const Matrix x = augment_with_bias(d.points);
  const auto y = signs_of(d.labels, 1);
  const auto fit = train_linear_svm_detailed(x, y, {1e-3, 10, 1});
  CHECK(fit.objective_history.size() == 10);
  const double best = *std::min_element(fit.objective_history.begin(), fit.objective_history.end());
  CHECK(svm_objective(fit.model.w, x, y, 1e-3) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("ALState bookkeeping") {
  ALState s(10, {2, 5});
  CHECK(s.labeled().size() == 2);
  CHECK(s.unlabeled().size() == 8);
  s.label(7);
  CHECK(s.is_labeled(7));
  CHECK(s.labeled().size() + s.unlabeled().size() == 10);
  CHECK(std::find(s.unlabeled().begin(), s.unlabeled().end(), 7) == s.unlabeled().end());
  CHECK_THROWS(s.label(7));
  CHECK_THROWS(s.label(99));
}

TEST_CASE("selectors on a pool of one") {
  Matrix pool = Matrix::Ones(3, 2);
  pool(0, 1) = -1;
  ALState state(2, {0});
  LinearModel m{Vector::Ones(3)};
  Rng rng(1);
  for (auto k : {SelectorKind::Exhaustive, SelectorKind::Random, SelectorKind::BH, SelectorKind::AH,
                 SelectorKind::EH}) {
    SelectorConfig c;
    c.kind = k;
    c.bits = 4;
    c.radius = 0;
    const Selector sel(c, pool);
    CHECK(select_next(state, m, sel, rng).id == 1);
  }
}

TEST_CASE("Exhaustive selection matches the oracle and is scale invariant; full-radius hashing agrees") {
  const Dataset d = separable(400, 6, 9);
  const Matrix aug = augment_with_bias(d.points);
  std::vector<PointId> init = {0, 1, 2, 3, 4, 5};
  ALState state(400, init);
  Rng wr(3);
  for (int t = 0; t < 10; ++t) {
    const Vector w = gaussian_vector(wr, 7);
    Rng rng(1);
    SelectorConfig ex;
    const Selector exs(ex, aug);
    const auto a = select_next(state, LinearModel{w}, exs, rng);
    const auto b = select_next(state, LinearModel{Vector(4.0 * w)}, exs, rng);
    CHECK(a.id == b.id);
    CHECK(a.id == oracle::argmin_margin(w, aug, state.unlabeled()));
    CHECK(a.margin == doctest::Approx(std::abs(w.dot(aug.col(a.id))) / w.norm()));
    for (auto k : {SelectorKind::BH, SelectorKind::AH, SelectorKind::EH, SelectorKind::LBH}) {
      SelectorConfig hc;
      hc.kind = k;
      hc.bits = 8;
      hc.radius = 8;
      hc.lbh_samples = 50;
      const Selector hs(hc, aug);
      const auto h = select_next(state, LinearModel{w}, hs, rng);
      CHECK(h.id == a.id);
      CHECK(!h.fallback_used);
    }
  }
}

TEST_CASE("run_al_experiment: history shape, pool conservation and AP") {
  const Dataset d = separable(300, 5, 10);
  ALConfig c;
  c.iterations = 25;
  c.selector.kind = SelectorKind::BH;
  c.selector.bits = 8;
  c.selector.radius = 2;
  const auto h = run_al_experiment(d, c);
  CHECK(h.size() == 25);
  for (std::size_t i = 0; i < h.size(); ++i) {
    CHECK(h[i].iteration == static_cast<int>(i));
    CHECK(h[i].labeled == 10 + i);
    CHECK(std::isnan(h[i].test_accuracy));
    if (!std::isnan(h[i].ap)) CHECK((h[i].ap >= 0 && h[i].ap <= 1));
    CHECK(h[i].nonempty != h[i].fallback);
  }
  CHECK(history_csv(h).rfind(std::string(kAlCsvHeader), 0) == 0);
  CHECK(history_csv(h) == history_csv(run_al_experiment(d, c)));
}

TEST_CASE("multi-class experiments run one arm per class") {
  SyntheticConfig s;
  s.n = 300;
  s.d = 5;
  s.classes = 3;
  s.seed = 2;
  const Dataset d = gen_synthetic(s);
  ALConfig c;
  c.iterations = 5;
  c.initial_per_class = 2;
  const auto h = run_al_experiment(d, c, &d);
  CHECK(h.size() == 15);
  std::set<int> classes;
  for (const auto& r : h) classes.insert(r.cls);
  CHECK(classes == std::set<int>{0, 1, 2});
  CHECK(!std::isnan(h.back().test_accuracy));
}

TEST_CASE("labels_to_reach") {
  ALHistory h(3);
  for (int i = 0; i < 3; ++i) {
    h[i].iteration = i;
    h[i].cls = 1;
    h[i].labeled = 10 + i;
    h[i].test_accuracy = 0.9 + 0.03 * i;
  }
  CHECK(labels_to_reach(h, 1, 0.95) == std::optional<std::size_t>(12));
  CHECK(!labels_to_reach(h, 1, 0.99).has_value());
}

TEST_CASE("SVM hyperplane queries are augmented normals") {
  SyntheticConfig s;
  s.n = 300;
  s.d = 6;
  s.classes = 3;
  const Dataset d = gen_synthetic(s);
  const auto qs = svm_hyperplane_queries(d, 7, 5, {}, 1);
  CHECK(qs.size() == 7);
  for (const auto& q : qs) {
    CHECK(q.size() == 7);
    CHECK(q.norm() > 0);
  }
}
