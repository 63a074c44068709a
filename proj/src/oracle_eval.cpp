#include "planehash/oracle_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "planehash/random.hpp"

namespace planehash {

GroundTruth brute_force_search(const Vector& w, const Matrix& points, std::size_t top_n) {
  if (top_n < 1) throw InvalidInput("top_n must be at least 1");
  const double wn = detail::checked_norm(w, "normal");
  if (points.cols() > 0 && points.rows() != w.size()) throw InvalidInput("dimension mismatch");
  GroundTruth all(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index i = 0; i < points.cols(); ++i)
    all[i] = {static_cast<PointId>(i), std::abs(w.dot(points.col(i))) / wn};
  const std::size_t keep = std::min(top_n, all.size());
  auto less = [](const RankedPoint& a, const RankedPoint& b) {
    return a.margin < b.margin || (a.margin == b.margin && a.id < b.id);
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), less);
  all.resize(keep);
  return all;
}

namespace {

double alpha_of(const Matrix& points, PointId id, const Vector& w) { return angle_between(points.col(id), w).alpha; }

}  // namespace

EvalReport evaluate_scheme(const HammingIndex& index, const std::vector<Vector>& queries, const Matrix& points,
                           int radius, std::size_t top_n, std::uint64_t fallback_seed) {
  if (queries.empty()) throw InvalidInput("need at least one query");
  if (top_n < 1) throw InvalidInput("top_n must be at least 1");
  EvalReport rep;
  rep.queries = queries.size();
  rep.top_n = top_n;
  rep.radius = radius;

  double recall = 0.0, angle = 0.0, margin = 0.0, angle_fb = 0.0, margin_fb = 0.0;
  double oracle_angle = 0.0, oracle_margin = 0.0, candidates = 0.0, probes = 0.0;
  std::size_t nonempty = 0;
  Rng rng(derive_seed(fallback_seed, 0xFA11));

  for (const Vector& w : queries) {
    const QueryResult qr = query_hyperplane(index, HyperplaneQuery(w), radius, points);
    const GroundTruth truth = brute_force_search(w, points, top_n);
    candidates += double(qr.candidate_ids.size());
    probes += double(qr.buckets_probed);

    if (!truth.empty()) {
      oracle_angle += alpha_of(points, truth.front().id, w);
      oracle_margin += truth.front().margin;
    }

    // Recall: top-N of the candidate list against the oracle's top-N.
    const GroundTruth ranked = [&] {
      Matrix sub(points.rows(), static_cast<Eigen::Index>(qr.candidate_ids.size()));
      for (std::size_t i = 0; i < qr.candidate_ids.size(); ++i) sub.col(Eigen::Index(i)) = points.col(qr.candidate_ids[i]);
      if (sub.cols() == 0) return GroundTruth{};
      GroundTruth local = brute_force_search(w, sub, top_n);
      for (auto& p : local) p.id = qr.candidate_ids[p.id];
      return local;
    }();
    std::size_t hits = 0;
    for (const auto& p : ranked)
      hits += std::any_of(truth.begin(), truth.end(), [&](const RankedPoint& t) { return t.id == p.id; });
    recall += double(hits) / double(top_n);

    if (qr.best_id) {
      ++nonempty;
      const double a = alpha_of(points, *qr.best_id, w);
      angle += a;
      margin += qr.best_margin;
      angle_fb += a;
      margin_fb += qr.best_margin;
    } else if (points.cols() > 0) {
      std::uniform_int_distribution<Eigen::Index> pick(0, points.cols() - 1);
      const auto id = static_cast<PointId>(pick(rng));
      angle_fb += alpha_of(points, id, w);
      margin_fb += point_to_hyperplane_distance(points.col(id), w);
    }
  }

  const double q = double(queries.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.recall_at_n = recall / q;
  rep.mean_angle = nonempty ? angle / double(nonempty) : nan;
  rep.mean_margin = nonempty ? margin / double(nonempty) : nan;
  rep.mean_angle_with_fallback = points.cols() ? angle_fb / q : nan;
  rep.mean_margin_with_fallback = points.cols() ? margin_fb / q : nan;
  rep.oracle_mean_angle = points.cols() ? oracle_angle / q : nan;
  rep.oracle_mean_margin = points.cols() ? oracle_margin / q : nan;
  rep.empty_lookup_rate = 1.0 - double(nonempty) / q;
  rep.mean_candidates = candidates / q;
  rep.mean_probes = probes / q;
  return rep;
}

double random_point_mean_angle(const std::vector<Vector>& queries, const Matrix& points, std::uint64_t seed) {
  if (queries.empty() || points.cols() == 0) throw InvalidInput("need queries and points");
  Rng rng(derive_seed(seed, 0xBA5E));
  std::uniform_int_distribution<Eigen::Index> pick(0, points.cols() - 1);
  double total = 0.0;
  for (const Vector& w : queries) total += alpha_of(points, static_cast<PointId>(pick(rng)), w);
  return total / double(queries.size());
}

std::string report_csv_rows(std::string_view scheme, const EvalReport& r) {
  std::ostringstream os;
  os.precision(17);
  auto row = [&](std::string_view metric, double value) {
    os << scheme << ',' << r.radius << ',' << metric << ',' << value << '\n';
  };
  row("queries", double(r.queries));
  row("recall_at_" + std::to_string(r.top_n), r.recall_at_n);
  row("mean_angle", r.mean_angle);
  row("mean_margin", r.mean_margin);
  row("mean_angle_with_fallback", r.mean_angle_with_fallback);
  row("mean_margin_with_fallback", r.mean_margin_with_fallback);
  row("oracle_mean_angle", r.oracle_mean_angle);
  row("oracle_mean_margin", r.oracle_mean_margin);
  row("empty_lookup_rate", r.empty_lookup_rate);
  row("mean_candidates", r.mean_candidates);
  row("mean_probes", r.mean_probes);
  return os.str();
}

}  // namespace planehash
