#pragma once

#include <string>
#include <vector>

#include "planehash/hash_index.hpp"

namespace planehash {

struct RankedPoint {
  PointId id = 0;
  double margin = 0.0;  // |w'x| / ||w||
};

/// Exact ranking by ascending margin, ties by ascending id.
using GroundTruth = std::vector<RankedPoint>;

GroundTruth brute_force_search(const Vector& w, const Matrix& points, std::size_t top_n);

struct EvalReport {
  std::size_t queries = 0;
  std::size_t top_n = 1;
  int radius = 0;
  /// Mean over queries of |returned top-N intersect oracle top-N| / N.
  double recall_at_n = 0.0;
  /// Means over queries with a nonempty lookup; NaN if there were none.
  double mean_angle = 0.0;
  double mean_margin = 0.0;
  /// Same means with empty lookups replaced by a seeded random point.
  double mean_angle_with_fallback = 0.0;
  double mean_margin_with_fallback = 0.0;
  /// Oracle (exhaustive) rank-1 means, for reference.
  double oracle_mean_angle = 0.0;
  double oracle_mean_margin = 0.0;
  double empty_lookup_rate = 0.0;
  double mean_candidates = 0.0;
  double mean_probes = 0.0;
};

/// Runs every query through the index and the exhaustive oracle.
/// `fallback_seed` drives the random pick used for empty lookups.
EvalReport evaluate_scheme(const HammingIndex& index, const std::vector<Vector>& queries, const Matrix& points,
                           int radius, std::size_t top_n, std::uint64_t fallback_seed = 0);

/// Mean point-to-hyperplane angle of a uniformly random point per query.
double random_point_mean_angle(const std::vector<Vector>& queries, const Matrix& points, std::uint64_t seed);

/// CSV rows "scheme,radius,metric,value" for a report, header not included.
std::string report_csv_rows(std::string_view scheme, const EvalReport& report);
inline constexpr std::string_view kEvalCsvHeader = "scheme,radius,metric,value";

}  // namespace planehash
