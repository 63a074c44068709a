#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "planehash/geometry.hpp"
#include "planehash/learn_hash.hpp"
#include "planehash/rand_hash.hpp"

namespace planehash {

enum class Scheme : std::uint32_t { AH = 0, EH = 1, BH = 2, LBH = 3 };

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view s);

/// Up to 64 hash bits packed into one word. Bit j is 1 iff h_j evaluated to
/// +1; a -1 bit is stored as 0.
struct HashCode {
  std::uint64_t bits = 0;
  int k = 0;

  std::uint64_t mask() const { return k >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << k) - 1); }
  int sign(int j) const { return (bits >> j) & 1u ? 1 : -1; }
  HashCode flipped() const { return {~bits & mask(), k}; }

  static HashCode from_signs(const std::vector<int>& signs);
  std::vector<int> to_signs() const;

  friend bool operator==(const HashCode&, const HashCode&) = default;
};

inline int hamming_distance(const HashCode& a, const HashCode& b) { return std::popcount(a.bits ^ b.bits); }

/// A concrete set of hash functions producing one k-bit key.
///
/// Key layout per scheme:
///   AH  - pair j contributes bit 2j (u side) and bit 2j+1 (v side), so k = 2 * pairs.
///   EH  - bit j from projection j.
///   BH, LBH - bit j = sgn(u_j'z z'v_j); hyperplane-normal codes are the bitwise
///         NOT of database codes.
class HashFamily {
 public:
  static HashFamily ah(std::vector<ProjectionPair> pairs);
  static HashFamily eh(std::vector<EHProjection> projections);
  static HashFamily bh(std::vector<ProjectionPair> pairs);
  static HashFamily lbh(const LearnedHashFamily& learned);

  /// Gaussian family with `bits` key bits. AH draws bits/2 pairs from the same
  /// stream BH uses, so AH and BH with equal seeds share projections.
  static HashFamily random(Scheme scheme, Eigen::Index dim, int bits, std::uint64_t seed);

  Scheme scheme() const { return scheme_; }
  Eigen::Index dim() const { return dim_; }
  int bits() const { return bits_; }
  const std::vector<ProjectionPair>& pairs() const { return pairs_; }
  const std::vector<EHProjection>& eh_projections() const { return eh_; }

  template <typename Derived>
  HashCode encode(const Eigen::MatrixBase<Derived>& z, InputRole role) const;

 private:
  HashFamily(Scheme scheme, Eigen::Index dim, int bits) : scheme_(scheme), dim_(dim), bits_(bits) {}

  Scheme scheme_;
  Eigen::Index dim_;
  int bits_;
  std::vector<ProjectionPair> pairs_;
  std::vector<EHProjection> eh_;
};

template <typename Derived>
HashCode HashFamily::encode(const Eigen::MatrixBase<Derived>& z, InputRole role) const {
  if (z.size() != dim_) throw InvalidInput("family dimension does not match input");
  HashCode code{0, bits_};
  auto set = [&code](int j, int s) {
    if (s > 0) code.bits |= std::uint64_t{1} << j;
  };
  switch (scheme_) {
    case Scheme::AH:
      for (std::size_t j = 0; j < pairs_.size(); ++j) {
        const auto b = ah_hash(z, role, pairs_[j]);
        set(static_cast<int>(2 * j), b[0]);
        set(static_cast<int>(2 * j + 1), b[1]);
      }
      break;
    case Scheme::EH:
      for (std::size_t j = 0; j < eh_.size(); ++j) set(static_cast<int>(j), eh_hash(z, role, eh_[j]));
      break;
    case Scheme::BH:
    case Scheme::LBH: {
      const int flip = role == InputRole::DatabasePoint ? 1 : -1;
      for (std::size_t j = 0; j < pairs_.size(); ++j) set(static_cast<int>(j), flip * bh_hash(z, pairs_[j]));
      break;
    }
  }
  return code;
}

template <typename Derived>
HashCode encode(const Eigen::MatrixBase<Derived>& z, InputRole role, const HashFamily& family) {
  return family.encode(z, role);
}

struct QueryResult {
  std::vector<PointId> candidate_ids;  // ascending, deduplicated
  std::optional<PointId> best_id;
  double best_margin = 0.0;
  std::uint64_t buckets_probed = 0;
  bool fallback_used = false;
};

/// One or more hash tables over the same point set. Buckets hold point ids
/// only; coordinates stay with the caller. Immutable once built.
class HammingIndex {
 public:
  using Buckets = std::unordered_map<std::uint64_t, std::vector<PointId>>;

  HammingIndex() = default;

  /// One table per family. Families must agree on scheme and shape.
  static HammingIndex build(const Matrix& points, std::vector<HashFamily> families);

  Scheme scheme() const { return scheme_; }
  int bits() const { return bits_; }
  Eigen::Index dim() const { return dim_; }
  Eigen::Index size() const { return n_; }
  std::size_t num_tables() const { return families_.size(); }
  const HashFamily& family(std::size_t t) const { return families_.at(t); }
  const Buckets& buckets(std::size_t t) const { return tables_.at(t); }

  /// Union over tables of the ids whose key is within `radius` of keys[t].
  /// `probed` (optional) receives the number of keys or buckets examined.
  std::vector<PointId> lookup(const std::vector<HashCode>& keys, int radius, std::uint64_t* probed = nullptr) const;

  void save(const std::string& path) const;
  static HammingIndex load(const std::string& path);

 private:
  Scheme scheme_ = Scheme::BH;
  int bits_ = 0;
  Eigen::Index dim_ = 0;
  Eigen::Index n_ = 0;
  std::vector<HashFamily> families_;
  std::vector<Buckets> tables_;
};

HammingIndex build_index(const Matrix& points, std::vector<HashFamily> families);
HammingIndex build_index(const Matrix& points, HashFamily family);

/// Ids whose key differs from `key` in at most `radius` bits, in any table.
std::vector<PointId> hamming_ball_lookup(const HammingIndex& index, const HashCode& key, int radius);

/// Key for a hyperplane query in every table: the hyperplane-role code of w.
/// For BH/LBH this is the bitwise NOT of w's database code.
std::vector<HashCode> hyperplane_keys(const HammingIndex& index, const Vector& w);

/// Flipped-code lookup within `radius`, then an exact scan of the candidates
/// for the smallest |w'x|/||w|| (ties to the lowest id). Ids flagged in
/// `excluded` are dropped from the candidate list.
QueryResult query_hyperplane(const HammingIndex& index, const HyperplaneQuery& query, int radius, const Matrix& points,
                             const std::vector<bool>* excluded = nullptr);

struct TablePlan {
  std::uint64_t num_tables = 0;
  std::uint64_t k_bits = 0;
  /// n^rho * log_{1/p2} n hash evaluations.
  double probe_cost = 0.0;
  /// c * n^rho distance computations.
  double distance_evaluations = 0.0;
};

TablePlan theoretical_table_plan(const LSHParams& params);

}  // namespace planehash
