#include "planehash/hash_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>

namespace planehash {

static_assert(std::endian::native == std::endian::little, "index files are written in host order");

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::AH: return "AH";
    case Scheme::EH: return "EH";
    case Scheme::BH: return "BH";
    case Scheme::LBH: return "LBH";
  }
  return "?";
}

Scheme parse_scheme(std::string_view s) {
  if (s == "AH" || s == "ah") return Scheme::AH;
  if (s == "EH" || s == "eh") return Scheme::EH;
  if (s == "BH" || s == "bh") return Scheme::BH;
  if (s == "LBH" || s == "lbh") return Scheme::LBH;
  throw InvalidInput("unknown scheme '" + std::string(s) + "'");
}

HashCode HashCode::from_signs(const std::vector<int>& signs) {
  if (signs.size() > 64) throw InvalidInput("at most 64 bits per code");
  HashCode c{0, static_cast<int>(signs.size())};
  for (std::size_t j = 0; j < signs.size(); ++j)
    if (signs[j] > 0) c.bits |= std::uint64_t{1} << j;
  return c;
}

std::vector<int> HashCode::to_signs() const {
  std::vector<int> s(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) s[static_cast<std::size_t>(j)] = sign(j);
  return s;
}

namespace {

Eigen::Index common_dim(const std::vector<ProjectionPair>& pairs) {
  if (pairs.empty()) throw InvalidInput("family needs at least one projection");
  const Eigen::Index d = pairs.front().u.size();
  for (const auto& p : pairs)
    if (p.u.size() != d || p.v.size() != d) throw InvalidInput("projection dimensions differ");
  return d;
}

void check_bits(std::size_t bits) {
  if (bits < 1 || bits > 64) throw InvalidInput("key length must be between 1 and 64 bits");
}

}  // namespace

HashFamily HashFamily::ah(std::vector<ProjectionPair> pairs) {
  check_bits(2 * pairs.size());
  HashFamily f(Scheme::AH, common_dim(pairs), static_cast<int>(2 * pairs.size()));
  f.pairs_ = std::move(pairs);
  return f;
}

HashFamily HashFamily::eh(std::vector<EHProjection> projections) {
  check_bits(projections.size());
  const Eigen::Index d = projections.front().input_dim();
  for (const auto& p : projections)
    if (p.U.size() != d * d) throw InvalidInput("EH projection dimensions differ");
  HashFamily f(Scheme::EH, d, static_cast<int>(projections.size()));
  f.eh_ = std::move(projections);
  return f;
}

HashFamily HashFamily::bh(std::vector<ProjectionPair> pairs) {
  check_bits(pairs.size());
  HashFamily f(Scheme::BH, common_dim(pairs), static_cast<int>(pairs.size()));
  f.pairs_ = std::move(pairs);
  return f;
}

HashFamily HashFamily::lbh(const LearnedHashFamily& learned) {
  check_bits(learned.pairs.size());
  HashFamily f(Scheme::LBH, common_dim(learned.pairs), learned.k());
  f.pairs_ = learned.pairs;
  return f;
}

HashFamily HashFamily::random(Scheme scheme, Eigen::Index dim, int bits, std::uint64_t seed) {
  check_bits(static_cast<std::size_t>(std::max(bits, 0)));
  switch (scheme) {
    case Scheme::AH:
      if (bits % 2 != 0) throw InvalidInput("AH keys need an even bit count");
      return ah(random_pairs(dim, bits / 2, seed));
    case Scheme::BH: return bh(random_pairs(dim, bits, seed));
    case Scheme::EH: {
      Rng rng(seed);
      std::vector<EHProjection> ps;
      for (int j = 0; j < bits; ++j) ps.push_back(EHProjection::random(dim, rng));
      return eh(std::move(ps));
    }
    case Scheme::LBH: break;
  }
  throw InvalidInput("LBH families are learned, not drawn at random");
}

HammingIndex HammingIndex::build(const Matrix& points, std::vector<HashFamily> families) {
  if (families.empty()) throw InvalidInput("index needs at least one table");
  HammingIndex index;
  index.scheme_ = families.front().scheme();
  index.bits_ = families.front().bits();
  index.dim_ = families.front().dim();
  for (const auto& f : families)
    if (f.scheme() != index.scheme_ || f.bits() != index.bits_ || f.dim() != index.dim_)
      throw InvalidInput("all tables must share scheme, bit count and dimension");
  if (points.cols() > 0 && points.rows() != index.dim_) throw InvalidInput("point dimension does not match family");
  index.n_ = points.cols();
  index.tables_.resize(families.size());
  for (std::size_t t = 0; t < families.size(); ++t) {
    auto& table = index.tables_[t];
    for (Eigen::Index i = 0; i < points.cols(); ++i)
      table[families[t].encode(points.col(i), InputRole::DatabasePoint).bits].push_back(static_cast<PointId>(i));
  }
  index.families_ = std::move(families);
  return index;
}

namespace {

std::uint64_t ball_volume(int k, int radius) {
  // Saturates well above any realistic bucket count.
  constexpr std::uint64_t cap = std::uint64_t{1} << 62;
  std::uint64_t total = 0;
  std::uint64_t binom = 1;
  for (int i = 0; i <= radius; ++i) {
    total += binom;
    if (total >= cap) return cap;
    binom = binom * static_cast<std::uint64_t>(k - i) / static_cast<std::uint64_t>(i + 1);
  }
  return total;
}

/// Calls visit(key ^ flips) for every flip mask with at most `radius` set bits among the low k.
void enumerate_ball(std::uint64_t key, int k, int radius, const std::function<void(std::uint64_t)>& visit) {
  std::function<void(std::uint64_t, int, int)> rec = [&](std::uint64_t current, int next_bit, int left) {
    visit(current);
    if (left == 0) return;
    for (int b = next_bit; b < k; ++b) rec(current ^ (std::uint64_t{1} << b), b + 1, left - 1);
  };
  rec(key, 0, radius);
}

}  // namespace

std::vector<PointId> HammingIndex::lookup(const std::vector<HashCode>& keys, int radius, std::uint64_t* probed) const {
  if (keys.size() != tables_.size()) throw InvalidInput("need one key per table");
  if (radius < 0 || radius > bits_) throw InvalidInput("radius must lie in [0, k]");
  std::vector<char> seen(static_cast<std::size_t>(n_), 0);
  std::vector<PointId> out;
  std::uint64_t visits = 0;
  auto take = [&](const std::vector<PointId>& bucket) {
    for (PointId id : bucket)
      if (!seen[id]) {
        seen[id] = 1;
        out.push_back(id);
      }
  };
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const auto& table = tables_[t];
    if (keys[t].k != bits_) throw InvalidInput("key length does not match index");
    const std::uint64_t key = keys[t].bits;
    if (ball_volume(bits_, radius) > table.size()) {
      // Same result as enumeration, cheaper when the ball outnumbers the buckets.
      for (const auto& [bucket_key, ids] : table) {
        ++visits;
        if (std::popcount(bucket_key ^ key) <= radius) take(ids);
      }
    } else {
      enumerate_ball(key, bits_, radius, [&](std::uint64_t probe) {
        ++visits;
        if (auto it = table.find(probe); it != table.end()) take(it->second);
      });
    }
  }
  std::sort(out.begin(), out.end());
  if (probed) *probed = visits;
  return out;
}

HammingIndex build_index(const Matrix& points, std::vector<HashFamily> families) {
  return HammingIndex::build(points, std::move(families));
}

HammingIndex build_index(const Matrix& points, HashFamily family) {
  std::vector<HashFamily> fs;
  fs.push_back(std::move(family));
  return HammingIndex::build(points, std::move(fs));
}

std::vector<PointId> hamming_ball_lookup(const HammingIndex& index, const HashCode& key, int radius) {
  return index.lookup(std::vector<HashCode>(index.num_tables(), key), radius);
}

std::vector<HashCode> hyperplane_keys(const HammingIndex& index, const Vector& w) {
  std::vector<HashCode> keys;
  keys.reserve(index.num_tables());
  for (std::size_t t = 0; t < index.num_tables(); ++t)
    keys.push_back(index.family(t).encode(w, InputRole::HyperplaneNormal));
  return keys;
}

QueryResult query_hyperplane(const HammingIndex& index, const HyperplaneQuery& query, int radius, const Matrix& points,
                             const std::vector<bool>* excluded) {
  if (index.size() != points.cols()) throw InvalidInput("index and point set sizes differ");
  QueryResult r;
  if (index.num_tables() == 0) {
    r.fallback_used = true;
    return r;
  }
  const Vector& w = query.normal();
  auto ids = index.lookup(hyperplane_keys(index, w), radius, &r.buckets_probed);
  if (excluded) std::erase_if(ids, [&](PointId id) { return (*excluded)[id]; });
  r.candidate_ids = std::move(ids);
  if (r.candidate_ids.empty()) {
    r.fallback_used = true;
    return r;
  }
  const double wn = w.norm();
  double best = std::numeric_limits<double>::infinity();
  for (PointId id : r.candidate_ids) {
    const double margin = std::abs(w.dot(points.col(id))) / wn;
    if (margin < best) {
      best = margin;
      r.best_id = id;
    }
  }
  r.best_margin = best;
  return r;
}

TablePlan theoretical_table_plan(const LSHParams& params) {
  TablePlan plan;
  plan.num_tables = params.num_tables;
  plan.k_bits = params.k_bits;
  const double n = static_cast<double>(params.n);
  const double n_rho = std::pow(n, params.rho);
  plan.probe_cost = n_rho * std::log(n) / std::log(1.0 / params.p2);
  plan.distance_evaluations = params.c * n_rho;
  return plan;
}

// ---------------------------------------------------------------------------
// Index file layout (little-endian):
//   char[4] "PHIX", u32 version (1)
//   u32 scheme, u32 bits, u64 n, u64 dim, u32 num_tables
//   per table:
//     u32 count                       number of pairs (AH/BH/LBH) or EH projections
//     count * (dim + dim) f64         u then v, for pair schemes
//     count * dim*dim f64             U, for EH
//     u64 bucket_count
//     bucket_count * { u64 key, u32 size, size * u32 id }   keys ascending, ids ascending
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw InvalidInput("truncated index file");
  return v;
}

void put_vec(std::ostream& os, const Vector& v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Vector get_vec(std::istream& is, Eigen::Index n) {
  Vector v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw InvalidInput("truncated index file");
  return v;
}

}  // namespace

void HammingIndex::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InvalidInput("cannot open " + tmp + " for writing");
    os.write("PHIX", 4);
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(scheme_));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(bits_));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(n_));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(dim_));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(families_.size()));
    for (std::size_t t = 0; t < families_.size(); ++t) {
      const auto& f = families_[t];
      if (f.scheme() == Scheme::EH) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(f.eh_projections().size()));
        for (const auto& p : f.eh_projections()) put_vec(os, p.U);
      } else {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(f.pairs().size()));
        for (const auto& p : f.pairs()) {
          put_vec(os, p.u);
          put_vec(os, p.v);
        }
      }
      std::vector<std::uint64_t> keys;
      for (const auto& kv : tables_[t]) keys.push_back(kv.first);
      std::sort(keys.begin(), keys.end());
      put<std::uint64_t>(os, keys.size());
      for (auto key : keys) {
        const auto& ids = tables_[t].at(key);
        put<std::uint64_t>(os, key);
        put<std::uint32_t>(os, static_cast<std::uint32_t>(ids.size()));
        for (PointId id : ids) put<std::uint32_t>(os, id);
      }
    }
    if (!os) throw InvalidInput("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

HammingIndex HammingIndex::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open index file " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "PHIX") throw InvalidInput("not a planehash index file");
  if (get<std::uint32_t>(is) != 1) throw InvalidInput("unsupported index file version");
  const auto scheme = static_cast<Scheme>(get<std::uint32_t>(is));
  if (static_cast<std::uint32_t>(scheme) > 3) throw InvalidInput("unknown scheme in index file");
  const auto bits = static_cast<int>(get<std::uint32_t>(is));
  const auto n = static_cast<Eigen::Index>(get<std::uint64_t>(is));
  const auto dim = static_cast<Eigen::Index>(get<std::uint64_t>(is));
  const auto tables = get<std::uint32_t>(is);

  HammingIndex index;
  index.scheme_ = scheme;
  index.bits_ = bits;
  index.n_ = n;
  index.dim_ = dim;
  for (std::uint32_t t = 0; t < tables; ++t) {
    const auto count = get<std::uint32_t>(is);
    if (scheme == Scheme::EH) {
      std::vector<EHProjection> ps;
      for (std::uint32_t j = 0; j < count; ++j) ps.push_back({get_vec(is, dim * dim)});
      index.families_.push_back(HashFamily::eh(std::move(ps)));
    } else {
      std::vector<ProjectionPair> ps;
      for (std::uint32_t j = 0; j < count; ++j) {
        ProjectionPair p;
        p.u = get_vec(is, dim);
        p.v = get_vec(is, dim);
        ps.push_back(std::move(p));
      }
      if (scheme == Scheme::AH) {
        index.families_.push_back(HashFamily::ah(std::move(ps)));
      } else if (scheme == Scheme::BH) {
        index.families_.push_back(HashFamily::bh(std::move(ps)));
      } else {
        LearnedHashFamily learned;
        learned.dim = dim;
        learned.pairs = std::move(ps);
        index.families_.push_back(HashFamily::lbh(learned));
      }
    }
    if (index.families_.back().bits() != bits) throw InvalidInput("index file bit count mismatch");
    Buckets buckets;
    const auto bucket_count = get<std::uint64_t>(is);
    for (std::uint64_t b = 0; b < bucket_count; ++b) {
      const auto key = get<std::uint64_t>(is);
      const auto size = get<std::uint32_t>(is);
      auto& ids = buckets[key];
      ids.reserve(size);
      for (std::uint32_t i = 0; i < size; ++i) {
        const auto id = get<std::uint32_t>(is);
        if (static_cast<Eigen::Index>(id) >= n) throw InvalidInput("point id out of range in index file");
        ids.push_back(id);
      }
    }
    index.tables_.push_back(std::move(buckets));
  }
  return index;
}

}  // namespace planehash
