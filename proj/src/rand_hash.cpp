#include "planehash/rand_hash.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <thread>

namespace planehash {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::AH: return "AH";
    case Family::EH: return "EH";
    case Family::BH: return "BH";
  }
  return "?";
}

Family parse_family(std::string_view s) {
  if (s == "AH" || s == "ah") return Family::AH;
  if (s == "EH" || s == "eh") return Family::EH;
  if (s == "BH" || s == "bh") return Family::BH;
  throw InvalidInput("unknown hash family '" + std::string(s) + "'");
}

double collision_prob(Family family, double alpha) {
  constexpr double pi = std::numbers::pi;
  // Grid endpoints computed as (pi/2) * i / n may overshoot by an ulp.
  if (alpha > pi / 2 && alpha <= pi / 2 + 1e-12) alpha = pi / 2;
  if (!(alpha >= 0.0 && alpha <= pi / 2)) throw InvalidInput("alpha must lie in [0, pi/2]");
  switch (family) {
    case Family::AH: return 0.25 - alpha * alpha / (pi * pi);
    case Family::EH: {
      const double s = std::sin(alpha);
      return std::acos(std::clamp(s * s, -1.0, 1.0)) / pi;
    }
    case Family::BH: return 0.5 - 2.0 * alpha * alpha / (pi * pi);
  }
  throw InvalidInput("unknown family");
}

LSHParams lsh_params(Family family, double r, double epsilon, std::uint64_t n, double c) {
  constexpr double pi = std::numbers::pi;
  if (!(r > 0.0)) throw InvalidParameters("r must be positive");
  if (!(epsilon > 0.0)) throw InvalidParameters("epsilon must be positive");
  if (n < 2) throw InvalidParameters("n must be at least 2");
  if (!(c >= 2.0)) throw InvalidParameters("c must be at least 2");
  const double far = r * (1.0 + epsilon);
  if (far > pi * pi / 4) throw InvalidParameters("r(1+epsilon) exceeds pi^2/4");

  LSHParams p;
  p.family = family;
  p.r = r;
  p.epsilon = epsilon;
  p.n = n;
  p.c = c;
  p.p1 = collision_prob(family, std::sqrt(r));
  p.p2 = collision_prob(family, std::min(std::sqrt(far), pi / 2));
  if (!(p.p2 > 0.0)) throw InvalidParameters("p2 must be positive");
  if (!(p.p1 > p.p2)) throw InvalidParameters("p1 must exceed p2");
  p.rho = std::log(p.p1) / std::log(p.p2);
  const double ln_n = std::log(static_cast<double>(n));
  p.k_bits = static_cast<std::uint64_t>(std::ceil(ln_n / std::log(1.0 / p.p2)));
  p.num_tables = static_cast<std::uint64_t>(std::ceil(std::pow(static_cast<double>(n), p.rho)));
  p.success_prob_epsilon = 1.0 - 1.0 / c - 1.0 / epsilon;
  p.success_prob_euler = 1.0 - 1.0 / c - 1.0 / std::numbers::e;
  return p;
}

namespace {

constexpr std::uint64_t kTrialsPerBlock = 4096;

std::uint64_t count_block(Family family, const Vector& w, const Vector& x, std::uint64_t trials, Rng& rng) {
  const Eigen::Index d = w.size();
  std::uint64_t hits = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    switch (family) {
      case Family::AH: {
        const auto pp = ProjectionPair::random(d, rng);
        hits += ah_hash(w, InputRole::HyperplaneNormal, pp) == ah_hash(x, InputRole::DatabasePoint, pp);
        break;
      }
      case Family::EH: {
        const auto ep = EHProjection::random(d, rng);
        hits += eh_hash(w, InputRole::HyperplaneNormal, ep) == eh_hash(x, InputRole::DatabasePoint, ep);
        break;
      }
      case Family::BH: {
        const auto pp = ProjectionPair::random(d, rng);
        hits += -bh_hash(w, pp) == bh_hash(x, pp);
        break;
      }
    }
  }
  return hits;
}

}  // namespace

double estimate_collision(Family family, double alpha, std::uint64_t trials, std::uint64_t seed, Eigen::Index dim,
                          unsigned workers) {
  constexpr double pi = std::numbers::pi;
  if (trials < 1) throw InvalidInput("trials must be at least 1");
  if (dim < 2) throw InvalidInput("dimension must be at least 2");
  if (!(alpha >= 0.0 && alpha <= pi / 2)) throw InvalidInput("alpha must lie in [0, pi/2]");

  Vector w = Vector::Zero(dim);
  w[0] = 1.0;
  Vector x = Vector::Zero(dim);
  x[0] = std::cos(pi / 2 - alpha);
  x[1] = std::sin(pi / 2 - alpha);

  const std::uint64_t blocks = (trials + kTrialsPerBlock - 1) / kTrialsPerBlock;
  std::vector<std::uint64_t> hits(blocks, 0);
  auto run_block = [&](std::uint64_t b) {
    Rng rng(derive_seed(seed, b));
    const std::uint64_t begin = b * kTrialsPerBlock;
    const std::uint64_t count = std::min(kTrialsPerBlock, trials - begin);
    hits[b] = count_block(family, w, x, count, rng);
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(blocks)));
  if (workers == 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t)
      pool.emplace_back([&, t] {
        for (std::uint64_t b = t; b < blocks; b += workers) run_block(b);
      });
    for (auto& th : pool) th.join();
  }

  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  return static_cast<double>(total) / static_cast<double>(trials);
}

}  // namespace planehash
