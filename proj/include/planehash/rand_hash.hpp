#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "planehash/geometry.hpp"
#include "planehash/random.hpp"

namespace planehash {

enum class InputRole { DatabasePoint, HyperplaneNormal };

/// Randomized hyperplane hash families with closed-form collision probabilities.
enum class Family { AH, EH, BH };

std::string_view to_string(Family f);
Family parse_family(std::string_view s);

/// sgn with sgn(0) = -1, used for every hash bit in the library.
inline int sgn(double x) { return x > 0.0 ? 1 : -1; }

/// One bilinear (or two-bit linear) hash function, parameterized by (u, v).
struct ProjectionPair {
  Vector u;
  Vector v;

  /// u and v drawn i.i.d. from N(0, I_d); u first, then v.
  static ProjectionPair random(Eigen::Index d, Rng& rng) {
    ProjectionPair p;
    p.u = gaussian_vector(rng, d);
    p.v = gaussian_vector(rng, d);
    return p;
  }
};

/// Projection of the d^2 embedding vec(z z^T). vec() is column-major:
/// entry i + j*d of the embedding is z_i * z_j.
struct EHProjection {
  Vector U;

  static EHProjection random(Eigen::Index d, Rng& rng) { return {gaussian_vector(rng, d * d)}; }

  Eigen::Index input_dim() const { return static_cast<Eigen::Index>(std::llround(std::sqrt(double(U.size())))); }
};

namespace detail {
template <typename Derived>
void check_hash_input(const Eigen::MatrixBase<Derived>& z, Eigen::Index d) {
  if (z.size() != d) throw InvalidInput("hash input dimension mismatch");
  if (!(z.squaredNorm() > 0.0)) throw InvalidInput("hash input must be nonzero");
}
}  // namespace detail

/// Two-bit AH hash: [sgn(u'z), sgn(v'z)] for points, [sgn(u'z), sgn(-v'z)] for normals.
template <typename Derived>
std::array<int, 2> ah_hash(const Eigen::MatrixBase<Derived>& z, InputRole role, const ProjectionPair& pp) {
  detail::check_hash_input(z, pp.u.size());
  const double pu = pp.u.dot(z);
  const double pv = pp.v.dot(z);
  return {sgn(pu), role == InputRole::DatabasePoint ? sgn(pv) : sgn(-pv)};
}

/// U' vec(z z^T) = z' M z with M the d x d column-major view of U.
template <typename Derived>
double eh_projection(const Eigen::MatrixBase<Derived>& z, const EHProjection& ep) {
  const Eigen::Index d = z.size();
  if (ep.U.size() != d * d) throw InvalidInput("EH projection must have dimension d^2");
  Eigen::Map<const Matrix> m(ep.U.data(), d, d);
  return z.dot(m * z);
}

template <typename Derived>
int eh_hash(const Eigen::MatrixBase<Derived>& z, InputRole role, const EHProjection& ep) {
  if (ep.U.size() != z.size() * z.size()) throw InvalidInput("EH projection must have dimension d^2");
  detail::check_hash_input(z, z.size());
  const double p = eh_projection(z, ep);
  return role == InputRole::DatabasePoint ? sgn(p) : sgn(-p);
}

/// Bilinear hash sgn(u'z z'v). Hyperplane queries use h(P_w) = -h(w); that
/// negation is the caller's job.
template <typename Derived>
int bh_hash(const Eigen::MatrixBase<Derived>& z, const ProjectionPair& pp) {
  detail::check_hash_input(z, pp.u.size());
  return sgn(pp.u.dot(z) * z.dot(pp.v));
}

/// Closed-form Pr[h(P_w) = h(x)] at point-to-hyperplane angle alpha in [0, pi/2].
double collision_prob(Family family, double alpha);

struct LSHParams {
  Family family = Family::BH;
  double r = 0.0;        // squared-angle radius
  double epsilon = 0.0;
  std::uint64_t n = 0;
  double c = 2.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double rho = 0.0;
  std::uint64_t k_bits = 0;
  std::uint64_t num_tables = 0;
  /// Success probability lower bound read as 1 - 1/c - 1/epsilon.
  double success_prob_epsilon = 0.0;
  /// The same bound read as 1 - 1/c - 1/e.
  double success_prob_euler = 0.0;
};

/// Sensitivity parameters for distance D = alpha^2: p1 at sqrt(r), p2 at sqrt(r(1+eps)).
LSHParams lsh_params(Family family, double r, double epsilon, std::uint64_t n, double c = 2.0);

/// Monte-Carlo collision frequency for a fixed (w, x) pair at angle alpha in R^dim.
/// Trials are split into fixed blocks with derived seeds, so the result does
/// not depend on `workers`.
double estimate_collision(Family family, double alpha, std::uint64_t trials, std::uint64_t seed,
                          Eigen::Index dim = 4, unsigned workers = 1);

}  // namespace planehash
