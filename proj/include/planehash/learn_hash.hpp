#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "planehash/geometry.hpp"
#include "planehash/rand_hash.hpp"

namespace planehash {

/// Target code correlations for m training samples, built from |cos| with
/// thresholds 0 < t2 < t1 < 1.
struct SimilarityTarget {
  Matrix S;
  double t1 = 0.0;
  double t2 = 0.0;
};

struct Thresholds {
  double t1 = 0.0;
  double t2 = 0.0;
};

/// A length-m vector with entries exactly +1 or -1.
using BitVector = Vector;

/// For every sample, the |cos| row against the whole pool is sorted; t1 is the
/// mean of the top `fraction` of each row averaged over rows, t2 likewise for
/// the bottom. Each slice holds max(1, floor(fraction * n)) values.
/// Throws ThresholdDegeneracy unless 0 < t2 < t1 < 1.
Thresholds select_thresholds(const Matrix& samples, const Matrix& pool, double fraction = 0.05);

/// S_ii' = 1 if |cos| >= t1, -1 if |cos| <= t2, 2|cos| - 1 otherwise.
SimilarityTarget build_similarity_target(const Matrix& samples, double t1, double t2);

/// phi(x) = 2 / (1 + exp(-x)) - 1, evaluated as tanh(x / 2).
inline double sigmoid_phi(double x) { return std::tanh(0.5 * x); }

/// b~_i = phi(s * u'x_i x_i'v).
Vector relaxed_bits(const Vector& u, const Vector& v, const Matrix& samples, double scale = 1.0);

/// b_i = sgn(u'x_i x_i'v).
BitVector quantized_bits(const Vector& u, const Vector& v, const Matrix& samples);

/// -b~' R b~.
double surrogate_cost(const Vector& u, const Vector& v, const Matrix& R, const Matrix& samples, double scale = 1.0);

/// Gradient of surrogate_cost with respect to [u; v]:
///   -s [X diag(sigma) X' v ; X diag(sigma) X' u],  sigma = (R b~) .* (1 - b~ .* b~).
Vector surrogate_gradient(const Vector& u, const Vector& v, const Matrix& R, const Matrix& samples,
                          double scale = 1.0);

/// -b' R b for a sign vector.
inline double quantized_cost(const BitVector& b, const Matrix& R) { return -b.dot(R * b); }

/// ||(1/k) B B' - S||_F^2 for an m x k sign matrix B.
double code_objective(const Matrix& codes, const Matrix& S);

struct OptimizerConfig {
  int max_iterations = 500;
  double initial_step = 1.0;
  double grad_tolerance = 1e-6;
  double relative_tolerance = 1e-8;
  int max_halvings = 60;
  /// Global factor s applied inside phi(s * u'x x'v).
  double scale = 1.0;
};

struct BitFitTrace {
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
  double surrogate_init = 0.0;
  double surrogate_final = 0.0;
  double quantized_init = 0.0;
  double quantized_final = 0.0;
  /// True when the fitted bit has b'Rb <= 0, i.e. it does not reduce the residue.
  bool nonpositive_gain = false;
  /// Surrogate cost of every accepted iterate, starting with the initial point.
  std::vector<double> cost_history;
};

struct BitFit {
  ProjectionPair pair;
  BitVector bits;
  BitFitTrace trace;
};

/// Minimizes the smooth surrogate from `init` with accelerated gradient descent.
/// The momentum is reset whenever an extrapolated step would raise the cost,
/// so the accepted costs never increase. Returns the accepted iterate with the
/// lowest quantized cost (later iterates win ties).
BitFit fit_bit(const Matrix& R, const Matrix& samples, const ProjectionPair& init, const OptimizerConfig& config);

struct TrainingMeta {
  std::uint64_t seed = 0;
  std::uint64_t num_samples = 0;
  double t1 = 0.0;
  double t2 = 0.0;
  double threshold_fraction = 0.0;
  double scale = 1.0;
  double objective_before = 0.0;  // Q of the warm-start random codes
  double objective_after = 0.0;   // Q of the learned codes
  std::vector<int> iterations;
  std::vector<double> surrogate_final;
  std::vector<double> quantized_final;
  std::vector<int> nonpositive_bits;  // indices j with b_j' R_{j-1} b_j <= 0
};

struct LearnedHashFamily {
  Eigen::Index dim = 0;
  std::vector<ProjectionPair> pairs;
  TrainingMeta meta;

  int k() const { return static_cast<int>(pairs.size()); }
};

/// Full training output: the family plus the final code matrix and residue.
struct LearnResult {
  LearnedHashFamily family;
  Matrix codes;    // m x k, entries +-1
  Matrix residue;  // R_k = kS - sum_j b_j b_j'
};

/// Greedy fit of k bits against R_0 = kS, one ProjectionPair per bit, each
/// warm-started from `init[j]`. Requires m > k.
LearnResult learn_family(const Matrix& samples, const SimilarityTarget& target, const std::vector<ProjectionPair>& init,
                         const OptimizerConfig& config);

/// k Gaussian pairs drawn from one seeded stream. The random families and the LBH warm
/// start share this draw for equal (d, seed).
std::vector<ProjectionPair> random_pairs(Eigen::Index d, int count, std::uint64_t seed);

struct LearnConfig {
  int k = 16;
  int num_samples = 500;
  double threshold_fraction = 0.05;
  std::uint64_t seed = 0;
  OptimizerConfig optimizer;
};

/// Column indices of m pool points drawn uniformly without replacement.
std::vector<PointId> sample_ids(Eigen::Index n, Eigen::Index m, std::uint64_t seed);

/// Draws m training samples from `pool` with thresholds taken against the
/// whole pool, then runs learn_family from random_pairs(d, k, seed).
LearnResult train_lbh(const Matrix& pool, const LearnConfig& config);

std::string family_to_json(const LearnedHashFamily& family);
LearnedHashFamily family_from_json(std::string_view text);

}  // namespace planehash
