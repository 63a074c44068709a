#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "planehash/hash_index.hpp"
#include "planehash/learn_hash.hpp"

namespace planehash {

/// Linear classifier f(x) = w'x over bias-augmented inputs [x; 1].
struct LinearModel {
  Vector w;
};

struct SvmConfig {
  double lambda = 1e-4;
  int epochs = 20;
  std::uint64_t seed = 0;
};

struct SvmFit {
  LinearModel model;
  /// Regularized hinge objective at the end of every epoch.
  std::vector<double> objective_history;
};

/// lambda/2 ||w||^2 + mean hinge(1 - y w'x).
double svm_objective(const Vector& w, const Matrix& x, std::span<const int> y, double lambda);

/// Seeded stochastic subgradient descent on the regularized hinge loss with
/// step 1/(lambda t) and projection onto the ball of radius 1/sqrt(lambda).
/// Returns the epoch-end iterate with the lowest objective. Columns of `x` are
/// already bias-augmented; labels are +1/-1.
SvmFit train_linear_svm_detailed(const Matrix& x, std::span<const int> y, const SvmConfig& config);
LinearModel train_linear_svm(const Matrix& x, std::span<const int> y, const SvmConfig& config);

/// Mean of precision@rank over the positive positions, ranking by descending
/// score with ties to the lower index. Throws UndefinedMetric without positives.
double average_precision(std::span<const double> scores, std::span<const int> positive);

enum class SelectorKind { Exhaustive, Random, AH, EH, BH, LBH };

std::string_view to_string(SelectorKind k);
SelectorKind parse_selector(std::string_view s);

struct SelectorConfig {
  SelectorKind kind = SelectorKind::Exhaustive;
  int bits = 16;
  int radius = 3;
  int tables = 1;
  std::uint64_t seed = 0;
  // LBH training
  int lbh_samples = 500;
  double threshold_fraction = 0.05;
  OptimizerConfig optimizer;
};

struct Selection {
  PointId id = 0;
  double margin = 0.0;
  bool fallback_used = false;
};

/// Pool-based labeling state for one one-vs-all arm.
class ALState {
 public:
  ALState(Eigen::Index pool_size, const std::vector<PointId>& initial_labeled);

  const std::vector<PointId>& labeled() const { return labeled_; }
  const std::vector<PointId>& unlabeled() const { return unlabeled_; }
  const std::vector<bool>& labeled_mask() const { return mask_; }
  bool is_labeled(PointId id) const { return mask_.at(id); }
  Eigen::Index pool_size() const { return static_cast<Eigen::Index>(mask_.size()); }

  /// Moves `id` from the unlabeled pool to the labeled set.
  void label(PointId id);

 private:
  std::vector<bool> mask_;
  std::vector<PointId> labeled_;
  std::vector<PointId> unlabeled_;  // ascending
};

/// Sample selector. Hashing kinds build one index over the whole (augmented)
/// pool; labeled points are masked at query time.
class Selector {
 public:
  Selector(const SelectorConfig& config, const Matrix& pool);

  const SelectorConfig& config() const { return config_; }
  const HammingIndex* index() const { return index_ ? index_.get() : nullptr; }

  /// `rng` feeds Random selection and the random fallback of hashing kinds.
  Selection select(const ALState& state, const LinearModel& model, Rng& rng) const;

 private:
  SelectorConfig config_;
  const Matrix* pool_;
  std::shared_ptr<const HammingIndex> index_;
};

Selection select_next(const ALState& state, const LinearModel& model, const Selector& selector, Rng& rng);

struct ALConfig {
  SelectorConfig selector;
  int iterations = 300;
  int initial_per_class = 5;
  SvmConfig svm;
  std::uint64_t seed = 0;
};

struct ALRecord {
  int iteration = 0;
  int cls = 0;
  std::size_t labeled = 0;    // labels used by the model at this iteration
  double ap = 0.0;            // NaN when the unlabeled pool has no positives
  double margin = 0.0;        // |w'x|/||w|| of the selected point
  bool nonempty = false;      // lookup returned candidates (always true for Exhaustive)
  bool fallback = false;      // random supplement was used
  double test_accuracy = 0.0; // NaN without a test set
};

using ALHistory = std::vector<ALRecord>;

/// One arm per class (a single arm for class 1 when there are exactly two
/// classes). Each iteration trains, scores AP over the unlabeled pool, selects
/// one sample and labels it.
ALHistory run_al_experiment(const Dataset& pool, const ALConfig& config, const Dataset* test = nullptr);

/// Labeled-set size at the first iteration whose test accuracy reaches
/// `target`; nullopt if it never does.
std::optional<std::size_t> labels_to_reach(const ALHistory& history, int cls, double target);

inline constexpr std::string_view kAlCsvHeader = "iteration,class,labeled,ap,margin,nonempty,fallback,test_accuracy";
std::string history_csv(const ALHistory& history);

}  // namespace planehash

namespace planehash {

/// Hyperplane queries taken from trained classifiers: query q trains a
/// one-vs-all SVM for class (q mod classes) on `labeled_per_class` random
/// points per class and returns its normal (bias-augmented, dim d+1).
std::vector<Vector> svm_hyperplane_queries(const Dataset& data, int count, int labeled_per_class, const SvmConfig& svm,
                                           std::uint64_t seed);

}  // namespace planehash
