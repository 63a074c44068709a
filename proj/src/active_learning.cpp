#include "planehash/active_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace planehash {

double svm_objective(const Vector& w, const Matrix& x, std::span<const int> y, double lambda) {
  const Vector scores = x.transpose() * w;
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) hinge += std::max(0.0, 1.0 - y[i] * scores[i]);
  return 0.5 * lambda * w.squaredNorm() + (scores.size() ? hinge / double(scores.size()) : 0.0);
}

SvmFit train_linear_svm_detailed(const Matrix& x, std::span<const int> y, const SvmConfig& config) {
  if (static_cast<Eigen::Index>(y.size()) != x.cols()) throw InvalidInput("label count does not match examples");
  if (!(config.lambda > 0.0)) throw InvalidInput("lambda must be positive");
  const bool has_pos = std::any_of(y.begin(), y.end(), [](int v) { return v == 1; });
  const bool has_neg = std::any_of(y.begin(), y.end(), [](int v) { return v == -1; });
  if (!has_pos || !has_neg) throw InvalidInput("training set needs both +1 and -1 labels");
  for (int v : y)
    if (v != 1 && v != -1) throw InvalidInput("labels must be +1 or -1");

  SvmFit fit;
  fit.model.w = Vector::Zero(x.rows());
  if (config.epochs <= 0) return fit;

  const double radius = 1.0 / std::sqrt(config.lambda);
  Rng rng(config.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  Vector w = Vector::Zero(x.rows());
  double best = std::numeric_limits<double>::infinity();
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index i : order) {
      ++t;
      const double eta = 1.0 / (config.lambda * double(t));
      const double margin = y[i] * w.dot(x.col(i));
      w *= 1.0 - eta * config.lambda;
      if (margin < 1.0) w.noalias() += (eta * y[i]) * x.col(i);
      const double n = w.norm();
      if (n > radius) w *= radius / n;
    }
    const double obj = svm_objective(w, x, y, config.lambda);
    fit.objective_history.push_back(obj);
    if (obj < best) {
      best = obj;
      fit.model.w = w;
    }
  }
  return fit;
}

LinearModel train_linear_svm(const Matrix& x, std::span<const int> y, const SvmConfig& config) {
  return train_linear_svm_detailed(x, y, config).model;
}

double average_precision(std::span<const double> scores, std::span<const int> positive) {
  if (scores.size() != positive.size()) throw InvalidInput("scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (positive[order[rank]] > 0) {
      ++hits;
      sum += double(hits) / double(rank + 1);
    }
  }
  if (hits == 0) throw UndefinedMetric("average precision needs at least one positive");
  return sum / double(hits);
}

std::string_view to_string(SelectorKind k) {
  switch (k) {
    case SelectorKind::Exhaustive: return "exhaustive";
    case SelectorKind::Random: return "random";
    case SelectorKind::AH: return "AH";
    case SelectorKind::EH: return "EH";
    case SelectorKind::BH: return "BH";
    case SelectorKind::LBH: return "LBH";
  }
  return "?";
}

SelectorKind parse_selector(std::string_view s) {
  if (s == "exhaustive" || s == "Exhaustive") return SelectorKind::Exhaustive;
  if (s == "random" || s == "Random") return SelectorKind::Random;
  switch (parse_scheme(s)) {
    case Scheme::AH: return SelectorKind::AH;
    case Scheme::EH: return SelectorKind::EH;
    case Scheme::BH: return SelectorKind::BH;
    case Scheme::LBH: return SelectorKind::LBH;
  }
  throw InvalidInput("unknown selector");
}

ALState::ALState(Eigen::Index pool_size, const std::vector<PointId>& initial_labeled)
    : mask_(static_cast<std::size_t>(pool_size), false) {
  for (PointId id : initial_labeled) {
    if (static_cast<Eigen::Index>(id) >= pool_size) throw InvalidInput("initial label id out of range");
    if (mask_[id]) throw InvalidInput("duplicate id in initial labeled set");
    mask_[id] = true;
    labeled_.push_back(id);
  }
  for (Eigen::Index i = 0; i < pool_size; ++i)
    if (!mask_[static_cast<std::size_t>(i)]) unlabeled_.push_back(static_cast<PointId>(i));
}

void ALState::label(PointId id) {
  if (static_cast<std::size_t>(id) >= mask_.size() || mask_[id]) throw InvalidState("point is not in the unlabeled pool");
  mask_[id] = true;
  labeled_.push_back(id);
  unlabeled_.erase(std::lower_bound(unlabeled_.begin(), unlabeled_.end(), id));
}

namespace {

Scheme scheme_of(SelectorKind k) {
  switch (k) {
    case SelectorKind::AH: return Scheme::AH;
    case SelectorKind::EH: return Scheme::EH;
    case SelectorKind::BH: return Scheme::BH;
    case SelectorKind::LBH: return Scheme::LBH;
    default: break;
  }
  throw InvalidInput("selector kind has no hash scheme");
}

}  // namespace

Selector::Selector(const SelectorConfig& config, const Matrix& pool) : config_(config), pool_(&pool) {
  if (config.kind == SelectorKind::Exhaustive || config.kind == SelectorKind::Random) return;
  if (config.tables < 1) throw InvalidConfiguration("need at least one table");
  std::vector<HashFamily> families;
  for (int t = 0; t < config.tables; ++t) {
    const std::uint64_t table_seed = derive_seed(config.seed, static_cast<std::uint64_t>(t));
    if (config.kind == SelectorKind::LBH) {
      LearnConfig lc;
      lc.k = config.bits;
      lc.num_samples = std::min<int>(config.lbh_samples, static_cast<int>(pool.cols()));
      lc.threshold_fraction = config.threshold_fraction;
      lc.seed = table_seed;
      lc.optimizer = config.optimizer;
      families.push_back(HashFamily::lbh(train_lbh(pool, lc).family));
    } else {
      families.push_back(HashFamily::random(scheme_of(config.kind), pool.rows(), config.bits, table_seed));
    }
  }
  index_ = std::make_shared<const HammingIndex>(build_index(pool, std::move(families)));
}

Selection Selector::select(const ALState& state, const LinearModel& model, Rng& rng) const {
  const auto& pool = state.unlabeled();
  if (pool.empty()) throw InvalidState("unlabeled pool is empty");
  const Matrix& points = *pool_;

  auto random_pick = [&](bool fallback) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    Selection s;
    s.id = pool[pick(rng)];
    const double wn = model.w.norm();
    s.margin = wn > 0.0 ? std::abs(model.w.dot(points.col(s.id))) / wn : 0.0;
    s.fallback_used = fallback;
    return s;
  };

  if (config_.kind == SelectorKind::Random) return random_pick(false);
  if (!(model.w.norm() > 0.0)) throw InvalidState("model has a zero weight vector");

  if (config_.kind == SelectorKind::Exhaustive) {
    const double wn = model.w.norm();
    Selection s;
    s.margin = std::numeric_limits<double>::infinity();
    for (PointId id : pool) {
      const double m = std::abs(model.w.dot(points.col(id))) / wn;
      if (m < s.margin) {
        s.margin = m;
        s.id = id;
      }
    }
    return s;
  }

  const QueryResult qr = query_hyperplane(*index_, HyperplaneQuery(model.w), config_.radius, points, &state.labeled_mask());
  if (!qr.best_id) return random_pick(true);
  return {*qr.best_id, qr.best_margin, false};
}

Selection select_next(const ALState& state, const LinearModel& model, const Selector& selector, Rng& rng) {
  return selector.select(state, model, rng);
}

namespace {

std::vector<PointId> initial_labeled_set(const std::vector<int>& labels, int per_class, std::uint64_t seed) {
  std::map<int, std::vector<PointId>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<PointId>(i));
  std::vector<PointId> out;
  Rng rng(derive_seed(seed, 0x1AB));
  for (auto& [cls, ids] : by_class) {
    if (static_cast<int>(ids.size()) < per_class)
      throw InvalidConfiguration("class " + std::to_string(cls) + " has fewer points than initial_per_class");
    std::sample(ids.begin(), ids.end(), std::back_inserter(out), per_class, rng);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double accuracy(const LinearModel& model, const Matrix& aug, const std::vector<int>& labels, int cls) {
  const Vector scores = aug.transpose() * model.w;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) correct += (scores[i] > 0.0) == (labels[i] == cls);
  return double(correct) / double(scores.size());
}

}  // namespace

ALHistory run_al_experiment(const Dataset& pool, const ALConfig& config, const Dataset* test) {
  if (!pool.has_labels()) throw InvalidInput("active learning needs a labeled dataset");
  if (config.iterations < 0) throw InvalidConfiguration("iterations must be nonnegative");
  if (config.initial_per_class < 1) throw InvalidConfiguration("initial_per_class must be at least 1");
  if (test && (!test->has_labels() || test->dim() != pool.dim())) throw InvalidInput("test set must be labeled with matching dimension");

  std::vector<int> classes = pool.labels;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw InvalidInput("need at least two classes");
  std::vector<int> arms = classes.size() == 2 ? std::vector<int>{classes[1]} : classes;

  const Matrix aug = augment_with_bias(pool.points);
  const Matrix test_aug = test ? augment_with_bias(test->points) : Matrix();
  const auto initial = initial_labeled_set(pool.labels, config.initial_per_class, config.seed);
  if (initial.size() + static_cast<std::size_t>(config.iterations) > static_cast<std::size_t>(pool.size()))
    throw InvalidConfiguration("pool too small for the requested iterations");
  const Selector selector(config.selector, aug);

  ALHistory history;
  for (std::size_t a = 0; a < arms.size(); ++a) {
    const int cls = arms[a];
    ALState state(pool.size(), initial);
    Rng rng(derive_seed(config.seed, 1000 + a));
    for (int it = 0; it < config.iterations; ++it) {
      const auto& lab = state.labeled();
      Matrix x(aug.rows(), static_cast<Eigen::Index>(lab.size()));
      std::vector<int> y(lab.size());
      for (std::size_t i = 0; i < lab.size(); ++i) {
        x.col(static_cast<Eigen::Index>(i)) = aug.col(lab[i]);
        y[i] = pool.labels[lab[i]] == cls ? 1 : -1;
      }
      SvmConfig svm = config.svm;
      svm.seed = derive_seed(config.svm.seed ^ config.seed, (a << 20) + static_cast<std::uint64_t>(it));
      const LinearModel model = train_linear_svm(x, y, svm);

      ALRecord rec;
      rec.iteration = it;
      rec.cls = cls;
      rec.labeled = lab.size();
      {
        const auto& un = state.unlabeled();
        std::vector<double> scores(un.size());
        std::vector<int> pos(un.size());
        for (std::size_t i = 0; i < un.size(); ++i) {
          scores[i] = model.w.dot(aug.col(un[i]));
          pos[i] = pool.labels[un[i]] == cls ? 1 : 0;
        }
        try {
          rec.ap = average_precision(scores, pos);
        } catch (const UndefinedMetric&) {
          rec.ap = std::numeric_limits<double>::quiet_NaN();
        }
      }
      rec.test_accuracy = test ? accuracy(model, test_aug, test->labels, cls) : std::numeric_limits<double>::quiet_NaN();

      const Selection s = select_next(state, model, selector, rng);
      rec.margin = s.margin;
      rec.fallback = s.fallback_used;
      rec.nonempty = config.selector.kind == SelectorKind::Random ? false : !s.fallback_used;
      state.label(s.id);
      history.push_back(rec);
    }
  }
  return history;
}

std::optional<std::size_t> labels_to_reach(const ALHistory& history, int cls, double target) {
  for (const auto& r : history)
    if (r.cls == cls && r.test_accuracy >= target) return r.labeled;
  return std::nullopt;
}

std::string history_csv(const ALHistory& history) {
  std::ostringstream os;
  os.precision(17);
  os << kAlCsvHeader << '\n';
  for (const auto& r : history)
    os << r.iteration << ',' << r.cls << ',' << r.labeled << ',' << r.ap << ',' << r.margin << ',' << int(r.nonempty)
       << ',' << int(r.fallback) << ',' << r.test_accuracy << '\n';
  return os.str();
}

}  // namespace planehash

namespace planehash {

std::vector<Vector> svm_hyperplane_queries(const Dataset& data, int count, int labeled_per_class, const SvmConfig& svm,
                                           std::uint64_t seed) {
  if (!data.has_labels()) throw InvalidInput("query generation needs labels");
  std::vector<int> classes = data.labels;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw InvalidInput("need at least two classes");
  const Matrix aug = augment_with_bias(data.points);
  std::vector<Vector> out;
  for (int q = 0; q < count; ++q) {
    const int cls = classes[static_cast<std::size_t>(q) % classes.size()];
    const auto ids = initial_labeled_set(data.labels, labeled_per_class, derive_seed(seed, static_cast<std::uint64_t>(q)));
    Matrix x(aug.rows(), static_cast<Eigen::Index>(ids.size()));
    std::vector<int> y(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      x.col(static_cast<Eigen::Index>(i)) = aug.col(ids[i]);
      y[i] = data.labels[ids[i]] == cls ? 1 : -1;
    }
    SvmConfig c = svm;
    c.seed = derive_seed(seed ^ svm.seed, 7000 + static_cast<std::uint64_t>(q));
    Vector w = train_linear_svm(x, y, c).w;
    if (!(w.norm() > 0.0)) throw InvalidState("trained model has a zero weight vector");
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace planehash
