#include "planehash/learn_hash.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>

#include "json.hpp"

namespace planehash {

namespace {

/// |cos| between every column of `a` and every column of `b`.
Matrix abs_cosine_matrix(const Matrix& a, const Matrix& b) {
  const Vector na = a.colwise().norm().transpose();
  const Vector nb = b.colwise().norm().transpose();
  if ((na.array() <= 0.0).any() || (nb.array() <= 0.0).any()) throw InvalidInput("zero-norm vector");
  Matrix c = (a.transpose() * b).cwiseAbs();
  c.array().colwise() /= na.array();
  c.array().rowwise() /= nb.transpose().array();
  return c.cwiseMin(1.0);
}

double require_finite(double x) {
  if (!std::isfinite(x)) throw OptimizationDiverged("surrogate cost is not finite");
  return x;
}

}  // namespace

Thresholds select_thresholds(const Matrix& samples, const Matrix& pool, double fraction) {
  if (samples.cols() < 2) throw InvalidInput("need at least two samples");
  if (pool.cols() < 1) throw InvalidInput("pool is empty");
  if (samples.rows() != pool.rows()) throw InvalidInput("dimension mismatch between samples and pool");
  if (!(fraction > 0.0 && fraction < 0.5)) throw InvalidInput("fraction must lie in (0, 0.5)");

  const Matrix c = abs_cosine_matrix(samples, pool);
  const Eigen::Index n = pool.cols();
  const auto slice = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::floor(fraction * double(n))));

  double top = 0.0;
  double bottom = 0.0;
  std::vector<double> row(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < n; ++j) row[j] = c(i, j);
    std::sort(row.begin(), row.end());
    bottom += std::accumulate(row.begin(), row.begin() + slice, 0.0) / double(slice);
    top += std::accumulate(row.end() - slice, row.end(), 0.0) / double(slice);
  }
  Thresholds t{top / double(c.rows()), bottom / double(c.rows())};
  if (!(t.t2 > 0.0 && t.t2 < t.t1 && t.t1 < 1.0))
    throw ThresholdDegeneracy("degenerate thresholds t1=" + std::to_string(t.t1) + " t2=" + std::to_string(t.t2));
  return t;
}

SimilarityTarget build_similarity_target(const Matrix& samples, double t1, double t2) {
  if (!(t2 > 0.0 && t2 < t1 && t1 < 1.0)) throw InvalidInput("thresholds must satisfy 0 < t2 < t1 < 1");
  const Matrix c = abs_cosine_matrix(samples, samples);
  SimilarityTarget target;
  target.t1 = t1;
  target.t2 = t2;
  target.S = c.unaryExpr([=](double x) { return x >= t1 ? 1.0 : (x <= t2 ? -1.0 : 2.0 * x - 1.0); });
  // Round-off can leave the diagonal a hair under 1; |cos(x, x)| is exactly 1.
  target.S.diagonal().setOnes();
  // c is symmetric up to round-off; make S exactly symmetric.
  target.S = (0.5 * (target.S + target.S.transpose())).eval();
  return target;
}

Vector relaxed_bits(const Vector& u, const Vector& v, const Matrix& samples, double scale) {
  const Vector pu = samples.transpose() * u;
  const Vector pv = samples.transpose() * v;
  return (scale * pu.array() * pv.array()).unaryExpr([](double a) { return sigmoid_phi(a); }).matrix();
}

BitVector quantized_bits(const Vector& u, const Vector& v, const Matrix& samples) {
  const Vector pu = samples.transpose() * u;
  const Vector pv = samples.transpose() * v;
  return (pu.array() * pv.array()).unaryExpr([](double a) { return double(sgn(a)); }).matrix();
}

double surrogate_cost(const Vector& u, const Vector& v, const Matrix& R, const Matrix& samples, double scale) {
  const Vector b = relaxed_bits(u, v, samples, scale);
  return -b.dot(R * b);
}

Vector surrogate_gradient(const Vector& u, const Vector& v, const Matrix& R, const Matrix& samples, double scale) {
  const Vector pu = samples.transpose() * u;
  const Vector pv = samples.transpose() * v;
  const Vector b = (scale * pu.array() * pv.array()).unaryExpr([](double a) { return sigmoid_phi(a); }).matrix();
  const Vector sigma = (R * b).array() * (1.0 - b.array().square());
  const Eigen::Index d = u.size();
  Vector g(2 * d);
  g.head(d) = -scale * (samples * sigma.cwiseProduct(pv));
  g.tail(d) = -scale * (samples * sigma.cwiseProduct(pu));
  return g;
}

double code_objective(const Matrix& codes, const Matrix& S) {
  const double k = static_cast<double>(codes.cols());
  return ((codes * codes.transpose()) / k - S).squaredNorm();
}

BitFit fit_bit(const Matrix& R, const Matrix& samples, const ProjectionPair& init, const OptimizerConfig& config) {
  const Eigen::Index d = samples.rows();
  if (init.u.size() != d || init.v.size() != d) throw InvalidInput("initial pair dimension mismatch");
  if (R.rows() != samples.cols() || R.cols() != samples.cols()) throw InvalidInput("residue must be m x m");

  auto cost_at = [&](const Vector& theta) {
    return require_finite(surrogate_cost(theta.head(d), theta.tail(d), R, samples, config.scale));
  };
  auto grad_at = [&](const Vector& theta) {
    return surrogate_gradient(theta.head(d), theta.tail(d), R, samples, config.scale);
  };
  auto qcost_at = [&](const Vector& theta) {
    return quantized_cost(quantized_bits(theta.head(d), theta.tail(d), samples), R);
  };

  Vector x(2 * d);
  x << init.u, init.v;
  Vector x_prev = x;
  double fx = cost_at(x);

  BitFitTrace trace;
  trace.surrogate_init = fx;
  trace.quantized_init = qcost_at(x);
  trace.cost_history.push_back(fx);

  Vector best = x;
  double best_q = trace.quantized_init;
  // First trial step moves theta by initial_step * |theta|.
  double step = config.initial_step;
  {
    const double g0 = grad_at(x).norm();
    if (g0 > 0.0) step *= std::max(x.norm(), 1e-12) / g0;
  }
  int momentum_count = 0;

  for (int it = 0; it < config.max_iterations; ++it) {
    trace.iterations = it + 1;
    const double beta = momentum_count == 0 ? 0.0 : double(momentum_count - 1) / double(momentum_count + 2);
    const Vector y = x + beta * (x - x_prev);
    const double fy = beta == 0.0 ? fx : cost_at(y);
    const Vector gy = grad_at(y);
    const double gnorm = gy.norm();
    if (beta == 0.0 && gnorm < config.grad_tolerance) {
      trace.converged = true;
      break;
    }

    // Halve the step until the cost at the gradient step drops below fy.
    Vector z;
    double fz = fy;
    bool decreased = false;
    const double step_before = step;
    for (int h = 0; h <= config.max_halvings; ++h) {
      z = y - step * gy;
      fz = cost_at(z);
      if (fz < fy) {
        decreased = true;
        break;
      }
      step *= 0.5;
    }

    if (!decreased || fz > fx) {
      if (beta == 0.0) {
        // No descent possible from x itself: stationary to working precision.
        trace.converged = true;
        break;
      }
      // Extrapolation overshot: drop momentum and retry from x.
      if (!decreased) step = step_before;
      momentum_count = 0;
      x_prev = x;
      ++trace.restarts;
      continue;
    }

    const double change = std::abs(fx - fz);
    x_prev = x;
    x = z;
    const double previous = fx;
    fx = fz;
    ++momentum_count;
    trace.cost_history.push_back(fx);

    const double q = qcost_at(x);
    if (q <= best_q) {
      best_q = q;
      best = x;
    }
    if (change <= config.relative_tolerance * std::max(std::abs(previous), 1.0)) {
      trace.converged = true;
      break;
    }
  }

  BitFit fit;
  fit.pair.u = best.head(d);
  fit.pair.v = best.tail(d);
  fit.bits = quantized_bits(fit.pair.u, fit.pair.v, samples);
  trace.surrogate_final = cost_at(best);
  trace.quantized_final = best_q;
  trace.nonpositive_gain = -best_q <= 0.0;
  fit.trace = std::move(trace);
  return fit;
}

LearnResult learn_family(const Matrix& samples, const SimilarityTarget& target, const std::vector<ProjectionPair>& init,
                         const OptimizerConfig& config) {
  const Eigen::Index m = samples.cols();
  const int k = static_cast<int>(init.size());
  if (k < 1) throw InvalidConfiguration("k must be at least 1");
  if (m <= k) throw InvalidConfiguration("need more training samples than bits (m > k)");
  if (target.S.rows() != m || target.S.cols() != m) throw InvalidInput("S must be m x m");

  LearnResult result;
  result.family.dim = samples.rows();
  result.codes.resize(m, k);
  Matrix init_codes(m, k);

  Matrix R = double(k) * target.S;
  TrainingMeta& meta = result.family.meta;
  meta.num_samples = static_cast<std::uint64_t>(m);
  meta.t1 = target.t1;
  meta.t2 = target.t2;
  meta.scale = config.scale;

  for (int j = 0; j < k; ++j) {
    init_codes.col(j) = quantized_bits(init[j].u, init[j].v, samples);
    BitFit fit = fit_bit(R, samples, init[j], config);
    R.noalias() -= fit.bits * fit.bits.transpose();
    result.codes.col(j) = fit.bits;
    meta.iterations.push_back(fit.trace.iterations);
    meta.surrogate_final.push_back(fit.trace.surrogate_final);
    meta.quantized_final.push_back(fit.trace.quantized_final);
    if (fit.trace.nonpositive_gain) meta.nonpositive_bits.push_back(j);
    result.family.pairs.push_back(std::move(fit.pair));
  }
  meta.objective_before = code_objective(init_codes, target.S);
  meta.objective_after = code_objective(result.codes, target.S);
  result.residue = std::move(R);
  return result;
}

std::vector<ProjectionPair> random_pairs(Eigen::Index d, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ProjectionPair> pairs;
  pairs.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) pairs.push_back(ProjectionPair::random(d, rng));
  return pairs;
}

std::vector<PointId> sample_ids(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  if (m > n) throw InvalidConfiguration("cannot sample more points than the pool holds");
  std::vector<PointId> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), PointId{0});
  std::vector<PointId> out;
  out.reserve(static_cast<std::size_t>(m));
  Rng rng(derive_seed(seed, 0x5A3B1E));
  std::sample(all.begin(), all.end(), std::back_inserter(out), m, rng);
  return out;
}

LearnResult train_lbh(const Matrix& pool, const LearnConfig& config) {
  if (config.k < 1) throw InvalidConfiguration("k must be at least 1");
  if (config.num_samples <= config.k) throw InvalidConfiguration("need more training samples than bits (m > k)");
  const auto ids = sample_ids(pool.cols(), config.num_samples, config.seed);
  Matrix samples(pool.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) samples.col(static_cast<Eigen::Index>(i)) = pool.col(ids[i]);

  const Thresholds t = select_thresholds(samples, pool, config.threshold_fraction);
  const SimilarityTarget target = build_similarity_target(samples, t.t1, t.t2);
  LearnResult result = learn_family(samples, target, random_pairs(pool.rows(), config.k, config.seed), config.optimizer);
  result.family.meta.seed = config.seed;
  result.family.meta.threshold_fraction = config.threshold_fraction;
  return result;
}

namespace {

nlohmann::json to_json_vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector from_json_vec(const nlohmann::json& j, Eigen::Index d) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != d) throw InvalidInput("projection vector has wrong dimension");
  return Eigen::Map<const Vector>(values.data(), d);
}

}  // namespace

std::string family_to_json(const LearnedHashFamily& family) {
  nlohmann::json j;
  j["format"] = "planehash-lbh";
  j["version"] = 1;
  j["dim"] = family.dim;
  j["k"] = family.k();
  auto& pairs = j["pairs"] = nlohmann::json::array();
  for (const auto& p : family.pairs) pairs.push_back({{"u", to_json_vec(p.u)}, {"v", to_json_vec(p.v)}});
  const auto& m = family.meta;
  j["training_meta"] = {
      {"seed", m.seed},
      {"num_samples", m.num_samples},
      {"t1", m.t1},
      {"t2", m.t2},
      {"threshold_fraction", m.threshold_fraction},
      {"scale", m.scale},
      {"objective_before", m.objective_before},
      {"objective_after", m.objective_after},
      {"iterations", m.iterations},
      {"surrogate_final", m.surrogate_final},
      {"quantized_final", m.quantized_final},
      {"nonpositive_bits", m.nonpositive_bits},
  };
  return j.dump(2);
}

LearnedHashFamily family_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed family file: ") + e.what());
  }
  if (j.value("format", "") != "planehash-lbh") throw InvalidInput("not a planehash-lbh family file");
  try {
    LearnedHashFamily f;
    f.dim = j.at("dim").get<Eigen::Index>();
    const int k = j.at("k").get<int>();
    for (const auto& p : j.at("pairs")) f.pairs.push_back({from_json_vec(p.at("u"), f.dim), from_json_vec(p.at("v"), f.dim)});
    if (f.k() != k) throw InvalidInput("family file pair count does not match k");
    if (j.contains("training_meta")) {
      const auto& m = j["training_meta"];
      f.meta.seed = m.value("seed", std::uint64_t{0});
      f.meta.num_samples = m.value("num_samples", std::uint64_t{0});
      f.meta.t1 = m.value("t1", 0.0);
      f.meta.t2 = m.value("t2", 0.0);
      f.meta.threshold_fraction = m.value("threshold_fraction", 0.0);
      f.meta.scale = m.value("scale", 1.0);
      f.meta.objective_before = m.value("objective_before", 0.0);
      f.meta.objective_after = m.value("objective_after", 0.0);
      f.meta.iterations = m.value("iterations", std::vector<int>{});
      f.meta.surrogate_final = m.value("surrogate_final", std::vector<double>{});
      f.meta.quantized_final = m.value("quantized_final", std::vector<double>{});
      f.meta.nonpositive_bits = m.value("nonpositive_bits", std::vector<int>{});
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed family file: ") + e.what());
  }
}

}  // namespace planehash
