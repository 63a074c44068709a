#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "planehash/errors.hpp"

namespace planehash {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using PointId = std::uint32_t;

/// A database point: identifier plus coordinates.
struct DataPoint {
  PointId id = 0;
  Vector coords;
};

/// A hyperplane query P_w given by its normal w.
class HyperplaneQuery {
 public:
  explicit HyperplaneQuery(Vector normal) : normal_(std::move(normal)) {
    if (!(normal_.norm() > 0.0)) throw InvalidInput("hyperplane normal must be nonzero");
  }
  const Vector& normal() const { return normal_; }
  Eigen::Index dim() const { return normal_.size(); }

 private:
  Vector normal_;
};

/// theta is the angle between a point and the hyperplane normal, in [0, pi];
/// alpha = |theta - pi/2| is the point-to-hyperplane angle, in [0, pi/2].
struct Angles {
  double theta = 0.0;
  double alpha = 0.0;
};

/// Points are stored column-wise: `points.col(i)` is point i.
struct Dataset {
  Matrix points;
  std::vector<int> labels;  // empty when the dataset is unlabeled

  Eigen::Index dim() const { return points.rows(); }
  Eigen::Index size() const { return points.cols(); }
  bool has_labels() const { return !labels.empty(); }
};

namespace detail {

template <typename Derived>
double checked_norm(const Eigen::MatrixBase<Derived>& v, const char* what) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInput(std::string(what) + " must have finite nonzero norm");
  return n;
}

template <typename A, typename B>
void check_same_dim(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) throw InvalidInput("dimension mismatch");
}

}  // namespace detail

template <typename A, typename B>
Angles angle_between(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& w) {
  detail::check_same_dim(x, w);
  const double nx = detail::checked_norm(x, "point");
  const double nw = detail::checked_norm(w, "normal");
  const double c = std::clamp(x.dot(w) / (nx * nw), -1.0, 1.0);
  Angles a;
  a.theta = std::acos(c);
  a.alpha = std::abs(a.theta - std::numbers::pi / 2);
  return a;
}

/// |w^T x| / ||w||.
template <typename A, typename B>
double point_to_hyperplane_distance(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& w) {
  detail::check_same_dim(x, w);
  const double nw = detail::checked_norm(w, "normal");
  return std::abs(w.dot(x)) / nw;
}

template <typename A, typename B>
double abs_cosine(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  detail::check_same_dim(x, y);
  const double nx = detail::checked_norm(x, "vector");
  const double ny = detail::checked_norm(y, "vector");
  return std::clamp(std::abs(x.dot(y)) / (nx * ny), 0.0, 1.0);
}

inline Angles angle_between(const DataPoint& x, const HyperplaneQuery& q) {
  return angle_between(x.coords, q.normal());
}

inline double point_to_hyperplane_distance(const DataPoint& x, const HyperplaneQuery& q) {
  return point_to_hyperplane_distance(x.coords, q.normal());
}

/// Scales every column to unit l2 norm. Zero columns are rejected.
inline void normalize_columns(Matrix& points) {
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const double n = points.col(i).norm();
    if (!(n > 0.0)) throw InvalidInput("cannot normalize a zero vector (column " + std::to_string(i) + ")");
    points.col(i) /= n;
  }
}

/// Appends a constant 1 to every column, so a linear model with bias becomes a
/// hyperplane through the origin.
inline Matrix augment_with_bias(const Matrix& points) {
  Matrix out(points.rows() + 1, points.cols());
  out.topRows(points.rows()) = points;
  out.row(points.rows()).setOnes();
  return out;
}

}  // namespace planehash
