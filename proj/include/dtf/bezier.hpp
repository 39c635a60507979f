#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dtf/errors.hpp"
#include "dtf/model.hpp"

namespace dtf {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

inline double bernstein(int n, int i, double u) {
  if (i < 0 || i > n) return 0.0;
  return binomial(n, i) * std::pow(u, i) * std::pow(1.0 - u, n - i);
}

/// Weights w such that the r-th time derivative of an order-n curve of the
/// given duration at parameter u equals sum_i w_i P_i.
inline Eigen::VectorXd basis_weights(int n, double u, int r, double duration) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n + 1);
  if (r > n) return w;
  double scale = 1.0;
  for (int k = 0; k < r; ++k) scale *= static_cast<double>(n - k) / duration;
  for (int i = 0; i <= n - r; ++i) {
    const double b = scale * bernstein(n - r, i, u);
    if (b == 0.0) continue;
    for (int j = 0; j <= r; ++j) {
      const double sign = ((r - j) % 2 == 0) ? 1.0 : -1.0;
      w[i + j] += b * sign * binomial(r, j);
    }
  }
  return w;
}

/// Bézier curve over a normalized parameter u = (t - t0) / duration.
/// Derivatives are taken with respect to time t.
template <int Dim>
class BezierCurve {
 public:
  using Point = Eigen::Matrix<double, Dim, 1>;
  using Points = Eigen::Matrix<double, Dim, Eigen::Dynamic>;

  BezierCurve() = default;

  BezierCurve(Points control_points, double duration)
      : points_(std::move(control_points)), duration_(duration) {
    if (points_.cols() < 2) throw std::invalid_argument("a Bézier curve needs at least 2 control points");
    if (!(duration_ > 0.0)) throw std::invalid_argument("curve duration must be positive");
  }

  /// Constant curve of order 1.
  static BezierCurve constant(const Point& p, double duration) {
    Points pts(Dim, 2);
    pts.col(0) = p;
    pts.col(1) = p;
    return BezierCurve(std::move(pts), duration);
  }

  int order() const { return static_cast<int>(points_.cols()) - 1; }
  double duration() const { return duration_; }
  const Points& control_points() const { return points_; }
  Point control_point(int i) const { return points_.col(i); }

  /// de Casteljau evaluation.
  Point evaluate(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) {
      throw OutOfRange("curve parameter " + std::to_string(u) + " outside [0, 1]");
    }
    Points work = points_;
    for (int level = order(); level > 0; --level) {
      for (int i = 0; i < level; ++i) {
        work.col(i) = (1.0 - u) * work.col(i) + u * work.col(i + 1);
      }
    }
    return work.col(0);
  }

  /// Evaluation at local time t in [0, duration].
  Point at_time(double t) const { return evaluate(std::clamp(t / duration_, 0.0, 1.0)); }

  /// Time derivative. A linear curve yields a constant curve stored with two
  /// equal control points.
  BezierCurve derivative() const {
    const int n = order();
    if (n < 1) throw std::invalid_argument("cannot differentiate an order-0 curve");
    Points d(Dim, n);
    for (int i = 0; i < n; ++i) d.col(i) = n * (points_.col(i + 1) - points_.col(i)) / duration_;
    if (n == 1) return constant(d.col(0), duration_);
    return BezierCurve(std::move(d), duration_);
  }

  BezierCurve elevate_degree(int target_order) const {
    if (target_order < order()) throw std::invalid_argument("cannot lower the order of a curve");
    Points pts = points_;
    for (int n = order(); n < target_order; ++n) {
      Points next(Dim, n + 2);
      next.col(0) = pts.col(0);
      next.col(n + 1) = pts.col(n);
      for (int i = 1; i <= n; ++i) {
        const double a = static_cast<double>(i) / static_cast<double>(n + 1);
        next.col(i) = a * pts.col(i - 1) + (1.0 - a) * pts.col(i);
      }
      pts = std::move(next);
    }
    return BezierCurve(std::move(pts), duration_);
  }

 private:
  Points points_;
  double duration_ = 1.0;
};

using Curve3 = BezierCurve<3>;
using Curve1 = BezierCurve<1>;

/// Curve whose evaluation equals a(u) × b(u), built by Bernstein product
/// convolution. Its order is order(a) + order(b).
inline Curve3 cross_product_curve(const Curve3& a, const Curve3& b) {
  if (std::abs(a.duration() - b.duration()) > 1e-12 * std::max(1.0, a.duration())) {
    throw DimensionMismatch("cross product of curves with different durations");
  }
  const int m = a.order(), n = b.order();
  Curve3::Points out = Curve3::Points::Zero(3, m + n + 1);
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double w = binomial(m, i) * binomial(n, j) / binomial(m + n, i + j);
      out.col(i + j) += w * a.control_point(i).cross(b.control_point(j));
    }
  }
  return Curve3(std::move(out), a.duration());
}

/// Position, velocity and acceleration of the CoM at a curve boundary.
struct LinearState {
  Vec3 c = Vec3::Zero();
  Vec3 c_dot = Vec3::Zero();
  Vec3 c_ddot = Vec3::Zero();
};

inline LinearState linear_part(const State& s) { return {s.c, s.c_dot, s.c_ddot}; }

/// A 3D curve whose control points are affine in a list of 3D parameters:
///   P_i = offset_i + sum_v coeff(i, v) * param_v.
/// Sampling returns the constant part and one scalar weight per parameter, so
/// c(u) = value + sum_v weights[v] * param_v.
struct AffineCurve {
  int order = 0;
  double duration = 1.0;
  Eigen::Matrix3Xd offset;
  Eigen::MatrixXd coeff;

  struct Sample {
    Vec3 value;
    Eigen::VectorXd weights;
  };

  int num_params() const { return static_cast<int>(coeff.cols()); }

  /// r-th time derivative at u.
  Sample sample(double u, int r) const {
    const Eigen::VectorXd w = basis_weights(order, u, r, duration);
    return {offset * w, coeff.transpose() * w};
  }

  Curve3 instantiate(const std::vector<Vec3>& params) const {
    if (static_cast<int>(params.size()) != num_params()) {
      throw DimensionMismatch("affine curve parameter count mismatch");
    }
    Eigen::Matrix3Xd pts = offset;
    for (int v = 0; v < num_params(); ++v) {
      for (int i = 0; i <= order; ++i) pts.col(i) += coeff(i, v) * params[v];
    }
    return Curve3(std::move(pts), duration);
  }
};

inline constexpr int kTransitionOrder = 8;

/// The 8th-order CoM curve of one sub-horizon. P0..P2 and P6..P8 follow from
/// the boundary position, velocity and acceleration; P3 = P4 = P5 = the free
/// point.
struct TransitionCurveTemplate {
  std::array<Vec3, kTransitionOrder + 1> fixed_points;
  double duration = 1.0;
  static constexpr std::array<int, 3> free_indices = {3, 4, 5};
  static constexpr int free_index = 4;

  Curve3 curve(const Vec3& free_point) const {
    Eigen::Matrix3Xd pts(3, kTransitionOrder + 1);
    for (int i = 0; i <= kTransitionOrder; ++i) pts.col(i) = fixed_points[i];
    for (int i : free_indices) pts.col(i) = free_point;
    return Curve3(std::move(pts), duration);
  }

  /// Same curve as an AffineCurve with the free point as its only parameter.
  AffineCurve affine() const {
    AffineCurve a;
    a.order = kTransitionOrder;
    a.duration = duration;
    a.offset = Eigen::Matrix3Xd::Zero(3, kTransitionOrder + 1);
    a.coeff = Eigen::MatrixXd::Zero(kTransitionOrder + 1, 1);
    for (int i = 0; i <= kTransitionOrder; ++i) a.offset.col(i) = fixed_points[i];
    for (int i : free_indices) {
      a.offset.col(i).setZero();
      a.coeff(i, 0) = 1.0;
    }
    return a;
  }
};

inline TransitionCurveTemplate transition_template(const LinearState& x0, const LinearState& xf,
                                                   double duration) {
  if (!(duration > 0.0)) throw std::invalid_argument("transition duration must be positive");
  constexpr double n = kTransitionOrder;
  const double t = duration;
  TransitionCurveTemplate tpl;
  tpl.duration = t;
  auto& p = tpl.fixed_points;
  p[0] = x0.c;
  p[1] = p[0] + t / n * x0.c_dot;
  p[2] = t * t / (n * (n - 1)) * x0.c_ddot + 2.0 * p[1] - p[0];
  p[8] = xf.c;
  p[7] = p[8] - t / n * xf.c_dot;
  p[6] = t * t / (n * (n - 1)) * xf.c_ddot + 2.0 * p[7] - p[8];
  p[3] = p[4] = p[5] = Vec3::Zero();
  return tpl;
}

inline Curve3 build_transition_curve(const LinearState& x0, const LinearState& xf,
                                     const Vec3& free_point, double duration) {
  return transition_template(x0, xf, duration).curve(free_point);
}

/// Transition curve whose boundary positions and accelerations carry additive
/// offsets. Parameters, in order: free point, Δc(0), Δc̈(0), Δc(T), Δc̈(T).
inline AffineCurve transition_curve_with_offsets(const LinearState& x0, const LinearState& xf,
                                                 double duration) {
  constexpr double n = kTransitionOrder;
  const double t = duration;
  const double acc = t * t / (n * (n - 1));
  AffineCurve a = transition_template(x0, xf, duration).affine();
  a.coeff.conservativeResize(Eigen::NoChange, 5);
  a.coeff.rightCols(4).setZero();
  // P0, P1, P2 move rigidly with Δc(0); P2 also with Δc̈(0).
  a.coeff(0, 1) = a.coeff(1, 1) = a.coeff(2, 1) = 1.0;
  a.coeff(2, 2) = acc;
  a.coeff(8, 3) = a.coeff(7, 3) = a.coeff(6, 3) = 1.0;
  a.coeff(6, 4) = acc;
  return a;
}

/// One-line record: "order <n> duration <T> points x0 y0 z0 x1 ...".
template <int Dim>
void write_curve_record(std::ostream& os, const BezierCurve<Dim>& curve) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "order " << curve.order() << " duration " << curve.duration() << " points";
  for (int i = 0; i <= curve.order(); ++i) {
    for (int d = 0; d < Dim; ++d) ss << ' ' << curve.control_points()(d, i);
  }
  os << ss.str();
}

template <int Dim>
BezierCurve<Dim> read_curve_record(const std::string& line) {
  std::istringstream ss(line);
  std::string k1, k2, k3;
  int order = 0;
  double duration = 0.0;
  if (!(ss >> k1 >> order >> k2 >> duration >> k3) || k1 != "order" || k2 != "duration" ||
      k3 != "points" || order < 1) {
    throw ParseError("curve record", 0, "malformed header");
  }
  typename BezierCurve<Dim>::Points pts(Dim, order + 1);
  for (int i = 0; i <= order; ++i) {
    for (int d = 0; d < Dim; ++d) {
      if (!(ss >> pts(d, i))) throw ParseError("curve record", 0, "too few control point values");
    }
  }
  return BezierCurve<Dim>(std::move(pts), duration);
}

}  // namespace dtf
