#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "dtf/errors.hpp"
#include "dtf/horizon.hpp"
#include "dtf/model.hpp"

namespace dtf {

using Vector6 = Eigen::Matrix<double, 6, 1>;

/// World-frame contact points, with the leg each belongs to.
struct ContactSet {
  std::vector<Vec3> points;
  std::vector<Leg> legs;

  int count() const { return static_cast<int>(points.size()); }

  static ContactSet from_phase(const ContactPhase& phase, StanceSet stance) {
    ContactSet set;
    for (Leg leg : kAllLegs) {
      if (stance.test(static_cast<int>(leg))) {
        set.points.push_back(phase.feet[static_cast<int>(leg)]);
        set.legs.push_back(leg);
      }
    }
    return set;
  }
};

struct Wrench {
  Vec3 linear = Vec3::Zero();
  /// About the world origin.
  Vec3 angular = Vec3::Zero();

  Vector6 stacked() const {
    Vector6 w;
    w << linear, angular;
    return w;
  }
};

/// [I ... I; [p1]x ... [pn]x], 6 x 3n.
inline Eigen::Matrix<double, 6, Eigen::Dynamic> grf_matrix(const ContactSet& contacts) {
  const int nc = contacts.count();
  if (nc < 1 || nc > 4) throw DimensionMismatch("contact count must be in [1, 4]");
  Eigen::Matrix<double, 6, Eigen::Dynamic> a(6, 3 * nc);
  for (int j = 0; j < nc; ++j) {
    a.block<3, 3>(0, 3 * j).setIdentity();
    a.block<3, 3>(3, 3 * j) = skew(contacts.points[j]);
  }
  return a;
}

/// Rate of change of angular momentum from Euler angles and derivatives:
/// ω × I_W ω + I_W (Ṫ θ̇ + T θ̈), with ω = T θ̇.
inline Vec3 angular_momentum_rate(const RobotModel& model, const Vec3& theta, const Vec3& theta_dot,
                                  const Vec3& theta_ddot) {
  const Mat3 t = euler_rate_map(theta);
  const Mat3 t_dot = euler_rate_map_dot(theta, theta_dot);
  const Mat3 iw = world_inertia(model, theta);
  const Vec3 omega = t * theta_dot;
  return omega.cross(iw * omega) + iw * (t_dot * theta_dot + t * theta_ddot);
}

/// Partial derivatives of angular_momentum_rate.
struct AngularMomentumRateJacobian {
  Vec3 value;
  Mat3 d_theta;
  Mat3 d_theta_dot;
  Mat3 d_theta_ddot;
};

inline AngularMomentumRateJacobian angular_momentum_rate_jacobian(const RobotModel& model,
                                                                  const Vec3& theta,
                                                                  const Vec3& theta_dot,
                                                                  const Vec3& theta_ddot) {
  const Mat3 t = euler_rate_map(theta);
  const Mat3 t_dot = euler_rate_map_dot(theta, theta_dot);
  const Mat3 iw = world_inertia(model, theta);
  const Vec3 omega = t * theta_dot;
  const Vec3 h = iw * omega;
  const Vec3 accel = t_dot * theta_dot + t * theta_ddot;

  AngularMomentumRateJacobian jac;
  jac.value = omega.cross(h) + iw * accel;
  jac.d_theta_ddot = iw * t;

  // d(Ṫ θ̇)/dθ̇ = Ṫ + [dT/dθ_i θ̇]_i
  Mat3 dtdot_dthetadot;
  for (int i = 0; i < 3; ++i) dtdot_dthetadot.col(i) = euler_rate_map_partial(theta, i) * theta_dot;
  jac.d_theta_dot = (skew(omega) * iw - skew(h)) * t + iw * (t_dot + dtdot_dthetadot);

  for (int i = 0; i < 3; ++i) {
    const Mat3 dt = euler_rate_map_partial(theta, i);
    Mat3 dt_dot = Mat3::Zero();
    for (int j = 1; j < 3; ++j) dt_dot += euler_rate_map_second_partial(theta, i, j) * theta_dot[j];
    const Vec3 axis = t.col(i);
    const Mat3 diw = skew(axis) * iw - iw * skew(axis);
    const Vec3 domega = dt * theta_dot;
    const Vec3 daccel = dt_dot * theta_dot + dt * theta_ddot;
    jac.d_theta.col(i) = domega.cross(h) + omega.cross(diw * omega + iw * domega) + diw * accel + iw * daccel;
  }
  return jac;
}

/// Gravito-inertial wrench m(c̈ - g), m c × (c̈ - g) + L̇.
inline Wrench wrench_from_motion(const RobotModel& model, const Vec3& c, const Vec3& c_ddot,
                                 const Vec3& l_dot) {
  const Vec3 lin = model.mass * (c_ddot - model.gravity);
  return {lin, c.cross(lin) + l_dot};
}

/// Linear equalities and two-sided inequalities over a variable vector.
struct LinearConstraintSet {
  Eigen::Index num_variables = 0;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  double max_violation(const Eigen::VectorXd& x) const {
    if (x.size() != num_variables) throw DimensionMismatch("constraint set variable count mismatch");
    double v = 0.0;
    if (eq_matrix.rows() > 0) v = (eq_matrix * x - eq_rhs).cwiseAbs().maxCoeff();
    if (ineq_matrix.rows() > 0) {
      const Eigen::VectorXd ax = ineq_matrix * x;
      v = std::max(v, (lower - ax).cwiseMax(ax - upper).maxCoeff());
    }
    return std::max(v, 0.0);
  }

  bool satisfied(const Eigen::VectorXd& x, double tol) const { return max_violation(x) <= tol; }
};

inline constexpr int kFrictionRowsPerContact = 5;

/// Per contact: 0 <= f_z <= f_max and |f_x|, |f_y| <= mu f_z, written as five
/// two-sided rows over the stacked forces.
inline LinearConstraintSet friction_constraints(int num_contacts, double mu, double f_max) {
  LinearConstraintSet set;
  set.num_variables = 3 * num_contacts;
  const int rows = kFrictionRowsPerContact * num_contacts;
  set.ineq_matrix = Eigen::MatrixXd::Zero(rows, set.num_variables);
  set.lower.resize(rows);
  set.upper.resize(rows);
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (int j = 0; j < num_contacts; ++j) {
    const int r = kFrictionRowsPerContact * j, c = 3 * j;
    set.ineq_matrix(r, c + 2) = 1.0;
    set.lower[r] = 0.0;
    set.upper[r] = f_max;
    for (int axis = 0; axis < 2; ++axis) {
      set.ineq_matrix(r + 1 + 2 * axis, c + axis) = 1.0;
      set.ineq_matrix(r + 1 + 2 * axis, c + 2) = -mu;
      set.lower[r + 1 + 2 * axis] = -inf;
      set.upper[r + 1 + 2 * axis] = 0.0;
      set.ineq_matrix(r + 2 + 2 * axis, c + axis) = 1.0;
      set.ineq_matrix(r + 2 + 2 * axis, c + 2) = mu;
      set.lower[r + 2 + 2 * axis] = 0.0;
      set.upper[r + 2 + 2 * axis] = inf;
    }
  }
  return set;
}

inline LinearConstraintSet friction_constraints(const ContactSet& contacts, double mu, double f_max) {
  return friction_constraints(contacts.count(), mu, f_max);
}

/// Constraint sample inside a sub-horizon.
struct Knot {
  double u = 0.0;
  /// Time from the start of the sub-horizon.
  double t = 0.0;
  ContactSet contacts;
};

inline constexpr int kDefaultKnots = 10;

/// N + 1 uniformly spaced knots. A knot on a boundary between two phases
/// uses the contacts common to both.
inline std::vector<Knot> sample_knots(const SubHorizon& sh, int n) {
  if (n < 2) throw std::invalid_argument("need at least 2 knot intervals");
  const double duration = sh.duration();
  const double eps = 1e-9 * std::max(1.0, duration);
  std::vector<double> ends;
  double acc = 0.0;
  for (const auto& p : sh.phases) ends.push_back(acc += p.duration);

  std::vector<Knot> knots;
  knots.reserve(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(n);
    const double t = u * duration;
    std::size_t phase = 0;
    while (phase + 1 < sh.phases.size() && t >= ends[phase] - eps) ++phase;
    StanceSet stance = sh.phases[phase].stance;
    if (phase > 0 && std::abs(t - ends[phase - 1]) <= eps) stance &= sh.phases[phase - 1].stance;
    knots.push_back({u, t, ContactSet::from_phase(sh.phases[phase], stance)});
  }
  return knots;
}

/// Residuals of a returned trajectory at one knot.
struct KnotCheck {
  double wrench_residual = 0.0;
  double friction_violation = 0.0;
};

inline KnotCheck check_knot(const RobotModel& model, const ContactSet& contacts, const Vec3& c,
                            const Vec3& c_ddot, const Vec3& l_dot, const Eigen::VectorXd& forces) {
  if (forces.size() != 3 * contacts.count()) throw DimensionMismatch("force stack size mismatch");
  KnotCheck out;
  const Vector6 w = wrench_from_motion(model, c, c_ddot, l_dot).stacked();
  out.wrench_residual = (w - grf_matrix(contacts) * forces).cwiseAbs().maxCoeff();
  out.friction_violation = friction_constraints(contacts, model.mu, model.f_max).max_violation(forces);
  return out;
}

}  // namespace dtf
