#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dtf/bezier.hpp"
#include "dtf/dynamics.hpp"
#include "dtf/errors.hpp"
#include "dtf/horizon.hpp"
#include "dtf/model.hpp"

namespace dtf {

enum class SolveStatus { Feasible, Infeasible, NoConvergence, SolverError };

inline std::string_view status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::NoConvergence: return "NoConvergence";
    case SolveStatus::SolverError: return "SolverError";
  }
  return "?";
}

struct CostWeights {
  double angular = 1.0;
  double acceleration = 1.0;
};

/// Bounds on the way-point offsets of the nonlinear formulation.
struct SlackBounds {
  double position = 0.1;
  double acceleration = 2.0;
};

/// Data shared by both formulations. waypoints[i] and waypoints[i + 1] bound
/// sub-horizon i.
struct TransitionProblem {
  RobotModel model;
  ContactSchedule schedule;
  std::vector<State> waypoints;
  int knots = kDefaultKnots;
  CostWeights weights;

  std::size_t num_subhorizons() const { return schedule.sub_horizons.size(); }

  void validate() const {
    if (schedule.sub_horizons.empty()) throw DimensionMismatch("schedule has no sub-horizons");
    if (waypoints.size() != schedule.sub_horizons.size() + 1) {
      throw DimensionMismatch("need one way-point per sub-horizon boundary");
    }
    if (knots < 2) throw DimensionMismatch("need at least 2 knot intervals per sub-horizon");
    for (const auto& w : waypoints) check_orientation(w.theta);
  }
};

/// Motion, forces and L̇ at one constraint knot.
struct KnotSolution {
  int sub_horizon = 0;
  double u = 0.0;
  /// From the start of the horizon.
  double time = 0.0;
  ContactSet contacts;
  Eigen::VectorXd forces;
  Vec3 l_dot = Vec3::Zero();
  Vec3 c = Vec3::Zero(), c_dot = Vec3::Zero(), c_ddot = Vec3::Zero();
  Vec3 theta = Vec3::Zero(), theta_dot = Vec3::Zero(), theta_ddot = Vec3::Zero();
};

/// Way-point offsets of the nonlinear formulation at both ends of one
/// sub-horizon. Velocity offsets do not exist.
struct WaypointSlack {
  Vec3 dc_start = Vec3::Zero(), dcdd_start = Vec3::Zero();
  Vec3 dc_end = Vec3::Zero(), dcdd_end = Vec3::Zero();
};

struct TransitionResult {
  SolveStatus status = SolveStatus::SolverError;
  std::string message;
  std::vector<Curve3> com_curves;
  std::vector<Curve3> angular_curves;
  std::vector<Vec3> free_points;
  std::vector<WaypointSlack> slacks;
  std::vector<KnotSolution> knots;
  /// True when L̇ follows from the angular curves rather than being a free
  /// variable of the formulation.
  bool l_dot_from_orientation = false;
  double cost = 0.0;
  double solve_seconds = 0.0;
  int iterations = 0;

  bool feasible() const { return status == SolveStatus::Feasible; }
};

/// Cubic Hermite curve per sub-horizon matching way-point orientation and
/// rate at both ends.
inline std::vector<Curve3> desired_angular_curves(const ContactSchedule& schedule,
                                                  const std::vector<State>& waypoints) {
  if (waypoints.size() != schedule.sub_horizons.size() + 1) {
    throw DimensionMismatch("need one way-point per sub-horizon boundary");
  }
  std::vector<Curve3> out;
  for (std::size_t i = 0; i < schedule.sub_horizons.size(); ++i) {
    const double t = schedule.sub_horizons[i].duration();
    const State& a = waypoints[i];
    const State& b = waypoints[i + 1];
    Eigen::Matrix3Xd pts(3, 4);
    pts.col(0) = a.theta;
    pts.col(1) = a.theta + t / 3.0 * a.theta_dot;
    pts.col(2) = b.theta - t / 3.0 * b.theta_dot;
    pts.col(3) = b.theta;
    out.emplace_back(std::move(pts), t);
  }
  return out;
}

/// L̇ along a designed orientation curve at N + 1 uniform knots.
inline std::vector<Vec3> reference_angular_momentum_rate(const RobotModel& model, const Curve3& theta, int n) {
  if (theta.order() < 2) throw std::invalid_argument("orientation curve needs order >= 2");
  if (n < 1) throw std::invalid_argument("need at least one knot interval");
  const Curve3 d1 = theta.derivative();
  const Curve3 d2 = d1.derivative();
  std::vector<Vec3> out;
  out.reserve(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double u = static_cast<double>(k) / n;
    out.push_back(angular_momentum_rate(model, theta.evaluate(u), d1.evaluate(u), d2.evaluate(u)));
  }
  return out;
}

/// Fills the motion fields of every knot from the result's curves.
inline void fill_knot_motion(TransitionResult& result) {
  for (auto& k : result.knots) {
    const Curve3& c = result.com_curves.at(k.sub_horizon);
    const Curve3 c1 = c.derivative();
    k.c = c.evaluate(k.u);
    k.c_dot = c1.evaluate(k.u);
    k.c_ddot = c1.derivative().evaluate(k.u);
    const Curve3& th = result.angular_curves.at(k.sub_horizon);
    const Curve3 th1 = th.derivative();
    k.theta = th.evaluate(k.u);
    k.theta_dot = th1.evaluate(k.u);
    k.theta_ddot = th1.derivative().evaluate(k.u);
  }
}

struct RecheckReport {
  double max_wrench_residual = 0.0;
  double max_friction_violation = 0.0;

  bool passes(double tol) const { return max_wrench_residual <= tol && max_friction_violation <= tol; }
};

/// Re-evaluates w = A f and the friction pyramid at every knot from the
/// returned curves and forces, without trusting solver-side values.
inline RecheckReport recheck(const RobotModel& model, const TransitionResult& result) {
  RecheckReport rep;
  for (const auto& k : result.knots) {
    const Curve3& c = result.com_curves.at(k.sub_horizon);
    const Vec3 pos = c.evaluate(k.u);
    const Vec3 acc = c.derivative().derivative().evaluate(k.u);
    Vec3 l_dot = k.l_dot;
    if (result.l_dot_from_orientation) {
      const Curve3& th = result.angular_curves.at(k.sub_horizon);
      const Curve3 th1 = th.derivative();
      l_dot = angular_momentum_rate(model, th.evaluate(k.u), th1.evaluate(k.u), th1.derivative().evaluate(k.u));
    }
    const KnotCheck chk = check_knot(model, k.contacts, pos, acc, l_dot, k.forces);
    rep.max_wrench_residual = std::max(rep.max_wrench_residual, chk.wrench_residual);
    rep.max_friction_violation = std::max(rep.max_friction_violation, chk.friction_violation);
  }
  return rep;
}

/// Σ ‖L̇_k‖² + ‖c̈_k‖² over the knots, with L̇ taken from the angular curves.
inline double angular_variation_cost(const RobotModel& model, const TransitionResult& result,
                                     const CostWeights& w = {}) {
  double cost = 0.0;
  for (const auto& k : result.knots) {
    const Curve3& th = result.angular_curves.at(k.sub_horizon);
    const Curve3 th1 = th.derivative();
    const Vec3 l_dot =
        angular_momentum_rate(model, th.evaluate(k.u), th1.evaluate(k.u), th1.derivative().evaluate(k.u));
    const Vec3 acc = result.com_curves.at(k.sub_horizon).derivative().derivative().evaluate(k.u);
    cost += w.angular * l_dot.squaredNorm() + w.acceleration * acc.squaredNorm();
  }
  return cost;
}

}  // namespace dtf
