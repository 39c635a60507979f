#pragma once

#include <chrono>
#include <vector>

#include "dtf/qp.hpp"
#include "dtf/transition.hpp"

namespace dtf {

struct ConvexTransitionProblem : TransitionProblem {
  /// Designed orientation per sub-horizon; L̇_ref is sampled from it.
  std::vector<Curve3> desired_angular;
  /// Pins every L̇_k to zero (constant angular momentum).
  bool zero_angular_momentum = false;

  void validate() const {
    TransitionProblem::validate();
    if (desired_angular.size() != num_subhorizons()) {
      throw DimensionMismatch("need one desired orientation curve per sub-horizon");
    }
  }
};

inline ConvexTransitionProblem make_convex_problem(const TransitionProblem& base) {
  ConvexTransitionProblem p;
  static_cast<TransitionProblem&>(p) = base;
  p.desired_angular = desired_angular_curves(base.schedule, base.waypoints);
  return p;
}

/// Variable layout: [ρ_i per sub-horizon][f_k per knot][L̇_k per knot].
struct ConvexLayout {
  struct KnotEntry {
    int sub_horizon = 0;
    Knot knot;
    Eigen::Index force_offset = 0;
    Eigen::Index l_dot_offset = 0;
  };

  std::vector<KnotEntry> knots;
  Eigen::Index num_variables = 0;

  static Eigen::Index free_point_offset(int sub_horizon) { return 3 * sub_horizon; }
};

struct ConvexQp {
  ConvexLayout layout;
  QuadraticProgram qp;
  /// cost = objective(x) + constant.
  double constant = 0.0;
  std::vector<TransitionCurveTemplate> templates;
  std::vector<Vec3> l_dot_ref;
};

inline ConvexQp assemble_convex_qp(const ConvexTransitionProblem& problem) {
  problem.validate();
  const RobotModel& model = problem.model;
  const int s = static_cast<int>(problem.num_subhorizons());
  const int n = problem.knots;

  ConvexQp out;
  auto& layout = out.layout;
  Eigen::Index offset = 3 * s;
  for (int i = 0; i < s; ++i) {
    for (auto& knot : sample_knots(problem.schedule.sub_horizons[i], n)) {
      if (knot.contacts.count() < 1) throw DimensionMismatch("knot without stance feet");
      layout.knots.push_back({i, std::move(knot), offset, 0});
      offset += 3 * layout.knots.back().knot.contacts.count();
    }
  }
  for (auto& k : layout.knots) {
    k.l_dot_offset = offset;
    offset += 3;
  }
  layout.num_variables = offset;
  const Eigen::Index nv = offset;
  const Eigen::Index nk = static_cast<Eigen::Index>(layout.knots.size());

  for (int i = 0; i < s; ++i) {
    const double duration = problem.schedule.sub_horizons[i].duration();
    out.templates.push_back(
        transition_template(linear_part(problem.waypoints[i]), linear_part(problem.waypoints[i + 1]), duration));
    const auto ref = reference_angular_momentum_rate(model, problem.desired_angular[i], n);
    out.l_dot_ref.insert(out.l_dot_ref.end(), ref.begin(), ref.end());
  }

  std::vector<Triplet> p_trips, a_trips, c_trips;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nv);
  const Eigen::Index neq = (problem.zero_angular_momentum ? 9 : 6) * nk;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(neq);
  std::vector<double> lower, upper;
  const double m = model.mass;
  const CostWeights& w = problem.weights;

  for (Eigen::Index kk = 0; kk < nk; ++kk) {
    const auto& entry = layout.knots[kk];
    const AffineCurve curve = out.templates[entry.sub_horizon].affine();
    const auto pos = curve.sample(entry.knot.u, 0);
    const auto acc = curve.sample(entry.knot.u, 2);
    const double b0 = pos.weights[0], b2 = acc.weights[0];
    const Vec3 a0 = pos.value, a2g = acc.value - model.gravity;
    const Eigen::Index yo = ConvexLayout::free_point_offset(entry.sub_horizon);
    const Eigen::Index fo = entry.force_offset, lo = entry.l_dot_offset;
    const Eigen::Index row = 6 * kk;
    const ContactSet& cs = entry.knot.contacts;

    // m(c̈ - g) - Σ f_j = 0
    for (int d = 0; d < 3; ++d) a_trips.emplace_back(row + d, yo + d, m * b2);
    for (int j = 0; j < cs.count(); ++j) {
      for (int d = 0; d < 3; ++d) a_trips.emplace_back(row + d, fo + 3 * j + d, -1.0);
    }
    b.segment<3>(row) = -m * acc.value + m * model.gravity;

    // m c × (c̈ - g) + L̇ - Σ p_j × f_j = 0, with the y × y term cancelling.
    const Mat3 ym = m * (b2 * skew(a0) - b0 * skew(a2g));
    for (int r = 0; r < 3; ++r) {
      for (int d = 0; d < 3; ++d) {
        if (ym(r, d) != 0.0) a_trips.emplace_back(row + 3 + r, yo + d, ym(r, d));
      }
      a_trips.emplace_back(row + 3 + r, lo + r, 1.0);
    }
    for (int j = 0; j < cs.count(); ++j) {
      const Mat3 px = -skew(cs.points[j]);
      for (int r = 0; r < 3; ++r) {
        for (int d = 0; d < 3; ++d) {
          if (px(r, d) != 0.0) a_trips.emplace_back(row + 3 + r, fo + 3 * j + d, px(r, d));
        }
      }
    }
    b.segment<3>(row + 3) = -m * a0.cross(a2g);

    // w_L ‖L̇ - L̇_ref‖² + w_acc ‖a2 + b2 y‖²
    const Vec3& ref = out.l_dot_ref[kk];
    for (int d = 0; d < 3; ++d) {
      p_trips.emplace_back(lo + d, lo + d, 2.0 * w.angular);
      q[lo + d] -= 2.0 * w.angular * ref[d];
      p_trips.emplace_back(yo + d, yo + d, 2.0 * w.acceleration * b2 * b2);
      q[yo + d] += 2.0 * w.acceleration * b2 * acc.value[d];
    }
    out.constant += w.angular * ref.squaredNorm() + w.acceleration * acc.value.squaredNorm();

    const LinearConstraintSet fr = friction_constraints(cs, model.mu, model.f_max);
    const Eigen::Index base_row = static_cast<Eigen::Index>(lower.size());
    for (Eigen::Index r = 0; r < fr.ineq_matrix.rows(); ++r) {
      for (Eigen::Index cidx = 0; cidx < fr.ineq_matrix.cols(); ++cidx) {
        const double v = fr.ineq_matrix(r, cidx);
        if (v != 0.0) c_trips.emplace_back(base_row + r, fo + cidx, v);
      }
      lower.push_back(fr.lower[r]);
      upper.push_back(fr.upper[r]);
    }
    if (problem.zero_angular_momentum) {
      for (int d = 0; d < 3; ++d) a_trips.emplace_back(6 * nk + 3 * kk + d, lo + d, 1.0);
    }
  }

  auto& qp = out.qp;
  qp.P.resize(nv, nv);
  qp.P.setFromTriplets(p_trips.begin(), p_trips.end());
  qp.q = q;
  qp.A.resize(neq, nv);
  qp.A.setFromTriplets(a_trips.begin(), a_trips.end());
  qp.b = b;
  const Eigen::Index nc = static_cast<Eigen::Index>(lower.size());
  qp.C.resize(nc, nv);
  qp.C.setFromTriplets(c_trips.begin(), c_trips.end());
  qp.l = Eigen::Map<Eigen::VectorXd>(lower.data(), nc);
  qp.u = Eigen::Map<Eigen::VectorXd>(upper.data(), nc);
  return out;
}

/// Maps a primal vector of the convex QP to curves, forces and L̇.
inline TransitionResult convex_result_from_vector(const ConvexTransitionProblem& problem, const ConvexQp& data,
                                                  const Eigen::VectorXd& x) {
  TransitionResult r;
  const int s = static_cast<int>(problem.num_subhorizons());
  for (int i = 0; i < s; ++i) {
    const Vec3 y = x.segment<3>(ConvexLayout::free_point_offset(i));
    r.free_points.push_back(y);
    r.com_curves.push_back(data.templates[i].curve(y));
    r.angular_curves.push_back(problem.desired_angular[i]);
    r.slacks.emplace_back();
  }
  for (const auto& e : data.layout.knots) {
    KnotSolution k;
    k.sub_horizon = e.sub_horizon;
    k.u = e.knot.u;
    k.time = problem.schedule.sub_horizons[e.sub_horizon].start_time + e.knot.t;
    k.contacts = e.knot.contacts;
    k.forces = x.segment(e.force_offset, 3 * e.knot.contacts.count());
    k.l_dot = x.segment<3>(e.l_dot_offset);
    r.knots.push_back(std::move(k));
  }
  fill_knot_motion(r);
  r.cost = std::max(0.0, data.qp.objective(x) + data.constant);
  return r;
}

inline TransitionResult solve_transition_convex(const ConvexTransitionProblem& problem,
                                                const QpSettings& settings = {}) {
  const auto start = std::chrono::steady_clock::now();
  const ConvexQp data = assemble_convex_qp(problem);
  const QpSolution sol = solve_qp(data.qp, settings);

  TransitionResult r;
  if (sol.status == QpStatus::Solved) {
    r = convex_result_from_vector(problem, data, sol.x);
    const double kkt = std::max(sol.primal_residual, sol.dual_residual / (1.0 + data.qp.q.cwiseAbs().maxCoeff()));
    if (kkt < 1e-6) {
      r.status = SolveStatus::Feasible;
    } else {
      r.status = SolveStatus::SolverError;
      r.message = "KKT residual " + std::to_string(kkt) + " above tolerance";
    }
  } else if (sol.status == QpStatus::PrimalInfeasible) {
    r.status = SolveStatus::Infeasible;
    r.message = "constraints cannot be met (minimum violation " + std::to_string(sol.min_violation) + ")";
  } else {
    r.status = SolveStatus::SolverError;
    r.message = sol.status == QpStatus::MaxIterations ? "iteration limit reached" : "numerical breakdown";
  }
  r.iterations = sol.iterations;
  r.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace dtf
