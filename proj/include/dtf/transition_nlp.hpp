#pragma once

#include <chrono>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dtf/nlp.hpp"
#include "dtf/transition.hpp"
#include "dtf/transition_qp.hpp"

namespace dtf {

/// How the orientation enters the nonlinear formulation.
enum class AngularMode {
  /// Orientation control points are decision variables.
  Free,
  /// Orientation follows the desired curves; L̇ follows from them.
  FrozenDesired,
  /// Orientation follows the desired curves but L̇ is taken as zero in the
  /// dynamics and the cost (constant angular momentum).
  ZeroMomentum,
};

inline std::string_view angular_mode_name(AngularMode m) {
  switch (m) {
    case AngularMode::Free: return "free";
    case AngularMode::FrozenDesired: return "frozen";
    case AngularMode::ZeroMomentum: return "zero-momentum";
  }
  return "?";
}

inline constexpr int kAngularOrder = 4;

struct NonlinearTransitionProblem : TransitionProblem {
  SlackBounds slack;
  AngularMode angular_mode = AngularMode::Free;
  /// Bound on every pitch control point; keeps the whole curve away from the
  /// Euler singularity.
  double max_pitch = 1.2;
  /// Designed orientation per sub-horizon (any order up to kAngularOrder).
  std::vector<Curve3> desired_angular;

  void validate() const {
    TransitionProblem::validate();
    if (desired_angular.size() != num_subhorizons()) {
      throw DimensionMismatch("need one desired orientation curve per sub-horizon");
    }
    for (const auto& c : desired_angular) {
      if (c.order() > kAngularOrder) throw DimensionMismatch("desired orientation curve order too high");
    }
    if (!(slack.position > 0.0) || !(slack.acceleration > 0.0)) {
      throw std::invalid_argument("slack bounds must be positive");
    }
    if (!(max_pitch > 0.0) || max_pitch >= kPi / 2.0 - kSingularityMargin) {
      throw std::invalid_argument("pitch bound must lie in (0, pi/2)");
    }
  }
};

inline NonlinearTransitionProblem make_nonlinear_problem(const TransitionProblem& base, const SlackBounds& slack = {},
                                                         AngularMode mode = AngularMode::Free) {
  NonlinearTransitionProblem p;
  static_cast<TransitionProblem&>(p) = base;
  p.slack = slack;
  p.angular_mode = mode;
  p.desired_angular = desired_angular_curves(base.schedule, base.waypoints);
  return p;
}

struct NonlinearSettings {
  SqpSettings sqp;
  QpSettings warm_start;
};

/// Variable layout. Per sub-horizon i a block of 30 entries:
///   [y, Δc(0), Δc̈(0), Δc(T), Δc̈(T)] (15) then orientation points Q0..Q4 (15);
/// followed by the stacked contact forces of every knot.
struct NonlinearLayout {
  static constexpr int kLinearParams = 5;
  static constexpr int kBlock = 3 * kLinearParams + 3 * (kAngularOrder + 1);

  struct KnotEntry {
    int sub_horizon = 0;
    Knot knot;
    Eigen::Index force_offset = 0;
    /// Weights of the 5 linear parameters for c and c̈, and the constant parts.
    Eigen::VectorXd w_pos, w_acc;
    Vec3 a_pos, a_acc;
    /// Bernstein weights of the orientation curve for Θ, Θ̇, Θ̈.
    Eigen::VectorXd b0, b1, b2;
  };

  std::vector<KnotEntry> knots;
  Eigen::Index num_variables = 0;

  static Eigen::Index block(int sub_horizon) { return kBlock * sub_horizon; }
  static Eigen::Index linear_param(int sub_horizon, int v) { return block(sub_horizon) + 3 * v; }
  static Eigen::Index angular_point(int sub_horizon, int j) {
    return block(sub_horizon) + 3 * kLinearParams + 3 * j;
  }
};

namespace detail {

inline Curve3 elevate_to(const Curve3& c, int order) {
  return c.order() == order ? c : c.elevate_degree(order);
}

struct KnotMotion {
  Vec3 c, c_ddot, theta, theta_dot, theta_ddot;
};

}  // namespace detail

/// The nonlinear program of one transition problem.
class NonlinearTransition {
 public:
  explicit NonlinearTransition(const NonlinearTransitionProblem& problem) : problem_(problem) {
    problem_.validate();
    build();
  }

  const NonlinearLayout& layout() const { return layout_; }
  const NonlinearProgram& program() const { return nlp_; }
  const NonlinearTransitionProblem& problem() const { return problem_; }
  const std::vector<AffineCurve>& com_templates() const { return com_; }
  const std::vector<Curve3>& desired_points() const { return desired_; }

  detail::KnotMotion motion(const Eigen::VectorXd& x, const NonlinearLayout::KnotEntry& e) const {
    detail::KnotMotion mo;
    mo.c = e.a_pos;
    mo.c_ddot = e.a_acc;
    for (int v = 0; v < NonlinearLayout::kLinearParams; ++v) {
      const Vec3 p = x.segment<3>(NonlinearLayout::linear_param(e.sub_horizon, v));
      mo.c += e.w_pos[v] * p;
      mo.c_ddot += e.w_acc[v] * p;
    }
    mo.theta.setZero();
    mo.theta_dot.setZero();
    mo.theta_ddot.setZero();
    for (int j = 0; j <= kAngularOrder; ++j) {
      const Vec3 q = x.segment<3>(NonlinearLayout::angular_point(e.sub_horizon, j));
      mo.theta += e.b0[j] * q;
      mo.theta_dot += e.b1[j] * q;
      mo.theta_ddot += e.b2[j] * q;
    }
    return mo;
  }

  bool uses_momentum() const { return problem_.angular_mode != AngularMode::ZeroMomentum; }

  Vec3 l_dot(const detail::KnotMotion& mo) const {
    if (!uses_momentum()) return Vec3::Zero();
    return angular_momentum_rate(problem_.model, mo.theta, mo.theta_dot, mo.theta_ddot);
  }

  double cost(const Eigen::VectorXd& x) const {
    const auto& w = problem_.weights;
    double out = 0.0;
    for (const auto& e : layout_.knots) {
      const auto mo = motion(x, e);
      out += w.angular * l_dot(mo).squaredNorm() + w.acceleration * mo.c_ddot.squaredNorm();
    }
    return out;
  }

  Eigen::VectorXd cost_gradient(const Eigen::VectorXd& x) const {
    const auto& w = problem_.weights;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(layout_.num_variables);
    for (const auto& e : layout_.knots) {
      const auto mo = motion(x, e);
      for (int v = 0; v < NonlinearLayout::kLinearParams; ++v) {
        g.segment<3>(NonlinearLayout::linear_param(e.sub_horizon, v)) += 2.0 * w.acceleration * e.w_acc[v] * mo.c_ddot;
      }
      if (uses_momentum()) {
        const auto jac = angular_momentum_rate_jacobian(problem_.model, mo.theta, mo.theta_dot, mo.theta_ddot);
        add_angular_gradient(g, e, jac, 2.0 * w.angular * jac.value);
      }
    }
    return g;
  }

  /// Angular rows m c × (c̈ - g) + L̇ - Σ p_j × f_j, three per knot.
  Eigen::VectorXd constraints(const Eigen::VectorXd& x) const {
    Eigen::VectorXd h(3 * layout_.knots.size());
    const double m = problem_.model.mass;
    for (std::size_t k = 0; k < layout_.knots.size(); ++k) {
      const auto& e = layout_.knots[k];
      const auto mo = motion(x, e);
      Vec3 r = m * mo.c.cross(mo.c_ddot - problem_.model.gravity) + l_dot(mo);
      const ContactSet& cs = e.knot.contacts;
      for (int j = 0; j < cs.count(); ++j) r -= cs.points[j].cross(x.segment<3>(e.force_offset + 3 * j));
      h.segment<3>(3 * k) = r;
    }
    return h;
  }

  SparseMatrix constraint_jacobian(const Eigen::VectorXd& x) const {
    std::vector<Triplet> t;
    const double m = problem_.model.mass;
    for (std::size_t k = 0; k < layout_.knots.size(); ++k) {
      const auto& e = layout_.knots[k];
      const auto mo = motion(x, e);
      const Eigen::Index row = 3 * static_cast<Eigen::Index>(k);
      const Mat3 dpos = -m * skew(mo.c_ddot - problem_.model.gravity);
      const Mat3 dacc = m * skew(mo.c);
      for (int v = 0; v < NonlinearLayout::kLinearParams; ++v) {
        add_block(t, row, NonlinearLayout::linear_param(e.sub_horizon, v), e.w_pos[v] * dpos + e.w_acc[v] * dacc);
      }
      if (uses_momentum()) {
        const auto jac = angular_momentum_rate_jacobian(problem_.model, mo.theta, mo.theta_dot, mo.theta_ddot);
        for (int j = 0; j <= kAngularOrder; ++j) {
          add_block(t, row, NonlinearLayout::angular_point(e.sub_horizon, j),
                    e.b0[j] * jac.d_theta + e.b1[j] * jac.d_theta_dot + e.b2[j] * jac.d_theta_ddot);
        }
      }
      const ContactSet& cs = e.knot.contacts;
      for (int j = 0; j < cs.count(); ++j) add_block(t, row, e.force_offset + 3 * j, -skew(cs.points[j]));
    }
    SparseMatrix out(static_cast<Eigen::Index>(3 * layout_.knots.size()), layout_.num_variables);
    out.setFromTriplets(t.begin(), t.end());
    return out;
  }

  /// Lagrangian Hessian over each sub-horizon block, projected onto the PSD
  /// cone. Forces enter linearly and get no curvature.
  SparseMatrix hessian(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) const {
    constexpr int nb = NonlinearLayout::kBlock;
    constexpr int nl = 3 * NonlinearLayout::kLinearParams;
    const int s = static_cast<int>(problem_.num_subhorizons());
    std::vector<Eigen::MatrixXd> blocks(s, Eigen::MatrixXd::Zero(nb, nb));
    const double m = problem_.model.mass;
    const auto& w = problem_.weights;

    for (std::size_t k = 0; k < layout_.knots.size(); ++k) {
      const auto& e = layout_.knots[k];
      Eigen::MatrixXd& hb = blocks[e.sub_horizon];
      const Vec3 lam = lambda.segment<3>(3 * k);
      Eigen::Matrix<double, 3, nl> mp, ma;
      for (int v = 0; v < NonlinearLayout::kLinearParams; ++v) {
        mp.middleCols<3>(3 * v) = e.w_pos[v] * Mat3::Identity();
        ma.middleCols<3>(3 * v) = e.w_acc[v] * Mat3::Identity();
      }
      // λ·(c × c̈) = -cᵀ[λ]× c̈
      const Mat3 sk = -m * skew(lam);
      const Eigen::Matrix<double, nl, nl> cross = mp.transpose() * sk * ma;
      hb.topLeftCorner<nl, nl>() += 2.0 * w.acceleration * ma.transpose() * ma + cross + cross.transpose();

      if (uses_momentum()) {
        // Curvature of λᵀL̇ + w_L ‖L̇‖² in the orientation points, by central
        // differences of the analytic gradient.
        auto grad = [&](const Eigen::VectorXd& q) {
          Vec3 th = Vec3::Zero(), thd = Vec3::Zero(), thdd = Vec3::Zero();
          for (int j = 0; j <= kAngularOrder; ++j) {
            th += e.b0[j] * q.segment<3>(3 * j);
            thd += e.b1[j] * q.segment<3>(3 * j);
            thdd += e.b2[j] * q.segment<3>(3 * j);
          }
          const auto jac = angular_momentum_rate_jacobian(problem_.model, th, thd, thdd);
          const Vec3 wv = lam + 2.0 * w.angular * jac.value;
          Eigen::VectorXd g(3 * (kAngularOrder + 1));
          for (int j = 0; j <= kAngularOrder; ++j) {
            g.segment<3>(3 * j) =
                (e.b0[j] * jac.d_theta + e.b1[j] * jac.d_theta_dot + e.b2[j] * jac.d_theta_ddot).transpose() * wv;
          }
          return g;
        };
        constexpr int na = 3 * (kAngularOrder + 1);
        const Eigen::VectorXd q0 = x.segment(NonlinearLayout::angular_point(e.sub_horizon, 0), na);
        Eigen::MatrixXd hq(na, na);
        for (int i = 0; i < na; ++i) {
          const double step = 1e-6 * std::max(1.0, std::abs(q0[i]));
          Eigen::VectorXd qp = q0, qm = q0;
          qp[i] += step;
          qm[i] -= step;
          hq.col(i) = (grad(qp) - grad(qm)) / (2.0 * step);
        }
        hb.bottomRightCorner<na, na>() += 0.5 * (hq + hq.transpose());
      }
    }

    std::vector<Triplet> t;
    for (int i = 0; i < s; ++i) {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (blocks[i] + blocks[i].transpose()));
      const Eigen::MatrixXd psd =
          eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * eig.eigenvectors().transpose();
      const Eigen::Index o = NonlinearLayout::block(i);
      for (int r = 0; r < nb; ++r) {
        for (int c = 0; c < nb; ++c) {
          if (psd(r, c) != 0.0) t.emplace_back(o + r, o + c, psd(r, c));
        }
      }
    }
    SparseMatrix out(layout_.num_variables, layout_.num_variables);
    out.setFromTriplets(t.begin(), t.end());
    return out;
  }

  /// Packs a warm start: free points and forces from a previous result (any
  /// formulation with the same knots), slacks zero unless provided,
  /// orientation points from the desired curves or the result.
  Eigen::VectorXd pack(const TransitionResult* guess) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(layout_.num_variables);
    const int s = static_cast<int>(problem_.num_subhorizons());
    for (int i = 0; i < s; ++i) {
      Vec3 y = 0.5 * (problem_.waypoints[i].c + problem_.waypoints[i + 1].c);
      const Curve3* angular = &desired_[i];
      Curve3 elevated;
      if (guess && static_cast<int>(guess->free_points.size()) == s) {
        y = guess->free_points[i];
        if (static_cast<int>(guess->slacks.size()) == s) {
          const auto& sl = guess->slacks[i];
          x.segment<3>(NonlinearLayout::linear_param(i, 1)) = sl.dc_start;
          x.segment<3>(NonlinearLayout::linear_param(i, 2)) = sl.dcdd_start;
          x.segment<3>(NonlinearLayout::linear_param(i, 3)) = sl.dc_end;
          x.segment<3>(NonlinearLayout::linear_param(i, 4)) = sl.dcdd_end;
        }
        if (problem_.angular_mode == AngularMode::Free && static_cast<int>(guess->angular_curves.size()) == s &&
            guess->angular_curves[i].order() <= kAngularOrder) {
          elevated = detail::elevate_to(guess->angular_curves[i], kAngularOrder);
          angular = &elevated;
        }
      }
      x.segment<3>(NonlinearLayout::linear_param(i, 0)) = y;
      for (int j = 0; j <= kAngularOrder; ++j) {
        x.segment<3>(NonlinearLayout::angular_point(i, j)) = angular->control_point(j);
      }
    }
    const bool forces_match = guess && guess->knots.size() == layout_.knots.size();
    for (std::size_t k = 0; k < layout_.knots.size(); ++k) {
      const auto& e = layout_.knots[k];
      const int nc = e.knot.contacts.count();
      if (forces_match && guess->knots[k].forces.size() == 3 * nc) {
        x.segment(e.force_offset, 3 * nc) = guess->knots[k].forces;
      } else {
        for (int j = 0; j < nc; ++j) {
          x.segment<3>(e.force_offset + 3 * j) = -problem_.model.mass * problem_.model.gravity / nc;
        }
      }
    }
    return x;
  }

  TransitionResult unpack(const Eigen::VectorXd& x) const {
    TransitionResult r;
    const int s = static_cast<int>(problem_.num_subhorizons());
    for (int i = 0; i < s; ++i) {
      std::vector<Vec3> params;
      for (int v = 0; v < NonlinearLayout::kLinearParams; ++v) {
        params.push_back(x.segment<3>(NonlinearLayout::linear_param(i, v)));
      }
      r.free_points.push_back(params[0]);
      r.slacks.push_back({params[1], params[2], params[3], params[4]});
      r.com_curves.push_back(com_[i].instantiate(params));
      Eigen::Matrix3Xd q(3, kAngularOrder + 1);
      for (int j = 0; j <= kAngularOrder; ++j) q.col(j) = x.segment<3>(NonlinearLayout::angular_point(i, j));
      r.angular_curves.emplace_back(std::move(q), problem_.schedule.sub_horizons[i].duration());
    }
    for (const auto& e : layout_.knots) {
      KnotSolution k;
      k.sub_horizon = e.sub_horizon;
      k.u = e.knot.u;
      k.time = problem_.schedule.sub_horizons[e.sub_horizon].start_time + e.knot.t;
      k.contacts = e.knot.contacts;
      k.forces = x.segment(e.force_offset, 3 * e.knot.contacts.count());
      k.l_dot = l_dot(motion(x, e));
      r.knots.push_back(std::move(k));
    }
    fill_knot_motion(r);
    r.l_dot_from_orientation = uses_momentum();
    r.cost = cost(x);
    return r;
  }

 private:
  static void add_block(std::vector<Triplet>& t, Eigen::Index row, Eigen::Index col, const Mat3& b) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        if (b(r, c) != 0.0) t.emplace_back(row + r, col + c, b(r, c));
      }
    }
  }

  void add_angular_gradient(Eigen::VectorXd& g, const NonlinearLayout::KnotEntry& e,
                            const AngularMomentumRateJacobian& jac, const Vec3& weight) const {
    for (int j = 0; j <= kAngularOrder; ++j) {
      g.segment<3>(NonlinearLayout::angular_point(e.sub_horizon, j)) +=
          (e.b0[j] * jac.d_theta + e.b1[j] * jac.d_theta_dot + e.b2[j] * jac.d_theta_ddot).transpose() * weight;
    }
  }

  void build() {
    const auto& p = problem_;
    const int s = static_cast<int>(p.num_subhorizons());
    const double m = p.model.mass;
    Eigen::Index offset = NonlinearLayout::kBlock * s;

    for (int i = 0; i < s; ++i) {
      const auto& sh = p.schedule.sub_horizons[i];
      const double dur = sh.duration();
      com_.push_back(transition_curve_with_offsets(linear_part(p.waypoints[i]), linear_part(p.waypoints[i + 1]), dur));
      desired_.push_back(detail::elevate_to(p.desired_angular[i], kAngularOrder));
      for (auto& knot : sample_knots(sh, p.knots)) {
        if (knot.contacts.count() < 1) throw DimensionMismatch("knot without stance feet");
        NonlinearLayout::KnotEntry e;
        e.sub_horizon = i;
        const auto pos = com_[i].sample(knot.u, 0);
        const auto acc = com_[i].sample(knot.u, 2);
        e.a_pos = pos.value;
        e.w_pos = pos.weights;
        e.a_acc = acc.value;
        e.w_acc = acc.weights;
        e.b0 = basis_weights(kAngularOrder, knot.u, 0, dur);
        e.b1 = basis_weights(kAngularOrder, knot.u, 1, dur);
        e.b2 = basis_weights(kAngularOrder, knot.u, 2, dur);
        e.force_offset = offset;
        offset += 3 * knot.contacts.count();
        e.knot = std::move(knot);
        layout_.knots.push_back(std::move(e));
      }
    }
    layout_.num_variables = offset;

    std::vector<Triplet> a, c;
    std::vector<double> b, lo, hi;
    auto eq3 = [&](Eigen::Index col, double coef, Eigen::Index row_base) {
      for (int d = 0; d < 3; ++d) a.emplace_back(row_base + d, col + d, coef);
    };
    auto new_rows = [&](const Vec3& rhs) {
      const Eigen::Index r = static_cast<Eigen::Index>(b.size());
      for (int d = 0; d < 3; ++d) b.push_back(rhs[d]);
      return r;
    };

    // m c̈ - Σ f = m g at each knot.
    for (const auto& e : layout_.knots) {
      const Eigen::Index r = new_rows(-m * (e.a_acc - p.model.gravity));
      for (int v = 0; v < NonlinearLayout::kLinearParams; ++v) {
        if (e.w_acc[v] != 0.0) eq3(NonlinearLayout::linear_param(e.sub_horizon, v), m * e.w_acc[v], r);
      }
      for (int j = 0; j < e.knot.contacts.count(); ++j) eq3(e.force_offset + 3 * j, -1.0, r);
    }
    // The initial state is measured: no offsets at the first way-point.
    for (int v : {1, 2}) eq3(NonlinearLayout::linear_param(0, v), 1.0, new_rows(Vec3::Zero()));
    // Offsets are shared across each interior way-point.
    for (int i = 0; i + 1 < s; ++i) {
      for (int v : {0, 1}) {
        const Eigen::Index r = new_rows(Vec3::Zero());
        eq3(NonlinearLayout::linear_param(i, 3 + v), 1.0, r);
        eq3(NonlinearLayout::linear_param(i + 1, 1 + v), -1.0, r);
      }
    }
    if (p.angular_mode == AngularMode::Free) {
      for (int i = 0; i < s; ++i) {
        eq3(NonlinearLayout::angular_point(i, 0), 1.0, new_rows(p.waypoints[i].theta));
        eq3(NonlinearLayout::angular_point(i, kAngularOrder), 1.0, new_rows(p.waypoints[i + 1].theta));
      }
      // Θ̇ continuous across way-points; the initial rate is measured.
      const double n = kAngularOrder;
      for (int i = 0; i + 1 < s; ++i) {
        const double ta = p.schedule.sub_horizons[i].duration(), tb = p.schedule.sub_horizons[i + 1].duration();
        const Eigen::Index r = new_rows(Vec3::Zero());
        eq3(NonlinearLayout::angular_point(i, kAngularOrder), n / ta, r);
        eq3(NonlinearLayout::angular_point(i, kAngularOrder - 1), -n / ta, r);
        eq3(NonlinearLayout::angular_point(i + 1, 1), -n / tb, r);
        eq3(NonlinearLayout::angular_point(i + 1, 0), n / tb, r);
      }
      const double t0 = p.schedule.sub_horizons[0].duration();
      const Eigen::Index r = new_rows(p.waypoints[0].theta_dot);
      eq3(NonlinearLayout::angular_point(0, 1), n / t0, r);
      eq3(NonlinearLayout::angular_point(0, 0), -n / t0, r);
    } else {
      for (int i = 0; i < s; ++i) {
        for (int j = 0; j <= kAngularOrder; ++j) {
          eq3(NonlinearLayout::angular_point(i, j), 1.0, new_rows(desired_[i].control_point(j)));
        }
      }
    }

    auto ineq = [&](Eigen::Index col, double l, double u) {
      c.emplace_back(static_cast<Eigen::Index>(lo.size()), col, 1.0);
      lo.push_back(l);
      hi.push_back(u);
    };
    for (const auto& e : layout_.knots) {
      const LinearConstraintSet fr = friction_constraints(e.knot.contacts, p.model.mu, p.model.f_max);
      const Eigen::Index base = static_cast<Eigen::Index>(lo.size());
      for (Eigen::Index r = 0; r < fr.ineq_matrix.rows(); ++r) {
        for (Eigen::Index col = 0; col < fr.ineq_matrix.cols(); ++col) {
          if (fr.ineq_matrix(r, col) != 0.0) c.emplace_back(base + r, e.force_offset + col, fr.ineq_matrix(r, col));
        }
        lo.push_back(fr.lower[r]);
        hi.push_back(fr.upper[r]);
      }
    }
    for (int i = 0; i < s; ++i) {
      for (int v = 1; v < NonlinearLayout::kLinearParams; ++v) {
        const double bound = (v % 2 == 1) ? p.slack.position : p.slack.acceleration;
        for (int d = 0; d < 3; ++d) ineq(NonlinearLayout::linear_param(i, v) + d, -bound, bound);
      }
      if (p.angular_mode == AngularMode::Free) {
        for (int j = 1; j < kAngularOrder; ++j) ineq(NonlinearLayout::angular_point(i, j) + 1, -p.max_pitch, p.max_pitch);
      }
    }

    const Eigen::Index nv = layout_.num_variables;
    nlp_.num_variables = nv;
    nlp_.A.resize(static_cast<Eigen::Index>(b.size()), nv);
    nlp_.A.setFromTriplets(a.begin(), a.end());
    nlp_.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    nlp_.C.resize(static_cast<Eigen::Index>(lo.size()), nv);
    nlp_.C.setFromTriplets(c.begin(), c.end());
    nlp_.l = Eigen::Map<Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
    nlp_.u = Eigen::Map<Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
    nlp_.cost = [this](const Eigen::VectorXd& x) { return cost(x); };
    nlp_.cost_gradient = [this](const Eigen::VectorXd& x) { return cost_gradient(x); };
    nlp_.constraints = [this](const Eigen::VectorXd& x) { return constraints(x); };
    nlp_.constraint_jacobian = [this](const Eigen::VectorXd& x) { return constraint_jacobian(x); };
    nlp_.hessian = [this](const Eigen::VectorXd& x, const Eigen::VectorXd& l) { return hessian(x, l); };
  }

  NonlinearTransitionProblem problem_;
  NonlinearLayout layout_;
  NonlinearProgram nlp_;
  std::vector<AffineCurve> com_;
  std::vector<Curve3> desired_;
};

/// Solves the nonlinear formulation. Without an initial guess the convex
/// formulation of the same problem provides the warm start; its time counts
/// toward solve_seconds.
inline TransitionResult solve_transition_nonlinear(const NonlinearTransitionProblem& problem,
                                                   const TransitionResult* initial_guess = nullptr,
                                                   const NonlinearSettings& settings = {}) {
  const auto start = std::chrono::steady_clock::now();
  const NonlinearTransition nt(problem);

  TransitionResult warm;
  if (!initial_guess) {
    ConvexTransitionProblem cp;
    static_cast<TransitionProblem&>(cp) = problem;
    cp.desired_angular = problem.desired_angular;
    warm = solve_transition_convex(cp, settings.warm_start);
    if (warm.feasible()) initial_guess = &warm;
  }
  const SqpResult sqp = solve_sqp(nt.program(), nt.pack(initial_guess), settings.sqp);

  TransitionResult r = nt.unpack(sqp.x);
  switch (sqp.status) {
    case SqpStatus::Converged: r.status = SolveStatus::Feasible; break;
    case SqpStatus::LinearInfeasible:
      r.status = SolveStatus::Infeasible;
      r.message = "linear constraints cannot be met";
      break;
    case SqpStatus::MaxIterations:
    case SqpStatus::Stalled:
      r.status = SolveStatus::NoConvergence;
      r.message = (sqp.status == SqpStatus::Stalled ? "line search stalled" : "iteration limit reached");
      r.message += " (violation " + std::to_string(sqp.violation) + ", stationarity " +
                   std::to_string(sqp.stationarity) + ")";
      break;
    case SqpStatus::NumericalError:
      r.status = SolveStatus::SolverError;
      r.message = "subproblem failed";
      break;
  }
  r.iterations = sqp.iterations;
  r.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace dtf
