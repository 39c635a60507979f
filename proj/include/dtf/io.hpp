#pragma once

#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtf/transition.hpp"

namespace dtf {

struct TrajectorySample {
  double t = 0.0;
  Vec3 c, c_dot, c_ddot;
  Vec3 theta, theta_dot, theta_ddot;
  Vec3 l_dot;
  /// Per leg (LF, RF, LH, RH); zero for legs in swing.
  std::array<Vec3, 4> forces;
};

namespace detail {

inline std::array<Vec3, 4> forces_by_leg(const KnotSolution& k) {
  std::array<Vec3, 4> out;
  out.fill(Vec3::Zero());
  for (int j = 0; j < k.contacts.count(); ++j) {
    out[static_cast<int>(k.contacts.legs[j])] = k.forces.segment<3>(3 * j);
  }
  return out;
}

}  // namespace detail

/// Samples every 1/rate seconds from 0, plus the final instant. Forces (and
/// L̇ when it is a free variable) are linear between the knots of a
/// sub-horizon.
inline std::vector<TrajectorySample> sample_trajectory(const RobotModel& model, const TransitionResult& r,
                                                       double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("output rate must be positive");
  if (r.com_curves.empty()) return {};
  const std::size_t s = r.com_curves.size();
  std::vector<double> start(s + 1, 0.0);
  for (std::size_t i = 0; i < s; ++i) start[i + 1] = start[i] + r.com_curves[i].duration();
  const double total = start[s];

  std::vector<std::vector<const KnotSolution*>> knots(s);
  for (const auto& k : r.knots) knots.at(static_cast<std::size_t>(k.sub_horizon)).push_back(&k);

  std::vector<double> times;
  for (long i = 0;; ++i) {
    const double t = static_cast<double>(i) / rate;
    if (t > total + 1e-12) break;
    times.push_back(std::min(t, total));
  }
  if (total - times.back() > 1e-12) times.push_back(total);

  std::vector<Curve3> c1, c2, a1, a2;
  for (std::size_t i = 0; i < s; ++i) {
    c1.push_back(r.com_curves[i].derivative());
    c2.push_back(c1.back().derivative());
    a1.push_back(r.angular_curves[i].derivative());
    a2.push_back(a1.back().derivative());
  }

  std::vector<TrajectorySample> out;
  out.reserve(times.size());
  for (double t : times) {
    std::size_t i = 0;
    while (i + 1 < s && t >= start[i + 1]) ++i;
    const double u = std::clamp((t - start[i]) / r.com_curves[i].duration(), 0.0, 1.0);
    TrajectorySample smp;
    smp.t = t;
    smp.c = r.com_curves[i].evaluate(u);
    smp.c_dot = c1[i].evaluate(u);
    smp.c_ddot = c2[i].evaluate(u);
    smp.theta = r.angular_curves[i].evaluate(u);
    smp.theta_dot = a1[i].evaluate(u);
    smp.theta_ddot = a2[i].evaluate(u);
    smp.forces.fill(Vec3::Zero());
    smp.l_dot.setZero();
    const auto& ks = knots[i];
    if (!ks.empty()) {
      std::size_t k = 0;
      while (k + 2 < ks.size() && u > ks[k + 1]->u) ++k;
      const KnotSolution& lo = *ks[k];
      const KnotSolution& hi = *ks[std::min(k + 1, ks.size() - 1)];
      const double span = hi.u - lo.u;
      const double w = span > 0.0 ? std::clamp((u - lo.u) / span, 0.0, 1.0) : 0.0;
      const auto flo = detail::forces_by_leg(lo), fhi = detail::forces_by_leg(hi);
      for (int leg = 0; leg < 4; ++leg) smp.forces[leg] = (1.0 - w) * flo[leg] + w * fhi[leg];
      smp.l_dot = (1.0 - w) * lo.l_dot + w * hi.l_dot;
    }
    if (r.l_dot_from_orientation) smp.l_dot = angular_momentum_rate(model, smp.theta, smp.theta_dot, smp.theta_ddot);
    out.push_back(smp);
  }
  return out;
}

inline void write_trajectory_csv(std::ostream& os, const std::vector<TrajectorySample>& samples) {
  os << "t,cx,cy,cz,vx,vy,vz,ax,ay,az,roll,pitch,yaw,roll_rate,pitch_rate,yaw_rate,roll_acc,pitch_acc,yaw_acc,"
        "ldot_x,ldot_y,ldot_z";
  for (Leg leg : kAllLegs) {
    for (const char* a : {"fx", "fy", "fz"}) os << ',' << leg_name(leg) << '_' << a;
  }
  os << '\n' << std::setprecision(17);
  auto put = [&](const Vec3& v) { os << ',' << v.x() << ',' << v.y() << ',' << v.z(); };
  for (const auto& s : samples) {
    os << s.t;
    for (const Vec3* v : {&s.c, &s.c_dot, &s.c_ddot, &s.theta, &s.theta_dot, &s.theta_ddot, &s.l_dot}) put(*v);
    for (const auto& f : s.forces) put(f);
    os << '\n';
  }
}

/// One row per knot with the exact solver values.
inline void write_knots_csv(std::ostream& os, const TransitionResult& r) {
  os << "t,sub_horizon,u,cx,cy,cz,ax,ay,az,roll,pitch,yaw,ldot_x,ldot_y,ldot_z";
  for (Leg leg : kAllLegs) {
    os << ',' << leg_name(leg) << "_contact";
    for (const char* a : {"fx", "fy", "fz"}) os << ',' << leg_name(leg) << '_' << a;
  }
  os << '\n' << std::setprecision(17);
  auto put = [&](const Vec3& v) { os << ',' << v.x() << ',' << v.y() << ',' << v.z(); };
  for (const auto& k : r.knots) {
    os << k.time << ',' << k.sub_horizon << ',' << k.u;
    put(k.c);
    put(k.c_ddot);
    put(k.theta);
    put(k.l_dot);
    const auto f = detail::forces_by_leg(k);
    for (int leg = 0; leg < 4; ++leg) {
      bool in_contact = false;
      for (Leg l : k.contacts.legs) in_contact |= static_cast<int>(l) == leg;
      os << ',' << (in_contact ? 1 : 0);
      put(f[leg]);
    }
    os << '\n';
  }
}

struct TrajectoryMetrics {
  /// Peak |Θ̇| per axis (roll, pitch, yaw).
  Vec3 peak_rate = Vec3::Zero();
  /// ∫‖c̈‖² dt by the trapezoidal rule over the samples.
  double acceleration_integral = 0.0;
  /// Peak |ċ| along the body's lateral axis.
  double peak_lateral_velocity = 0.0;
};

inline TrajectoryMetrics trajectory_metrics(const std::vector<TrajectorySample>& samples) {
  TrajectoryMetrics m;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    m.peak_rate = m.peak_rate.cwiseMax(s.theta_dot.cwiseAbs());
    const double yaw = s.theta.z();
    const double lateral = -std::sin(yaw) * s.c_dot.x() + std::cos(yaw) * s.c_dot.y();
    m.peak_lateral_velocity = std::max(m.peak_lateral_velocity, std::abs(lateral));
    if (i > 0) {
      const auto& p = samples[i - 1];
      m.acceleration_integral += 0.5 * (s.t - p.t) * (s.c_ddot.squaredNorm() + p.c_ddot.squaredNorm());
    }
  }
  return m;
}

struct PlanReport {
  std::string formulation;
  SolveStatus status = SolveStatus::SolverError;
  std::string message;
  double cost = 0.0;
  double solve_seconds = 0.0;
  int iterations = 0;
  TrajectoryMetrics metrics;
  RecheckReport recheck;
};

inline PlanReport make_report(const std::string& formulation, const RobotModel& model, const TransitionResult& r,
                              double rate) {
  PlanReport rep;
  rep.formulation = formulation;
  rep.status = r.status;
  rep.message = r.message;
  rep.cost = r.cost;
  rep.solve_seconds = r.solve_seconds;
  rep.iterations = r.iterations;
  if (r.feasible()) {
    rep.metrics = trajectory_metrics(sample_trajectory(model, r, rate));
    rep.recheck = recheck(model, r);
  }
  return rep;
}

inline nlohmann::json report_to_json(const PlanReport& r) {
  nlohmann::json j;
  j["formulation"] = r.formulation;
  j["status"] = std::string(status_name(r.status));
  if (!r.message.empty()) j["message"] = r.message;
  j["cost"] = r.cost;
  j["solve_seconds"] = r.solve_seconds;
  j["iterations"] = r.iterations;
  j["peak_rate"] = {r.metrics.peak_rate.x(), r.metrics.peak_rate.y(), r.metrics.peak_rate.z()};
  j["acceleration_integral"] = r.metrics.acceleration_integral;
  j["peak_lateral_velocity"] = r.metrics.peak_lateral_velocity;
  j["recheck"] = {{"max_wrench_residual", r.recheck.max_wrench_residual},
                  {"max_friction_violation", r.recheck.max_friction_violation}};
  return j;
}

namespace detail {

inline nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec3 json_to_vec3(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json curve_json(const Curve3& c) {
  nlohmann::json pts = nlohmann::json::array();
  for (int i = 0; i <= c.order(); ++i) pts.push_back(vec_json(c.control_point(i)));
  return {{"duration", c.duration()}, {"points", pts}};
}

inline Curve3 json_curve(const nlohmann::json& j) {
  const auto& pts = j.at("points");
  if (pts.empty()) throw std::invalid_argument("curve without control points");
  Eigen::Matrix3Xd m(3, pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = json_to_vec3(pts[i]);
  return Curve3(std::move(m), j.at("duration").get<double>());
}

}  // namespace detail

/// Full result record: status, cost, curve control points, and per-knot
/// contacts, forces and L̇. Doubles round-trip exactly. Timing is left out so
/// that repeated runs produce identical files.
inline nlohmann::json result_to_json(const TransitionResult& r) {
  nlohmann::json j;
  j["status"] = std::string(status_name(r.status));
  j["message"] = r.message;
  j["cost"] = r.cost;
  j["iterations"] = r.iterations;
  j["l_dot_from_orientation"] = r.l_dot_from_orientation;
  j["com_curves"] = j["angular_curves"] = j["knots"] = nlohmann::json::array();
  for (const auto& c : r.com_curves) j["com_curves"].push_back(detail::curve_json(c));
  for (const auto& c : r.angular_curves) j["angular_curves"].push_back(detail::curve_json(c));
  for (const auto& k : r.knots) {
    nlohmann::json kj;
    kj["sub_horizon"] = k.sub_horizon;
    kj["u"] = k.u;
    kj["time"] = k.time;
    for (int i = 0; i < k.contacts.count(); ++i) {
      kj["legs"].push_back(std::string(leg_name(k.contacts.legs[i])));
      kj["points"].push_back(detail::vec_json(k.contacts.points[i]));
    }
    kj["forces"] = detail::vec_json(k.forces);
    kj["l_dot"] = detail::vec_json(k.l_dot);
    j["knots"].push_back(kj);
  }
  return j;
}

inline SolveStatus parse_status(const std::string& s) {
  for (SolveStatus st : {SolveStatus::Feasible, SolveStatus::Infeasible, SolveStatus::NoConvergence,
                         SolveStatus::SolverError}) {
    if (status_name(st) == s) return st;
  }
  throw std::invalid_argument("unknown status '" + s + "'");
}

inline TransitionResult result_from_json(const nlohmann::json& j, const std::string& source = "result") {
  TransitionResult r;
  try {
    r.status = parse_status(j.at("status").get<std::string>());
    r.message = j.value("message", "");
    r.cost = j.at("cost").get<double>();
    r.iterations = j.value("iterations", 0);
    r.l_dot_from_orientation = j.at("l_dot_from_orientation").get<bool>();
    for (const auto& c : j.at("com_curves")) r.com_curves.push_back(detail::json_curve(c));
    for (const auto& c : j.at("angular_curves")) r.angular_curves.push_back(detail::json_curve(c));
    if (r.com_curves.size() != r.angular_curves.size()) throw DimensionMismatch("curve count mismatch");
    for (const auto& kj : j.at("knots")) {
      KnotSolution k;
      k.sub_horizon = kj.at("sub_horizon").get<int>();
      if (k.sub_horizon < 0 || k.sub_horizon >= static_cast<int>(r.com_curves.size())) {
        throw DimensionMismatch("knot refers to a missing sub-horizon");
      }
      k.u = kj.at("u").get<double>();
      k.time = kj.value("time", 0.0);
      if (kj.contains("legs")) {
        for (std::size_t i = 0; i < kj.at("legs").size(); ++i) {
          const auto leg = parse_leg(kj.at("legs")[i].get<std::string>());
          if (!leg) throw std::invalid_argument("unknown leg");
          k.contacts.legs.push_back(*leg);
          k.contacts.points.push_back(detail::json_to_vec3(kj.at("points")[i]));
        }
      }
      const auto& f = kj.at("forces");
      k.forces.resize(static_cast<Eigen::Index>(f.size()));
      for (std::size_t i = 0; i < f.size(); ++i) k.forces[static_cast<Eigen::Index>(i)] = f[i].get<double>();
      k.l_dot = detail::json_to_vec3(kj.at("l_dot"));
      r.knots.push_back(std::move(k));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, e.what());
  } catch (const std::logic_error& e) {
    throw ParseError(source, 0, e.what());
  }
  fill_knot_motion(r);
  return r;
}

}  // namespace dtf
