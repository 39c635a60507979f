#pragma once

#include <array>
#include <bitset>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dtf/errors.hpp"
#include "dtf/model.hpp"

namespace dtf {

enum class Leg { LF = 0, RF = 1, LH = 2, RH = 3 };

inline constexpr std::array<Leg, 4> kAllLegs = {Leg::LF, Leg::RF, Leg::LH, Leg::RH};

inline std::string_view leg_name(Leg leg) {
  static constexpr std::array<std::string_view, 4> names = {"LF", "RF", "LH", "RH"};
  return names[static_cast<int>(leg)];
}

inline std::optional<Leg> parse_leg(std::string_view name) {
  for (Leg leg : kAllLegs) {
    if (leg_name(leg) == name) return leg;
  }
  return std::nullopt;
}

using StanceSet = std::bitset<4>;

struct ContactPhase {
  double duration = 0.0;
  StanceSet stance;
  /// World positions of all four feet; only stance entries are contacts.
  std::array<Vec3, 4> feet;

  int num_contacts() const { return static_cast<int>(stance.count()); }
};

/// A slice of the horizon with at most two contact switches. Way-point
/// indices refer to the list returned by waypoint_states().
struct SubHorizon {
  std::vector<ContactPhase> phases;
  int start_state_index = 0;
  int end_state_index = 1;
  double start_time = 0.0;

  double duration() const {
    double t = 0.0;
    for (const auto& p : phases) t += p.duration;
    return t;
  }

  int switches() const {
    int n = 0;
    for (std::size_t i = 1; i < phases.size(); ++i) {
      n += static_cast<int>((phases[i].stance ^ phases[i - 1].stance).count());
    }
    return n;
  }
};

struct ContactSchedule {
  std::vector<ContactPhase> phases;
  std::vector<SubHorizon> sub_horizons;
  /// Non-simultaneous contact switches over the whole horizon.
  int csh = 0;

  double duration() const {
    double t = 0.0;
    for (const auto& p : phases) t += p.duration;
    return t;
  }
};

/// Crawl parameters. Each swing is framed by half a four-foot stance on
/// either side, so consecutive swings are separated by stance_duration.
struct GaitParams {
  double swing_duration = 0.8;
  double stance_duration = 0.2;
  std::vector<Leg> sequence = {Leg::RH, Leg::RF, Leg::LH, Leg::LF};

  double cycle_duration() const {
    return static_cast<double>(sequence.size()) * (swing_duration + stance_duration);
  }
};

/// Current foot positions and the touchdown position of each planned swing,
/// in swing order.
struct FootholdPlan {
  std::array<Vec3, 4> initial;
  std::vector<Vec3> touchdowns;
};

/// Splits phases so that each slice holds at most two switches, closing a
/// slice on the phase that completes its second switch.
inline std::vector<SubHorizon> partition_subhorizons(std::span<const ContactPhase> phases) {
  std::vector<SubHorizon> out;
  if (phases.empty()) return out;
  SubHorizon current;
  double t = 0.0;
  int switches = 0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (!current.phases.empty()) {
      switches += static_cast<int>((phases[i].stance ^ current.phases.back().stance).count());
    }
    current.phases.push_back(phases[i]);
    t += phases[i].duration;
    if (switches >= 2) {
      out.push_back(std::move(current));
      current = SubHorizon{};
      current.start_time = t;
      switches = 0;
    }
  }
  if (!current.phases.empty()) out.push_back(std::move(current));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].start_state_index = static_cast<int>(i);
    out[i].end_state_index = static_cast<int>(i) + 1;
  }
  return out;
}

inline std::vector<SubHorizon> partition_subhorizons(const ContactSchedule& schedule) {
  return partition_subhorizons(std::span<const ContactPhase>(schedule.phases));
}

/// Periodic crawl covering `horizon_switches` contact switches (two per
/// swing: lift-off and touchdown).
inline ContactSchedule build_contact_schedule(const GaitParams& gait, const FootholdPlan& footholds,
                                              int horizon_switches) {
  if (!(gait.swing_duration > 0.0)) throw InvalidGait("swing duration must be positive");
  if (!(gait.stance_duration > 0.0)) throw InvalidGait("stance duration must be positive");
  if (gait.sequence.empty()) throw InvalidGait("empty gait sequence");
  if (horizon_switches < 0) throw InvalidGait("negative horizon length");
  StanceSet seen;
  for (Leg leg : gait.sequence) {
    if (seen.test(static_cast<int>(leg))) throw InvalidGait("crawl sequence repeats a leg");
    seen.set(static_cast<int>(leg));
  }
  const int swings = (horizon_switches + 1) / 2;
  const int touchdowns = horizon_switches / 2;
  if (static_cast<int>(footholds.touchdowns.size()) < touchdowns) {
    throw InvalidGait("not enough planned touchdowns for the horizon");
  }

  ContactSchedule schedule;
  schedule.csh = horizon_switches;
  std::array<Vec3, 4> feet = footholds.initial;
  StanceSet all;
  all.set();
  if (horizon_switches == 0) {
    schedule.phases.push_back({gait.stance_duration, all, feet});
  }
  for (int s = 0; s < swings; ++s) {
    const int leg = static_cast<int>(gait.sequence[s % gait.sequence.size()]);
    schedule.phases.push_back({gait.stance_duration / 2.0, all, feet});
    StanceSet three = all;
    three.reset(leg);
    schedule.phases.push_back({gait.swing_duration, three, feet});
    if (s < touchdowns) {
      feet[leg] = footholds.touchdowns[s];
      schedule.phases.push_back({gait.stance_duration / 2.0, all, feet});
    }
  }
  schedule.sub_horizons = partition_subhorizons(schedule);
  return schedule;
}

/// Index of the swing in which `leg` moves first, if it swings within
/// `horizon_switches`.
inline std::optional<int> swing_index_of(const GaitParams& gait, Leg leg, int horizon_switches) {
  const int touchdowns = horizon_switches / 2;
  for (int s = 0; s < touchdowns; ++s) {
    if (gait.sequence[s % gait.sequence.size()] == leg) return s;
  }
  return std::nullopt;
}

/// Least-squares plane z = a x + b y + d through the given points.
struct Plane {
  double a = 0.0, b = 0.0, d = 0.0;

  double height(double x, double y) const { return a * x + b * y + d; }
};

inline Plane fit_plane(std::span<const Vec3> points) {
  if (points.size() < 3) throw std::invalid_argument("plane fit needs at least 3 points");
  Eigen::MatrixXd m(points.size(), 3);
  Eigen::VectorXd z(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    m.row(i) << points[i].x(), points[i].y(), 1.0;
    z[i] = points[i].z();
  }
  const Eigen::Vector3d coef = m.colPivHouseholderQr().solve(z);
  return {coef[0], coef[1], coef[2]};
}

inline std::vector<Vec3> stance_points(const ContactPhase& phase) {
  std::vector<Vec3> pts;
  for (int leg = 0; leg < 4; ++leg) {
    if (phase.stance.test(leg)) pts.push_back(phase.feet[leg]);
  }
  return pts;
}

/// Roll and pitch of a body with heading `yaw` resting on the plane.
/// Ascending along the heading gives negative pitch (nose up).
inline Eigen::Vector2d terrain_roll_pitch(const Plane& plane, double yaw) {
  const double forward = plane.a * std::cos(yaw) + plane.b * std::sin(yaw);
  const double left = -plane.a * std::sin(yaw) + plane.b * std::cos(yaw);
  return {std::atan(left), -std::atan(forward)};
}

/// Commanded planar velocity (body frame) and yaw rate.
struct VelocityCommand {
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;
};

namespace detail {

/// Planar displacement after time t under a body-frame velocity command,
/// starting at heading yaw0.
inline Eigen::Vector2d integrate_command(const VelocityCommand& cmd, double yaw0, double t) {
  const Eigen::Vector2d v(cmd.vx, cmd.vy);
  Eigen::Matrix2d integral;
  if (std::abs(cmd.yaw_rate) < 1e-12) {
    integral = t * Eigen::Matrix2d::Identity();
  } else {
    const double r = cmd.yaw_rate;
    const double s = std::sin(r * t), c = std::cos(r * t);
    integral << s / r, (c - 1.0) / r, (1.0 - c) / r, s / r;
  }
  const Eigen::Matrix2d rot0 = Eigen::Rotation2Dd(yaw0).toRotationMatrix();
  return rot0 * integral * v;
}

}  // namespace detail

/// Desired state at every way-point (sub-horizon boundary). Way-point 0 is
/// the initial state. Later way-points follow the command for position, yaw
/// and velocity; height, roll and pitch change with the least-squares plane
/// through the stance feet relative to the initial stance.
inline std::vector<State> waypoint_states(const ContactSchedule& schedule, const VelocityCommand& cmd,
                                          const State& initial) {
  std::vector<State> out;
  out.push_back(initial);
  if (schedule.sub_horizons.empty()) return out;

  const auto& first_phase = schedule.sub_horizons.front().phases.front();
  const Plane plane0 = fit_plane(stance_points(first_phase));
  const double yaw0 = initial.theta.z();
  const Eigen::Vector2d rp0 = terrain_roll_pitch(plane0, yaw0);
  const double h0 = plane0.height(initial.c.x(), initial.c.y());

  double t = 0.0;
  for (const auto& sh : schedule.sub_horizons) {
    t += sh.duration();
    State s;
    const double yaw = yaw0 + cmd.yaw_rate * t;
    const Eigen::Vector2d xy = initial.c.head<2>() + detail::integrate_command(cmd, yaw0, t);
    const Plane plane = fit_plane(stance_points(sh.phases.back()));
    const Eigen::Vector2d rp = terrain_roll_pitch(plane, yaw);
    s.c << xy.x(), xy.y(), initial.c.z() + plane.height(xy.x(), xy.y()) - h0;
    const Eigen::Vector2d v = Eigen::Rotation2Dd(yaw).toRotationMatrix() * Eigen::Vector2d(cmd.vx, cmd.vy);
    s.c_dot << v.x(), v.y(), 0.0;
    s.theta << initial.theta.x() + rp.x() - rp0.x(), initial.theta.y() + rp.y() - rp0.y(), yaw;
    s.theta_dot << 0.0, 0.0, cmd.yaw_rate;
    out.push_back(s);
  }
  return out;
}

}  // namespace dtf
