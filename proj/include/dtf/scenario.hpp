#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "dtf/heightmap.hpp"
#include "dtf/horizon.hpp"
#include "dtf/model.hpp"
#include "dtf/transition.hpp"

namespace dtf {

enum class Formulation { Convex, Nonlinear, Both };

inline std::optional<Formulation> parse_formulation(std::string_view s) {
  if (s == "convex") return Formulation::Convex;
  if (s == "nonlinear") return Formulation::Nonlinear;
  if (s == "both") return Formulation::Both;
  return std::nullopt;
}

struct TerrainSpec {
  enum class Kind { Flat, Stairs, File } kind = Kind::Flat;
  StairParams stairs;
  std::filesystem::path path;
};

struct FootmapParams {
  double half_extent = 0.08;
  double resolution = 0.02;
  double rough_tol = 0.03;
  double clear_tol = 0.02;
};

struct Scenario {
  RobotModel robot;
  TerrainSpec terrain;
  GaitParams gait;
  VelocityCommand command;
  int horizon_switches = 8;
  Formulation formulation = Formulation::Both;
  int knots = kDefaultKnots;
  CostWeights weights;
  SlackBounds slack;
  /// Initial CoM planar position, height above the mean foot height, heading.
  Eigen::Vector2d start_xy = Eigen::Vector2d::Zero();
  double body_height = 0.6;
  double start_yaw = 0.0;
  /// Nominal foot rectangle in the body frame (x extent, y extent).
  double stance_length = 0.8;
  double stance_width = 0.5;
  FootmapParams footmap;
  /// Trajectory samples per second.
  double output_rate = 100.0;
};

namespace detail {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

/// Relative paths in the scenario resolve against `base_dir`.
inline Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                   const std::string& source = "scenario") {
  Scenario s;
  try {
    if (j.contains("robot")) {
      const auto& r = j.at("robot");
      s.robot = r.is_string() ? load_robot_model(base_dir / r.get<std::string>()) : robot_model_from_json(r);
    }
    if (j.contains("terrain")) {
      const auto& t = j.at("terrain");
      const std::string kind = t.value("type", "flat");
      if (kind == "flat") {
        s.terrain.kind = TerrainSpec::Kind::Flat;
      } else if (kind == "stairs") {
        s.terrain.kind = TerrainSpec::Kind::Stairs;
        auto& p = s.terrain.stairs;
        detail::read_opt(t, "step_height", p.step_height);
        detail::read_opt(t, "step_depth", p.step_depth);
        detail::read_opt(t, "steps", p.steps);
        detail::read_opt(t, "start_x", p.start_x);
        detail::read_opt(t, "platform_depth", p.platform_depth);
        detail::read_opt(t, "descend", p.descend);
        detail::read_opt(t, "resolution", p.resolution);
      } else if (kind == "file") {
        s.terrain.kind = TerrainSpec::Kind::File;
        s.terrain.path = base_dir / t.at("path").get<std::string>();
      } else {
        throw ParseError(source, 0, "unknown terrain type '" + kind + "'");
      }
    }
    if (j.contains("gait")) {
      const auto& g = j.at("gait");
      detail::read_opt(g, "swing_duration", s.gait.swing_duration);
      detail::read_opt(g, "stance_duration", s.gait.stance_duration);
      if (g.contains("sequence")) {
        s.gait.sequence.clear();
        for (const auto& name : g.at("sequence")) {
          const auto leg = parse_leg(name.get<std::string>());
          if (!leg) throw ParseError(source, 0, "unknown leg '" + name.get<std::string>() + "'");
          s.gait.sequence.push_back(*leg);
        }
      }
    }
    if (j.contains("command")) {
      const auto& c = j.at("command");
      detail::read_opt(c, "vx", s.command.vx);
      detail::read_opt(c, "vy", s.command.vy);
      detail::read_opt(c, "yaw_rate", s.command.yaw_rate);
    }
    detail::read_opt(j, "horizon_switches", s.horizon_switches);
    if (j.contains("formulation")) {
      const auto f = parse_formulation(j.at("formulation").get<std::string>());
      if (!f) throw ParseError(source, 0, "formulation must be convex, nonlinear or both");
      s.formulation = *f;
    }
    detail::read_opt(j, "knots", s.knots);
    if (j.contains("weights")) {
      detail::read_opt(j.at("weights"), "angular", s.weights.angular);
      detail::read_opt(j.at("weights"), "acceleration", s.weights.acceleration);
    }
    if (j.contains("slack")) {
      detail::read_opt(j.at("slack"), "position", s.slack.position);
      detail::read_opt(j.at("slack"), "acceleration", s.slack.acceleration);
    }
    if (j.contains("initial")) {
      const auto& i = j.at("initial");
      if (i.contains("xy")) s.start_xy = {i.at("xy").at(0).get<double>(), i.at("xy").at(1).get<double>()};
      detail::read_opt(i, "body_height", s.body_height);
      detail::read_opt(i, "yaw", s.start_yaw);
    }
    if (j.contains("stance")) {
      detail::read_opt(j.at("stance"), "length", s.stance_length);
      detail::read_opt(j.at("stance"), "width", s.stance_width);
    }
    if (j.contains("footmap")) {
      const auto& f = j.at("footmap");
      detail::read_opt(f, "half_extent", s.footmap.half_extent);
      detail::read_opt(f, "resolution", s.footmap.resolution);
      detail::read_opt(f, "rough_tol", s.footmap.rough_tol);
      detail::read_opt(f, "clear_tol", s.footmap.clear_tol);
    }
    detail::read_opt(j, "output_rate", s.output_rate);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, e.what());
  }
  if (s.horizon_switches < 0) throw ParseError(source, 0, "horizon_switches must be non-negative");
  if (s.knots < 2) throw ParseError(source, 0, "knots must be at least 2");
  if (!(s.output_rate > 0.0)) throw ParseError(source, 0, "output_rate must be positive");
  if (!(s.slack.position > 0.0) || !(s.slack.acceleration > 0.0)) {
    throw ParseError(source, 0, "slack bounds must be positive");
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  return scenario_from_json(j, path.parent_path(), path.string());
}

inline HeightMap build_terrain(const Scenario& s) {
  switch (s.terrain.kind) {
    case TerrainSpec::Kind::Flat: {
      const double res = 0.01;
      return HeightMap::flat({s.start_xy.x() - 1.5, s.start_xy.y() - 1.5}, res, 300, 500);
    }
    case TerrainSpec::Kind::Stairs: return generate_stairs(s.terrain.stairs);
    case TerrainSpec::Kind::File: return load_heightmap(s.terrain.path);
  }
  throw std::logic_error("unknown terrain kind");
}

/// Nominal foot position of `leg` in the body frame.
inline Vec3 nominal_foot_offset(const Scenario& s, Leg leg) {
  const int i = static_cast<int>(leg);
  const double sx = (i < 2) ? 1.0 : -1.0;
  const double sy = (i % 2 == 0) ? 1.0 : -1.0;
  return {sx * s.stance_length / 2.0, sy * s.stance_width / 2.0, 0.0};
}

/// Planar body pose (x, y, yaw) under the command at time t.
inline Vec3 commanded_pose(const Scenario& s, double t) {
  const Eigen::Vector2d xy = s.start_xy + detail::integrate_command(s.command, s.start_yaw, t);
  return {xy.x(), xy.y(), s.start_yaw + s.command.yaw_rate * t};
}

inline Vec3 foot_on_terrain(const Scenario& s, const HeightMap& map, const Vec3& pose, Leg leg) {
  const Eigen::Vector2d off = Eigen::Rotation2Dd(pose.z()) * nominal_foot_offset(s, leg).head<2>();
  const double x = pose.x() + off.x(), y = pose.y() + off.y();
  return {x, y, map.height(x, y)};
}

/// Start time of swing s in the crawl schedule.
inline double swing_start_time(const GaitParams& g, int s) {
  return s * (g.swing_duration + g.stance_duration) + g.stance_duration / 2.0;
}

/// Current feet on the nominal rectangle; each touchdown lands at the
/// nominal offset from the body pose at the middle of the following stance.
inline FootholdPlan nominal_footholds(const Scenario& s, const HeightMap& map) {
  FootholdPlan plan;
  const Vec3 pose0 = commanded_pose(s, 0.0);
  for (Leg leg : kAllLegs) plan.initial[static_cast<int>(leg)] = foot_on_terrain(s, map, pose0, leg);
  const double stance_time = s.gait.cycle_duration() - s.gait.swing_duration;
  for (int sw = 0; sw < s.horizon_switches / 2; ++sw) {
    const Leg leg = s.gait.sequence[sw % s.gait.sequence.size()];
    const double touchdown = swing_start_time(s.gait, sw) + s.gait.swing_duration;
    plan.touchdowns.push_back(foot_on_terrain(s, map, commanded_pose(s, touchdown + stance_time / 2.0), leg));
  }
  return plan;
}

/// Walking at the commanded velocity, aligned with the initial stance.
inline State initial_state(const Scenario& s, const FootholdPlan& plan) {
  State st;
  const Plane plane = fit_plane(plan.initial);
  const Eigen::Vector2d rp = terrain_roll_pitch(plane, s.start_yaw);
  double mean_z = 0.0;
  for (const auto& f : plan.initial) mean_z += f.z() / 4.0;
  st.c << s.start_xy.x(), s.start_xy.y(), mean_z + s.body_height;
  const Eigen::Vector2d v = Eigen::Rotation2Dd(s.start_yaw) * Eigen::Vector2d(s.command.vx, s.command.vy);
  st.c_dot << v.x(), v.y(), 0.0;
  st.theta << rp.x(), rp.y(), s.start_yaw;
  st.theta_dot << 0.0, 0.0, s.command.yaw_rate;
  return st;
}

inline TransitionProblem build_problem(const Scenario& s, const FootholdPlan& plan) {
  TransitionProblem p;
  p.model = s.robot;
  p.schedule = build_contact_schedule(s.gait, plan, s.horizon_switches);
  p.waypoints = waypoint_states(p.schedule, s.command, initial_state(s, plan));
  p.knots = s.knots;
  p.weights = s.weights;
  return p;
}

}  // namespace dtf
