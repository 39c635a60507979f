#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "dtf/errors.hpp"

namespace dtf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pitch must stay this far (rad) from ±π/2.
inline constexpr double kSingularityMargin = 1e-3;

inline constexpr double kPi = 3.14159265358979323846;

/// Rigid-body robot parameters. Inertia is about the CoM in the body frame.
struct RobotModel {
  double mass = 90.0;
  Mat3 body_inertia = Eigen::Vector3d(4.0, 11.0, 12.0).asDiagonal();
  double mu = 0.7;
  double f_max = 1000.0;
  /// LF, RF, LH, RH hip positions in the body frame.
  std::array<Vec3, 4> hip_offsets = {Vec3(0.3735, 0.207, 0.0), Vec3(0.3735, -0.207, 0.0),
                                     Vec3(-0.3735, 0.207, 0.0), Vec3(-0.3735, -0.207, 0.0)};
  double leg_min_reach = 0.30;
  double leg_max_reach = 0.75;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);

  void validate() const {
    if (!(mass > 0.0)) throw InvalidModel("mass must be positive");
    if (!(mu > 0.0)) throw InvalidModel("mu must be positive");
    if (!(f_max > 0.0)) throw InvalidModel("f_max must be positive");
    if (!(leg_min_reach > 0.0 && leg_min_reach < leg_max_reach)) {
      throw InvalidModel("require 0 < leg_min_reach < leg_max_reach");
    }
    if (!body_inertia.isApprox(body_inertia.transpose(), 1e-12)) {
      throw InvalidModel("body inertia must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(body_inertia, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) {
      throw InvalidModel("body inertia must be positive definite");
    }
  }
};

/// CoM position/velocity/acceleration and ZYX Euler angles (roll, pitch, yaw)
/// with their first and second time derivatives.
struct State {
  Vec3 c = Vec3::Zero();
  Vec3 c_dot = Vec3::Zero();
  Vec3 c_ddot = Vec3::Zero();
  Vec3 theta = Vec3::Zero();
  Vec3 theta_dot = Vec3::Zero();
  Vec3 theta_ddot = Vec3::Zero();
};

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Mat3 rotation_matrix(const Vec3& theta) {
  const double cr = std::cos(theta.x()), sr = std::sin(theta.x());
  const double cp = std::cos(theta.y()), sp = std::sin(theta.y());
  const double cy = std::cos(theta.z()), sy = std::sin(theta.z());
  Mat3 r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,  //
      sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,   //
      -sp, cp * sr, cp * cr;
  return r;
}

inline void check_orientation(const Vec3& theta) {
  if (!(std::abs(theta.y()) < kPi / 2.0 - kSingularityMargin)) {
    throw SingularOrientation("pitch " + std::to_string(theta.y()) +
                              " rad is within the gimbal-lock margin");
  }
}

/// T such that the world-frame angular velocity is T * theta_dot. Columns are
/// the world axes of the roll, pitch and yaw rotations.
inline Mat3 euler_rate_map(const Vec3& theta) {
  check_orientation(theta);
  const double cp = std::cos(theta.y()), sp = std::sin(theta.y());
  const double cy = std::cos(theta.z()), sy = std::sin(theta.z());
  Mat3 t;
  t << cy * cp, -sy, 0.0,  //
      sy * cp, cy, 0.0,    //
      -sp, 0.0, 1.0;
  return t;
}

/// dT/d(theta_i). T does not depend on roll, so axis 0 yields zero.
inline Mat3 euler_rate_map_partial(const Vec3& theta, int axis) {
  const double cp = std::cos(theta.y()), sp = std::sin(theta.y());
  const double cy = std::cos(theta.z()), sy = std::sin(theta.z());
  Mat3 d = Mat3::Zero();
  if (axis == 1) {
    d.col(0) << -cy * sp, -sy * sp, -cp;
  } else if (axis == 2) {
    d.col(0) << -sy * cp, cy * cp, 0.0;
    d.col(1) << -cy, -sy, 0.0;
  }
  return d;
}

/// d²T/(d theta_i d theta_j).
inline Mat3 euler_rate_map_second_partial(const Vec3& theta, int i, int j) {
  const double cp = std::cos(theta.y()), sp = std::sin(theta.y());
  const double cy = std::cos(theta.z()), sy = std::sin(theta.z());
  Mat3 d = Mat3::Zero();
  if (i > j) std::swap(i, j);
  if (i == 1 && j == 1) {
    d.col(0) << -cy * cp, -sy * cp, sp;
  } else if (i == 1 && j == 2) {
    d.col(0) << sy * sp, -cy * sp, 0.0;
  } else if (i == 2 && j == 2) {
    d.col(0) << -cy * cp, -sy * cp, 0.0;
    d.col(1) << sy, -cy, 0.0;
  }
  return d;
}

/// Time derivative of T along (theta, theta_dot).
inline Mat3 euler_rate_map_dot(const Vec3& theta, const Vec3& theta_dot) {
  check_orientation(theta);
  return euler_rate_map_partial(theta, 1) * theta_dot.y() +
         euler_rate_map_partial(theta, 2) * theta_dot.z();
}

/// Body inertia rotated into the world frame: R I Rᵀ.
inline Mat3 world_inertia(const RobotModel& model, const Vec3& theta) {
  const Mat3 r = rotation_matrix(theta);
  return r * model.body_inertia * r.transpose();
}

namespace detail {

inline Vec3 json_vec3(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) throw InvalidModel(key + " must be a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace detail

/// Reads a robot description from JSON. Missing keys keep their defaults.
/// Keys: mass, inertia (row-major 9 values), mu, f_max, hip_offsets (4x3,
/// LF RF LH RH), leg_min_reach, leg_max_reach, gravity.
inline RobotModel robot_model_from_json(const nlohmann::json& j) {
  RobotModel m;
  try {
    if (j.contains("mass")) m.mass = j.at("mass").get<double>();
    if (j.contains("inertia")) {
      const auto& v = j.at("inertia");
      if (!v.is_array() || v.size() != 9) throw InvalidModel("inertia must have 9 values");
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) m.body_inertia(r, c) = v[3 * r + c].get<double>();
      }
    }
    if (j.contains("mu")) m.mu = j.at("mu").get<double>();
    if (j.contains("f_max")) m.f_max = j.at("f_max").get<double>();
    if (j.contains("hip_offsets")) {
      const auto& h = j.at("hip_offsets");
      if (!h.is_array() || h.size() != 4) throw InvalidModel("hip_offsets must be 4x3");
      for (int leg = 0; leg < 4; ++leg) m.hip_offsets[leg] = detail::json_vec3(h[leg], "hip_offsets");
    }
    if (j.contains("leg_min_reach")) m.leg_min_reach = j.at("leg_min_reach").get<double>();
    if (j.contains("leg_max_reach")) m.leg_max_reach = j.at("leg_max_reach").get<double>();
    if (j.contains("gravity")) m.gravity = detail::json_vec3(j.at("gravity"), "gravity");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("robot", 0, e.what());
  }
  m.validate();
  return m;
}

inline RobotModel load_robot_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  return robot_model_from_json(j);
}

}  // namespace dtf
