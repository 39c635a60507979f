#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "dtf/model.hpp"

namespace dtf::testing {

/// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Vec3 vec3(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

  /// Euler angles with pitch kept away from gimbal lock.
  Vec3 orientation(double max_pitch = 1.3) {
    return {uniform(-kPi, kPi), uniform(-max_pitch, max_pitch), uniform(-kPi, kPi)};
  }

  Eigen::Matrix3Xd points(int count, double lo, double hi) {
    Eigen::Matrix3Xd p(3, count);
    for (int i = 0; i < count; ++i) p.col(i) = vec3(lo, hi);
    return p;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline constexpr int kPropertyCases = 1000;

}  // namespace dtf::testing
