#pragma once

#include <string>

#include "dtf/scenario.hpp"
#include "dtf/transition.hpp"

namespace dtf::testing {

inline std::string source_path(const std::string& rel) { return std::string(DTF_SOURCE_DIR) + "/" + rel; }

inline Scenario static_scenario(int knots = kDefaultKnots) {
  Scenario s;
  s.command = {};
  s.horizon_switches = 0;
  s.knots = knots;
  return s;
}

inline Scenario walking_scenario(double vx = 0.1, bool stairs = false, int switches = 8) {
  Scenario s;
  s.command.vx = vx;
  s.horizon_switches = switches;
  if (stairs) s.terrain.kind = TerrainSpec::Kind::Stairs;
  return s;
}

inline TransitionProblem problem_for(const Scenario& s) {
  const HeightMap map = build_terrain(s);
  return build_problem(s, nominal_footholds(s, map));
}

}  // namespace dtf::testing
