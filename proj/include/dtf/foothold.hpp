#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <thread>
#include <vector>

#include "dtf/heightmap.hpp"
#include "dtf/scenario.hpp"
#include "dtf/transition_nlp.hpp"
#include "dtf/transition_qp.hpp"

namespace dtf {

/// Square grid of candidate footholds centred on a nominal landing position.
/// Cells are row-major with iy along world y and ix along world x.
struct CandidateGrid {
  Vec3 nominal = Vec3::Zero();
  double half_extent = 0.0;
  double resolution = 0.0;
  int size = 0;
  std::vector<Vec3> cells;

  const Vec3& at(int ix, int iy) const { return cells[static_cast<std::size_t>(iy * size + ix)]; }
  int center() const { return size / 2; }
};

inline CandidateGrid candidate_grid(const Vec3& nominal, const HeightMap& map, double half_extent,
                                    double resolution) {
  if (!(resolution > 0.0) || !(half_extent >= 0.0)) {
    throw std::invalid_argument("candidate grid needs positive resolution and non-negative extent");
  }
  if (!map.contains(nominal.x(), nominal.y())) throw OutOfBounds("nominal foothold outside the heightmap");
  CandidateGrid g;
  g.nominal = nominal;
  g.half_extent = half_extent;
  g.resolution = resolution;
  const int half = static_cast<int>(std::lround(half_extent / resolution));
  g.size = 2 * half + 1;
  g.cells.reserve(static_cast<std::size_t>(g.size * g.size));
  for (int iy = 0; iy < g.size; ++iy) {
    for (int ix = 0; ix < g.size; ++ix) {
      const double x = nominal.x() + (ix - half) * resolution;
      const double y = nominal.y() + (iy - half) * resolution;
      g.cells.emplace_back(x, y, map.height(x, y));
    }
  }
  return g;
}

struct GeometricParams {
  double rough_tol = 0.03;
  double clear_tol = 0.02;
  int collision_samples = 10;
  /// The shin proxy ends this far above the candidate.
  double shin_offset = 0.02;
};

struct GeometricVerdict {
  bool reachable = false;
  bool smooth = false;
  bool collision_free = false;

  bool ok() const { return reachable && smooth && collision_free; }
};

/// Largest deviation of the 3×3 heightmap cells around (x, y) from their
/// least-squares plane. Patches that leave the map count as infinitely rough.
inline double patch_roughness(const HeightMap& map, double x, double y) {
  const auto [r0, c0] = map.cell_of(x, y);
  if (r0 < 1 || c0 < 1 || r0 + 1 >= map.rows() || c0 + 1 >= map.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  std::vector<Vec3> pts;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      const Eigen::Vector2d p = map.cell_center(r0 + dr, c0 + dc);
      pts.emplace_back(p.x(), p.y(), map.heights()(r0 + dr, c0 + dc));
    }
  }
  const Plane plane = fit_plane(pts);
  double dev = 0.0;
  for (const auto& p : pts) dev = std::max(dev, std::abs(p.z() - plane.height(p.x(), p.y())));
  return dev;
}

/// Smallest terrain clearance of the shin proxy, the segment from the hip to
/// the point shin_offset above the candidate, sampled from the hip end.
inline double shin_clearance(const HeightMap& map, const Vec3& hip, const Vec3& candidate,
                             const GeometricParams& params) {
  const Vec3 foot = candidate + Vec3(0.0, 0.0, params.shin_offset);
  double clearance = std::numeric_limits<double>::infinity();
  for (int i = 0; i < params.collision_samples; ++i) {
    const double s = static_cast<double>(i) / params.collision_samples;
    const Vec3 p = hip + s * (foot - hip);
    if (!map.contains(p.x(), p.y())) return -std::numeric_limits<double>::infinity();
    clearance = std::min(clearance, p.z() - map.height(p.x(), p.y()));
  }
  return clearance;
}

inline GeometricVerdict geometric_check(const Vec3& candidate, const Vec3& hip, const RobotModel& model,
                                        const HeightMap& map, const GeometricParams& params = {}) {
  GeometricVerdict v;
  const double reach = (candidate - hip).norm();
  v.reachable = reach >= model.leg_min_reach && reach <= model.leg_max_reach;
  v.smooth = patch_roughness(map, candidate.x(), candidate.y()) <= params.rough_tol;
  v.collision_free = shin_clearance(map, hip, candidate, params) >= params.clear_tol;
  return v;
}

inline std::vector<GeometricVerdict> geometric_filter(const CandidateGrid& grid, const Vec3& hip,
                                                      const RobotModel& model, const HeightMap& map,
                                                      const GeometricParams& params = {}) {
  std::vector<GeometricVerdict> out;
  out.reserve(grid.cells.size());
  for (const auto& c : grid.cells) out.push_back(geometric_check(c, hip, model, map, params));
  return out;
}

struct MapCell {
  int ix = 0, iy = 0;
  Vec3 position = Vec3::Zero();
  bool geometric_ok = false;
  bool dynamic_ok = false;
  /// Present iff dynamic_ok.
  std::optional<double> cost;
  /// Outcome of the transition solve; unset for geometric rejects.
  std::optional<SolveStatus> status;
  /// A solver failure or exception, as opposed to a verdict.
  bool error = false;
  std::string message;
};

struct FeasibilityMap {
  int size = 0;
  std::vector<MapCell> cells;

  const MapCell& at(int ix, int iy) const { return cells[static_cast<std::size_t>(iy * size + ix)]; }
  int count_geometric() const {
    return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](const MapCell& c) { return c.geometric_ok; }));
  }
  int count_dynamic() const {
    return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](const MapCell& c) { return c.dynamic_ok; }));
  }
  int count_errors() const {
    return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](const MapCell& c) { return c.error; }));
  }
};

/// Builds the transition problem with the evaluated leg touching down at the
/// given candidate.
using ProblemBuilder = std::function<TransitionProblem(const Vec3& touchdown)>;

struct MapSettings {
  Formulation formulation = Formulation::Nonlinear;
  SlackBounds slack;
  int jobs = 1;
  /// Evaluation order of the geometric survivors; empty means grid order.
  std::vector<int> order;
  QpSettings qp;
  NonlinearSettings nonlinear;
};

inline TransitionResult solve_for_map(const TransitionProblem& base, const MapSettings& settings) {
  if (settings.formulation == Formulation::Convex) {
    return solve_transition_convex(make_convex_problem(base), settings.qp);
  }
  return solve_transition_nonlinear(make_nonlinear_problem(base, settings.slack), nullptr, settings.nonlinear);
}

/// Solves one transition per geometric survivor. Cells failing geometry are
/// never solved; solver errors mark the cell without stopping the sweep.
inline FeasibilityMap evaluate_foothold_map(const CandidateGrid& grid, const std::vector<GeometricVerdict>& geometry,
                                            const ProblemBuilder& build, const MapSettings& settings = {}) {
  if (geometry.size() != grid.cells.size()) throw DimensionMismatch("one geometric verdict per cell required");
  if (settings.formulation == Formulation::Both) {
    throw std::invalid_argument("a feasibility map uses a single formulation");
  }
  FeasibilityMap map;
  map.size = grid.size;
  map.cells.resize(grid.cells.size());
  std::vector<int> work;
  for (int iy = 0; iy < grid.size; ++iy) {
    for (int ix = 0; ix < grid.size; ++ix) {
      const int i = iy * grid.size + ix;
      MapCell& c = map.cells[static_cast<std::size_t>(i)];
      c.ix = ix;
      c.iy = iy;
      c.position = grid.cells[static_cast<std::size_t>(i)];
      c.geometric_ok = geometry[static_cast<std::size_t>(i)].ok();
    }
  }
  if (settings.order.empty()) {
    for (int i = 0; i < static_cast<int>(grid.cells.size()); ++i) work.push_back(i);
  } else {
    work = settings.order;
  }
  std::erase_if(work, [&](int i) { return !map.cells.at(static_cast<std::size_t>(i)).geometric_ok; });

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t w = next++; w < work.size(); w = next++) {
      MapCell& c = map.cells[static_cast<std::size_t>(work[w])];
      try {
        const TransitionResult r = solve_for_map(build(c.position), settings);
        c.status = r.status;
        c.message = r.message;
        c.dynamic_ok = r.feasible();
        if (c.dynamic_ok) c.cost = r.cost;
        c.error = r.status == SolveStatus::SolverError;
      } catch (const std::exception& e) {
        c.error = true;
        c.message = e.what();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(settings.jobs, static_cast<int>(work.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  return map;
}

/// Delimited export: ix,iy,x,y,z,geometric_ok,dynamic_ok,cost,status.
inline void write_feasibility_csv(std::ostream& os, const FeasibilityMap& map) {
  os << "ix,iy,x,y,z,geometric_ok,dynamic_ok,cost,status\n" << std::setprecision(17);
  for (const auto& c : map.cells) {
    os << c.ix << ',' << c.iy << ',' << c.position.x() << ',' << c.position.y() << ',' << c.position.z() << ','
       << c.geometric_ok << ',' << c.dynamic_ok << ',';
    if (c.cost) os << *c.cost;
    os << ',' << (c.error && !c.status ? "Error" : c.status ? status_name(*c.status) : "GeometricReject") << '\n';
  }
}

/// Everything needed to sweep candidates for one leg of a scenario.
struct FootholdStudy {
  Leg leg = Leg::RF;
  HeightMap terrain;
  FootholdPlan plan;
  int swing = 0;
  Vec3 hip = Vec3::Zero();
  CandidateGrid grid;
  std::vector<GeometricVerdict> geometry;
  ProblemBuilder build;
};

/// Candidates around the first touchdown of `leg` within the horizon. The
/// hip position comes from the desired body pose at that touchdown.
inline FootholdStudy make_foothold_study(const Scenario& s, Leg leg) {
  FootholdStudy st;
  st.leg = leg;
  st.terrain = build_terrain(s);
  st.plan = nominal_footholds(s, st.terrain);
  const auto swing = swing_index_of(s.gait, leg, s.horizon_switches);
  if (!swing) throw std::invalid_argument("leg does not touch down within the horizon");
  st.swing = *swing;

  const TransitionProblem nominal = build_problem(s, st.plan);
  // Sub-horizon k contains swing k and ends just after its touchdown.
  const State& pose = nominal.waypoints.at(static_cast<std::size_t>(st.swing + 1));
  st.hip = pose.c + rotation_matrix(pose.theta) * s.robot.hip_offsets[static_cast<int>(leg)];
  st.grid = candidate_grid(st.plan.touchdowns[static_cast<std::size_t>(st.swing)], st.terrain,
                           s.footmap.half_extent, s.footmap.resolution);
  GeometricParams gp;
  gp.rough_tol = s.footmap.rough_tol;
  gp.clear_tol = s.footmap.clear_tol;
  st.geometry = geometric_filter(st.grid, st.hip, s.robot, st.terrain, gp);
  st.build = [s, plan = st.plan, swing = st.swing](const Vec3& touchdown) {
    FootholdPlan p = plan;
    p.touchdowns[static_cast<std::size_t>(swing)] = touchdown;
    return build_problem(s, p);
  };
  return st;
}

}  // namespace dtf
