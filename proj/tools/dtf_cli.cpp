// Command-line front end: plan, footmap, gen-terrain, check.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dtf/foothold.hpp"
#include "dtf/io.hpp"
#include "dtf/scenario.hpp"
#include "dtf/transition_nlp.hpp"
#include "dtf/transition_qp.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string scenario;
  std::string formulation;
  std::string out = ".";
  int knots = 0;
};

dtf::Scenario load_with_overrides(const CommonOptions& o) {
  dtf::Scenario s = dtf::load_scenario(o.scenario);
  if (!o.formulation.empty()) {
    const auto f = dtf::parse_formulation(o.formulation);
    if (!f) throw UsageError("--formulation must be convex, nonlinear or both");
    s.formulation = *f;
  }
  if (o.knots != 0) {
    if (o.knots < 2) throw UsageError("--knots must be at least 2");
    s.knots = o.knots;
  }
  if (s.terrain.kind == dtf::TerrainSpec::Kind::File && !fs::exists(s.terrain.path)) {
    throw dtf::ParseError(o.scenario, 0, "terrain file '" + s.terrain.path.string() + "' not found");
  }
  return s;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

int exit_code_for(dtf::SolveStatus s) {
  switch (s) {
    case dtf::SolveStatus::Feasible: return kExitOk;
    case dtf::SolveStatus::Infeasible:
    case dtf::SolveStatus::NoConvergence: return kExitInfeasible;
    case dtf::SolveStatus::SolverError: return kExitError;
  }
  return kExitError;
}

void print_report(const dtf::PlanReport& r) {
  std::cout << r.formulation << ": " << dtf::status_name(r.status);
  if (!r.message.empty()) std::cout << " (" << r.message << ")";
  std::cout << "\n  cost " << r.cost << "\n  solve time " << r.solve_seconds << " s, " << r.iterations
            << " iterations\n";
  if (r.status == dtf::SolveStatus::Feasible) {
    const auto& m = r.metrics;
    std::cout << "  peak |rate| roll/pitch/yaw " << m.peak_rate.x() << ' ' << m.peak_rate.y() << ' '
              << m.peak_rate.z() << " rad/s\n"
              << "  integral |c_ddot|^2 " << m.acceleration_integral << "\n"
              << "  peak lateral velocity " << m.peak_lateral_velocity << " m/s\n"
              << "  re-check: wrench " << r.recheck.max_wrench_residual << ", friction "
              << r.recheck.max_friction_violation << '\n';
  }
}

int cmd_plan(const CommonOptions& o) {
  const dtf::Scenario s = load_with_overrides(o);
  const dtf::HeightMap terrain = dtf::build_terrain(s);
  const dtf::FootholdPlan plan = dtf::nominal_footholds(s, terrain);
  const dtf::TransitionProblem base = dtf::build_problem(s, plan);
  fs::create_directories(o.out);

  nlohmann::json report = nlohmann::json::array();
  int code = kExitOk;
  auto emit = [&](const std::string& name, const dtf::TransitionResult& r) {
    const dtf::PlanReport rep = dtf::make_report(name, s.robot, r, s.output_rate);
    print_report(rep);
    report.push_back(dtf::report_to_json(rep));
    if (r.status == dtf::SolveStatus::SolverError) {
      std::cerr << name << ": solver error: " << r.message << '\n';
    } else if (!r.feasible()) {
      std::cerr << name << ": " << dtf::status_name(r.status) << ": " << r.message << '\n';
    }
    code = std::max(code, exit_code_for(r.status));
    auto json_out = open_out(fs::path(o.out) / (name + "_result.json"));
    json_out << dtf::result_to_json(r).dump(1) << '\n';
    if (!r.feasible()) return;
    auto traj = open_out(fs::path(o.out) / (name + "_trajectory.csv"));
    dtf::write_trajectory_csv(traj, dtf::sample_trajectory(s.robot, r, s.output_rate));
    auto knots = open_out(fs::path(o.out) / (name + "_knots.csv"));
    dtf::write_knots_csv(knots, r);
  };

  if (s.formulation != dtf::Formulation::Nonlinear) {
    emit("convex", dtf::solve_transition_convex(dtf::make_convex_problem(base)));
  }
  if (s.formulation != dtf::Formulation::Convex) {
    emit("nonlinear", dtf::solve_transition_nonlinear(dtf::make_nonlinear_problem(base, s.slack)));
  }
  auto rep_out = open_out(fs::path(o.out) / "report.json");
  rep_out << report.dump(1) << '\n';
  return code;
}

int cmd_footmap(const CommonOptions& o, const std::string& leg_name, int jobs) {
  const auto leg = dtf::parse_leg(leg_name);
  if (!leg) throw UsageError("--leg must be one of LF, RF, LH, RH");
  if (jobs < 1) throw UsageError("--jobs must be positive");
  if (o.formulation == "both") throw UsageError("a feasibility map uses a single formulation");
  const dtf::Scenario s = load_with_overrides(o);
  const dtf::FootholdStudy study = dtf::make_foothold_study(s, *leg);

  dtf::MapSettings ms;
  ms.formulation = s.formulation == dtf::Formulation::Convex ? dtf::Formulation::Convex : dtf::Formulation::Nonlinear;
  ms.slack = s.slack;
  ms.jobs = jobs;
  const dtf::FeasibilityMap map = dtf::evaluate_foothold_map(study.grid, study.geometry, study.build, ms);

  fs::create_directories(o.out);
  const fs::path path = fs::path(o.out) / ("footmap_" + leg_name + ".csv");
  auto os = open_out(path);
  dtf::write_feasibility_csv(os, map);
  std::cout << "leg " << leg_name << " ("
            << (ms.formulation == dtf::Formulation::Convex ? "convex" : "nonlinear") << ")\n"
            << "  total " << map.cells.size() << "\n  geometric_ok " << map.count_geometric()
            << "\n  dynamic_ok " << map.count_dynamic() << "\n  errors " << map.count_errors() << "\n  wrote "
            << path.string() << '\n';
  return kExitOk;
}

int cmd_gen_terrain(const std::string& scenario, dtf::StairParams p, const std::string& out) {
  if (!scenario.empty()) {
    const dtf::Scenario s = dtf::load_scenario(scenario);
    if (s.terrain.kind != dtf::TerrainSpec::Kind::Stairs) throw UsageError("scenario terrain is not stairs");
    p = s.terrain.stairs;
  }
  const dtf::HeightMap map = dtf::generate_stairs(p);
  if (out.empty()) {
    dtf::write_heightmap(std::cout, map);
  } else {
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    auto os = open_out(out);
    dtf::write_heightmap(os, map);
  }
  return kExitOk;
}

int cmd_check(const CommonOptions& o, const std::string& result_path, double tol) {
  const dtf::Scenario s = load_with_overrides(o);
  std::ifstream in(result_path);
  if (!in) throw dtf::ParseError(result_path, 0, "cannot open file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw dtf::ParseError(result_path, 0, e.what());
  }
  const dtf::TransitionResult r = dtf::result_from_json(j, result_path);
  if (!r.feasible()) {
    std::cerr << "result status is " << dtf::status_name(r.status) << "; nothing to check\n";
    return kExitInfeasible;
  }
  const dtf::RecheckReport rep = dtf::recheck(s.robot, r);
  const bool ok = rep.passes(tol);
  std::cout << (ok ? "OK" : "VIOLATED") << ": " << r.knots.size() << " knots, max wrench residual "
            << rep.max_wrench_residual << ", max friction violation " << rep.max_friction_violation
            << " (tol " << tol << ")\n";
  return ok ? kExitOk : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic transition feasibility for quadruped crawl planning"};
  app.require_subcommand(1);

  CommonOptions plan_o, map_o, check_o;
  auto add_common = [](CLI::App* sub, CommonOptions& o) {
    sub->add_option("--scenario", o.scenario, "Scenario JSON file")->required();
    sub->add_option("--formulation", o.formulation, "convex, nonlinear or both");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--knots", o.knots, "Knot intervals per sub-horizon");
  };

  auto* plan = app.add_subcommand("plan", "Solve the transition over the scenario horizon");
  add_common(plan, plan_o);

  auto* footmap = app.add_subcommand("footmap", "Sweep candidate footholds for one leg");
  add_common(footmap, map_o);
  std::string leg;
  int jobs = 1;
  footmap->add_option("--leg", leg, "LF, RF, LH or RH")->required();
  footmap->add_option("--jobs", jobs, "Parallel solves");

  auto* gen = app.add_subcommand("gen-terrain", "Write a synthetic staircase heightmap");
  std::string gen_scenario, gen_out;
  dtf::StairParams stairs;
  gen->add_option("--scenario", gen_scenario, "Take stair parameters from this scenario");
  gen->add_option("--out", gen_out, "Heightmap file (stdout when omitted)");
  gen->add_option("--step-height", stairs.step_height);
  gen->add_option("--step-depth", stairs.step_depth);
  gen->add_option("--steps", stairs.steps);
  gen->add_option("--start-x", stairs.start_x);
  gen->add_option("--platform-depth", stairs.platform_depth);
  gen->add_option("--resolution", stairs.resolution);
  bool no_descent = false;
  gen->add_flag("--no-descent", no_descent, "Stop at the platform");

  auto* check = app.add_subcommand("check", "Re-verify a result file against the dynamics");
  add_common(check, check_o);
  std::string result_path;
  double tol = 1e-5;
  check->add_option("--result", result_path, "Result JSON written by plan")->required();
  check->add_option("--tol", tol, "Residual tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*plan) return cmd_plan(plan_o);
    if (*footmap) return cmd_footmap(map_o, leg, jobs);
    if (*gen) {
      stairs.descend = !no_descent;
      return cmd_gen_terrain(gen_scenario, stairs, gen_out);
    }
    if (*check) return cmd_check(check_o, result_path, tol);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitError;
  } catch (const dtf::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
