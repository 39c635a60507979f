#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "dtf/transition_qp.hpp"
#include "fixtures.hpp"
#include "support.hpp"

namespace dtf {
namespace {

using testing::Gen;
using testing::problem_for;
using testing::static_scenario;
using testing::walking_scenario;

Curve3 curve_from(std::initializer_list<Vec3> pts, double duration) {
  Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(pts.size()));
  Eigen::Index i = 0;
  for (const auto& p : pts) m.col(i++) = p;
  return Curve3(std::move(m), duration);
}

TEST(ReferenceRate, ConstantOrientationGivesZero) {
  const RobotModel model;
  const Vec3 th(0.1, -0.2, 0.7);
  for (const auto& l : reference_angular_momentum_rate(model, curve_from({th, th, th}, 0.8), 10)) {
    EXPECT_LT(l.norm(), 1e-12);
  }
}

TEST(ReferenceRate, YawRampAboutPrincipalAxisGivesZero) {
  const RobotModel model;
  const auto curve = curve_from({Vec3(0, 0, 0), Vec3(0, 0, 0.3), Vec3(0, 0, 0.6)}, 1.0);
  for (const auto& l : reference_angular_momentum_rate(model, curve, 10)) EXPECT_LT(l.norm(), 1e-12);
}

// L = I_W ω along the curve, differentiated by central differences in time.
TEST(ReferenceRate, QuadraticPitchMatchesFiniteDifferenceOfMomentum) {
  const RobotModel model;
  const double duration = 0.9;
  const auto curve = curve_from({Vec3(0.05, 0.0, 0.2), Vec3(-0.1, 0.4, 0.3), Vec3(0.02, -0.2, 0.1)}, duration);
  const Curve3 d1 = curve.derivative();
  auto momentum = [&](double u) {
    const Vec3 th = curve.evaluate(u);
    return Vec3(world_inertia(model, th) * euler_rate_map(th) * d1.evaluate(u));
  };
  const int n = 8;
  const auto ref = reference_angular_momentum_rate(model, curve, n);
  ASSERT_EQ(ref.size(), static_cast<std::size_t>(n + 1));
  const double h = 1e-5;
  for (int k = 1; k < n; ++k) {
    const double u = static_cast<double>(k) / n;
    const Vec3 fd = (momentum(u + h) - momentum(u - h)) / (2.0 * h * duration);
    EXPECT_LT((fd - ref[k]).norm(), 1e-4) << "knot " << k;
  }
}

TEST(ReferenceRate, RejectsLinearCurve) {
  const RobotModel model;
  EXPECT_THROW(reference_angular_momentum_rate(model, curve_from({Vec3::Zero(), Vec3::Ones()}, 1.0), 4),
               std::invalid_argument);
}

TEST(ConvexAssembly, SingleStanceSubHorizonDimensions) {
  const auto p = make_convex_problem(problem_for(static_scenario(2)));
  ASSERT_EQ(p.num_subhorizons(), 1u);
  const ConvexQp qp = assemble_convex_qp(p);
  EXPECT_EQ(qp.layout.num_variables, 48);
  EXPECT_EQ(qp.qp.A.rows(), 18);
  EXPECT_EQ(qp.qp.A.cols(), 48);
  EXPECT_EQ(qp.qp.C.rows(), 3 * 4 * kFrictionRowsPerContact);
}

TEST(ConvexAssembly, VariableCountFollowsLayout) {
  const auto p = make_convex_problem(problem_for(walking_scenario(0.1, false, 4)));
  const ConvexQp qp = assemble_convex_qp(p);
  Eigen::Index expected = 3 * static_cast<Eigen::Index>(p.num_subhorizons());
  for (const auto& k : qp.layout.knots) expected += 3 * k.knot.contacts.count() + 3;
  EXPECT_EQ(qp.layout.num_variables, expected);
  EXPECT_EQ(qp.qp.A.rows(), 6 * static_cast<Eigen::Index>(qp.layout.knots.size()));
}

TEST(ConvexAssembly, CostMatrixIsPositiveSemidefinite) {
  for (bool stairs : {false, true}) {
    const ConvexQp qp = assemble_convex_qp(make_convex_problem(problem_for(walking_scenario(0.15, stairs))));
    const Eigen::MatrixXd p = Eigen::MatrixXd(qp.qp.P);
    EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p, Eigen::EigenvaluesOnly);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
  }
}

// Pick ρ and L̇ at random, evaluate the wrench with the dynamics module and
// distribute it over the stance feet by least squares.
TEST(ConvexAssembly, HandBuiltFeasiblePointSatisfiesEqualities) {
  Gen gen(11);
  for (bool stairs : {false, true}) {
    const auto p = make_convex_problem(problem_for(walking_scenario(0.1, stairs)));
    const ConvexQp data = assemble_convex_qp(p);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(data.layout.num_variables);
    std::vector<Curve3> curves;
    for (std::size_t i = 0; i < p.num_subhorizons(); ++i) {
      const Vec3 y = 0.5 * (p.waypoints[i].c + p.waypoints[i + 1].c) + gen.vec3(-0.05, 0.05);
      x.segment<3>(ConvexLayout::free_point_offset(static_cast<int>(i))) = y;
      curves.push_back(data.templates[i].curve(y));
    }
    for (const auto& e : data.layout.knots) {
      const Vec3 l_dot = gen.vec3(-5.0, 5.0);
      const Curve3& c = curves[e.sub_horizon];
      const Wrench w = wrench_from_motion(p.model, c.evaluate(e.knot.u),
                                          c.derivative().derivative().evaluate(e.knot.u), l_dot);
      const Eigen::MatrixXd a = grf_matrix(e.knot.contacts);
      const Eigen::VectorXd f = a.completeOrthogonalDecomposition().solve(w.stacked());
      x.segment(e.force_offset, f.size()) = f;
      x.segment<3>(e.l_dot_offset) = l_dot;
    }
    EXPECT_LT((data.qp.A * x - data.qp.b).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ConvexSolve, StaticStanceHasZeroCost) {
  const auto r = solve_transition_convex(make_convex_problem(problem_for(static_scenario())));
  ASSERT_EQ(r.status, SolveStatus::Feasible) << r.message;
  EXPECT_LT(r.cost, 1e-8);
  EXPECT_TRUE(recheck(RobotModel{}, r).passes(1e-6));
}

TEST(ConvexSolve, TenMetreLateralJumpIsInfeasible) {
  auto base = problem_for(walking_scenario(0.1, false, 2));
  base.waypoints.back().c.y() += 10.0;
  const auto r = solve_transition_convex(make_convex_problem(base));
  EXPECT_EQ(r.status, SolveStatus::Infeasible) << r.message;
}

TEST(ConvexSolve, StairsAreFeasibleAndPassRecheck) {
  const auto p = make_convex_problem(problem_for(walking_scenario(0.1, true)));
  const auto r = solve_transition_convex(p);
  ASSERT_EQ(r.status, SolveStatus::Feasible) << r.message;
  EXPECT_GE(r.cost, 0.0);
  const auto rep = recheck(p.model, r);
  EXPECT_LE(rep.max_wrench_residual, 1e-6);
  EXPECT_LE(rep.max_friction_violation, 1e-6);
}

TEST(ConvexSolve, CurvesInterpolateWaypoints) {
  const auto p = make_convex_problem(problem_for(walking_scenario(0.1, true)));
  const auto r = solve_transition_convex(p);
  ASSERT_TRUE(r.feasible());
  for (std::size_t i = 0; i < r.com_curves.size(); ++i) {
    const Curve3& c = r.com_curves[i];
    const Curve3 c1 = c.derivative(), c2 = c1.derivative();
    const State& a = p.waypoints[i];
    const State& b = p.waypoints[i + 1];
    EXPECT_LT((c.evaluate(0.0) - a.c).norm(), 1e-8);
    EXPECT_LT((c1.evaluate(0.0) - a.c_dot).norm(), 1e-8);
    EXPECT_LT((c2.evaluate(0.0) - a.c_ddot).norm(), 1e-8);
    EXPECT_LT((c.evaluate(1.0) - b.c).norm(), 1e-8);
    EXPECT_LT((c1.evaluate(1.0) - b.c_dot).norm(), 1e-8);
    EXPECT_LT((c2.evaluate(1.0) - b.c_ddot).norm(), 1e-8);
  }
}

TEST(ConvexSolve, Deterministic) {
  const auto p = make_convex_problem(problem_for(walking_scenario(0.12, true)));
  const auto a = solve_transition_convex(p);
  const auto b = solve_transition_convex(p);
  ASSERT_EQ(a.status, b.status);
  EXPECT_NEAR(a.cost, b.cost, 1e-9);
  for (std::size_t k = 0; k < a.knots.size(); ++k) EXPECT_EQ(a.knots[k].forces, b.knots[k].forces);
}

// Pinning L̇ to zero only removes solutions.
TEST(ConvexProperty, ZeroMomentumFeasibleImpliesFullFeasible) {
  Gen gen(5);
  int reduced_feasible = 0;
  for (int trial = 0; trial < 12; ++trial) {
    Scenario s = walking_scenario(gen.uniform(-0.1, 0.25), gen.integer(0, 1) == 1, 2 * gen.integer(1, 4));
    s.command.vy = gen.uniform(-0.05, 0.05);
    s.knots = gen.integer(4, 10);
    auto full = make_convex_problem(problem_for(s));
    auto reduced = full;
    reduced.zero_angular_momentum = true;
    for (auto& c : reduced.desired_angular) c = Curve3::constant(c.evaluate(0.0), c.duration()).elevate_degree(2);
    const auto rr = solve_transition_convex(reduced);
    if (!rr.feasible()) continue;
    ++reduced_feasible;
    for (const auto& k : rr.knots) EXPECT_LT(k.l_dot.norm(), 1e-8);
    EXPECT_EQ(solve_transition_convex(full).status, SolveStatus::Feasible);
  }
  EXPECT_GT(reduced_feasible, 0);
}

TEST(ConvexSolve, RejectsMismatchedDesiredCurves) {
  auto p = make_convex_problem(problem_for(walking_scenario()));
  p.desired_angular.pop_back();
  EXPECT_THROW(assemble_convex_qp(p), DimensionMismatch);
}

}  // namespace
}  // namespace dtf
