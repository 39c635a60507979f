#include <gtest/gtest.h>

#include <sstream>

#include "dtf/bezier.hpp"
#include "dtf/dynamics.hpp"
#include "support.hpp"

namespace dtf {
namespace {

using testing::Gen;
using testing::kPropertyCases;

// Independent evaluation by direct Bernstein summation.
Vec3 bernstein_sum(const Curve3& c, double u) {
  Vec3 p = Vec3::Zero();
  for (int i = 0; i <= c.order(); ++i) p += bernstein(c.order(), i, u) * c.control_point(i);
  return p;
}

Curve3 random_curve(Gen& gen, int order, double duration) {
  return Curve3(gen.points(order + 1, -2.0, 2.0), duration);
}

LinearState random_linear_state(Gen& gen) {
  return {gen.vec3(-1.0, 1.0), gen.vec3(-1.0, 1.0), gen.vec3(-3.0, 3.0)};
}

TEST(Bezier, RejectsDegenerateConstruction) {
  EXPECT_THROW(Curve3(Eigen::Matrix3Xd::Zero(3, 1), 1.0), std::invalid_argument);
  EXPECT_THROW(Curve3(Eigen::Matrix3Xd::Zero(3, 2), 0.0), std::invalid_argument);
}

TEST(Bezier, EndpointInterpolation) {
  Gen gen(21);
  const Curve3 c = random_curve(gen, 5, 0.7);
  EXPECT_EQ(c.evaluate(0.0), c.control_point(0));
  EXPECT_EQ(c.evaluate(1.0), c.control_point(5));
}

TEST(Bezier, LinearCurveMidpoint) {
  Eigen::Matrix3Xd p(3, 2);
  p << 0, 2, 0, 4, 0, 6;
  EXPECT_LT((Curve3(p, 1.0).evaluate(0.5) - Vec3(1, 2, 3)).norm(), 1e-15);
}

TEST(Bezier, CubicMatchesBernsteinSum) {
  Eigen::Matrix3Xd p(3, 4);
  p << 0, 1, 1, 0, 0, 0, 1, 1, 0, 0, 0, 0;
  const Curve3 c(p, 1.0);
  EXPECT_LT((c.evaluate(0.5) - bernstein_sum(c, 0.5)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((c.evaluate(0.5) - Vec3(0.75, 0.5, 0.0)).norm(), 1e-15);
}

TEST(Bezier, EvaluateOutsideRangeThrows) {
  const Curve3 c = Curve3::constant(Vec3::Ones(), 1.0);
  EXPECT_THROW(c.evaluate(-1e-9), OutOfRange);
  EXPECT_THROW(c.evaluate(1.0 + 1e-9), OutOfRange);
  EXPECT_THROW(c.evaluate(std::nan("")), OutOfRange);
}

TEST(Bezier, DerivativeOfConstantIsZero) {
  const Curve3 d = Curve3::constant(Vec3(1, 2, 3), 2.0).derivative();
  for (double u : {0.0, 0.3, 1.0}) EXPECT_EQ(d.evaluate(u), Vec3::Zero());
}

TEST(Bezier, DerivativeMatchesFiniteDifference) {
  Gen gen(22);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const double duration = gen.uniform(0.3, 2.0);
    const Curve3 c = random_curve(gen, 4, duration);
    const Curve3 d = c.derivative();
    ASSERT_EQ(d.order(), 3);
    for (int k = 1; k <= 20; ++k) {
      const double u = k / 21.0;
      const Vec3 fd = (c.evaluate(u + h) - c.evaluate(u - h)) / (2 * h * duration);
      ASSERT_LT((d.evaluate(u) - fd).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(Bezier, ElevateLinearToQuadratic) {
  Curve1::Points p(1, 2);
  p << 0.0, 1.0;
  const Curve1 e = Curve1(p, 1.0).elevate_degree(2);
  ASSERT_EQ(e.order(), 2);
  EXPECT_DOUBLE_EQ(e.control_points()(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(e.control_points()(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(e.control_points()(0, 2), 1.0);
}

TEST(Bezier, ElevateByZeroIsIdentity) {
  Gen gen(23);
  const Curve3 c = random_curve(gen, 3, 1.0);
  EXPECT_EQ(c.elevate_degree(3).control_points(), c.control_points());
  EXPECT_THROW(c.elevate_degree(2), std::invalid_argument);
}

TEST(Bezier, ElevationPreservesPath) {
  Gen gen(24);
  for (int trial = 0; trial < 50; ++trial) {
    const Curve3 c = random_curve(gen, gen.integer(1, 6), 1.0);
    const Curve3 e = c.elevate_degree(c.order() + gen.integer(1, 5));
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const double u = k / 99.0;
      worst = std::max(worst, (c.evaluate(u) - e.evaluate(u)).cwiseAbs().maxCoeff());
    }
    ASSERT_LT(worst, 1e-12);
  }
}

TEST(Bezier, CrossProductOfCurveWithItselfVanishes) {
  Gen gen(25);
  const Curve3 a = random_curve(gen, 4, 1.3);
  const Curve3 x = cross_product_curve(a, a);
  for (int k = 0; k <= 20; ++k) EXPECT_LT(x.evaluate(k / 20.0).norm(), 1e-12);
}

TEST(Bezier, CrossProductOfConstants) {
  const Curve3 x = cross_product_curve(Curve3::constant(Vec3::UnitX(), 1.0), Curve3::constant(Vec3::UnitY(), 1.0));
  for (double u : {0.0, 0.5, 1.0}) EXPECT_LT((x.evaluate(u) - Vec3::UnitZ()).norm(), 1e-15);
}

TEST(Bezier, CrossProductRequiresEqualDurations) {
  EXPECT_THROW(cross_product_curve(Curve3::constant(Vec3::UnitX(), 1.0), Curve3::constant(Vec3::UnitY(), 2.0)),
               DimensionMismatch);
}

TEST(Bezier, CrossProductMatchesPointwise) {
  Gen gen(26);
  const Curve3 a = random_curve(gen, 3, 1.0);
  const Curve3 b = random_curve(gen, 2, 1.0);
  const Curve3 x = cross_product_curve(a, b);
  ASSERT_EQ(x.order(), 5);
  for (int k = 0; k < 50; ++k) {
    const double u = gen.uniform(0.0, 1.0);
    EXPECT_LT((x.evaluate(u) - a.evaluate(u).cross(b.evaluate(u))).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Bezier, BasisWeightsMatchDerivativeCurves) {
  Gen gen(27);
  const Curve3 c = random_curve(gen, 8, 0.9);
  const Curve3 d1 = c.derivative(), d2 = d1.derivative(), d3 = d2.derivative();
  for (double u : {0.0, 0.17, 0.5, 0.93, 1.0}) {
    EXPECT_LT((c.control_points() * basis_weights(8, u, 0, 0.9) - c.evaluate(u)).norm(), 1e-12);
    EXPECT_LT((c.control_points() * basis_weights(8, u, 1, 0.9) - d1.evaluate(u)).norm(), 1e-10);
    EXPECT_LT((c.control_points() * basis_weights(8, u, 2, 0.9) - d2.evaluate(u)).norm(), 1e-9);
    EXPECT_LT((c.control_points() * basis_weights(8, u, 3, 0.9) - d3.evaluate(u)).norm(), 1e-8);
  }
}

TEST(TransitionCurve, StaticBoundaryWithFreePointAtRestIsConstant) {
  const Vec3 p(0.3, -0.2, 0.6);
  const LinearState s{p, Vec3::Zero(), Vec3::Zero()};
  const Curve3 c = build_transition_curve(s, s, p, 1.0);
  ASSERT_EQ(c.order(), 8);
  for (int i = 0; i <= 8; ++i) EXPECT_EQ(c.control_point(i), p);
}

TEST(TransitionCurve, DerivativeAtStartEqualsBoundaryVelocity) {
  const LinearState x0{Vec3::Zero(), Vec3(0.1, 0.2, 0.0), Vec3::Zero()};
  const LinearState xf{Vec3(0.2, 0, 0), Vec3(0.1, 0, 0), Vec3::Zero()};
  const Curve3 c = build_transition_curve(x0, xf, Vec3(0.1, 0.1, 0), 1.2);
  EXPECT_LT((c.derivative().evaluate(0.0) - x0.c_dot).norm(), 1e-14);
}

TEST(TransitionCurve, BoundaryRoundTripProperty) {
  Gen gen(28);
  for (int i = 0; i < kPropertyCases; ++i) {
    const LinearState x0 = random_linear_state(gen), xf = random_linear_state(gen);
    const double duration = gen.uniform(0.2, 3.0);
    const Curve3 c = build_transition_curve(x0, xf, gen.vec3(-1.0, 1.0), duration);
    const Curve3 d1 = c.derivative(), d2 = d1.derivative(), d3 = d2.derivative();
    ASSERT_EQ(d3.order(), 5);
    const double tol = 1e-10;
    ASSERT_LT((c.evaluate(0.0) - x0.c).norm(), tol);
    ASSERT_LT((c.evaluate(1.0) - xf.c).norm(), tol);
    ASSERT_LT((d1.evaluate(0.0) - x0.c_dot).norm(), tol);
    ASSERT_LT((d1.evaluate(1.0) - xf.c_dot).norm(), tol);
    ASSERT_LT((d2.evaluate(0.0) - x0.c_ddot).norm(), tol);
    ASSERT_LT((d2.evaluate(1.0) - xf.c_ddot).norm(), tol);
  }
}

TEST(TransitionCurve, AffineInFreePointProperty) {
  Gen gen(29);
  for (int i = 0; i < kPropertyCases; ++i) {
    const LinearState x0 = random_linear_state(gen), xf = random_linear_state(gen);
    const double duration = gen.uniform(0.2, 3.0);
    const Vec3 y1 = gen.vec3(-1.0, 1.0), y2 = gen.vec3(-1.0, 1.0);
    const Curve3 c1 = build_transition_curve(x0, xf, y1, duration);
    const Curve3 c2 = build_transition_curve(x0, xf, y2, duration);
    const double u = gen.uniform(0.0, 1.0);
    const double b = bernstein(8, 3, u) + bernstein(8, 4, u) + bernstein(8, 5, u);
    ASSERT_LT((c1.evaluate(u) - c2.evaluate(u) - b * (y1 - y2)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(TransitionCurve, WrenchMidpointAffinityProperty) {
  Gen gen(30);
  RobotModel model;
  for (int i = 0; i < kPropertyCases; ++i) {
    const LinearState x0 = random_linear_state(gen), xf = random_linear_state(gen);
    const double duration = gen.uniform(0.3, 2.0);
    const Vec3 y1 = gen.vec3(-1.0, 1.0), y2 = gen.vec3(-1.0, 1.0);
    const double u = gen.uniform(0.0, 1.0);
    auto wrench = [&](const Vec3& y) {
      const Curve3 c = build_transition_curve(x0, xf, y, duration);
      return wrench_from_motion(model, c.evaluate(u), c.derivative().derivative().evaluate(u), Vec3::Zero())
          .stacked();
    };
    const Vector6 mid = wrench(0.5 * (y1 + y2));
    const Vector6 avg = 0.5 * (wrench(y1) + wrench(y2));
    // Relative to the wrench magnitude (hundreds of newtons).
    ASSERT_LT((mid - avg).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + avg.cwiseAbs().maxCoeff())) << "case " << i;
  }
}

TEST(TransitionCurve, AffineTemplateMatchesCurve) {
  Gen gen(31);
  const LinearState x0 = random_linear_state(gen), xf = random_linear_state(gen);
  const auto tpl = transition_template(x0, xf, 0.8);
  const Vec3 y = gen.vec3(-1.0, 1.0);
  const Curve3 c = tpl.curve(y);
  const AffineCurve a = tpl.affine();
  for (double u : {0.0, 0.4, 1.0}) {
    for (int r = 0; r < 3; ++r) {
      const auto s = a.sample(u, r);
      const Curve3 d = r == 0 ? c : (r == 1 ? c.derivative() : c.derivative().derivative());
      EXPECT_LT((s.value + s.weights[0] * y - d.evaluate(u)).norm(), 1e-10);
    }
  }
}

TEST(TransitionCurve, OffsetsShiftBoundaryPositionAndAcceleration) {
  Gen gen(32);
  const LinearState x0 = random_linear_state(gen), xf = random_linear_state(gen);
  const double duration = 1.1;
  const AffineCurve a = transition_curve_with_offsets(x0, xf, duration);
  const std::vector<Vec3> params = {gen.vec3(-1, 1), gen.vec3(-0.1, 0.1), gen.vec3(-1, 1), gen.vec3(-0.1, 0.1),
                                    gen.vec3(-1, 1)};
  const Curve3 c = a.instantiate(params);
  const Curve3 d1 = c.derivative(), d2 = d1.derivative();
  EXPECT_LT((c.evaluate(0.0) - (x0.c + params[1])).norm(), 1e-12);
  EXPECT_LT((d1.evaluate(0.0) - x0.c_dot).norm(), 1e-12);
  EXPECT_LT((d2.evaluate(0.0) - (x0.c_ddot + params[2])).norm(), 1e-10);
  EXPECT_LT((c.evaluate(1.0) - (xf.c + params[3])).norm(), 1e-12);
  EXPECT_LT((d1.evaluate(1.0) - xf.c_dot).norm(), 1e-12);
  EXPECT_LT((d2.evaluate(1.0) - (xf.c_ddot + params[4])).norm(), 1e-10);
}

TEST(Bezier, ConvexHullProperty) {
  Gen gen(33);
  for (int i = 0; i < kPropertyCases; ++i) {
    const Curve3 c = random_curve(gen, gen.integer(1, 8), 1.0);
    const Vec3 p = c.evaluate(gen.uniform(0.0, 1.0));
    const Vec3 lo = c.control_points().rowwise().minCoeff(), hi = c.control_points().rowwise().maxCoeff();
    ASSERT_TRUE(((p - lo).array() >= -1e-12).all() && ((hi - p).array() >= -1e-12).all());
  }
}

// Planar hull membership: the xy projection of a point on a quadratic lies in
// the triangle of its control points.
TEST(Bezier, PlanarHullMembership) {
  Gen gen(34);
  for (int i = 0; i < 200; ++i) {
    const Curve3 c = random_curve(gen, 2, 1.0);
    const Eigen::Vector2d p = c.evaluate(gen.uniform(0.0, 1.0)).head<2>();
    Eigen::Vector2d v[3];
    for (int k = 0; k < 3; ++k) v[k] = c.control_point(k).head<2>();
    auto side = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& q) {
      return (b.x() - a.x()) * (q.y() - a.y()) - (b.y() - a.y()) * (q.x() - a.x());
    };
    const double s0 = side(v[0], v[1], p), s1 = side(v[1], v[2], p), s2 = side(v[2], v[0], p);
    const bool inside = (s0 >= -1e-12 && s1 >= -1e-12 && s2 >= -1e-12) || (s0 <= 1e-12 && s1 <= 1e-12 && s2 <= 1e-12);
    ASSERT_TRUE(inside);
  }
}

TEST(CurveRecord, RoundTripsExactly) {
  Gen gen(35);
  const Curve3 c = random_curve(gen, 8, 0.95);
  std::ostringstream os;
  write_curve_record(os, c);
  const Curve3 back = read_curve_record<3>(os.str());
  EXPECT_EQ(back.order(), 8);
  EXPECT_EQ(back.duration(), c.duration());
  EXPECT_EQ(back.control_points(), c.control_points());
}

TEST(CurveRecord, MalformedRecordThrows) {
  EXPECT_THROW(read_curve_record<3>("order 2 duration 1 points 1 2 3"), ParseError);
  EXPECT_THROW(read_curve_record<3>("degree 2"), ParseError);
}

}  // namespace
}  // namespace dtf
