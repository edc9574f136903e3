#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "teleop/controllers.hpp"
#include "teleop/dynamics.hpp"
#include "teleop/impedance.hpp"

using namespace teleop;
using namespace teleop::impedance;
using namespace teleop::controllers;

// --- impedance --------------------------------------------------------------

TEST(GraspMap, Boundaries) {
  const GraspMap m;
  EXPECT_EQ(grasp_to_stiffness(0.0, m), 80.0);
  EXPECT_EQ(grasp_to_stiffness(100.0, m), 1320.0);
  EXPECT_EQ(grasp_to_stiffness(20.0, m), 1320.0);
  EXPECT_THROW(grasp_to_stiffness(-1.0, m), ConfigError);
  EXPECT_THROW(grasp_to_stiffness(NAN, m), ConfigError);
}

TEST(GraspMap, LinearArithmetic) {
  GraspMap m;
  m.slope = 20.0;
  EXPECT_DOUBLE_EQ(grasp_to_stiffness(10.0, m), 280.0);
}

TEST(Damping, CouplingRule) {
  EXPECT_DOUBLE_EQ(damping_from_stiffness(500.0), 50.0);
  EXPECT_DOUBLE_EQ(damping_from_stiffness(80.0), 8.0);
  EXPECT_DOUBLE_EQ(damping_from_stiffness(1320.0), 132.0);
  EXPECT_THROW(damping_from_stiffness(0.0), ConfigError);
}

TEST(Alpha, Arithmetic) {
  EXPECT_DOUBLE_EQ(alpha_bound(Vec3(50, 50, 50), 12.8), 3.90625);
  EXPECT_DOUBLE_EQ(alpha_bound(Vec3(8, 50, 132), 12.8), 0.625);
  EXPECT_DOUBLE_EQ(alpha_bound(Vec3::Constant(7.0), 2.0), 3.5);
  EXPECT_THROW(alpha_bound(Vec3(0, 1, 1), 12.8), ConfigError);
}

TEST(RateLimiter, FirstTickIncrease) {
  // 2 alpha L1 / (1 + 0.1 alpha) at L1 = 80, alpha = 0.625: 100 / 1.0625 N/m/s.
  EXPECT_NEAR(max_increase(80.0, 0.625, 0.1, 1.0, 1e-3), 0.1 / 1.0625, 1e-15);
  EXPECT_NEAR(max_increase(80.0, 0.625, 0.1, 1.0, 1e-3), 0.0941, 1e-4);

  RateLimiterConfig cfg;
  RateLimiterState st = RateLimiterState::from(Vec3::Constant(80.0), cfg);
  const ImpedanceGains g = shape_stiffness(Vec3::Constant(1320.0), st, cfg, 1e-3);
  EXPECT_NEAR(g.L1[0] - 80.0, 0.99 * 0.1 / 1.0625, 1e-12);
  EXPECT_DOUBLE_EQ(g.L2[0], 0.1 * g.L1[0]);
}

TEST(RateLimiter, DecreaseIsImmediate) {
  RateLimiterConfig cfg;
  RateLimiterState st = RateLimiterState::from(Vec3::Constant(1320.0), cfg);
  const ImpedanceGains g = shape_stiffness(Vec3(80.0, 500.0, 1320.0), st, cfg, 1e-3);
  EXPECT_EQ(g.L1, Vec3(80.0, 500.0, 1320.0));
}

TEST(RateLimiter, FixedPoint) {
  RateLimiterConfig cfg;
  RateLimiterState st = RateLimiterState::from(Vec3::Constant(500.0), cfg);
  for (int k = 0; k < 10; ++k) {
    EXPECT_EQ(shape_stiffness(Vec3::Constant(500.0), st, cfg, 1e-3).L1, Vec3::Constant(500.0));
  }
}

TEST(RateLimiter, StepHoldsInequalityAndConverges) {
  RateLimiterConfig cfg;
  const double dt = 1e-3;
  RateLimiterState st = RateLimiterState::from(Vec3::Constant(80.0), cfg);
  long ticks = 0;
  while (st.L1_current[0] < 1320.0) {
    const ImpedanceGains prev = st.gains();
    const ImpedanceGains next = shape_stiffness(Vec3::Constant(1320.0), st, cfg, dt);
    ASSERT_TRUE(satisfies_rate_constraint(prev.L1, prev.L2, next.L1, next.L2, cfg.mass, dt))
        << "tick " << ticks;
    ASSERT_LT(++ticks, 100000);
  }
  // Oracle: the saturated limiter follows dL/dt = m 2 a L / (1 + r a) with
  // a = r L / M. Integrated on a fine grid.
  double L = 80.0, t = 0.0;
  const double h = 1e-5, r = 0.1, m = 0.99, M = 12.8;
  while (L < 1320.0) {
    const double a = r * L / M;
    L += h * m * 2.0 * a * L / (1.0 + r * a);
    t += h;
  }
  EXPECT_NEAR(ticks * dt, t, 0.01 * t);
}

TEST(RateLimiter, SinusoidHoldsInequality) {
  RateLimiterConfig cfg;
  const double dt = 1e-3;
  RateLimiterState st = RateLimiterState::from(Vec3::Constant(700.0), cfg);
  for (long k = 1; k <= 60000; ++k) {
    const double t = k * dt;
    const Vec3 want = Vec3::Constant(700.0 + 620.0 * std::sin(0.25 * std::numbers::pi * t));
    const ImpedanceGains prev = st.gains();
    const ImpedanceGains next = shape_stiffness(want, st, cfg, dt);
    ASSERT_TRUE(satisfies_rate_constraint(prev.L1, prev.L2, next.L1, next.L2, cfg.mass, dt)) << t;
  }
}

TEST(RateLimiter, DetectsViolation) {
  EXPECT_FALSE(satisfies_rate_constraint(Vec3::Constant(80), Vec3::Constant(8),
                                         Vec3::Constant(90), Vec3::Constant(9), 12.8, 1e-3));
  EXPECT_TRUE(satisfies_rate_constraint(Vec3::Constant(80), Vec3::Constant(8),
                                        Vec3::Constant(10), Vec3::Constant(1), 12.8, 1e-3));
}

TEST(RateLimiter, DisabledPassesThrough) {
  RateLimiterConfig cfg;
  cfg.enabled = false;
  RateLimiterState st = RateLimiterState::from(Vec3::Constant(80.0), cfg);
  EXPECT_EQ(shape_stiffness(Vec3::Constant(1320.0), st, cfg, 1e-3).L1, Vec3::Constant(1320.0));
}

// --- controllers -------------------------------------------------------------

namespace {

dynamics::PointMassParams mass(double m, double c) {
  dynamics::PointMassParams p;
  p.mass = m;
  p.viscous_damping = Vec3::Constant(c);
  return p;
}

transport::LeaderPacket packet(const Vec3& x, const Vec3& v, double L1) {
  transport::LeaderPacket p;
  p.position = x;
  p.velocity = v;
  p.L1 = Vec3::Constant(L1);
  p.L2 = Vec3::Constant(0.1 * L1);
  return p;
}

// Peak steady tracking error of a point mass pulled toward a 0.6 Hz sine.
double sine_tracking_error(double L1, double C) {
  const double dt = 1e-3, w = 2.0 * std::numbers::pi * 0.6;
  const auto p = mass(12.8, C);
  dynamics::RobotState s;
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double t = k * dt;
    const Vec3 xl(0.1 * std::sin(w * t), 0, 0), vl(0.1 * w * std::cos(w * t), 0, 0);
    const Vec3 u = high_gain_control(s.position, s.velocity, xl, vl, Vec3::Zero(),
                                     ImpedanceGains::coupled(Vec3::Constant(L1)));
    if (t > 5.0) worst = std::max(worst, (s.position - xl).norm());
    s = dynamics::step_point_mass(s, p, u, Vec3::Zero(), dt);
  }
  return worst;
}

}  // namespace

TEST(Operator, OnTargetIsZero) {
  OperatorModel op;
  op.trajectory = LiveTarget{Vec3(0.1, 0.2, 0.3)};
  dynamics::RobotState s;
  s.position = Vec3(0.1, 0.2, 0.3);
  EXPECT_TRUE(operator_control(op, s, 1.0).isZero(0.0));
}

TEST(Operator, SpringLaw) {
  OperatorModel op;
  op.L_l1 = 500.0;
  op.trajectory = LiveTarget{Vec3::Zero()};
  dynamics::RobotState s;
  s.position = Vec3(0.02, 0, 0);
  EXPECT_DOUBLE_EQ(operator_control(op, s, 0.0)[0], -10.0);
}

TEST(Operator, LagShrinksWithStiffness) {
  auto lag = [](double L) {
    OperatorModel op;
    op.L_l1 = L;
    op.L_l2 = 0.1 * L;
    const auto p = mass(12.8, 5.0);
    dynamics::RobotState s;
    double worst = 0.0;
    for (int k = 0; k < 8000; ++k) {
      const double t = k * 1e-3;
      const Vec3 u = operator_control(op, s, t);
      if (t > 4.0) worst = std::max(worst, (s.position - sample(op.trajectory, t).position).norm());
      s = dynamics::step_point_mass(s, p, u, Vec3::Zero(), 1e-3);
    }
    return worst;
  };
  const double a = lag(200.0), b = lag(800.0), c = lag(3200.0);
  EXPECT_GT(a, b);
  EXPECT_GT(b, c);
  EXPECT_LT(a, 0.2);  // bounded
}

TEST(HighGain, ZeroOnLeader) {
  EXPECT_TRUE(high_gain_control(Vec3(1, 2, 3), Vec3(1, 1, 1), Vec3(1, 2, 3), Vec3(1, 1, 1),
                                Vec3::Zero(), {})
                  .isZero(0.0));
}

TEST(HighGain, ConvergesToConstantLeaderWithoutDamping) {
  const auto p = mass(12.8, 0.0);
  dynamics::RobotState s;
  const Vec3 xl(0.1, -0.05, 0.2);
  for (int k = 0; k < 20000; ++k) {
    const Vec3 u = high_gain_control(s.position, s.velocity, xl, Vec3::Zero(), Vec3::Zero(),
                                     ImpedanceGains::coupled(Vec3::Constant(500.0)));
    s = dynamics::step_point_mass(s, p, u, Vec3::Zero(), 1e-3);
  }
  EXPECT_LT((s.position - xl).norm(), 1e-6);
}

TEST(HighGain, SineErrorFallsWithStiffness) {
  const double lo = sine_tracking_error(100.0, 5.0);
  const double mid = sine_tracking_error(500.0, 5.0);
  const double hi = sine_tracking_error(2500.0, 5.0);
  EXPECT_GT(lo, mid);
  EXPECT_GT(mid, hi);
  EXPECT_GT(hi, 0.0);
}

TEST(Tic, ZeroAtDelayedState) {
  dynamics::RobotState f;
  f.position = Vec3(0.1, 0, 0);
  f.velocity = Vec3(0.2, 0, 0);
  const auto cmd = tic_control(f, packet(f.position, f.velocity, 500.0));
  EXPECT_TRUE(cmd.u.isZero(0.0));
  EXPECT_EQ(cmd.source, Source::TIC);
}

TEST(Iac, CollapsesToTicOnRawState) {
  dynamics::RobotState f;
  f.position = Vec3(0.3, -0.1, 0.05);
  f.velocity = Vec3(-0.2, 0.4, 0.0);
  const auto pkt = packet(Vec3(0.1, 0.2, 0.3), Vec3(0.0, 0.1, -0.1), 300.0);
  EXPECT_EQ(iac_control(f, pkt).u, tic_control(f, pkt).u);
  EXPECT_EQ(iac_control(f, pkt).source, Source::IAC);
}

TEST(Hold, PullsToAnchor) {
  dynamics::RobotState f;
  f.position = Vec3(0.01, 0, 0);
  const auto cmd = hold_control(f, Vec3::Zero(), ImpedanceGains::coupled(Vec3::Constant(500)));
  EXPECT_DOUBLE_EQ(cmd.u[0], -5.0);
  EXPECT_EQ(cmd.source, Source::Hold);
}

TEST(Bilateral, SignConvention) {
  EXPECT_TRUE(bilateral_feedback(Vec3::Zero()).isZero(0.0));
  // Follower pressing down on a table with 10 N: the leader feels 10 N down.
  EXPECT_EQ(bilateral_feedback(Vec3(0, 0, 10.0))[2], -10.0);
}

TEST(Trajectory, SeededSinesAreDeterministicAndBounded) {
  const auto a = SumOfSines::seeded(7, Vec3::Zero());
  const auto b = SumOfSines::seeded(7, Vec3::Zero());
  const auto c = SumOfSines::seeded(8, Vec3::Zero());
  EXPECT_EQ(a.amplitude, b.amplitude);
  EXPECT_EQ(a.omega, b.omega);
  EXPECT_NE(a.phase, c.phase);
  for (int i = 0; i < 3; ++i) {
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
      total += a.amplitude[i][k];
      const double period = 2.0 * std::numbers::pi / a.omega[i][k];
      EXPECT_GE(period, 2.0);
      EXPECT_LE(period, 8.0);
    }
    EXPECT_NEAR(total, 0.2, 1e-12);
  }
}

TEST(Trajectory, WaypointsRestAtEachPoint) {
  Waypoints w{{0.0, 1.0, 3.0}, {Vec3::Zero(), Vec3(0.1, 0, 0), Vec3(0.1, 0, 0.2)}};
  for (double t : {0.0, 1.0, 3.0}) EXPECT_TRUE(sample(w, t).velocity.isZero(1e-12));
  EXPECT_TRUE(sample(w, 1.0).position.isApprox(Vec3(0.1, 0, 0)));
  EXPECT_TRUE(sample(w, 9.0).position.isApprox(Vec3(0.1, 0, 0.2)));
  // Velocity is the derivative of position.
  const double t = 1.7, h = 1e-6;
  const Vec3 fd = (sample(w, t + h).position - sample(w, t - h).position) / (2 * h);
  EXPECT_TRUE(sample(w, t).velocity.isApprox(fd, 1e-6));
}

TEST(Trajectory, SineDerivatives) {
  SineTrajectory s;
  const double t = 0.37, h = 1e-6;
  const Vec3 fd = (sample(s, t + h).position - sample(s, t - h).position) / (2 * h);
  EXPECT_TRUE(sample(s, t).velocity.isApprox(fd, 1e-6));
  EXPECT_NEAR(sample(s, 0.25 / 0.6).position[0], 0.1, 1e-12);
}

TEST(Operator, ValidatesWaypoints) {
  OperatorModel op;
  op.trajectory = Waypoints{{0.0, 0.0}, {Vec3::Zero(), Vec3::Zero()}};
  EXPECT_THROW(op.validate(), ConfigError);
  op.trajectory = Waypoints{{0.0}, {}};
  EXPECT_THROW(op.validate(), ConfigError);
}
