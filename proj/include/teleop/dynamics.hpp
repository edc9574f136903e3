#pragma once

#include <functional>
#include <variant>

#include "teleop/types.hpp"

namespace teleop::dynamics {

// Cartesian point mass: M xdd + C xd + G = u + F_ext, independently per axis.
struct PointMassParams {
  double mass = 12.8;                               // kg
  Vec3 viscous_damping = Vec3::Constant(5.0);       // N s/m, stands in for C
  Vec3 gravity_force = Vec3::Zero();                // N, zero when compensated

  void validate() const;
};

struct RobotState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

// Classical RK4 step with `applied_force` and `external_force` held over the step.
RobotState step_point_mass(const RobotState& state, const PointMassParams& params,
                           const Vec3& applied_force, const Vec3& external_force,
                           double dt);

// Acceleration of the point mass for the given state and net input force.
Vec3 point_mass_acceleration(const RobotState& state, const PointMassParams& params,
                             const Vec3& force);

double kinetic_energy(const RobotState& state, const PointMassParams& params);

// Planar two-link arm moving in the vertical x-z plane. Joint angles are
// measured from the horizontal x axis; gravity acts along -z.
struct TwoLinkArmParams {
  double m1 = 3.0, m2 = 2.0;      // kg
  double l1 = 0.5, l2 = 0.4;      // m
  double lc1 = 0.25, lc2 = 0.2;   // m
  double I1 = 0.0625, I2 = 0.0267;  // kg m^2 about each link's centre of mass
  double g = 9.81;                // m/s^2

  void validate() const;
  bool operator==(const TwoLinkArmParams&) const = default;
};

struct ArmMatrices {
  Mat2 M;  // joint-space inertia
  Mat2 C;  // Coriolis/centrifugal, Christoffel form (Mdot - 2C skew)
  Vec2 G;  // gravity torque
};

ArmMatrices two_link_matrices(const Vec2& q, const Vec2& qdot, const TwoLinkArmParams& p);

// Time derivative of M along qdot.
Mat2 two_link_mass_derivative(const Vec2& q, const Vec2& qdot, const TwoLinkArmParams& p);

Vec2 forward_kinematics(const Vec2& q, const TwoLinkArmParams& p);
Mat2 jacobian(const Vec2& q, const TwoLinkArmParams& p);
Mat2 jacobian_dot(const Vec2& q, const Vec2& qdot, const TwoLinkArmParams& p);

// Inverse kinematics; `elbow_down` selects the q2 <= 0 branch. Throws
// ConfigError when the point is out of reach.
Vec2 inverse_kinematics(const Vec2& point, const TwoLinkArmParams& p, bool elbow_down = true);

struct ArmState {
  Vec2 q = Vec2::Zero();
  Vec2 qdot = Vec2::Zero();

  // Cartesian end-effector state (x, z).
  Vec2 position(const TwoLinkArmParams& p) const { return forward_kinematics(q, p); }
  Vec2 velocity(const TwoLinkArmParams& p) const { return jacobian(q, p) * qdot; }
};

// Joint torque as a function of the (stage) state, re-evaluated inside each RK4 stage.
using TorqueLaw = std::function<Vec2(const ArmState&)>;

ArmState step_two_link(const ArmState& state, const TwoLinkArmParams& p,
                       const TorqueLaw& torque, double dt);

// Operational-space (Cartesian) dynamics of the arm: Lambda xdd + mu xd + p = F.
struct CartesianDynamics {
  Mat2 inertia;
  Mat2 coriolis;
  Vec2 gravity;
};

// Throws SingularityError at a kinematic singularity.
CartesianDynamics cartesian_dynamics(const ArmState& state, const TwoLinkArmParams& p);

using LeaderModel = std::variant<PointMassParams, TwoLinkArmParams>;

// Force u_f that makes the two-link follower behave like the leader model
// under command u:  u_f = M_f M^-1 (u - C xd - G) + C_f xd + G_f, all in the
// follower's Cartesian (x, z) coordinates. Throws SingularityError if the
// leader inertia (or the follower Jacobian) is singular at this state.
Vec2 pre_compensate(const Vec2& u, const ArmState& follower_state,
                    const TwoLinkArmParams& follower, const LeaderModel& leader);

// Joint torque realising a Cartesian force at the end effector.
Vec2 cartesian_to_joint(const Vec2& force, const Vec2& q, const TwoLinkArmParams& p);

// Point-mass quantities restricted to the arm's x-z plane.
Vec2 planar(const Vec3& v);

// Error dynamics M e'' + (C + S) e' + N e = u - u_l linearised along a leader
// sample. For the point mass each matrix is diagonal over the three axes; for
// the arm they are 2x2 in joint coordinates.
struct LinearizedErrorDynamics {
  Eigen::MatrixXd M;
  Eigen::MatrixXd C;
  Eigen::MatrixXd S;
  Eigen::MatrixXd N_term;
};

struct LeaderSample {
  Eigen::VectorXd x;
  Eigen::VectorXd xdot;
  Eigen::VectorXd xddot;
};

LinearizedErrorDynamics linearize_error_dynamics(const LeaderSample& sample,
                                                 const PointMassParams& params);
LinearizedErrorDynamics linearize_error_dynamics(const LeaderSample& sample,
                                                 const TwoLinkArmParams& params);

// Same partials by central differences of M, C and G. Used to check the
// analytic version and for models without closed-form derivatives.
LinearizedErrorDynamics linearize_error_dynamics_numeric(const LeaderSample& sample,
                                                         const TwoLinkArmParams& params,
                                                         double step = 1e-6);

}  // namespace teleop::dynamics
