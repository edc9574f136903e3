#include "teleop/dynamics.hpp"

#include <cmath>
#include <string>

namespace teleop {

void require_finite(const Vec3& v, const std::string& field) {
  for (std::size_t i = 0; i < kAxes; ++i) {
    if (!std::isfinite(v[static_cast<Eigen::Index>(i)])) {
      throw NumericError(field + "." + kAxisNames[i] + " is not finite");
    }
  }
}

void require_finite(double v, const std::string& field) {
  if (!std::isfinite(v)) throw NumericError(field + " is not finite");
}

}  // namespace teleop

namespace teleop::dynamics {

void PointMassParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw ConfigError("mass must be positive");
  require_finite(viscous_damping, "viscous_damping");
  require_finite(gravity_force, "gravity_force");
  if ((viscous_damping.array() < 0.0).any()) {
    throw ConfigError("viscous_damping must be non-negative");
  }
}

Vec3 point_mass_acceleration(const RobotState& state, const PointMassParams& params,
                             const Vec3& force) {
  return (force - params.viscous_damping.cwiseProduct(state.velocity) -
          params.gravity_force) /
         params.mass;
}

RobotState step_point_mass(const RobotState& state, const PointMassParams& params,
                           const Vec3& applied_force, const Vec3& external_force,
                           double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  require_finite(state.position, "state.position");
  require_finite(state.velocity, "state.velocity");
  require_finite(applied_force, "applied_force");
  require_finite(external_force, "external_force");

  const Vec3 f = applied_force + external_force;
  auto accel = [&](const Vec3& v) {
    return Vec3((f - params.viscous_damping.cwiseProduct(v) - params.gravity_force) /
                params.mass);
  };

  const Vec3& v0 = state.velocity;
  const Vec3 a1 = accel(v0);
  const Vec3 v1 = v0 + 0.5 * dt * a1;
  const Vec3 a2 = accel(v1);
  const Vec3 v2 = v0 + 0.5 * dt * a2;
  const Vec3 a3 = accel(v2);
  const Vec3 v3 = v0 + dt * a3;
  const Vec3 a4 = accel(v3);

  RobotState next;
  next.position = state.position + dt / 6.0 * (v0 + 2.0 * v1 + 2.0 * v2 + v3);
  next.velocity = v0 + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  return next;
}

double kinetic_energy(const RobotState& state, const PointMassParams& params) {
  return 0.5 * params.mass * state.velocity.squaredNorm();
}

// --- two-link arm -----------------------------------------------------------

void TwoLinkArmParams::validate() const {
  for (double v : {m1, m2, l1, l2, lc1, lc2, I1, I2}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError("two-link masses, lengths and inertias must be positive");
    }
  }
  if (!(g >= 0.0)) throw ConfigError("gravity must be non-negative");
}

ArmMatrices two_link_matrices(const Vec2& q, const Vec2& qdot, const TwoLinkArmParams& p) {
  const double c2 = std::cos(q[1]);
  const double s2 = std::sin(q[1]);
  const double a = p.m1 * p.lc1 * p.lc1 + p.I1 + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2) + p.I2;
  const double b = p.m2 * p.l1 * p.lc2;
  const double d = p.m2 * p.lc2 * p.lc2 + p.I2;

  ArmMatrices out;
  out.M << a + 2.0 * b * c2, d + b * c2,
           d + b * c2,       d;

  const double h = -b * s2;
  out.C << h * qdot[1], h * (qdot[0] + qdot[1]),
           -h * qdot[0], 0.0;

  const double c1 = std::cos(q[0]);
  const double c12 = std::cos(q[0] + q[1]);
  out.G << (p.m1 * p.lc1 + p.m2 * p.l1) * p.g * c1 + p.m2 * p.lc2 * p.g * c12,
           p.m2 * p.lc2 * p.g * c12;
  return out;
}

Mat2 two_link_mass_derivative(const Vec2& q, const Vec2& qdot, const TwoLinkArmParams& p) {
  const double b = p.m2 * p.l1 * p.lc2;
  const double dc2 = -std::sin(q[1]) * qdot[1];
  Mat2 md;
  md << 2.0 * b * dc2, b * dc2,
        b * dc2,       0.0;
  return md;
}

Vec2 forward_kinematics(const Vec2& q, const TwoLinkArmParams& p) {
  return {p.l1 * std::cos(q[0]) + p.l2 * std::cos(q[0] + q[1]),
          p.l1 * std::sin(q[0]) + p.l2 * std::sin(q[0] + q[1])};
}

Mat2 jacobian(const Vec2& q, const TwoLinkArmParams& p) {
  const double s1 = std::sin(q[0]), c1 = std::cos(q[0]);
  const double s12 = std::sin(q[0] + q[1]), c12 = std::cos(q[0] + q[1]);
  Mat2 j;
  j << -p.l1 * s1 - p.l2 * s12, -p.l2 * s12,
        p.l1 * c1 + p.l2 * c12,  p.l2 * c12;
  return j;
}

Mat2 jacobian_dot(const Vec2& q, const Vec2& qdot, const TwoLinkArmParams& p) {
  const double s1 = std::sin(q[0]), c1 = std::cos(q[0]);
  const double s12 = std::sin(q[0] + q[1]), c12 = std::cos(q[0] + q[1]);
  const double w1 = qdot[0], w12 = qdot[0] + qdot[1];
  Mat2 jd;
  jd << -p.l1 * c1 * w1 - p.l2 * c12 * w12, -p.l2 * c12 * w12,
        -p.l1 * s1 * w1 - p.l2 * s12 * w12, -p.l2 * s12 * w12;
  return jd;
}

Vec2 inverse_kinematics(const Vec2& point, const TwoLinkArmParams& p, bool elbow_down) {
  const double r2 = point.squaredNorm();
  const double c2 = (r2 - p.l1 * p.l1 - p.l2 * p.l2) / (2.0 * p.l1 * p.l2);
  if (c2 < -1.0 || c2 > 1.0) throw ConfigError("point out of the arm's reach");
  const double q2 = elbow_down ? -std::acos(c2) : std::acos(c2);
  const double q1 = std::atan2(point[1], point[0]) -
                    std::atan2(p.l2 * std::sin(q2), p.l1 + p.l2 * std::cos(q2));
  return {q1, q2};
}

ArmState step_two_link(const ArmState& state, const TwoLinkArmParams& p,
                       const TorqueLaw& torque, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  auto deriv = [&](const ArmState& s) {
    const ArmMatrices m = two_link_matrices(s.q, s.qdot, p);
    const Vec2 tau = torque(s);
    const Vec2 qdd = m.M.ldlt().solve(tau - m.C * s.qdot - m.G);
    return std::pair<Vec2, Vec2>{s.qdot, qdd};
  };
  auto shifted = [&](const std::pair<Vec2, Vec2>& k, double h) {
    return ArmState{state.q + h * k.first, state.qdot + h * k.second};
  };
  const auto k1 = deriv(state);
  const auto k2 = deriv(shifted(k1, 0.5 * dt));
  const auto k3 = deriv(shifted(k2, 0.5 * dt));
  const auto k4 = deriv(shifted(k3, dt));
  ArmState next;
  next.q = state.q + dt / 6.0 * (k1.first + 2.0 * k2.first + 2.0 * k3.first + k4.first);
  next.qdot = state.qdot + dt / 6.0 * (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second);
  return next;
}

namespace {

constexpr double kSingularDet = 1e-9;

Mat2 checked_inverse(const Mat2& m, const char* what) {
  const double det = m.determinant();
  if (!std::isfinite(det) || std::abs(det) < kSingularDet) {
    throw SingularityError(std::string(what) + " is singular (det=" + std::to_string(det) + ")");
  }
  return m.inverse();
}

}  // namespace

CartesianDynamics cartesian_dynamics(const ArmState& state, const TwoLinkArmParams& p) {
  const ArmMatrices m = two_link_matrices(state.q, state.qdot, p);
  const Mat2 j = jacobian(state.q, p);
  const Mat2 j_inv = checked_inverse(j, "arm Jacobian");
  const Mat2 j_inv_t = j_inv.transpose();
  const Mat2 jd = jacobian_dot(state.q, state.qdot, p);

  CartesianDynamics out;
  out.inertia = j_inv_t * m.M * j_inv;
  out.coriolis = j_inv_t * (m.C - m.M * j_inv * jd) * j_inv;
  out.gravity = j_inv_t * m.G;
  return out;
}

Vec2 planar(const Vec3& v) { return {v[0], v[2]}; }

Vec2 pre_compensate(const Vec2& u, const ArmState& follower_state,
                    const TwoLinkArmParams& follower, const LeaderModel& leader) {
  const CartesianDynamics f = cartesian_dynamics(follower_state, follower);
  const Vec2 xd = follower_state.velocity(follower);

  // Target acceleration the leader model would produce under u at this state.
  const Vec2 target_accel = std::visit(
      [&](const auto& model) -> Vec2 {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, PointMassParams>) {
          if (!(model.mass > 0.0)) throw SingularityError("leader inertia is singular (mass <= 0)");
          const Vec2 c = planar(model.viscous_damping);
          const Vec2 g = planar(model.gravity_force);
          return (u - c.cwiseProduct(xd) - g) / model.mass;
        } else {
          // Leader arm placed at the follower's Cartesian state.
          ArmState leader_state = follower_state;
          if (!(model == follower)) {
            leader_state.q = inverse_kinematics(follower_state.position(follower), model,
                                                follower_state.q[1] <= 0.0);
            leader_state.qdot =
                checked_inverse(jacobian(leader_state.q, model), "leader Jacobian") * xd;
          }
          const CartesianDynamics l = cartesian_dynamics(leader_state, model);
          return checked_inverse(l.inertia, "leader inertia") * (u - l.coriolis * xd - l.gravity);
        }
      },
      leader);

  return f.inertia * target_accel + f.coriolis * xd + f.gravity;
}

Vec2 cartesian_to_joint(const Vec2& force, const Vec2& q, const TwoLinkArmParams& p) {
  return jacobian(q, p).transpose() * force;
}

// --- linearisation ----------------------------------------------------------

LinearizedErrorDynamics linearize_error_dynamics(const LeaderSample& sample,
                                                 const PointMassParams& params) {
  const Eigen::Index n = sample.x.size();
  LinearizedErrorDynamics out;
  out.M = Eigen::MatrixXd::Identity(n, n) * params.mass;
  out.C = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n && i < 3; ++i) out.C(i, i) = params.viscous_damping[i];
  // Constant damping and gravity: no velocity or position dependence.
  out.S = Eigen::MatrixXd::Zero(n, n);
  out.N_term = Eigen::MatrixXd::Zero(n, n);
  return out;
}

LinearizedErrorDynamics linearize_error_dynamics(const LeaderSample& sample,
                                                 const TwoLinkArmParams& p) {
  const Vec2 q = sample.x.head<2>();
  const Vec2 qd = sample.xdot.head<2>();
  const Vec2 qdd = sample.xddot.head<2>();
  const ArmMatrices m = two_link_matrices(q, qd, p);

  const double b = p.m2 * p.l1 * p.lc2;
  const double s2 = std::sin(q[1]), c2 = std::cos(q[1]);
  const double h = -b * s2;
  const double dh = -b * c2;  // dh/dq2

  LinearizedErrorDynamics out;
  out.M = m.M;
  out.C = m.C;

  // C(q, qd) qd = [h (2 qd1 qd2 + qd2^2), -h qd1^2]; its qd-Jacobian minus C.
  Mat2 dcq;
  dcq << 2.0 * h * qd[1], 2.0 * h * (qd[0] + qd[1]),
         -2.0 * h * qd[0], 0.0;
  out.S = dcq - m.C;

  // d/dq of M(q) qdd + C(q, qd) qd + G(q); only q2 enters M and C.
  const double dm11 = -2.0 * b * s2, dm12 = -b * s2;
  Vec2 d_mqdd_dq2(dm11 * qdd[0] + dm12 * qdd[1], dm12 * qdd[0]);
  Vec2 d_cqd_dq2(dh * (2.0 * qd[0] * qd[1] + qd[1] * qd[1]), -dh * qd[0] * qd[0]);

  const double s1 = std::sin(q[0]), s12 = std::sin(q[0] + q[1]);
  const double k1 = (p.m1 * p.lc1 + p.m2 * p.l1) * p.g;
  const double k2 = p.m2 * p.lc2 * p.g;
  Mat2 dg;
  dg << -k1 * s1 - k2 * s12, -k2 * s12,
        -k2 * s12,           -k2 * s12;

  Mat2 n = dg;
  n.col(1) += d_mqdd_dq2 + d_cqd_dq2;
  out.N_term = n;
  return out;
}

LinearizedErrorDynamics linearize_error_dynamics_numeric(const LeaderSample& sample,
                                                         const TwoLinkArmParams& p,
                                                         double step) {
  const Vec2 q = sample.x.head<2>();
  const Vec2 qd = sample.xdot.head<2>();
  const Vec2 qdd = sample.xddot.head<2>();

  auto coriolis_vec = [&](const Vec2& qq, const Vec2& vv) {
    const ArmMatrices m = two_link_matrices(qq, vv, p);
    return Vec2(m.C * vv);
  };
  auto position_terms = [&](const Vec2& qq) {
    const ArmMatrices m = two_link_matrices(qq, qd, p);
    return Vec2(m.M * qdd + m.C * qd + m.G);
  };

  const ArmMatrices m0 = two_link_matrices(q, qd, p);
  Mat2 dcq, n;
  for (int j = 0; j < 2; ++j) {
    Vec2 e = Vec2::Zero();
    e[j] = step;
    dcq.col(j) = (coriolis_vec(q, qd + e) - coriolis_vec(q, qd - e)) / (2.0 * step);
    n.col(j) = (position_terms(q + e) - position_terms(q - e)) / (2.0 * step);
  }
  LinearizedErrorDynamics out;
  out.M = m0.M;
  out.C = m0.C;
  out.S = dcq - m0.C;
  out.N_term = n;
  return out;
}

}  // namespace teleop::dynamics
