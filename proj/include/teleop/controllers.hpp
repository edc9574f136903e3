#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include "teleop/dynamics.hpp"
#include "teleop/impedance.hpp"
#include "teleop/transport.hpp"

namespace teleop::controllers {

using dynamics::RobotState;
using impedance::ImpedanceGains;

struct TargetSample {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
};

// Per-axis sinusoid: centre + amplitude sin(2 pi f t + phase).
struct SineTrajectory {
  Vec3 centre = Vec3::Zero();
  Vec3 amplitude{0.10, 0.0, 0.0};
  double frequency = 0.6;  // Hz
  Vec3 phase = Vec3::Zero();
};

// Sum of sinusoids per axis, drawn from a seed.
struct SumOfSines {
  Vec3 centre = Vec3::Zero();
  // [axis][component]
  std::vector<std::array<double, 3>> amplitude, omega, phase;

  // Three components per axis, periods uniform in [period_min, period_max],
  // amplitudes summing to `total_amplitude`, random phases.
  static SumOfSines seeded(std::uint64_t seed, const Vec3& centre, double total_amplitude = 0.2,
                           double period_min = 2.0, double period_max = 8.0);
};

// Piecewise motion through timed waypoints with a smoothstep blend on each
// segment, so velocity is zero at every waypoint.
struct Waypoints {
  std::vector<double> times;
  std::vector<Vec3> points;
};

// Target set from outside (the interactive session).
struct LiveTarget {
  Vec3 position = Vec3::Zero();
};

using Trajectory = std::variant<SineTrajectory, SumOfSines, Waypoints, LiveTarget>;

TargetSample sample(const Trajectory& traj, double t);

// Simulated human arm on the leader handle. Optional feedforward terms turn
// it into an ideal operator that cancels the handle's own inertia and damping.
struct OperatorModel {
  Trajectory trajectory = SineTrajectory{};
  double L_l1 = 400.0;
  double L_l2 = 40.0;
  double ff_mass = 0.0;
  Vec3 ff_damping = Vec3::Zero();

  void validate() const;
};

Vec3 operator_control(const OperatorModel& model, const RobotState& leader_state, double t);

// Baseline u = G - L1 (x - x_l) - L2 (xdot - xdot_l).
Vec3 high_gain_control(const Vec3& x, const Vec3& xdot, const Vec3& x_l, const Vec3& xdot_l,
                       const Vec3& G, const ImpedanceGains& gains);

enum class Source : std::uint8_t { TIC, IAC, HighGain, Operator, Hold };

const char* source_name(Source s);

struct ControlCommand {
  Vec3 u = Vec3::Zero();
  Source source = Source::TIC;
  ImpedanceGains gains;
  std::uint32_t seq = 0;
};

// Spring-damper pull toward the packet's (delayed) position and velocity with
// the packet's gains.
ControlCommand tic_control(const RobotState& follower, const transport::LeaderPacket& delayed);

// Same law toward the estimated target carried by the packet.
ControlCommand iac_control(const RobotState& follower,
                           const transport::LeaderPacket& delayed_target);

// Holds `anchor` with fixed gains until the first packet arrives.
ControlCommand hold_control(const RobotState& follower, const Vec3& anchor,
                            const ImpedanceGains& gains);

// Force on the leader handle for a follower-side interaction force.
inline Vec3 bilateral_feedback(const Vec3& F_env) { return -F_env; }

}  // namespace teleop::controllers
