#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "teleop/contact.hpp"
#include "teleop/controllers.hpp"
#include "teleop/dynamics.hpp"
#include "teleop/estimator.hpp"
#include "teleop/impedance.hpp"

namespace teleop::harness {

enum class ScenarioId { Fig2, FreeTracking, Balloon, BilateralPolish, Custom };
enum class ControllerKind { TIC, IAC, HighGain };
enum class EstimatorKind { Direct, Observer };
enum class FollowerModel { PointMass, TwoLink };

const char* to_string(ScenarioId id);
const char* to_string(ControllerKind c);
const char* to_string(EstimatorKind e);
const char* to_string(FollowerModel f);
ScenarioId parse_scenario(const std::string& s);
ControllerKind parse_controller(const std::string& s);
EstimatorKind parse_estimator(const std::string& s);
FollowerModel parse_follower_model(const std::string& s);

// Desired stiffness over time, before rate limiting.
struct ConstantStiffness {
  Vec3 L1 = Vec3::Constant(500.0);
};

// `high` outside [t_begin, t_end), `low` inside.
struct StepStiffness {
  double high = 500.0;
  double low = 50.0;
  double t_begin = 2.0;
  double t_end = 8.0;
};

// mean + amplitude sin(omega t) on every axis.
struct SinusoidStiffness {
  double mean = 700.0;
  double amplitude = 620.0;
  double omega = 0.25 * 3.14159265358979323846;
};

// Grasp force 0 -> peak -> 0 with linear ramps, mapped through the grasp map.
struct GraspTrapezoid {
  double peak = 20.0;  // N
  double rise_begin = 0.0;
  double rise_end = 10.0;
  double fall_begin = 20.0;
  double fall_end = 30.0;

  double grasp(double t) const;
};

using StiffnessSchedule =
    std::variant<ConstantStiffness, StepStiffness, SinusoidStiffness, GraspTrapezoid>;

// Operator path before seeding.
struct SeededSines {
  Vec3 centre = Vec3::Zero();
  double total_amplitude = 0.2;
  double period_min = 2.0;
  double period_max = 8.0;
};

using TrajectorySpec = std::variant<controllers::SineTrajectory, SeededSines,
                                    controllers::Waypoints, controllers::LiveTarget>;

controllers::Trajectory realize(const TrajectorySpec& spec, std::uint64_t seed);

// Named time window used by metrics.
struct Phase {
  std::string name;
  double t_begin = 0.0;
  double t_end = 0.0;
};

struct ScenarioConfig {
  ScenarioId id = ScenarioId::Custom;
  ControllerKind controller = ControllerKind::IAC;
  EstimatorKind estimator = EstimatorKind::Direct;
  estimator::ObserverConfig observer;

  double dt = 1e-3;
  double duration = 10.0;
  double delta = 0.1;
  std::uint64_t seed = 1;

  dynamics::PointMassParams leader;
  dynamics::PointMassParams follower;
  FollowerModel follower_model = FollowerModel::PointMass;
  dynamics::TwoLinkArmParams arm;
  Vec2 arm_base{-0.45, -0.35};  // arm shoulder in scene (x, z) coordinates

  controllers::OperatorModel op;
  TrajectorySpec trajectory = controllers::SineTrajectory{};
  dynamics::RobotState leader_init;
  dynamics::RobotState follower_init;
  // Starts the leader on the operator path (position and velocity) and the
  // follower at rest at the same point, ignoring the two init states.
  bool start_on_target = true;

  StiffnessSchedule schedule = ConstantStiffness{};
  impedance::GraspMap grasp_map;
  impedance::RateLimiterConfig limiter;
  Vec3 high_gain_L1 = Vec3::Constant(500.0);

  std::vector<dynamics::ContactModel> leader_contacts;
  std::vector<dynamics::ContactModel> follower_contacts;

  bool bilateral = false;
  // Subtract the reflected force from the estimator's force channel. Turning
  // it off is only useful as a negative control.
  bool bilateral_correction = true;

  double divergence_bound = 100.0;  // m, m/s
  std::vector<Phase> phases;

  // Throws ConfigError naming the first invalid field.
  void validate() const;
  long ticks() const;
};

// Desired L1 at time t (grasp-driven schedules go through the grasp map).
Vec3 desired_stiffness(const ScenarioConfig& cfg, double t);

// Built-in scenario presets. Some depend on the controller (balloon gains).
ScenarioConfig make_scenario(ScenarioId id, ControllerKind controller);

}  // namespace teleop::harness
