#include "teleop/engine.hpp"

#include <cmath>
#include <string>

namespace teleop::harness {

using controllers::ControlCommand;
using transport::LeaderPacket;
using transport::PayloadKind;

Engine::Engine(ScenarioConfig config, std::unique_ptr<LeaderChannel> channel)
    : config_(std::move(config)), channel_(std::move(channel)) {
  config_.validate();
  initial_config_ = config_;
  const long delay = transport::DelayLine<LeaderPacket>::ticks_for(config_.delta, config_.dt);
  if (!channel_) {
    channel_ = std::make_unique<InProcessChannel>(delay);
  } else {
    channel_->set_delay_ticks(delay);
  }
  init_state();
}

void Engine::init_state() {
  op_ = config_.op;
  op_.trajectory = realize(config_.trajectory, config_.seed);

  leader_ = config_.leader_init;
  follower_ = config_.follower_init;
  if (config_.start_on_target) {
    const controllers::TargetSample s = controllers::sample(op_.trajectory, 0.0);
    leader_.position = s.position;
    leader_.velocity = s.velocity;
    follower_.position = s.position;
    follower_.velocity = Vec3::Zero();
  }
  if (config_.follower_model == FollowerModel::TwoLink) {
    const Vec2 local = dynamics::planar(follower_.position) - config_.arm_base;
    arm_.q = dynamics::inverse_kinematics(local, config_.arm);
    arm_.qdot = dynamics::jacobian(arm_.q, config_.arm).inverse() *
                dynamics::planar(follower_.velocity);
  }
  anchor_ = follower_.position;

  limiter_ = impedance::RateLimiterState::from(desired_stiffness(config_, 0.0), config_.limiter);
  shaped_ = limiter_.gains();
  initial_gains_ = config_.controller == ControllerKind::HighGain
                       ? impedance::ImpedanceGains::coupled(config_.high_gain_L1,
                                                            config_.limiter.ratio)
                       : shaped_;
  live_grasp_.reset();

  leader_contacts_ = {};
  for (const auto& c : config_.leader_contacts) leader_contacts_.add(c);
  follower_contacts_ = {};
  for (const auto& c : config_.follower_contacts) follower_contacts_.add(c);

  for (auto& d : direct_) d.reset();
  for (auto& o : observer_) o = estimator::IntentionObserver(config_.observer);

  channel_->clear();
  applied_.reset();
  applied_send_tick_ = -1;
  seq_ = 0;
  tick_ = 0;

  trace_ = ScenarioTrace{};
  trace_.dt = config_.dt;
  trace_.phases = config_.phases;
  if (recording_) {
    const auto n = static_cast<std::size_t>(config_.ticks() + 1);
    trace_.rows.reserve(n);
    trace_.packet_age.reserve(n);
    trace_.leader_feedback.reserve(n);
  }
  last_ = TraceRow{};
}

void Engine::reset() {
  config_ = initial_config_;
  channel_->set_delay_ticks(
      transport::DelayLine<LeaderPacket>::ticks_for(config_.delta, config_.dt));
  init_state();
}

void Engine::set_grasp(double grasp) {
  impedance::grasp_to_stiffness(grasp, config_.grasp_map);  // validates
  live_grasp_ = grasp;
}

void Engine::set_delay(double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be non-negative");
  if (config_.bilateral && delta != 0.0) throw ConfigError("bilateral requires delta = 0");
  channel_->set_delay_ticks(transport::DelayLine<LeaderPacket>::ticks_for(delta, config_.dt));
  config_.delta = delta;
}

void Engine::set_live_target(const Vec3& target) {
  require_finite(target, "target");
  if (auto* live = std::get_if<controllers::LiveTarget>(&op_.trajectory)) {
    live->position = target;
  } else {
    op_.trajectory = controllers::LiveTarget{target};
  }
}

void Engine::guard(const dynamics::RobotState& s, const char* who) const {
  const double bound = config_.divergence_bound;
  const bool bad = !s.position.allFinite() || !s.velocity.allFinite() ||
                   s.position.norm() > bound || s.velocity.norm() > bound;
  if (bad) {
    throw DivergenceError(std::string(who) + " state exceeded the divergence bound at t=" +
                          std::to_string(time()));
  }
}

Vec3 Engine::estimate_target(const Vec3& u_total, const Vec3& reflected, Vec3& tau_dot) {
  Vec3 tau;
  const bool correct = config_.bilateral && config_.bilateral_correction;
  for (int i = 0; i < 3; ++i) {
    const double L1 = shaped_.L1[i];
    const double L2 = shaped_.L2[i];
    estimator::Measurement m;
    m.x = leader_.position[i];
    m.xdot = leader_.velocity[i];
    m.u = u_total[i];
    m.bilateral = correct;
    m.F_env = reflected[i];
    if (config_.estimator == EstimatorKind::Direct) {
      const auto est = direct_[i].step(m.x, m.xdot, m.force_channel(), L1, L2, config_.dt);
      tau[i] = est.tau;
      tau_dot[i] = est.tau_dot;
    } else {
      const auto est = observer_[i].step(m, L1, L2, config_.leader.mass,
                                         config_.leader.viscous_damping[i], config_.dt);
      tau[i] = est.tau;
      tau_dot[i] = est.tau_dot;
    }
  }
  return tau;
}

void Engine::integrate_follower(const Vec3& command, const Vec3& contact) {
  if (config_.follower_model == FollowerModel::PointMass) {
    follower_ = dynamics::step_point_mass(follower_, config_.follower, command, contact,
                                          config_.dt);
    return;
  }
  // Planar arm carries x and z; y stays a point mass.
  const Vec2 v = dynamics::planar(command + contact);
  const dynamics::LeaderModel target = config_.follower;
  const auto law = [&](const dynamics::ArmState& s) -> Vec2 {
    const Vec2 f = dynamics::pre_compensate(v, s, config_.arm, target);
    return dynamics::cartesian_to_joint(f, s.q, config_.arm);
  };
  arm_ = dynamics::step_two_link(arm_, config_.arm, law, config_.dt);
  const dynamics::RobotState y = dynamics::step_point_mass(follower_, config_.follower, command,
                                                           contact, config_.dt);
  const Vec2 p = arm_.position(config_.arm) + config_.arm_base;
  const Vec2 pv = arm_.velocity(config_.arm);
  follower_.position = Vec3(p[0], y.position[1], p[1]);
  follower_.velocity = Vec3(pv[0], y.velocity[1], pv[1]);
}

const TraceRow& Engine::tick() {
  const double t = time();
  const double dt = config_.dt;

  // Follower interaction: force on the robot, and its reaction on the scene.
  const Vec3 contact = follower_contacts_.force(follower_.position, follower_.velocity);
  const Vec3 F_env = -contact;
  if (recording_ && !trace_.ruptured && follower_contacts_.any_ruptured()) {
    trace_.ruptured = true;
    trace_.rupture_time = t;
  }
  const Vec3 feedback = config_.bilateral ? controllers::bilateral_feedback(F_env)
                                          : Vec3(Vec3::Zero());

  // Operator and commanded stiffness.
  const Vec3 u_op = controllers::operator_control(op_, leader_, t);
  const Vec3 desired =
      live_grasp_ ? Vec3(Vec3::Constant(impedance::grasp_to_stiffness(*live_grasp_,
                                                                       config_.grasp_map)))
                  : desired_stiffness(config_, t);
  if (config_.limiter.enabled) {
    shaped_ = impedance::shape_stiffness(desired, limiter_, config_.limiter, dt);
  } else {
    limiter_ = impedance::RateLimiterState::from(desired, config_.limiter);
    shaped_ = limiter_.gains();
  }

  // Everything the handle's force sensor sees.
  const Vec3 leader_contact = leader_contacts_.force(leader_.position, leader_.velocity);
  const Vec3 u_total = u_op + leader_contact + feedback;

  Vec3 tau_dot;
  const Vec3 tau = estimate_target(u_total, feedback, tau_dot);

  LeaderPacket pkt;
  pkt.seq = seq_++;
  pkt.t_send = t;
  switch (config_.controller) {
    case ControllerKind::IAC:
      pkt.kind = PayloadKind::Target;
      pkt.position = tau;
      pkt.velocity = tau_dot;
      pkt.L1 = shaped_.L1;
      pkt.L2 = shaped_.L2;
      break;
    case ControllerKind::TIC:
    case ControllerKind::HighGain: {
      pkt.kind = PayloadKind::RawState;
      pkt.position = leader_.position;
      pkt.velocity = leader_.velocity;
      const auto g = config_.controller == ControllerKind::HighGain
                         ? impedance::ImpedanceGains::coupled(config_.high_gain_L1,
                                                              config_.limiter.ratio)
                         : shaped_;
      pkt.L1 = g.L1;
      pkt.L2 = g.L2;
      break;
    }
  }
  channel_->send(pkt, tick_);
  if (auto got = channel_->poll(tick_)) {
    applied_ = *got;
    applied_send_tick_ = channel_->last_send_tick();
  }

  ControlCommand cmd;
  if (!applied_) {
    cmd = controllers::hold_control(follower_, anchor_, initial_gains_);
  } else if (applied_->kind == PayloadKind::Target) {
    cmd = controllers::iac_control(follower_, *applied_);
  } else if (config_.controller == ControllerKind::HighGain) {
    cmd = controllers::tic_control(follower_, *applied_);
    cmd.u += config_.follower.gravity_force;
    cmd.source = controllers::Source::HighGain;
  } else {
    cmd = controllers::tic_control(follower_, *applied_);
  }

  TraceRow row;
  row.t = t;
  row.x_l = leader_.position;
  row.xdot_l = leader_.velocity;
  row.x = follower_.position;
  row.tau = tau;
  row.L1 = cmd.gains.L1;
  row.L2 = cmd.gains.L2;
  row.u_l = u_total;
  row.u = cmd.u;
  row.F_env = F_env;
  row.error = (follower_.position - leader_.position).norm();
  last_ = row;
  if (recording_) {
    trace_.rows.push_back(row);
    trace_.packet_age.push_back(applied_ ? tick_ - applied_send_tick_ : -1);
    trace_.leader_feedback.push_back(feedback);
  }

  leader_ = dynamics::step_point_mass(leader_, config_.leader, u_op + feedback, leader_contact,
                                      dt);
  integrate_follower(cmd.u, contact);
  guard(leader_, "leader");
  guard(follower_, "follower");
  ++tick_;
  return last_;
}

ScenarioTrace Engine::run() {
  while (!done()) tick();
  return trace_;
}

ScenarioTrace run_scenario(const ScenarioConfig& config) {
  Engine engine(config);
  return engine.run();
}

}  // namespace teleop::harness
