#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "teleop/scenario.hpp"
#include "teleop/transport.hpp"

namespace teleop::harness {

struct TraceRow {
  double t = 0.0;
  Vec3 x_l = Vec3::Zero();
  Vec3 xdot_l = Vec3::Zero();
  Vec3 x = Vec3::Zero();
  Vec3 tau = Vec3::Zero();
  Vec3 L1 = Vec3::Zero();
  Vec3 L2 = Vec3::Zero();
  Vec3 u_l = Vec3::Zero();
  Vec3 u = Vec3::Zero();
  Vec3 F_env = Vec3::Zero();
  double error = 0.0;

  bool operator==(const TraceRow&) const = default;
};

struct ScenarioTrace {
  std::vector<TraceRow> rows;
  double dt = 1e-3;
  // Annotations kept outside the CSV.
  bool ruptured = false;
  double rupture_time = -1.0;
  std::vector<Phase> phases;
  // Age in ticks of the packet applied on each tick, -1 while holding.
  std::vector<long> packet_age;
  // Force applied to the leader by the return channel on each tick.
  std::vector<Vec3> leader_feedback;
};

// Leader-to-follower channel. The default keeps packets in process; the
// network library provides a loopback datagram version.
class LeaderChannel {
 public:
  virtual ~LeaderChannel() = default;
  virtual void send(const transport::LeaderPacket& p, long tick) = 0;
  virtual std::optional<transport::LeaderPacket> poll(long tick) = 0;
  virtual long last_send_tick() const = 0;
  virtual void set_delay_ticks(long ticks) = 0;
  virtual void clear() = 0;
};

class InProcessChannel : public LeaderChannel {
 public:
  explicit InProcessChannel(long delay_ticks) : line_(delay_ticks) {}
  void send(const transport::LeaderPacket& p, long tick) override { line_.enqueue(p, tick); }
  std::optional<transport::LeaderPacket> poll(long tick) override {
    return line_.poll_latest(tick);
  }
  long last_send_tick() const override { return line_.last_send_tick(); }
  void set_delay_ticks(long ticks) override { line_.set_delay_ticks(ticks); }
  void clear() override { line_.clear(); }

 private:
  transport::DelayLine<transport::LeaderPacket> line_;
};

// Tick loop binding operator, leader, estimator, channel, follower controller,
// follower and contacts. Single-threaded by contract.
class Engine {
 public:
  explicit Engine(ScenarioConfig config, std::unique_ptr<LeaderChannel> channel = nullptr);

  // Advances one tick and returns the row recorded for it.
  const TraceRow& tick();
  bool done() const { return tick_ > config_.ticks(); }
  long tick_index() const { return tick_; }
  double time() const { return static_cast<double>(tick_) * config_.dt; }

  // Runs to the end and returns the full trace.
  ScenarioTrace run();
  const ScenarioTrace& trace() const { return trace_; }
  void set_recording(bool on) { recording_ = on; }

  // Live controls, applied at the next tick boundary by the caller.
  void set_controller(ControllerKind c) { config_.controller = c; }
  void set_grasp(double grasp);
  void clear_grasp() { live_grasp_.reset(); }
  void set_delay(double delta);
  void set_live_target(const Vec3& target);
  void reset();

  const ScenarioConfig& config() const { return config_; }
  const dynamics::RobotState& leader() const { return leader_; }
  const dynamics::RobotState& follower() const { return follower_; }
  const impedance::ImpedanceGains& shaped_gains() const { return shaped_; }
  bool ruptured() const { return follower_contacts_.any_ruptured(); }
  const TraceRow& last_row() const { return last_; }

 private:
  void init_state();
  Vec3 estimate_target(const Vec3& u_channel, const Vec3& reflected, Vec3& tau_dot);
  void integrate_follower(const Vec3& command, const Vec3& contact);
  void guard(const dynamics::RobotState& s, const char* who) const;

  ScenarioConfig config_;
  ScenarioConfig initial_config_;
  std::unique_ptr<LeaderChannel> channel_;
  controllers::OperatorModel op_;

  long tick_ = 0;
  dynamics::RobotState leader_;
  dynamics::RobotState follower_;
  dynamics::ArmState arm_;
  Vec3 anchor_ = Vec3::Zero();
  impedance::RateLimiterState limiter_;
  impedance::ImpedanceGains shaped_;
  impedance::ImpedanceGains initial_gains_;
  std::optional<double> live_grasp_;

  dynamics::ContactSet leader_contacts_;
  dynamics::ContactSet follower_contacts_;

  std::array<estimator::DirectSolver, 3> direct_;
  std::array<estimator::IntentionObserver, 3> observer_;

  std::optional<transport::LeaderPacket> applied_;
  long applied_send_tick_ = -1;
  std::uint32_t seq_ = 0;

  bool recording_ = true;
  ScenarioTrace trace_;
  TraceRow last_;
};

ScenarioTrace run_scenario(const ScenarioConfig& config);

}  // namespace teleop::harness
