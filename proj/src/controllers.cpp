#include "teleop/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace teleop::controllers {

namespace {

// Uniform draw in [0, 1) from the top 53 bits, identical on every platform.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

TargetSample sample_sine(const SineTrajectory& s, double t) {
  const double w = 2.0 * std::numbers::pi * s.frequency;
  TargetSample out;
  for (int i = 0; i < 3; ++i) {
    const double arg = w * t + s.phase[i];
    out.position[i] = s.centre[i] + s.amplitude[i] * std::sin(arg);
    out.velocity[i] = s.amplitude[i] * w * std::cos(arg);
    out.acceleration[i] = -s.amplitude[i] * w * w * std::sin(arg);
  }
  return out;
}

TargetSample sample_sum(const SumOfSines& s, double t) {
  TargetSample out;
  out.position = s.centre;
  for (std::size_t i = 0; i < s.amplitude.size() && i < 3; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      const double a = s.amplitude[i][k];
      const double w = s.omega[i][k];
      const double arg = w * t + s.phase[i][k];
      out.position[i] += a * std::sin(arg);
      out.velocity[i] += a * w * std::cos(arg);
      out.acceleration[i] -= a * w * w * std::sin(arg);
    }
  }
  return out;
}

TargetSample sample_waypoints(const Waypoints& w, double t) {
  TargetSample out;
  if (w.points.empty()) return out;
  if (t <= w.times.front()) {
    out.position = w.points.front();
    return out;
  }
  if (t >= w.times.back()) {
    out.position = w.points.back();
    return out;
  }
  const auto it = std::upper_bound(w.times.begin(), w.times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - w.times.begin());
  const double t0 = w.times[k - 1];
  const double T = w.times[k] - t0;
  const double s = (t - t0) / T;
  const Vec3 delta = w.points[k] - w.points[k - 1];
  // Quintic smoothstep: zero velocity and acceleration at both ends.
  const double h = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
  const double hd = 30.0 * s * s * (1.0 - s) * (1.0 - s) / T;
  const double hdd = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (T * T);
  out.position = w.points[k - 1] + h * delta;
  out.velocity = hd * delta;
  out.acceleration = hdd * delta;
  return out;
}

}  // namespace

SumOfSines SumOfSines::seeded(std::uint64_t seed, const Vec3& centre, double total_amplitude,
                              double period_min, double period_max) {
  std::mt19937_64 rng(seed);
  SumOfSines s;
  s.centre = centre;
  s.amplitude.resize(3);
  s.omega.resize(3);
  s.phase.resize(3);
  for (int i = 0; i < 3; ++i) {
    std::array<double, 3> weights{};
    double sum = 0.0;
    for (double& wgt : weights) {
      wgt = 0.5 + unit(rng);
      sum += wgt;
    }
    for (int k = 0; k < 3; ++k) {
      const double period = period_min + (period_max - period_min) * unit(rng);
      s.amplitude[i][k] = total_amplitude * weights[k] / sum;
      s.omega[i][k] = 2.0 * std::numbers::pi / period;
      s.phase[i][k] = 2.0 * std::numbers::pi * unit(rng);
    }
  }
  return s;
}

TargetSample sample(const Trajectory& traj, double t) {
  return std::visit(Overloaded{[&](const SineTrajectory& s) { return sample_sine(s, t); },
                               [&](const SumOfSines& s) { return sample_sum(s, t); },
                               [&](const Waypoints& w) { return sample_waypoints(w, t); },
                               [](const LiveTarget& l) {
                                 TargetSample out;
                                 out.position = l.position;
                                 return out;
                               }},
                    traj);
}

void OperatorModel::validate() const {
  if (!(L_l1 > 0.0) || !(L_l2 > 0.0)) throw ConfigError("operator gains must be positive");
  if (!(ff_mass >= 0.0)) throw ConfigError("operator feedforward mass must be non-negative");
  if (const auto* w = std::get_if<Waypoints>(&trajectory)) {
    if (w->times.size() != w->points.size() || w->times.empty()) {
      throw ConfigError("waypoints need matching, non-empty times and points");
    }
    for (std::size_t i = 1; i < w->times.size(); ++i) {
      if (!(w->times[i] > w->times[i - 1])) throw ConfigError("waypoint times must increase");
    }
  }
}

Vec3 operator_control(const OperatorModel& model, const RobotState& leader_state, double t) {
  const TargetSample target = sample(model.trajectory, t);
  Vec3 u = -model.L_l1 * (leader_state.position - target.position) -
           model.L_l2 * (leader_state.velocity - target.velocity);
  if (model.ff_mass > 0.0) u += model.ff_mass * target.acceleration;
  u += model.ff_damping.cwiseProduct(target.velocity);
  return u;
}

Vec3 high_gain_control(const Vec3& x, const Vec3& xdot, const Vec3& x_l, const Vec3& xdot_l,
                       const Vec3& G, const ImpedanceGains& gains) {
  return G - gains.L1.cwiseProduct(x - x_l) - gains.L2.cwiseProduct(xdot - xdot_l);
}

const char* source_name(Source s) {
  switch (s) {
    case Source::TIC: return "tic";
    case Source::IAC: return "iac";
    case Source::HighGain: return "high_gain";
    case Source::Operator: return "operator";
    case Source::Hold: return "hold";
  }
  return "unknown";
}

namespace {

ControlCommand spring_damper(const RobotState& follower, const transport::LeaderPacket& p,
                             Source source) {
  ControlCommand cmd;
  cmd.gains = {p.L1, p.L2};
  cmd.u = -p.L1.cwiseProduct(follower.position - p.position) -
          p.L2.cwiseProduct(follower.velocity - p.velocity);
  cmd.source = source;
  cmd.seq = p.seq;
  return cmd;
}

}  // namespace

ControlCommand tic_control(const RobotState& follower, const transport::LeaderPacket& delayed) {
  return spring_damper(follower, delayed, Source::TIC);
}

ControlCommand iac_control(const RobotState& follower,
                           const transport::LeaderPacket& delayed_target) {
  return spring_damper(follower, delayed_target, Source::IAC);
}

ControlCommand hold_control(const RobotState& follower, const Vec3& anchor,
                            const ImpedanceGains& gains) {
  ControlCommand cmd;
  cmd.gains = gains;
  cmd.u = -gains.L1.cwiseProduct(follower.position - anchor) -
          gains.L2.cwiseProduct(follower.velocity);
  cmd.source = Source::Hold;
  return cmd;
}

}  // namespace teleop::controllers
