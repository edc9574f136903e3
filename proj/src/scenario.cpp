#include "teleop/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace teleop::harness {

namespace {

template <class E>
struct Named {
  E value;
  const char* name;
};

constexpr Named<ScenarioId> kScenarios[] = {{ScenarioId::Fig2, "fig2"},
                                            {ScenarioId::FreeTracking, "free_tracking"},
                                            {ScenarioId::Balloon, "balloon"},
                                            {ScenarioId::BilateralPolish, "bilateral_polish"},
                                            {ScenarioId::Custom, "custom"}};
constexpr Named<ControllerKind> kControllers[] = {{ControllerKind::TIC, "tic"},
                                                  {ControllerKind::IAC, "iac"},
                                                  {ControllerKind::HighGain, "high_gain"}};
constexpr Named<EstimatorKind> kEstimators[] = {{EstimatorKind::Direct, "direct"},
                                                {EstimatorKind::Observer, "observer"}};
constexpr Named<FollowerModel> kFollowers[] = {{FollowerModel::PointMass, "point_mass"},
                                               {FollowerModel::TwoLink, "two_link"}};

template <class E, std::size_t N>
const char* name_of(const Named<E> (&table)[N], E v) {
  for (const auto& n : table) {
    if (n.value == v) return n.name;
  }
  return "unknown";
}

template <class E, std::size_t N>
E parse(const Named<E> (&table)[N], std::string s, const char* what) {
  std::replace(s.begin(), s.end(), '-', '_');
  for (const auto& n : table) {
    if (s == n.name) return n.value;
  }
  throw ConfigError(std::string("unknown ") + what + ": " + s);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

const char* to_string(ScenarioId id) { return name_of(kScenarios, id); }
const char* to_string(ControllerKind c) { return name_of(kControllers, c); }
const char* to_string(EstimatorKind e) { return name_of(kEstimators, e); }
const char* to_string(FollowerModel f) { return name_of(kFollowers, f); }
ScenarioId parse_scenario(const std::string& s) { return parse(kScenarios, s, "scenario"); }
ControllerKind parse_controller(const std::string& s) {
  return parse(kControllers, s, "controller");
}
EstimatorKind parse_estimator(const std::string& s) { return parse(kEstimators, s, "estimator"); }
FollowerModel parse_follower_model(const std::string& s) {
  return parse(kFollowers, s, "follower model");
}

double GraspTrapezoid::grasp(double t) const {
  if (t <= rise_begin || t >= fall_end) return 0.0;
  if (t < rise_end) return peak * (t - rise_begin) / (rise_end - rise_begin);
  if (t <= fall_begin) return peak;
  return peak * (fall_end - t) / (fall_end - fall_begin);
}

controllers::Trajectory realize(const TrajectorySpec& spec, std::uint64_t seed) {
  return std::visit(
      Overloaded{[&](const SeededSines& s) -> controllers::Trajectory {
                   return controllers::SumOfSines::seeded(seed, s.centre, s.total_amplitude,
                                                          s.period_min, s.period_max);
                 },
                 [](const auto& t) -> controllers::Trajectory { return t; }},
      spec);
}

Vec3 desired_stiffness(const ScenarioConfig& cfg, double t) {
  return std::visit(
      Overloaded{[](const ConstantStiffness& c) { return c.L1; },
                 [&](const StepStiffness& s) {
                   const bool low = t >= s.t_begin && t < s.t_end;
                   return Vec3(Vec3::Constant(low ? s.low : s.high));
                 },
                 [&](const SinusoidStiffness& s) {
                   return Vec3(Vec3::Constant(s.mean + s.amplitude * std::sin(s.omega * t)));
                 },
                 [&](const GraspTrapezoid& g) {
                   return Vec3(Vec3::Constant(
                       impedance::grasp_to_stiffness(g.grasp(t), cfg.grasp_map)));
                 }},
      cfg.schedule);
}

long ScenarioConfig::ticks() const { return std::lround(duration / dt); }

void ScenarioConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("duration must be positive");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be non-negative");
  if (bilateral && delta != 0.0) {
    throw ConfigError("bilateral requires delta = 0 (delayed bilateral operation is not supported)");
  }
  if (!(divergence_bound > 0.0)) throw ConfigError("divergence_bound must be positive");
  leader.validate();
  follower.validate();
  if (follower_model == FollowerModel::TwoLink) arm.validate();
  op.validate();
  if (const auto* w = std::get_if<controllers::Waypoints>(&trajectory)) {
    controllers::OperatorModel probe = op;
    probe.trajectory = *w;
    probe.validate();
  }
  if (const auto* s = std::get_if<SeededSines>(&trajectory)) {
    if (!(s->period_min > 0.0 && s->period_max >= s->period_min)) {
      throw ConfigError("trajectory periods must satisfy 0 < period_min <= period_max");
    }
  }
  grasp_map.validate();
  limiter.validate();
  if (!((high_gain_L1.array() > 0.0).all())) throw ConfigError("high_gain_L1 must be positive");
  if (const auto* c = std::get_if<ConstantStiffness>(&schedule)) {
    if (!((c->L1.array() > 0.0).all())) throw ConfigError("schedule L1 must be positive");
  }
  if (const auto* s = std::get_if<StepStiffness>(&schedule)) {
    if (!(s->high > 0.0 && s->low > 0.0)) throw ConfigError("schedule gains must be positive");
  }
  if (const auto* s = std::get_if<SinusoidStiffness>(&schedule)) {
    if (!(s->mean - std::abs(s->amplitude) > 0.0)) {
      throw ConfigError("schedule mean must exceed its amplitude");
    }
  }
  if (estimator == EstimatorKind::Observer) observer.validate();
  for (const auto& c : leader_contacts) c.validate();
  for (const auto& c : follower_contacts) c.validate();
  for (const auto& p : phases) {
    if (!(p.t_end > p.t_begin)) throw ConfigError("phase '" + p.name + "' is empty");
  }
}

namespace {

ScenarioConfig fig2(ControllerKind controller) {
  ScenarioConfig c;
  c.id = ScenarioId::Fig2;
  c.controller = controller;
  c.duration = 10.0;
  c.delta = 0.1;
  c.leader.viscous_damping = Vec3::Constant(5.0);
  c.follower.viscous_damping = Vec3::Constant(5.0);
  // Ideal operator: stiff tracking plus feedforward of the handle's own
  // inertia and damping, so the leader follows the sinusoid closely.
  c.op.L_l1 = 2000.0;
  c.op.L_l2 = 200.0;
  c.op.ff_mass = c.leader.mass;
  c.op.ff_damping = c.leader.viscous_damping;
  controllers::SineTrajectory sine;
  sine.amplitude = Vec3(0.10, 0.0, 0.0);
  sine.frequency = 0.6;
  c.trajectory = sine;
  c.schedule = StepStiffness{500.0, 50.0, 2.0, 8.0};
  c.phases = {{"high_gain", 1.0, 2.0}, {"low_gain", 2.0, 8.0}, {"recovery", 8.0, 10.0}};
  return c;
}

ScenarioConfig free_tracking(ControllerKind controller) {
  ScenarioConfig c;
  c.id = ScenarioId::FreeTracking;
  c.controller = controller;
  c.duration = 60.0;
  c.delta = 0.1;
  c.seed = 7;
  // Heavier viscous losses than fig2: the follower stands in for a real arm
  // whose joint friction the compensated model does not cancel.
  c.leader.viscous_damping = Vec3::Constant(150.0);
  c.follower.viscous_damping = Vec3::Constant(150.0);
  c.trajectory = SeededSines{};
  c.schedule = SinusoidStiffness{};
  c.phases = {{"all", 0.0, 60.0}};
  return c;
}

ScenarioConfig balloon(ControllerKind controller) {
  ScenarioConfig c;
  c.id = ScenarioId::Balloon;
  c.controller = controller;
  c.duration = 14.0;
  c.delta = 0.1;
  const double L1 = controller == ControllerKind::IAC ? 60.0 : 300.0;
  c.schedule = ConstantStiffness{Vec3::Constant(L1)};
  c.high_gain_L1 = Vec3::Constant(L1);

  // Free up/down motion, then a slow press through the balloon onto the
  // leader's table (the operator aims below it).
  controllers::Waypoints w;
  const double hi = 0.30, lo = 0.20;
  w.times = {0.0, 1.25, 2.5, 3.75, 5.0, 6.5, 12.0, 14.0};
  w.points = {Vec3(0, 0, hi), Vec3(0, 0, lo), Vec3(0, 0, hi),  Vec3(0, 0, lo),
              Vec3(0, 0, hi), Vec3(0, 0, 0.16), Vec3(0, 0, 0.0), Vec3(0, 0, 0.0)};
  c.trajectory = w;

  dynamics::RigidTable leader_table;
  leader_table.surface_height = 0.05;
  c.leader_contacts = {leader_table};
  dynamics::Balloon b;
  b.surface_height = 0.12;
  b.stiffness = 300.0;
  b.rupture_force = 8.0;
  dynamics::RigidTable follower_table;
  follower_table.surface_height = 0.0;
  c.follower_contacts = {b, follower_table};
  c.phases = {{"free", 0.5, 5.0}, {"contact", 5.0, 14.0}};
  return c;
}

ScenarioConfig bilateral_polish(ControllerKind controller) {
  ScenarioConfig c;
  c.id = ScenarioId::BilateralPolish;
  c.controller = controller;
  c.duration = 30.0;
  c.delta = 0.0;
  c.bilateral = true;
  c.schedule = GraspTrapezoid{20.0, 0.0, 10.0, 20.0, 30.0};

  // Square of side 0.10 m in x-y traced while pressing down on the table.
  const double h = 0.05, z = -0.02, lap = 10.0;
  controllers::Waypoints w;
  const Vec3 corners[4] = {Vec3(-h, -h, z), Vec3(h, -h, z), Vec3(h, h, z), Vec3(-h, h, z)};
  for (int k = 0; k <= 12; ++k) {
    w.times.push_back(k * lap / 4.0);
    w.points.push_back(corners[k % 4]);
  }
  c.trajectory = w;
  c.start_on_target = false;
  c.leader_init.position = Vec3(-h, -h, 0.0);
  c.follower_init.position = Vec3(-h, -h, 0.0);

  dynamics::RigidTable leader_table;
  leader_table.surface_height = -0.04;
  c.leader_contacts = {leader_table};
  dynamics::RigidTable follower_table;
  follower_table.surface_height = 0.0;
  c.follower_contacts = {follower_table};
  c.phases = {{"low_rise", 0.5, 2.5}, {"high", 10.0, 20.0}, {"low_fall", 27.5, 30.0}};
  return c;
}

}  // namespace

ScenarioConfig make_scenario(ScenarioId id, ControllerKind controller) {
  switch (id) {
    case ScenarioId::Fig2: return fig2(controller);
    case ScenarioId::FreeTracking: return free_tracking(controller);
    case ScenarioId::Balloon: return balloon(controller);
    case ScenarioId::BilateralPolish: return bilateral_polish(controller);
    case ScenarioId::Custom: break;
  }
  ScenarioConfig c;
  c.controller = controller;
  return c;
}

}  // namespace teleop::harness
