#include "teleop/config_io.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace teleop::harness {

using json = nlohmann::ordered_json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ConfigError(field + ": " + why);
}

double num(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  return j.get<double>();
}

bool boolean(const json& j, const std::string& field) {
  if (!j.is_boolean()) fail(field, "expected true or false");
  return j.get<bool>();
}

std::string str(const json& j, const std::string& field) {
  if (!j.is_string()) fail(field, "expected a string");
  return j.get<std::string>();
}

// A scalar applies to every axis.
Vec3 vec3(const json& j, const std::string& field) {
  if (j.is_number()) return Vec3::Constant(j.get<double>());
  if (!j.is_array() || j.size() != 3) fail(field, "expected a number or an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) v[i] = num(j[i], field + "[" + std::to_string(i) + "]");
  return v;
}

Vec2 vec2(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) fail(field, "expected an array of 2 numbers");
  return {num(j[0], field + "[0]"), num(j[1], field + "[1]")};
}

json to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

using Handler = std::function<void(const json&, const std::string&)>;

void apply_object(const json& j, const std::string& field,
                  const std::map<std::string, Handler>& handlers) {
  if (!j.is_object()) fail(field, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string sub = field.empty() ? it.key() : field + "." + it.key();
    const auto h = handlers.find(it.key());
    if (h == handlers.end()) fail(sub, "unknown key");
    h->second(it.value(), sub);
  }
}

void apply_point_mass(dynamics::PointMassParams& p, const json& j, const std::string& f) {
  apply_object(j, f,
               {{"mass", [&](const json& v, const std::string& s) { p.mass = num(v, s); }},
                {"viscous_damping",
                 [&](const json& v, const std::string& s) { p.viscous_damping = vec3(v, s); }},
                {"gravity_force",
                 [&](const json& v, const std::string& s) { p.gravity_force = vec3(v, s); }}});
}

void apply_state(dynamics::RobotState& st, const json& j, const std::string& f) {
  apply_object(j, f,
               {{"position", [&](const json& v, const std::string& s) { st.position = vec3(v, s); }},
                {"velocity",
                 [&](const json& v, const std::string& s) { st.velocity = vec3(v, s); }}});
}

void apply_arm(dynamics::TwoLinkArmParams& a, const json& j, const std::string& f) {
  std::map<std::string, Handler> h;
  const std::pair<const char*, double*> fields[] = {{"m1", &a.m1},   {"m2", &a.m2},   {"l1", &a.l1},
                                                    {"l2", &a.l2},   {"lc1", &a.lc1}, {"lc2", &a.lc2},
                                                    {"I1", &a.I1},   {"I2", &a.I2},   {"g", &a.g}};
  for (const auto& [name, ptr] : fields) {
    double* target = ptr;
    h[name] = [target](const json& v, const std::string& s) { *target = num(v, s); };
  }
  apply_object(j, f, h);
}

controllers::Waypoints parse_waypoints(const json& j, const std::string& f) {
  controllers::Waypoints w;
  if (!j.contains("times") || !j.contains("points")) fail(f, "waypoints need times and points");
  const json& times = j.at("times");
  const json& points = j.at("points");
  if (!times.is_array() || !points.is_array()) fail(f, "times and points must be arrays");
  for (std::size_t i = 0; i < times.size(); ++i) {
    w.times.push_back(num(times[i], f + ".times[" + std::to_string(i) + "]"));
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    w.points.push_back(vec3(points[i], f + ".points[" + std::to_string(i) + "]"));
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "type" && it.key() != "times" && it.key() != "points") {
      fail(f + "." + it.key(), "unknown key");
    }
  }
  return w;
}

TrajectorySpec parse_trajectory(const json& j, const std::string& f) {
  if (!j.is_object() || !j.contains("type")) fail(f, "expected an object with a type");
  const std::string type = str(j.at("type"), f + ".type");
  auto ignore_type = [](const json&, const std::string&) {};
  if (type == "sine") {
    controllers::SineTrajectory s;
    s.amplitude = Vec3::Zero();
    apply_object(j, f,
                 {{"type", ignore_type},
                  {"centre", [&](const json& v, const std::string& n) { s.centre = vec3(v, n); }},
                  {"amplitude",
                   [&](const json& v, const std::string& n) { s.amplitude = vec3(v, n); }},
                  {"frequency",
                   [&](const json& v, const std::string& n) { s.frequency = num(v, n); }},
                  {"phase", [&](const json& v, const std::string& n) { s.phase = vec3(v, n); }}});
    return s;
  }
  if (type == "seeded_sines") {
    SeededSines s;
    apply_object(j, f,
                 {{"type", ignore_type},
                  {"centre", [&](const json& v, const std::string& n) { s.centre = vec3(v, n); }},
                  {"total_amplitude",
                   [&](const json& v, const std::string& n) { s.total_amplitude = num(v, n); }},
                  {"period_min",
                   [&](const json& v, const std::string& n) { s.period_min = num(v, n); }},
                  {"period_max",
                   [&](const json& v, const std::string& n) { s.period_max = num(v, n); }}});
    return s;
  }
  if (type == "waypoints") return parse_waypoints(j, f);
  if (type == "live") {
    controllers::LiveTarget l;
    apply_object(j, f,
                 {{"type", ignore_type},
                  {"position",
                   [&](const json& v, const std::string& n) { l.position = vec3(v, n); }}});
    return l;
  }
  fail(f + ".type", "unknown trajectory type '" + type + "'");
}

StiffnessSchedule parse_schedule(const json& j, const std::string& f) {
  if (!j.is_object() || !j.contains("type")) fail(f, "expected an object with a type");
  const std::string type = str(j.at("type"), f + ".type");
  auto ignore_type = [](const json&, const std::string&) {};
  auto setter = [](double& d) {
    return [&d](const json& v, const std::string& n) { d = num(v, n); };
  };
  if (type == "constant") {
    ConstantStiffness c;
    apply_object(j, f,
                 {{"type", ignore_type},
                  {"L1", [&](const json& v, const std::string& n) { c.L1 = vec3(v, n); }}});
    return c;
  }
  if (type == "step") {
    StepStiffness s;
    apply_object(j, f,
                 {{"type", ignore_type},
                  {"high", setter(s.high)},
                  {"low", setter(s.low)},
                  {"t_begin", setter(s.t_begin)},
                  {"t_end", setter(s.t_end)}});
    return s;
  }
  if (type == "sinusoid") {
    SinusoidStiffness s;
    apply_object(j, f,
                 {{"type", ignore_type},
                  {"mean", setter(s.mean)},
                  {"amplitude", setter(s.amplitude)},
                  {"omega", setter(s.omega)}});
    return s;
  }
  if (type == "grasp_trapezoid") {
    GraspTrapezoid g;
    apply_object(j, f,
                 {{"type", ignore_type},
                  {"peak", setter(g.peak)},
                  {"rise_begin", setter(g.rise_begin)},
                  {"rise_end", setter(g.rise_end)},
                  {"fall_begin", setter(g.fall_begin)},
                  {"fall_end", setter(g.fall_end)}});
    return g;
  }
  fail(f + ".type", "unknown schedule type '" + type + "'");
}

dynamics::ContactModel parse_contact(const json& j, const std::string& f) {
  if (!j.is_object() || !j.contains("type")) fail(f, "expected an object with a type");
  const std::string type = str(j.at("type"), f + ".type");
  auto ignore_type = [](const json&, const std::string&) {};
  auto setter = [](double& d) {
    return [&d](const json& v, const std::string& n) { d = num(v, n); };
  };
  if (type == "none") {
    apply_object(j, f, {{"type", ignore_type}});
    return {};
  }
  if (type == "balloon") {
    dynamics::Balloon b;
    apply_object(j, f,
                 {{"type", ignore_type},
                  {"surface_height", setter(b.surface_height)},
                  {"stiffness", setter(b.stiffness)},
                  {"rupture_force", setter(b.rupture_force)}});
    return b;
  }
  if (type == "table") {
    dynamics::RigidTable t;
    apply_object(j, f,
                 {{"type", ignore_type},
                  {"surface_height", setter(t.surface_height)},
                  {"stiffness", setter(t.stiffness)},
                  {"damping", setter(t.damping)}});
    return t;
  }
  fail(f + ".type", "unknown contact type '" + type + "'");
}

std::vector<dynamics::ContactModel> parse_contacts(const json& j, const std::string& f) {
  if (!j.is_array()) fail(f, "expected an array");
  std::vector<dynamics::ContactModel> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(parse_contact(j[i], f + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void apply_observer(estimator::ObserverConfig& o, const json& j, const std::string& f) {
  auto setter = [](double& d) {
    return [&d](const json& v, const std::string& n) { d = num(v, n); };
  };
  apply_object(j, f,
               {{"order",
                 [&](const json& v, const std::string& n) {
                   if (!v.is_number_integer()) fail(n, "expected an integer");
                   o.order = v.get<int>();
                 }},
                {"window", setter(o.window)},
                {"R", [&](const json& v, const std::string& n) { o.R_diag = vec3(v, n); }},
                {"q_x", setter(o.q_x)},
                {"q_xdot", setter(o.q_xdot)},
                {"q_theta", setter(o.q_theta)},
                {"q_u", setter(o.q_u)},
                {"divergence_bound", setter(o.divergence_bound)},
                {"anchor", [&](const json& v, const std::string& n) { o.anchor = boolean(v, n); }}});
}

void apply_all(ScenarioConfig& c, const json& j) {
  auto setter = [](double& d) {
    return [&d](const json& v, const std::string& n) { d = num(v, n); };
  };
  auto flag = [](bool& b) {
    return [&b](const json& v, const std::string& n) { b = boolean(v, n); };
  };
  apply_object(
      j, "",
      {{"estimator",
        [&](const json& v, const std::string& n) { c.estimator = parse_estimator(str(v, n)); }},
       {"dt", setter(c.dt)},
       {"duration", setter(c.duration)},
       {"delta", setter(c.delta)},
       {"delay_ms", [&](const json& v, const std::string& n) { c.delta = num(v, n) / 1000.0; }},
       {"seed",
        [&](const json& v, const std::string& n) {
          if (!v.is_number_unsigned()) fail(n, "expected a non-negative integer");
          c.seed = v.get<std::uint64_t>();
        }},
       {"bilateral", flag(c.bilateral)},
       {"bilateral_correction", flag(c.bilateral_correction)},
       {"start_on_target", flag(c.start_on_target)},
       {"divergence_bound", setter(c.divergence_bound)},
       {"follower_model",
        [&](const json& v, const std::string& n) {
          c.follower_model = parse_follower_model(str(v, n));
        }},
       {"leader", [&](const json& v, const std::string& n) { apply_point_mass(c.leader, v, n); }},
       {"follower",
        [&](const json& v, const std::string& n) { apply_point_mass(c.follower, v, n); }},
       {"arm", [&](const json& v, const std::string& n) { apply_arm(c.arm, v, n); }},
       {"arm_base", [&](const json& v, const std::string& n) { c.arm_base = vec2(v, n); }},
       {"operator",
        [&](const json& v, const std::string& n) {
          apply_object(v, n,
                       {{"L_l1", setter(c.op.L_l1)},
                        {"L_l2", setter(c.op.L_l2)},
                        {"ff_mass", setter(c.op.ff_mass)},
                        {"ff_damping", [&](const json& x, const std::string& m) {
                           c.op.ff_damping = vec3(x, m);
                         }}});
        }},
       {"trajectory",
        [&](const json& v, const std::string& n) { c.trajectory = parse_trajectory(v, n); }},
       {"leader_init", [&](const json& v, const std::string& n) { apply_state(c.leader_init, v, n); }},
       {"follower_init",
        [&](const json& v, const std::string& n) { apply_state(c.follower_init, v, n); }},
       {"schedule", [&](const json& v, const std::string& n) { c.schedule = parse_schedule(v, n); }},
       {"grasp_map",
        [&](const json& v, const std::string& n) {
          apply_object(v, n,
                       {{"k_min", setter(c.grasp_map.k_min)},
                        {"slope", setter(c.grasp_map.slope)},
                        {"saturation", setter(c.grasp_map.saturation)}});
        }},
       {"rate_limiter",
        [&](const json& v, const std::string& n) {
          apply_object(v, n,
                       {{"mass", setter(c.limiter.mass)},
                        {"ratio", setter(c.limiter.ratio)},
                        {"margin", setter(c.limiter.margin)},
                        {"enabled", flag(c.limiter.enabled)}});
        }},
       {"high_gain_L1",
        [&](const json& v, const std::string& n) { c.high_gain_L1 = vec3(v, n); }},
       {"observer", [&](const json& v, const std::string& n) { apply_observer(c.observer, v, n); }},
       {"leader_contacts",
        [&](const json& v, const std::string& n) { c.leader_contacts = parse_contacts(v, n); }},
       {"follower_contacts",
        [&](const json& v, const std::string& n) { c.follower_contacts = parse_contacts(v, n); }},
       {"phases", [&](const json& v, const std::string& n) {
          if (!v.is_array()) fail(n, "expected an array");
          c.phases.clear();
          for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string pn = n + "[" + std::to_string(i) + "]";
            Phase p;
            apply_object(v[i], pn,
                         {{"name", [&](const json& x, const std::string& m) { p.name = str(x, m); }},
                          {"t_begin", setter(p.t_begin)},
                          {"t_end", setter(p.t_end)}});
            c.phases.push_back(p);
          }
        }}});
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

json contact_json(const dynamics::ContactModel& m) {
  return std::visit(
      Overloaded{[](const dynamics::NoContact&) { return json{{"type", "none"}}; },
                 [](const dynamics::Balloon& b) {
                   return json{{"type", "balloon"},
                               {"surface_height", b.surface_height},
                               {"stiffness", b.stiffness},
                               {"rupture_force", b.rupture_force}};
                 },
                 [](const dynamics::RigidTable& t) {
                   return json{{"type", "table"},
                               {"surface_height", t.surface_height},
                               {"stiffness", t.stiffness},
                               {"damping", t.damping}};
                 }},
      m.variant());
}

}  // namespace

ScenarioConfig apply_config_json(ScenarioConfig base, const std::string& json_text) {
  const json j = parse_text(json_text);
  if (j.contains("scenario")) fail("scenario", "only allowed at the top of a config file");
  if (j.contains("controller")) fail("controller", "only allowed at the top of a config file");
  apply_all(base, j);
  return base;
}

ScenarioConfig parse_config(const std::string& json_text, std::optional<ScenarioId> scenario,
                            std::optional<ControllerKind> controller_override) {
  json j = parse_text(json_text);
  if (!j.is_object()) fail("config", "expected a JSON object");
  ScenarioId id = ScenarioId::Custom;
  ControllerKind controller = ControllerKind::IAC;
  if (j.contains("scenario")) {
    id = parse_scenario(str(j.at("scenario"), "scenario"));
    j.erase("scenario");
  }
  if (j.contains("controller")) {
    controller = parse_controller(str(j.at("controller"), "controller"));
    j.erase("controller");
  }
  if (scenario) id = *scenario;
  if (controller_override) controller = *controller_override;
  ScenarioConfig c = make_scenario(id, controller);
  apply_all(c, j);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path, std::optional<ScenarioId> scenario,
                           std::optional<ControllerKind> controller) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), scenario, controller);
}

std::string config_to_json(const ScenarioConfig& c) {
  json j;
  j["scenario"] = to_string(c.id);
  j["controller"] = to_string(c.controller);
  j["estimator"] = to_string(c.estimator);
  j["dt"] = c.dt;
  j["duration"] = c.duration;
  j["delta"] = c.delta;
  j["seed"] = c.seed;
  j["bilateral"] = c.bilateral;
  j["bilateral_correction"] = c.bilateral_correction;
  j["start_on_target"] = c.start_on_target;
  j["divergence_bound"] = c.divergence_bound;
  j["follower_model"] = to_string(c.follower_model);
  auto pm = [](const dynamics::PointMassParams& p) {
    return json{{"mass", p.mass},
                {"viscous_damping", to_json(p.viscous_damping)},
                {"gravity_force", to_json(p.gravity_force)}};
  };
  j["leader"] = pm(c.leader);
  j["follower"] = pm(c.follower);
  j["arm"] = {{"m1", c.arm.m1}, {"m2", c.arm.m2}, {"l1", c.arm.l1},   {"l2", c.arm.l2},
              {"lc1", c.arm.lc1}, {"lc2", c.arm.lc2}, {"I1", c.arm.I1}, {"I2", c.arm.I2},
              {"g", c.arm.g}};
  j["arm_base"] = {c.arm_base[0], c.arm_base[1]};
  j["operator"] = {{"L_l1", c.op.L_l1},
                   {"L_l2", c.op.L_l2},
                   {"ff_mass", c.op.ff_mass},
                   {"ff_damping", to_json(c.op.ff_damping)}};
  j["trajectory"] = std::visit(
      Overloaded{[](const controllers::SineTrajectory& s) {
                   return json{{"type", "sine"},
                               {"centre", to_json(s.centre)},
                               {"amplitude", to_json(s.amplitude)},
                               {"frequency", s.frequency},
                               {"phase", to_json(s.phase)}};
                 },
                 [](const SeededSines& s) {
                   return json{{"type", "seeded_sines"},
                               {"centre", to_json(s.centre)},
                               {"total_amplitude", s.total_amplitude},
                               {"period_min", s.period_min},
                               {"period_max", s.period_max}};
                 },
                 [](const controllers::Waypoints& w) {
                   json pts = json::array();
                   for (const auto& p : w.points) pts.push_back(to_json(p));
                   return json{{"type", "waypoints"}, {"times", w.times}, {"points", pts}};
                 },
                 [](const controllers::LiveTarget& l) {
                   return json{{"type", "live"}, {"position", to_json(l.position)}};
                 }},
      c.trajectory);
  auto st = [](const dynamics::RobotState& s) {
    return json{{"position", to_json(s.position)}, {"velocity", to_json(s.velocity)}};
  };
  j["leader_init"] = st(c.leader_init);
  j["follower_init"] = st(c.follower_init);
  j["schedule"] = std::visit(
      Overloaded{[](const ConstantStiffness& s) {
                   return json{{"type", "constant"}, {"L1", to_json(s.L1)}};
                 },
                 [](const StepStiffness& s) {
                   return json{{"type", "step"},
                               {"high", s.high},
                               {"low", s.low},
                               {"t_begin", s.t_begin},
                               {"t_end", s.t_end}};
                 },
                 [](const SinusoidStiffness& s) {
                   return json{{"type", "sinusoid"},
                               {"mean", s.mean},
                               {"amplitude", s.amplitude},
                               {"omega", s.omega}};
                 },
                 [](const GraspTrapezoid& g) {
                   return json{{"type", "grasp_trapezoid"}, {"peak", g.peak},
                               {"rise_begin", g.rise_begin}, {"rise_end", g.rise_end},
                               {"fall_begin", g.fall_begin}, {"fall_end", g.fall_end}};
                 }},
      c.schedule);
  j["grasp_map"] = {{"k_min", c.grasp_map.k_min},
                    {"slope", c.grasp_map.slope},
                    {"saturation", c.grasp_map.saturation}};
  j["rate_limiter"] = {{"mass", c.limiter.mass},
                       {"ratio", c.limiter.ratio},
                       {"margin", c.limiter.margin},
                       {"enabled", c.limiter.enabled}};
  j["high_gain_L1"] = to_json(c.high_gain_L1);
  j["observer"] = {{"order", c.observer.order},
                   {"window", c.observer.window},
                   {"R", to_json(c.observer.R_diag)},
                   {"q_x", c.observer.q_x},
                   {"q_xdot", c.observer.q_xdot},
                   {"q_theta", c.observer.q_theta},
                   {"q_u", c.observer.q_u},
                   {"divergence_bound", c.observer.divergence_bound},
                   {"anchor", c.observer.anchor}};
  j["leader_contacts"] = json::array();
  for (const auto& m : c.leader_contacts) j["leader_contacts"].push_back(contact_json(m));
  j["follower_contacts"] = json::array();
  for (const auto& m : c.follower_contacts) j["follower_contacts"].push_back(contact_json(m));
  j["phases"] = json::array();
  for (const auto& p : c.phases) {
    j["phases"].push_back({{"name", p.name}, {"t_begin", p.t_begin}, {"t_end", p.t_end}});
  }
  return j.dump(2);
}

}  // namespace teleop::harness
