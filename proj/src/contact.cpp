#include "teleop/contact.hpp"

#include <algorithm>

namespace teleop::dynamics {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double balloon_force(const Balloon& b, double z) {
  if (b.ruptured) return 0.0;
  return b.stiffness * std::max(0.0, b.surface_height - z);
}

double table_force(const RigidTable& t, double z, double zdot) {
  const double penetration = t.surface_height - z;
  if (penetration <= 0.0) return 0.0;
  // Only pushes; the damper cannot pull the robot into the surface.
  return std::max(0.0, t.stiffness * penetration - t.damping * zdot);
}

}  // namespace

Vec3 ContactModel::peek(const Vec3& x, const Vec3& xdot) const {
  const double fz = std::visit(
      Overloaded{[](const NoContact&) { return 0.0; },
                 [&](const Balloon& b) { return balloon_force(b, x[2]); },
                 [&](const RigidTable& t) { return table_force(t, x[2], xdot[2]); }},
      model_);
  return {0.0, 0.0, fz};
}

Vec3 ContactModel::force(const Vec3& x, const Vec3& xdot) {
  Vec3 f = peek(x, xdot);
  if (auto* b = std::get_if<Balloon>(&model_); b != nullptr && f[2] > b->rupture_force) {
    // Reported once at the exceeding value, then gone for good.
    b->ruptured = true;
  }
  return f;
}

void ContactModel::validate() const {
  std::visit(Overloaded{[](const NoContact&) {},
                        [](const Balloon& b) {
                          if (!(b.stiffness > 0.0)) throw ConfigError("balloon stiffness must be positive");
                          if (!(b.rupture_force > 0.0)) throw ConfigError("balloon rupture_force must be positive");
                        },
                        [](const RigidTable& t) {
                          if (!(t.stiffness > 0.0)) throw ConfigError("table stiffness must be positive");
                          if (!(t.damping >= 0.0)) throw ConfigError("table damping must be non-negative");
                        }},
             model_);
}

bool ContactModel::ruptured() const {
  const auto* b = std::get_if<Balloon>(&model_);
  return b != nullptr && b->ruptured;
}

Vec3 contact_force(ContactModel& model, const Vec3& x, const Vec3& xdot) {
  return model.force(x, xdot);
}

Vec3 ContactSet::force(const Vec3& x, const Vec3& xdot) {
  Vec3 total = Vec3::Zero();
  for (auto& m : models_) total += m.force(x, xdot);
  return total;
}

bool ContactSet::any_ruptured() const {
  return std::any_of(models_.begin(), models_.end(),
                     [](const ContactModel& m) { return m.ruptured(); });
}

}  // namespace teleop::dynamics
