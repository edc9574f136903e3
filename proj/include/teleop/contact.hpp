#pragma once

#include <variant>
#include <vector>

#include "teleop/dynamics.hpp"

namespace teleop::dynamics {

// Soft object resting below the end effector. Pushes along +z while the
// end effector is below `surface_height`; bursts the first time the
// instantaneous force exceeds `rupture_force` and exerts nothing afterwards.
struct Balloon {
  double surface_height = 0.10;  // m
  double stiffness = 200.0;      // N/m
  double rupture_force = 8.0;    // N
  bool ruptured = false;
  double rupture_time = -1.0;    // s, set by the engine when known
};

// Compliant table surface: spring-damper penalty along +z, never adhesive.
struct RigidTable {
  double surface_height = 0.0;  // m
  double stiffness = 10000.0;   // N/m
  double damping = 100.0;       // N s/m
};

struct NoContact {};

class ContactModel {
 public:
  using Variant = std::variant<NoContact, Balloon, RigidTable>;

  ContactModel() = default;
  ContactModel(Variant v) : model_(std::move(v)) {}  // NOLINT(implicit)
  ContactModel(Balloon b) : model_(b) {}              // NOLINT(implicit)
  ContactModel(RigidTable t) : model_(t) {}           // NOLINT(implicit)

  // Force exerted by the environment on the robot. Updates the rupture flag
  // of a balloon.
  Vec3 force(const Vec3& x, const Vec3& xdot);

  // Same force without touching any state.
  Vec3 peek(const Vec3& x, const Vec3& xdot) const;

  void validate() const;

  const Variant& variant() const { return model_; }
  Variant& variant() { return model_; }

  bool ruptured() const;

 private:
  Variant model_ = NoContact{};
};

// Free-function form of ContactModel::force.
Vec3 contact_force(ContactModel& model, const Vec3& x, const Vec3& xdot);

// Several contacts acting on one robot; forces add.
class ContactSet {
 public:
  void add(ContactModel m) { models_.push_back(std::move(m)); }
  Vec3 force(const Vec3& x, const Vec3& xdot);
  bool any_ruptured() const;
  bool empty() const { return models_.empty(); }
  const std::vector<ContactModel>& models() const { return models_; }
  std::vector<ContactModel>& models() { return models_; }

 private:
  std::vector<ContactModel> models_;
};

}  // namespace teleop::dynamics
