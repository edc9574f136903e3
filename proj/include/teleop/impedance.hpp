#pragma once

#include "teleop/types.hpp"

namespace teleop::impedance {

// Linear grasp-force to stiffness map, clamped to [k_min, saturation].
struct GraspMap {
  double k_min = 80.0;       // N/m
  double slope = 62.0;       // (N/m)/N
  double saturation = 1320.0;  // N/m

  void validate() const;
};

// Throws ConfigError for a negative or non-finite grasp.
double grasp_to_stiffness(double grasp, const GraspMap& map);

inline constexpr double kDampingRatio = 0.1;

double damping_from_stiffness(double L1, double ratio = kDampingRatio);

// Smallest damping over the axes divided by the mass.
double alpha_bound(const Vec3& L2, double mass);

struct ImpedanceGains {
  Vec3 L1 = Vec3::Constant(500.0);
  Vec3 L2 = Vec3::Constant(50.0);

  static ImpedanceGains coupled(const Vec3& L1, double ratio = kDampingRatio) {
    return {L1, ratio * L1};
  }
  void validate() const;
};

struct RateLimiterConfig {
  double mass = 12.8;       // kg, largest inertia eigenvalue
  double ratio = kDampingRatio;
  double margin = 0.99;     // fraction of the continuous bound used per tick
  bool enabled = true;

  void validate() const;
};

struct RateLimiterState {
  Vec3 L1_current = Vec3::Constant(80.0);
  Vec3 L2_current = Vec3::Constant(8.0);
  double alpha = 0.0;

  static RateLimiterState from(const Vec3& L1, const RateLimiterConfig& cfg);
  ImpedanceGains gains() const { return {L1_current, L2_current}; }
};

// Largest admissible single-tick increase of L1 from `L1` under
//   L1dot < 2 alpha L1 - alpha L2dot,  L2dot = ratio L1dot,
// scaled by `margin`.
double max_increase(double L1, double alpha, double ratio, double margin, double dt);

// Moves the current gains toward `desired_L1`. Decreases are applied as-is,
// increases are clamped by max_increase. L2 follows the coupling.
ImpedanceGains shape_stiffness(const Vec3& desired_L1, RateLimiterState& state,
                               const RateLimiterConfig& cfg, double dt);

// True if the step from (L1_prev, L2_prev) to (L1_next, L2_next) satisfies the
// discrete strict inequality on every axis, with alpha taken from L2_prev.
bool satisfies_rate_constraint(const Vec3& L1_prev, const Vec3& L2_prev, const Vec3& L1_next,
                               const Vec3& L2_next, double mass, double dt);

}  // namespace teleop::impedance
