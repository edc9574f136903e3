#include "teleop/impedance.hpp"

#include <algorithm>
#include <cmath>

namespace teleop::impedance {

void GraspMap::validate() const {
  if (!(k_min > 0.0)) throw ConfigError("grasp_map.k_min must be positive");
  if (!(slope >= 0.0)) throw ConfigError("grasp_map.slope must be non-negative");
  if (!(saturation >= k_min)) throw ConfigError("grasp_map.saturation must be >= k_min");
}

double grasp_to_stiffness(double grasp, const GraspMap& map) {
  if (!std::isfinite(grasp) || grasp < 0.0) throw ConfigError("grasp must be a non-negative number");
  return std::clamp(map.k_min + map.slope * grasp, map.k_min, map.saturation);
}

double damping_from_stiffness(double L1, double ratio) {
  if (!(L1 > 0.0)) throw ConfigError("L1 must be positive");
  return ratio * L1;
}

double alpha_bound(const Vec3& L2, double mass) {
  if (!(mass > 0.0)) throw ConfigError("mass must be positive");
  if (!((L2.array() > 0.0).all())) throw ConfigError("L2 must be positive");
  return L2.minCoeff() / mass;
}

void ImpedanceGains::validate() const {
  require_finite(L1, "L1");
  require_finite(L2, "L2");
  if (!((L1.array() > 0.0).all())) throw ConfigError("L1 must be positive");
  if (!((L2.array() > 0.0).all())) throw ConfigError("L2 must be positive");
}

void RateLimiterConfig::validate() const {
  if (!(mass > 0.0)) throw ConfigError("rate_limiter.mass must be positive");
  if (!(ratio > 0.0)) throw ConfigError("rate_limiter.ratio must be positive");
  if (!(margin > 0.0 && margin < 1.0)) throw ConfigError("rate_limiter.margin must be in (0, 1)");
}

RateLimiterState RateLimiterState::from(const Vec3& L1, const RateLimiterConfig& cfg) {
  RateLimiterState s;
  s.L1_current = L1;
  s.L2_current = cfg.ratio * L1;
  s.alpha = alpha_bound(s.L2_current, cfg.mass);
  return s;
}

double max_increase(double L1, double alpha, double ratio, double margin, double dt) {
  return margin * dt * 2.0 * alpha * L1 / (1.0 + ratio * alpha);
}

ImpedanceGains shape_stiffness(const Vec3& desired_L1, RateLimiterState& state,
                               const RateLimiterConfig& cfg, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!((desired_L1.array() > 0.0).all())) throw ConfigError("desired L1 must be positive");
  if (!cfg.enabled) {
    state.L1_current = desired_L1;
  } else {
    state.alpha = alpha_bound(state.L2_current, cfg.mass);
    for (Eigen::Index i = 0; i < 3; ++i) {
      const double cur = state.L1_current[i];
      const double want = desired_L1[i];
      if (want <= cur) {
        state.L1_current[i] = want;
      } else {
        state.L1_current[i] = std::min(want, cur + max_increase(cur, state.alpha, cfg.ratio,
                                                               cfg.margin, dt));
      }
    }
  }
  state.L2_current = cfg.ratio * state.L1_current;
  state.alpha = alpha_bound(state.L2_current, cfg.mass);
  return state.gains();
}

bool satisfies_rate_constraint(const Vec3& L1_prev, const Vec3& L2_prev, const Vec3& L1_next,
                               const Vec3& L2_next, double mass, double dt) {
  const double alpha = alpha_bound(L2_prev, mass);
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double l1dot = (L1_next[i] - L1_prev[i]) / dt;
    const double l2dot = (L2_next[i] - L2_prev[i]) / dt;
    if (l1dot <= 0.0) continue;  // only increases are constrained
    if (!(l1dot < 2.0 * alpha * L1_prev[i] - alpha * l2dot)) return false;
  }
  return true;
}

}  // namespace teleop::impedance
