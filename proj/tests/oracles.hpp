#pragma once

// Reference models shared by the unit and acceptance tests. Written
// independently of the library: plain scalars, own integrator.

#include <Eigen/Dense>

#include <cmath>

namespace teleop::oracle {

// One axis of a point-mass leader held by the target law
//   u = -L1 (x - tau*) - L2 (xdot - taudot*),  tau*(t) = a + b t,
// integrated with a continuous-time RK4 (force re-evaluated at every stage).
struct LinearTargetLeader {
  double M = 12.8, C = 5.0, L1 = 500.0, L2 = 50.0;
  double a = 0.05, b = 0.02;
  double x = 0.05, v = 0.02;
  double t = 0.0;

  double target(double tt) const { return a + b * tt; }
  double force_at(double xx, double vv, double tt) const {
    return -L1 * (xx - target(tt)) - L2 * (vv - b);
  }
  double force() const { return force_at(x, v, t); }

  void step(double dt) {
    auto acc = [&](double xx, double vv, double tt) { return (force_at(xx, vv, tt) - C * vv) / M; };
    const double k1x = v, k1v = acc(x, v, t);
    const double k2x = v + 0.5 * dt * k1v, k2v = acc(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, t + 0.5 * dt);
    const double k3x = v + 0.5 * dt * k2v, k3v = acc(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, t + 0.5 * dt);
    const double k4x = v + dt * k3v, k4v = acc(x + dt * k3x, v + dt * k3v, t + dt);
    x += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    t += dt;
  }

  // [x, xdot, theta_0, theta_1, u] with theta expressed on a clock starting at `origin`.
  Eigen::VectorXd extended_state(double origin) const {
    Eigen::VectorXd xi(5);
    xi << x, v, a + b * origin, b, force();
    return xi;
  }
};

}  // namespace teleop::oracle
