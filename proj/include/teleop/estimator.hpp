#pragma once

#include <Eigen/Dense>

#include "teleop/types.hpp"

namespace teleop::estimator {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Algebraic inversion of the leader's target law
//   -L1 (x - tau) - L2 (xdot - tau_dot) = u_l
// for tau, with tau_dot supplied by the caller. Throws ConfigError if L1 <= 0.
double direct_target_solve(double x, double xdot, double u_l, double L1, double L2,
                           double tau_dot_prev);

struct TargetEstimate {
  double tau = 0.0;
  double tau_dot = 0.0;
};

// Per-axis direct solver. tau and tau_dot are found together, with tau_dot the
// backward difference of successive tau values, so the pair satisfies the
// target law exactly at every tick. The first tick has no history and uses
// tau_dot = 0.
class DirectSolver {
 public:
  TargetEstimate step(double x, double xdot, double u_l, double L1, double L2, double dt);
  void reset() { primed_ = false; }
  bool primed() const { return primed_; }
  double last_tau() const { return tau_; }

 private:
  bool primed_ = false;
  double tau_ = 0.0;
};

// Polynomial target tau* = theta^T phi(t), phi = [1, t, ..., t^n].
struct TargetModel {
  int order = 1;
  VectorXd theta = VectorXd::Zero(2);
  double t_origin = 0.0;

  double evaluate(double t) const;
  double evaluate_rate(double t) const;
};

VectorXd basis(int order, double t_local);
VectorXd basis_rate(int order, double t_local);

// Re-expresses polynomial coefficients on a clock shifted by `shift`
// (p(s + shift) in powers of s). Also returns the linear map used.
MatrixXd basis_shift_matrix(int order, double shift);

struct SystemMatrices {
  MatrixXd A;
  VectorXd B;
};

// Extended state xi = [x, xdot, theta_0..theta_n, u_l]. The xdot row is the
// leader's point-mass dynamics and the last row is the time derivative of the
// target law. B carries a known force acting on the leader besides u_l (the
// reflected contact force in bilateral mode).
SystemMatrices build_system_matrices(double M, double C, double L1, double L2,
                                     const VectorXd& phi_dot);

// Picks x, xdot and u_l out of the extended state.
MatrixXd observation_matrix(int order);

struct RiccatiResult {
  MatrixXd P;
  bool healthy = true;  // false when P lost semidefiniteness
};

// One step of Pdot = P A^T + A P - P H^T R^-1 H P + Q over dt, taken as a
// discrete measurement update (noise R/dt) followed by propagation through
// I + A dt, then symmetrised. Exact for the scalar case A = 0, Q = 0.
RiccatiResult riccati_step(const MatrixXd& P, const MatrixXd& A, const MatrixXd& H,
                           const MatrixXd& Q, const MatrixXd& R, double dt);

// K = P H^T R^-1. Throws NumericError when R is singular.
MatrixXd kalman_gain(const MatrixXd& P, const MatrixXd& H, const MatrixXd& R);

struct ObserverConfig {
  int order = 1;
  double window = 1.0;  // s, basis clock re-origin period
  Eigen::Vector3d R_diag{1e-6, 1e-4, 1e-4};
  double q_x = 1e-4;
  double q_xdot = 1e-2;
  double q_theta = 1e-2;
  double q_u = 1e-2;
  double divergence_bound = 1e6;
  // Re-anchors theta_0 so that theta^T phi matches the emitted tau. theta_0
  // is unobservable, so this only removes drift in a direction the filter
  // cannot see.
  bool anchor = true;

  void validate() const;
  MatrixXd Q() const;
  MatrixXd R() const;
  int dim() const { return order + 4; }
};

struct EstimatorState {
  VectorXd xi;
  MatrixXd P;
  MatrixXd K;
  double t_local = 0.0;
  long ticks_in_window = 0;
  bool initialized = false;
  int resets = 0;
};

struct Measurement {
  double x = 0.0;
  double xdot = 0.0;
  double u = 0.0;        // total measured force on the leader handle
  bool bilateral = false;
  double F_env = 0.0;    // reflected force acting on the leader (bilateral only)

  // Force channel seen by the filter: u - F_env when bilateral.
  double force_channel() const { return bilateral ? u - F_env : u; }
};

struct ObserverOutput {
  double tau = 0.0;
  double tau_dot = 0.0;
  bool reset = false;
};

// One step of the extended-state observer for one axis. On the first
// call the state is initialised from the measurement.
ObserverOutput observer_update(EstimatorState& state, const Measurement& meas, double L1,
                               double L2, double M, double C, const ObserverConfig& config,
                               double dt);

// U = xi_err^T P^-1 xi_err. Throws NumericError if P is singular.
double lyapunov_energy(const EstimatorState& state, const VectorXd& true_xi);

// Closed-loop error system over [e, edot, xi_err]:
//   [ 0        I             0      ]
//   [ -M^-1 N  -M^-1 (C+S)   M^-1 E ]
//   [ 0        0             A - KH ]
// where E routes the force estimate error (last entry of xi_err) to every
// error coordinate.
MatrixXd extended_error_system(const MatrixXd& A, const MatrixXd& K, const MatrixXd& H,
                               const MatrixXd& M, const MatrixXd& C, const MatrixXd& S,
                               const MatrixXd& N_term);

// Eigenvalues of `A` restricted to the quotient by its unobservable subspace
// with respect to output matrix `Cobs`.
Eigen::VectorXcd observable_spectrum(const MatrixXd& A, const MatrixXd& Cobs,
                                     double tol = 1e-9);

// Per-axis observer with its own configuration.
class IntentionObserver {
 public:
  explicit IntentionObserver(ObserverConfig config = {});

  ObserverOutput step(const Measurement& meas, double L1, double L2, double M, double C,
                      double dt);
  void reset();

  const EstimatorState& state() const { return state_; }
  EstimatorState& state() { return state_; }
  const ObserverConfig& config() const { return config_; }

 private:
  ObserverConfig config_;
  EstimatorState state_;
};

}  // namespace teleop::estimator
