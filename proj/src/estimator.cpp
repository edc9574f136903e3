#include "teleop/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace teleop::estimator {

double direct_target_solve(double x, double xdot, double u_l, double L1, double L2,
                           double tau_dot_prev) {
  if (!(L1 > 0.0)) throw ConfigError("direct_target_solve: L1 must be positive");
  return x + (u_l + L2 * (xdot - tau_dot_prev)) / L1;
}

TargetEstimate DirectSolver::step(double x, double xdot, double u_l, double L1, double L2,
                                  double dt) {
  if (!(L1 > 0.0)) throw ConfigError("direct solve: L1 must be positive");
  if (!(dt > 0.0)) throw ConfigError("direct solve: dt must be positive");
  if (!primed_) {
    tau_ = direct_target_solve(x, xdot, u_l, L1, L2, 0.0);
    primed_ = true;
    return {tau_, 0.0};
  }
  // Substituting tau_dot = (tau - tau_prev)/dt into the target law and
  // solving for tau keeps the pair consistent without a filter.
  const double c = L2 / dt;
  const double tau = (u_l + L1 * x + L2 * xdot + c * tau_) / (L1 + c);
  const double tau_dot = (tau - tau_) / dt;
  tau_ = tau;
  return {tau, tau_dot};
}

VectorXd basis(int order, double t_local) {
  VectorXd phi(order + 1);
  double p = 1.0;
  for (int i = 0; i <= order; ++i) {
    phi[i] = p;
    p *= t_local;
  }
  return phi;
}

VectorXd basis_rate(int order, double t_local) {
  VectorXd d = VectorXd::Zero(order + 1);
  double p = 1.0;
  for (int i = 1; i <= order; ++i) {
    d[i] = i * p;
    p *= t_local;
  }
  return d;
}

double TargetModel::evaluate(double t) const { return theta.dot(basis(order, t - t_origin)); }

double TargetModel::evaluate_rate(double t) const {
  return theta.dot(basis_rate(order, t - t_origin));
}

MatrixXd basis_shift_matrix(int order, double shift) {
  MatrixXd T = MatrixXd::Zero(order + 1, order + 1);
  for (int i = 0; i <= order; ++i) {
    double binom = 1.0;  // C(j, i) built up as j increases
    for (int j = i; j <= order; ++j) {
      if (j > i) binom = binom * j / (j - i);
      T(i, j) = binom * std::pow(shift, j - i);
    }
  }
  return T;
}

SystemMatrices build_system_matrices(double M, double C, double L1, double L2,
                                     const VectorXd& phi_dot) {
  if (!(M > 0.0)) throw ConfigError("build_system_matrices: M must be positive");
  const Eigen::Index n1 = phi_dot.size();
  const Eigen::Index d = n1 + 3;
  const Eigen::Index last = d - 1;
  SystemMatrices s{MatrixXd::Zero(d, d), VectorXd::Zero(d)};
  s.A(0, 1) = 1.0;
  s.A(1, 1) = -C / M;
  s.A(1, last) = 1.0 / M;
  s.A(last, 1) = -L1 + L2 * C / M;
  s.A.block(last, 2, 1, n1) = L1 * phi_dot.transpose();
  s.A(last, last) = -L2 / M;
  s.B(1) = 1.0 / M;
  s.B(last) = -L2 / M;
  return s;
}

MatrixXd observation_matrix(int order) {
  const int d = order + 4;
  MatrixXd H = MatrixXd::Zero(3, d);
  H(0, 0) = 1.0;
  H(1, 1) = 1.0;
  H(2, d - 1) = 1.0;
  return H;
}

RiccatiResult riccati_step(const MatrixXd& P, const MatrixXd& A, const MatrixXd& H,
                           const MatrixXd& Q, const MatrixXd& R, double dt) {
  if (!(dt > 0.0)) throw ConfigError("riccati_step: dt must be positive");
  // Measurement update against R/dt in Joseph form, then propagation through
  // I + A dt. To first order in dt this is the continuous equation; unlike a
  // plain Euler step it cannot leave the positive semidefinite cone when A
  // has large off-diagonal entries.
  const Eigen::Index n = P.rows();
  const MatrixXd Rd = R / dt;
  const MatrixXd S = H * P * H.transpose() + Rd;
  const MatrixXd Kd = S.ldlt().solve(H * P).transpose();
  const MatrixXd IKH = MatrixXd::Identity(n, n) - Kd * H;
  const MatrixXd Pu = IKH * P * IKH.transpose() + Kd * Rd * Kd.transpose();
  const MatrixXd Phi = MatrixXd::Identity(n, n) + dt * A;
  MatrixXd next = Phi * Pu * Phi.transpose() + dt * Q;
  next = 0.5 * (next + next.transpose()).eval();

  RiccatiResult out{std::move(next), true};
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(out.P, Eigen::EigenvaluesOnly);
  if (!out.P.allFinite() || eig.eigenvalues().minCoeff() < -1e-9) out.healthy = false;
  return out;
}

MatrixXd kalman_gain(const MatrixXd& P, const MatrixXd& H, const MatrixXd& R) {
  Eigen::FullPivLU<MatrixXd> lu(R);
  if (!lu.isInvertible()) throw NumericError("kalman_gain: R is singular");
  // K R = P H^T  <=>  R^T K^T = H P^T
  return lu.solve(H * P.transpose()).transpose();
}

void ObserverConfig::validate() const {
  if (order < 0 || order > 2) throw ConfigError("estimator.order must be 0, 1 or 2");
  if (!(window > 0.0)) throw ConfigError("estimator.window must be positive");
  if (!((R_diag.array() > 0.0).all())) throw ConfigError("estimator.R must be positive");
  if (!(q_x > 0.0 && q_xdot > 0.0 && q_theta > 0.0 && q_u > 0.0)) {
    throw ConfigError("estimator.Q entries must be positive");
  }
  if (!(divergence_bound > 0.0)) throw ConfigError("estimator.divergence_bound must be positive");
}

MatrixXd ObserverConfig::Q() const {
  VectorXd q(dim());
  q[0] = q_x;
  q[1] = q_xdot;
  q.segment(2, order + 1).setConstant(q_theta);
  q[dim() - 1] = q_u;
  return q.asDiagonal();
}

MatrixXd ObserverConfig::R() const { return R_diag.asDiagonal(); }

namespace {

void initialise(EstimatorState& s, const Measurement& meas, double L1, double L2,
                const ObserverConfig& cfg) {
  const int d = cfg.dim();
  const double u = meas.force_channel();
  s.xi = VectorXd::Zero(d);
  s.xi[0] = meas.x;
  s.xi[1] = meas.xdot;
  s.xi[2] = direct_target_solve(meas.x, meas.xdot, u, L1, L2, 0.0);
  s.xi[d - 1] = u;
  s.P = cfg.Q();
  s.K = MatrixXd::Zero(d, 3);
  s.t_local = 0.0;
  s.ticks_in_window = 0;
  s.initialized = true;
}

void reorigin(EstimatorState& s, const ObserverConfig& cfg) {
  const int n1 = cfg.order + 1;
  const MatrixXd T = basis_shift_matrix(cfg.order, s.t_local);
  s.xi.segment(2, n1) = (T * s.xi.segment(2, n1)).eval();
  MatrixXd full = MatrixXd::Identity(cfg.dim(), cfg.dim());
  full.block(2, 2, n1, n1) = T;
  s.P = (full * s.P * full.transpose()).eval();
  s.t_local = 0.0;
  s.ticks_in_window = 0;
}

}  // namespace

ObserverOutput observer_update(EstimatorState& state, const Measurement& meas, double L1,
                               double L2, double M, double C, const ObserverConfig& config,
                               double dt) {
  if (!(L1 > 0.0)) throw ConfigError("observer: L1 must be positive");
  if (!(dt > 0.0)) throw ConfigError("observer: dt must be positive");
  require_finite(meas.x, "measurement.x");
  require_finite(meas.xdot, "measurement.xdot");
  require_finite(meas.u, "measurement.u");
  require_finite(meas.F_env, "measurement.F_env");

  ObserverOutput out;
  if (!state.initialized) initialise(state, meas, L1, L2, config);

  const long window_ticks = std::max(1L, std::lround(config.window / dt));
  if (state.ticks_in_window >= window_ticks) reorigin(state, config);

  const int d = config.dim();
  const int n1 = config.order + 1;
  const VectorXd phi = basis(config.order, state.t_local);
  const VectorXd phi_dot = basis_rate(config.order, state.t_local);
  const SystemMatrices sys = build_system_matrices(M, C, L1, L2, phi_dot);
  const MatrixXd H = observation_matrix(config.order);
  const MatrixXd R = config.R();
  const MatrixXd Q = config.Q();

  state.K = kalman_gain(state.P, H, R);
  const Eigen::Vector3d z(meas.x, meas.xdot, meas.force_channel());
  const double known_input = meas.bilateral ? meas.F_env : 0.0;
  // Correction with the gain matching riccati_step (P H^T (H P H^T + R/dt)^-1,
  // which is dt K to first order), then Euler prediction.
  const MatrixXd S = H * state.P * H.transpose() + R / dt;
  const MatrixXd Kd = S.ldlt().solve(H * state.P).transpose();
  state.xi += Kd * (z - H * state.xi);
  state.xi += dt * (sys.A * state.xi + sys.B * known_input);

  RiccatiResult ric = riccati_step(state.P, sys.A, H, Q, R, dt);
  state.P = ric.healthy ? std::move(ric.P) : Q;

  if (!state.xi.allFinite() || state.xi.norm() > config.divergence_bound) {
    initialise(state, meas, L1, L2, config);
    ++state.resets;
    out.reset = true;
  }

  const double u_hat = state.xi[d - 1];
  const auto theta = state.xi.segment(2, n1);
  out.tau_dot = theta.dot(phi_dot);
  out.tau = meas.x + (u_hat + L2 * (meas.xdot - out.tau_dot)) / L1;
  if (config.anchor) state.xi[2] += out.tau - theta.dot(phi);

  ++state.ticks_in_window;
  state.t_local = static_cast<double>(state.ticks_in_window) * dt;
  return out;
}

double lyapunov_energy(const EstimatorState& state, const VectorXd& true_xi) {
  if (true_xi.size() != state.xi.size()) throw ConfigError("lyapunov_energy: size mismatch");
  Eigen::FullPivLU<MatrixXd> lu(state.P);
  if (!lu.isInvertible()) throw NumericError("lyapunov_energy: P is singular");
  const VectorXd err = state.xi - true_xi;
  return err.dot(lu.solve(err));
}

MatrixXd extended_error_system(const MatrixXd& A, const MatrixXd& K, const MatrixXd& H,
                               const MatrixXd& M, const MatrixXd& C, const MatrixXd& S,
                               const MatrixXd& N_term) {
  const Eigen::Index m = M.rows();
  const Eigen::Index d = A.rows();
  if (M.cols() != m || C.rows() != m || S.rows() != m || N_term.rows() != m ||
      K.rows() != d || H.cols() != d || K.cols() != H.rows()) {
    throw ConfigError("extended_error_system: inconsistent dimensions");
  }
  const MatrixXd Minv = M.inverse();
  MatrixXd E = MatrixXd::Zero(m, d);
  E.col(d - 1).setOnes();

  MatrixXd Abar = MatrixXd::Zero(2 * m + d, 2 * m + d);
  Abar.block(0, m, m, m) = MatrixXd::Identity(m, m);
  Abar.block(m, 0, m, m) = -Minv * N_term;
  Abar.block(m, m, m, m) = -Minv * (C + S);
  Abar.block(m, 2 * m, m, d) = Minv * E;
  Abar.block(2 * m, 2 * m, d, d) = A - K * H;
  return Abar;
}

Eigen::VectorXcd observable_spectrum(const MatrixXd& A, const MatrixXd& Cobs, double tol) {
  const Eigen::Index n = A.rows();
  // Orthonormal basis of the observable row space span{C^T, A^T C^T, ...},
  // grown one Krylov layer at a time. Stacking raw powers of A instead lets
  // the fast modes swamp the slow ones in a single relative rank test.
  MatrixXd V(n, 0);
  MatrixXd frontier = Cobs.transpose();
  while (frontier.cols() > 0 && V.cols() < n) {
    MatrixXd added(n, 0);
    for (Eigen::Index j = 0; j < frontier.cols(); ++j) {
      VectorXd c = frontier.col(j);
      const double ref = c.norm();
      if (ref == 0.0) continue;
      for (int pass = 0; pass < 2; ++pass) {
        c -= V * (V.transpose() * c);
        c -= added * (added.transpose() * c);
      }
      if (c.norm() <= tol * ref) continue;
      added.conservativeResize(n, added.cols() + 1);
      added.col(added.cols() - 1) = c.normalized();
    }
    const Eigen::Index r = V.cols();
    V.conservativeResize(n, r + added.cols());
    V.rightCols(added.cols()) = added;
    frontier = A.transpose() * added;
  }
  // The complement W of V is the unobservable subspace, which is
  // A-invariant, so V^T A W = 0 and V^T A V carries the remaining eigenvalues.
  const MatrixXd reduced = V.transpose() * A * V;
  return Eigen::EigenSolver<MatrixXd>(reduced, false).eigenvalues();
}

IntentionObserver::IntentionObserver(ObserverConfig config) : config_(std::move(config)) {
  config_.validate();
}

ObserverOutput IntentionObserver::step(const Measurement& meas, double L1, double L2, double M,
                                       double C, double dt) {
  return observer_update(state_, meas, L1, L2, M, C, config_, dt);
}

void IntentionObserver::reset() { state_ = EstimatorState{}; }

}  // namespace teleop::estimator
