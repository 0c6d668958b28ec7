#pragma once

#include <string>

#include <Eigen/Dense>

namespace clfsyn {

/// MPC demonstrator tuning: forward-Euler time step, horizon length, diagonal
/// stage costs, and the inner descent budget. The terminal cost is N*diag(Q).
struct MpcConfig {
  double tau = 0.1;
  int N = 10;
  Eigen::VectorXd Qdiag;
  Eigen::VectorXd Rdiag;
  int max_iterations = 500;
  double tol = 1e-8;
  // "newton": projected Gauss-Newton with deterministic multi-start (deep
  // optimization, can land on bang-bang local solutions);
  // "gradient": single-start projected gradient (smoother policies).
  std::string step_rule = "newton";
  // rollout micro-steps per input block: 1 = plain forward Euler; larger
  // values integrate each tau-block accurately while keeping the N-input
  // decision structure and stage costs at the block boundaries.
  int substeps = 1;
  Eigen::VectorXd x_ref;  // optional steering target; empty means the origin
};

}  // namespace clfsyn
