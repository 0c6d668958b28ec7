#pragma once

#include <iosfwd>
#include <memory>

#include "clfsyn/mpc_config.hpp"
#include "clfsyn/system.hpp"

namespace clfsyn {

struct Demonstration {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  double cost = 0.0;
};

/// Black-box control oracle: state in, admissible input out.
class Demonstrator {
 public:
  virtual ~Demonstrator() = default;
  virtual Eigen::VectorXd demonstrate_input(const Eigen::VectorXd& x) = 0;
};

/// Forward-Euler step x + tau f(x, u).
Eigen::VectorXd discrete_step(const ControlAffineSystem& system, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u, double tau);

/// Rollout cost sum_{i=1}^{N-1} x_i'Q x_i + sum_{i=0}^{N-1} u_i'R u_i + N x_N'Q x_N
/// (states measured relative to cfg.x_ref when set).
double rollout_cost(const ControlAffineSystem& system, const Eigen::VectorXd& x0,
                    const std::vector<Eigen::VectorXd>& u_seq, const MpcConfig& cfg);

/// Nonlinear MPC over the Euler-discretized plant, solved by projected
/// gradient descent with an analytic adjoint and Armijo backtracking. The
/// returned input is the first element of the optimized sequence.
class MpcDemonstrator : public Demonstrator {
 public:
  MpcDemonstrator(ControlAffineSystem system, MpcConfig cfg);
  Demonstration demonstrate(const Eigen::VectorXd& x) const;
  Eigen::VectorXd demonstrate_input(const Eigen::VectorXd& x) override;

 private:
  Eigen::VectorXd block_step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  double block_cost(const Eigen::VectorXd& x0, const std::vector<Eigen::VectorXd>& u_seq) const;
  Demonstration descend(const Eigen::VectorXd& x, const Eigen::VectorXd& u_init) const;
  Demonstration descend_newton(const Eigen::VectorXd& x, const Eigen::VectorXd& u_init) const;
  Eigen::VectorXd descend_newton_seq(const Eigen::VectorXd& x, const Eigen::VectorXd& seq_init) const;
  Demonstration descend_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& u_init) const;
  ControlAffineSystem system_;
  MpcConfig cfg_;
  std::vector<std::vector<Polynomial>> jac_f0_;             // d f0_i / d x_j
  std::vector<std::vector<std::vector<Polynomial>>> jac_f_;  // per input field
};

/// Line-delimited stdio protocol: writes the state as space-separated
/// decimals, reads the input vector likewise.
class ExternalDemonstrator : public Demonstrator {
 public:
  ExternalDemonstrator(std::istream& in, std::ostream& out, int input_dim);
  Eigen::VectorXd demonstrate_input(const Eigen::VectorXd& x) override;

 private:
  std::istream& in_;
  std::ostream& out_;
  int input_dim_;
};

/// Euclidean projection onto the input polytope (clamping for boxes).
Eigen::VectorXd project_input(const InputPolytope& U, const Eigen::VectorXd& u);

}  // namespace clfsyn
