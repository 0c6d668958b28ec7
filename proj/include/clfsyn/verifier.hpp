#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "clfsyn/system.hpp"

namespace clfsyn {

/// Indexing machinery for the moment relaxation at degree D: the joint
/// monomial vector over w = (state block, Farkas multipliers), the state-only
/// monomial vector whose outer product is the solved moment matrix, and the
/// moment (pseudo-expectation) index of state monomials up to degree 2D.
struct MomentFrame {
  int state_dim = 0;   // n, or n+1 for time-varying certificates
  int lambda_dim = 0;  // 0 for positivity-only frames
  int D = 0;

  std::vector<Monomial> w_basis;       // side s = |w_basis|
  std::vector<Monomial> x_basis;       // state-only, degree <= D
  std::vector<Monomial> moment_basis;  // state monomials, degree <= 2D
  std::map<Monomial, int, GrlexLess> w_index;
  std::map<Monomial, int, GrlexLess> moment_index;

  int side() const { return static_cast<int>(w_basis.size()); }
  int x_side() const { return static_cast<int>(x_basis.size()); }

  Eigen::MatrixXd Z0() const;  // e1 e1'
  /// Z(w) = m(w) m(w)' for a concrete joint point (state first, then lambda).
  Eigen::MatrixXd assemble(const Eigen::VectorXd& w) const;
  /// Representation of a state polynomial p as <P, Z(w)> = p(x).
  Eigen::MatrixXd rep_matrix(const Polynomial& p) const;
  /// <Lambda_l, Z> = lambda_l.
  Eigen::MatrixXd lambda_matrix(int l) const;
};

MomentFrame build_frame(int state_dim, int lambda_dim, int D);

enum class TaskKind { Positivity, Decrease };
enum class CounterexampleMode { First, MaxViolation };

struct MomentCounterexample {
  TaskKind kind = TaskKind::Positivity;
  int task_id = 0;
  Eigen::MatrixXd Z;             // lifted matrix on the task's frame
  Eigen::VectorXd state;         // pi(Z): degree-one state entries (time excluded)
  double time = 0.0;             // funnel tasks: lifted time coordinate
  double gamma = 0.0;            // violation slack
  bool spurious = false;         // produced by a solver that did not converge
  bool atomized = false;         // exact lift of a recovered concrete state

  // Cut material for the learner: "functional' c > 0" is the compatible side.
  Eigen::VectorXd value_functional;
  bool has_decrease = false;     // query the demonstrator, then add the lie row
  bool positivity_row_valid = false;
  Eigen::VectorXd lie_drift;     // per-basis lift of the drift Lie derivative
  Eigen::MatrixXd lie_inputs;    // r x m per-basis per-input lifts
  Eigen::VectorXd lambda;        // Farkas multipliers at the solution

  /// Decrease-row functional for a demonstrated input u (compatible side > 0).
  Eigen::VectorXd decrease_functional(const Eigen::VectorXd& u) const {
    return -(lie_drift + lie_inputs * u);
  }
};

struct TaskReport {
  TaskKind kind = TaskKind::Positivity;
  int id = 0;
  double optimum = 0.0;  // relaxed optimum of <I, Z>
  bool passed = false;
  bool numerical_trouble = false;
};

struct Verified {
  std::vector<TaskReport> transcript;
};

using VerifyResult = std::variant<Verified, MomentCounterexample>;

class Verifier {
 public:
  explicit Verifier(const ProblemSpec& problem);
  ~Verifier();
  Verifier(Verifier&&) noexcept;
  Verifier& operator=(Verifier&&) noexcept;

  /// Check the candidate against every task; positivity tasks run first.
  VerifyResult verify(const Eigen::VectorXd& c,
                      CounterexampleMode mode = CounterexampleMode::First) const;

  int positivity_task_count() const;
  int decrease_task_count() const;
  /// Solve a single task (positivity tasks come first in the global order).
  TaskReport solve_task(int task_index, const Eigen::VectorXd& c,
                        std::optional<MomentCounterexample>* ce = nullptr) const;

  const MomentFrame& positivity_frame() const;
  const MomentFrame& decrease_frame() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Exact Farkas oracle: true iff no u in U gives a decrease of V at x
/// (the multiplier LP is feasible).
bool farkas_feasible(const Eigen::VectorXd& x, const Polynomial& V,
                     const ControlAffineSystem& system);

/// min_{u in U} (a + b'u) and its minimizer (closed form for boxes, LP else).
std::pair<double, Eigen::VectorXd> min_input_rate(const ControlAffineSystem& system, double a,
                                                  const Eigen::VectorXd& b);

struct AuditReport {
  int samples = 0;
  int failures = 0;
  double worst_positivity = std::numeric_limits<double>::infinity();  // min observed margin
  double worst_decrease = std::numeric_limits<double>::infinity();
};

/// Sampling soundness audit of a certificate over the specification domains.
AuditReport audit_certificate(const ProblemSpec& problem, const Polynomial& V, int samples,
                              unsigned seed);

/// Moment-relaxation emptiness certificate for {x : q(x) >= 0 for all q}:
/// true when the relaxed feasible set admits no mass beyond the trivial point.
bool relaxed_set_empty(const std::vector<Polynomial>& supports_ge0, int dim, int D,
                       double sdp_tol = 1e-7, double opt_tol = 1e-6);

}  // namespace clfsyn
