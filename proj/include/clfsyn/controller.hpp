#pragma once

#include <iosfwd>
#include <optional>

#include "clfsyn/system.hpp"

namespace clfsyn {

enum class FeedbackKind { Sontag, PolytopeMinSelect };

/// Feedback extracted from a certificate. Sontag's formula treats the inputs
/// as unconstrained; min-select picks the admissible input minimizing the
/// certificate's rate of change.
struct FeedbackLaw {
  FeedbackKind kind = FeedbackKind::PolytopeMinSelect;
  Polynomial V;                 // in x, or (x, t) for time-varying certificates
  ControlAffineSystem system;
};

Eigen::VectorXd sontag_input(const Polynomial& V, const ControlAffineSystem& system,
                             const Eigen::VectorXd& x, double t = 0.0);

/// argmin over U of dV/dt(x, u); ties break to the lexicographically smallest
/// optimal vertex.
Eigen::VectorXd minselect_input(const Polynomial& V, const ControlAffineSystem& system,
                                const Eigen::VectorXd& x, double t = 0.0);

Eigen::VectorXd feedback_input(const FeedbackLaw& law, const Eigen::VectorXd& x, double t = 0.0);

struct SimulationTrace {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;  // law evaluated at each sample
  std::vector<double> v_values;
  bool diverged = false;
};

/// Fixed-step classical Runge-Kutta integration of the closed loop; the input
/// is recomputed at every stage evaluation.
SimulationTrace simulate(const ControlAffineSystem& system, const FeedbackLaw& law,
                         const Eigen::VectorXd& x0, double duration, double dt);

struct DecreaseAuditReport {
  long pairs_checked = 0;
  long increases = 0;         // steps with V rising by more than the tolerance
  double decrease_fraction = 1.0;
  double max_increase = 0.0;  // largest observed per-step rise
};

/// Fraction of consecutive samples with V strictly decreasing outside the
/// exclusion region (the target set when given, else a ball of radius
/// `exclude_radius` at the origin).
DecreaseAuditReport decrease_audit(const SimulationTrace& trace, const Polynomial& V,
                                   const SemiAlgebraicSet* target = nullptr,
                                   double exclude_radius = 0.0, double tol = 1e-9);

/// Largest beta with {V <= beta} certified inside S by relaxed emptiness of
/// {V <= beta, p_i >= eps} per S-constraint; 0 when nothing certifies.
double beta_star(const Polynomial& V, const SemiAlgebraicSet& S, int D, double rel_tol = 1e-3);

/// CSV export with header t,x1..xn,u1..um,V.
void trace_to_csv(const SimulationTrace& trace, std::ostream& os);

}  // namespace clfsyn
