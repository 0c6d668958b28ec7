#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace clfsyn {

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalTrouble };

struct SolveOutcome {
  SolveStatus status = SolveStatus::NumericalTrouble;
  Eigen::VectorXd x;        // primal solution when status == Optimal
  Eigen::MatrixXd Z;        // matrix solution for SDP solves
  double objective = 0.0;
  double dual_objective = 0.0;
  double achieved_tol = 0.0;
  int iterations = 0;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

/// maximize  objective'x  subject to  G x >= h,  E x = d,  lo <= x <= hi.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  Eigen::MatrixXd E;  // may be 0 x n
  Eigen::VectorXd d;
  std::optional<Eigen::VectorXd> lower;
  std::optional<Eigen::VectorXd> upper;

  int num_vars() const { return static_cast<int>(objective.size()); }
};

SolveOutcome solve_lp(const LinearProgram& lp, double tolerance = 1e-8);

enum class ConstraintSense { Eq, Le, Ge };

struct SdpConstraint {
  Eigen::MatrixXd A;  // symmetric, same side as Z
  ConstraintSense sense = ConstraintSense::Eq;
  double rhs = 0.0;
};

/// One symmetric matrix variable Z:
///   maximize <C, Z>  subject to  <A_k, Z> {=,<=,>=} b_k  and  Z >= Z_base.
struct SemidefiniteProgram {
  int side = 0;
  Eigen::MatrixXd C;
  std::vector<SdpConstraint> constraints;
  Eigen::MatrixXd Z_base;  // empty means 0
};

SolveOutcome solve_sdp(const SemidefiniteProgram& sdp, double tolerance = 1e-7);

struct Ellipsoid {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;  // symmetric PD; ellipsoid = {center + shape*v : |v| <= 1}
  double log_det = 0.0;
};

struct MveResult {
  SolveStatus status = SolveStatus::NumericalTrouble;
  Ellipsoid ellipsoid;
};

/// Maximum-volume ellipsoid inscribed in {x : rows_A x <= rows_b}. The region
/// must be bounded and full-dimensional (callers factor out the affine hull).
MveResult max_volume_ellipsoid(const Eigen::MatrixXd& rows_A, const Eigen::VectorXd& rows_b,
                               double tolerance = 1e-7);

/// Chebyshev center of {x : rows_A x <= rows_b} with unit-normalized rows
/// handled internally; returns (center, radius).
struct ChebyshevResult {
  SolveStatus status = SolveStatus::NumericalTrouble;
  Eigen::VectorXd center;
  double radius = 0.0;
};
ChebyshevResult chebyshev_center(const Eigen::MatrixXd& rows_A, const Eigen::VectorXd& rows_b,
                                 double tolerance = 1e-8);

/// Plain-text dump of a program for offline cross-checking.
std::string debug_dump(const LinearProgram& lp);
std::string debug_dump(const SemidefiniteProgram& sdp);

/// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

}  // namespace clfsyn
