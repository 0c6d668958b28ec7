#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace clfsyn {

/// Cone layout for the slack vector s: first `nonneg` scalar entries, then one
/// svec block per PSD side listed in `psd`.
struct ConeSpec {
  int nonneg = 0;
  std::vector<int> psd;

  int svec_dim() const;
  int barrier_degree() const;
};

/// Conic program in the form
///     minimize    c'x
///     subject to  G x + s = h,  s in K
///                 A x = b
/// with free x and K = R+^l x PSD(p1) x PSD(p2) x ...
struct ConicProblem {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> G;
  Eigen::VectorXd h;
  Eigen::SparseMatrix<double> A;  // may have zero rows
  Eigen::VectorXd b;
  ConeSpec cone;
};

enum class ConicStatus { Optimal, PrimalInfeasible, DualInfeasible, NumericalTrouble };

struct ConicResult {
  ConicStatus status = ConicStatus::NumericalTrouble;
  Eigen::VectorXd x, s, z, y;
  double pobj = 0.0, dobj = 0.0;
  double gap = 0.0, rel_gap = 0.0, pres = 0.0, dres = 0.0;
  int iterations = 0;
};

struct ConicOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iterations = 100;
  double step_fraction = 0.99;
};

ConicResult solve_conic(const ConicProblem& prob, const ConicOptions& opts = {});

// svec packing: lower-triangle scan (i >= j), off-diagonal entries scaled by
// sqrt(2) so that svec(X)'svec(Y) = <X, Y>.
int svec_size(int side);
int svec_index(int i, int j);
Eigen::VectorXd mat_to_svec(const Eigen::MatrixXd& M);
Eigen::MatrixXd svec_to_mat(const Eigen::VectorXd& v, int side);

}  // namespace clfsyn
