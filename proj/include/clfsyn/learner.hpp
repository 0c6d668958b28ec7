#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clfsyn/opt.hpp"
#include "clfsyn/poly.hpp"

namespace clfsyn {

enum class CutKind { Initial, Positivity, Decrease };

/// One strict half-space a'c > b over the certificate coefficients, stored
/// unit-normalized with its provenance.
struct RegionRow {
  Eigen::VectorXd a;
  double b = 0.0;
  CutKind kind = CutKind::Initial;
  int iteration = -1;
};

struct InscribedEllipsoid {
  Eigen::VectorXd center;      // reduced coordinates
  Eigen::MatrixXd shape;
  double log_volume = 0.0;     // log(gamma_d) + log det(shape)
  int reduced_dim = 0;
};

enum class CandidateStrategy { MVE, Chebyshev, Analytic };

enum class RegionStatus { Ok, Empty, Numerical };

struct CandidateProposal {
  RegionStatus status = RegionStatus::Numerical;
  Eigen::VectorXd c;                          // full coefficient space
  std::optional<InscribedEllipsoid> ellipsoid;  // present for the MVE strategy
};

/// The learner's polytope of observation-compatible coefficient vectors:
/// box (-Delta, Delta)^r, affine equality rows, and accumulated strict cuts.
/// Strict cuts are realized as closed rows with an explicit margin after unit
/// normalization.
class CandidateRegion {
 public:
  static constexpr double kStrictMargin = 1e-6;

  CandidateRegion() = default;
  CandidateRegion(int r, double box_delta);

  int full_dim() const { return r_; }
  int reduced_dim() const { return r_ - static_cast<int>(eq_rows_.size()); }
  double box_delta() const { return delta_; }
  const std::vector<RegionRow>& cut_rows() const { return rows_; }
  int equality_count() const { return static_cast<int>(eq_rows_.size()); }

  /// Add an affine equality a'c = b (e.g. V_c(0) = 0); refactors the hull.
  void add_equality(const Eigen::VectorXd& a, double b);

  /// Add a strict cut  functional'c > 0. Returns false when the functional is
  /// (numerically) zero or the row duplicates an existing one.
  bool add_cut(const Eigen::VectorXd& functional, CutKind kind, int iteration);

  /// True when c satisfies every stored closed row (and equalities) within tol.
  bool contains(const Eigen::VectorXd& c, double tol = 1e-9) const;
  /// Signed margin of the most violated row at c (negative = excluded).
  double worst_row_margin(const Eigen::VectorXd& c) const;

  CandidateProposal propose(CandidateStrategy strategy) const;

  /// Detect a region embedded in a lower-dimensional subspace (MVE shape
  /// collapsed); moves near-tight rows into the equality set. Returns true if
  /// the hull was refactored.
  bool refactor_affine_hull();

  /// Rows in reduced coordinates including the box faces (A z <= b closed,
  /// with the strict margin applied to cut rows).
  void reduced_rows(Eigen::MatrixXd& A, Eigen::VectorXd& b) const;

  Eigen::VectorXd to_full(const Eigen::VectorXd& z) const;     // c = c0 + N z
  Eigen::VectorXd to_reduced(const Eigen::VectorXd& c) const;  // z = N'(c - c0)

  std::string dump() const;

 private:
  void recompute_basis();

  int r_ = 0;
  double delta_ = 0.0;
  std::vector<RegionRow> rows_;
  std::vector<std::pair<Eigen::VectorXd, double>> eq_rows_;
  Eigen::VectorXd c0_;  // particular solution of the equalities
  Eigen::MatrixXd N_;   // orthonormal nullspace basis (r x d)
};

CandidateRegion init_region(std::span<const Polynomial> basis, double box_delta,
                            bool pin_origin = true);

/// Termination test Vol(E) < gamma_d * delta^d (strict).
bool should_terminate(const InscribedEllipsoid& e, double delta);

/// Ceiling of d (log Delta - log delta) / -log(8/9).
long iteration_bound(int d, double Delta, double delta);

}  // namespace clfsyn
