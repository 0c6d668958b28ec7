#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "clfsyn/mpc_config.hpp"
#include "clfsyn/poly.hpp"

namespace clfsyn {

/// Admissible inputs {u | A u >= b}; checked non-empty and bounded at load.
struct InputPolytope {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  int input_dim() const { return static_cast<int>(A.cols()); }
  int rows() const { return static_cast<int>(A.rows()); }
  bool contains(const Eigen::VectorXd& u, double tol = 1e-9) const;
  bool is_box() const;
  /// For box-shaped polytopes built by interval_to_polytope: (lo, hi).
  std::pair<Eigen::VectorXd, Eigen::VectorXd> box_bounds() const;
  std::vector<Eigen::VectorXd> vertices() const;  // box polytopes only
};

InputPolytope interval_to_polytope(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

/// Control-affine plant  xdot = f0(x) + sum_i f_i(x) u_i.
struct ControlAffineSystem {
  int n = 0;
  int m = 0;
  std::vector<Polynomial> f0;               // n components
  std::vector<std::vector<Polynomial>> f;   // m fields, n components each
  InputPolytope U;

  Eigen::VectorXd eval_dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  /// Field components as polynomials: index 0 is the drift, 1..m the inputs.
  const std::vector<Polynomial>& field(int i) const { return i == 0 ? f0 : f[i - 1]; }
};

/// {x | p_i(x) <= 0 for all i}.
struct SemiAlgebraicSet {
  std::vector<Polynomial> constraints;

  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  bool strictly_contains(const Eigen::VectorXd& x, double margin = 1e-12) const;
  /// Axis-aligned bounding box recognized from ball / box / linear rows;
  /// nullopt when the structure is not recognized.
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> bounding_box(int dim) const;
};

SemiAlgebraicSet ball_set(const Eigen::VectorXd& center, double radius);
SemiAlgebraicSet box_set(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

enum class SpecKind { GlobalStability, LocalStability, Safety, ReachWhileStay, Funnel };

struct Specification {
  SpecKind kind = SpecKind::GlobalStability;
  SemiAlgebraicSet S;  // Local/Safety/ReachWhileStay/Funnel
  SemiAlgebraicSet I;  // Safety/ReachWhileStay/Funnel
  SemiAlgebraicSet T;  // ReachWhileStay/Funnel
  double horizon = 0.0;  // Funnel
};

/// Certificates for these kinds vanish at the origin and the loop pins
/// V_c(0) = 0; the others carry free affine parts.
bool spec_needs_origin_equality(SpecKind kind);
std::string spec_kind_name(SpecKind kind);
SpecKind spec_kind_from_name(const std::string& name);

struct VerifyOptions {
  double global_radius = 10.0;  // verification ball for GlobalStability
  double lambda_cap = 1e6;      // bound on Farkas multipliers inside relaxations
  double opt_tol = 1e-6;        // threshold slack on the relaxed optimum
  double sdp_tol = 1e-7;
};

struct ProblemSpec {
  std::string name;
  ControlAffineSystem system;
  Specification spec;
  std::vector<Polynomial> basis;  // in x, or in (x, t) for Funnel
  int relaxation_degree = 2;      // D
  double learner_box = 100.0;     // Delta
  double robustness = 1e-3;       // delta
  MpcConfig mpc;
  VerifyOptions verify;

  /// Number of certificate variables (state dim, +1 for funnel time).
  int cert_dim() const { return spec.kind == SpecKind::Funnel ? system.n + 1 : system.n; }
  int basis_size() const { return static_cast<int>(basis.size()); }
  /// Smallest admissible relaxation degree for this basis and plant.
  int min_relaxation_degree() const;
};

struct LoadError : std::runtime_error {
  explicit LoadError(const std::string& what) : std::runtime_error(what) {}
};

ProblemSpec load_problem(std::istream& in);
ProblemSpec load_problem_file(const std::string& path);
std::string serialize_problem(const ProblemSpec& ps);

// Polynomial <-> JSON-encoded coeff/exponent records (used across file formats).
std::string poly_to_json_string(const Polynomial& p);

}  // namespace clfsyn
