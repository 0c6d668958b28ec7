#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace clfsyn {

/// Exponent vector of a single monomial. The length of `exponents` is the
/// ambient dimension the monomial was built for; the total degree is the sum
/// of its entries.
struct Monomial {
  std::vector<int> exponents;

  Monomial() = default;
  explicit Monomial(std::vector<int> e) : exponents(std::move(e)) {}
  static Monomial constant(int dimension) { return Monomial(std::vector<int>(dimension, 0)); }
  static Monomial unit(int dimension, int var, int power = 1);

  int dimension() const { return static_cast<int>(exponents.size()); }
  int degree() const;
  bool is_constant() const { return degree() == 0; }
  Monomial times(const Monomial& other) const;
  double eval(const Eigen::VectorXd& x) const;

  bool operator==(const Monomial& other) const { return exponents == other.exponents; }
};

/// Graded lexicographic order: lower total degree first; within a degree,
/// larger exponent vectors (lexicographically) first, so that x1^2 precedes
/// x1*x2 precedes x2^2.
struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

/// Sparse multivariate polynomial with real coefficients. Terms with
/// coefficient exactly zero are never stored; every stored monomial shares
/// the polynomial's dimension.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GrlexLess>;

  Polynomial() : dimension_(0) {}
  explicit Polynomial(int dimension) : dimension_(dimension) {}
  Polynomial(int dimension, TermMap terms);

  static Polynomial constant(int dimension, double value);
  static Polynomial variable(int dimension, int var);
  static Polynomial from_monomial(const Monomial& m, double coeff = 1.0);

  int dimension() const { return dimension_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;
  std::size_t term_count() const { return terms_.size(); }

  double coefficient(const Monomial& m) const;
  void add_term(const Monomial& m, double coeff);

  double eval(const Eigen::VectorXd& x) const;

  Polynomial partial(int var) const;
  std::vector<Polynomial> gradient() const;

  /// Substitute variable `var` by the constant `value`; the result keeps the
  /// ambient dimension (the substituted variable simply no longer occurs).
  Polynomial substitute(int var, double value) const;

  /// Extend to a larger ambient dimension, keeping existing variables in place.
  Polynomial lifted(int new_dimension) const;

  Polynomial operator-() const;
  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator*(double s) const;
  Polynomial& operator+=(const Polynomial& other);

  bool same_terms(const Polynomial& other, double tol = 0.0) const;
  std::string str(const std::vector<std::string>& names = {}) const;

 private:
  int dimension_;
  TermMap terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

/// All monomials of total degree <= max_degree in `dimension` variables, in
/// graded lexicographic order starting from the constant monomial.
std::vector<Monomial> monomial_basis(int dimension, int max_degree);

/// Lie derivative of V along the vector field: sum_i dV/dx_i * field_i.
Polynomial lie_derivative(const Polynomial& V, std::span<const Polynomial> field);

/// Expanded sum  c_1 g_1 + ... + c_r g_r  with zero-coefficient terms dropped.
Polynomial linear_combination(const Eigen::VectorXd& c, std::span<const Polynomial> basis);

}  // namespace clfsyn
