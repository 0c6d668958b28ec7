#include "clfsyn/poly.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace clfsyn {

Monomial Monomial::unit(int dimension, int var, int power) {
  Monomial m = constant(dimension);
  m.exponents.at(var) = power;
  return m;
}

int Monomial::degree() const {
  return std::accumulate(exponents.begin(), exponents.end(), 0);
}

Monomial Monomial::times(const Monomial& other) const {
  if (other.dimension() != dimension()) throw std::invalid_argument("monomial dimension mismatch");
  Monomial out = *this;
  for (int i = 0; i < dimension(); ++i) out.exponents[i] += other.exponents[i];
  return out;
}

double Monomial::eval(const Eigen::VectorXd& x) const {
  if (x.size() != dimension()) throw std::invalid_argument("monomial/point dimension mismatch");
  double v = 1.0;
  for (int i = 0; i < dimension(); ++i) {
    for (int k = 0; k < exponents[i]; ++k) v *= x[i];
  }
  return v;
}

bool GrlexLess::operator()(const Monomial& a, const Monomial& b) const {
  const int da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  // Same degree: the lexicographically larger exponent vector comes first.
  return a.exponents > b.exponents;
}

Polynomial::Polynomial(int dimension, TermMap terms) : dimension_(dimension), terms_(std::move(terms)) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (it->first.dimension() != dimension_) throw std::invalid_argument("polynomial term dimension mismatch");
    if (it->second == 0.0) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
}

Polynomial Polynomial::constant(int dimension, double value) {
  Polynomial p(dimension);
  p.add_term(Monomial::constant(dimension), value);
  return p;
}

Polynomial Polynomial::variable(int dimension, int var) {
  Polynomial p(dimension);
  p.add_term(Monomial::unit(dimension, var), 1.0);
  return p;
}

Polynomial Polynomial::from_monomial(const Monomial& m, double coeff) {
  Polynomial p(m.dimension());
  p.add_term(m, coeff);
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Monomial& m, double coeff) {
  if (m.dimension() != dimension_) throw std::invalid_argument("polynomial term dimension mismatch");
  auto [it, inserted] = terms_.emplace(m, coeff);
  if (!inserted) it->second += coeff;
  if (it->second == 0.0) terms_.erase(it);
}

double Polynomial::eval(const Eigen::VectorXd& x) const {
  if (x.size() != dimension_) throw std::invalid_argument("polynomial/point dimension mismatch");
  double v = 0.0;
  for (const auto& [m, c] : terms_) v += c * m.eval(x);
  return v;
}

Polynomial Polynomial::partial(int var) const {
  Polynomial out(dimension_);
  for (const auto& [m, c] : terms_) {
    const int e = m.exponents[var];
    if (e == 0) continue;
    Monomial dm = m;
    dm.exponents[var] = e - 1;
    out.add_term(dm, c * e);
  }
  return out;
}

std::vector<Polynomial> Polynomial::gradient() const {
  std::vector<Polynomial> g;
  g.reserve(dimension_);
  for (int i = 0; i < dimension_; ++i) g.push_back(partial(i));
  return g;
}

Polynomial Polynomial::substitute(int var, double value) const {
  Polynomial out(dimension_);
  for (const auto& [m, c] : terms_) {
    const int e = m.exponents[var];
    Monomial sm = m;
    sm.exponents[var] = 0;
    out.add_term(sm, c * std::pow(value, e));
  }
  return out;
}

Polynomial Polynomial::lifted(int new_dimension) const {
  if (new_dimension < dimension_) throw std::invalid_argument("lifted: dimension must not shrink");
  Polynomial out(new_dimension);
  for (const auto& [m, c] : terms_) {
    Monomial lm = m;
    lm.exponents.resize(new_dimension, 0);
    out.add_term(lm, c);
  }
  return out;
}

Polynomial Polynomial::operator-() const { return (*this) * -1.0; }

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial out = *this;
  out += other;
  return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (other.dimension_ != dimension_) throw std::invalid_argument("polynomial dimension mismatch");
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

Polynomial Polynomial::operator-(const Polynomial& other) const { return *this + (-other); }

Polynomial Polynomial::operator*(const Polynomial& other) const {
  if (other.dimension_ != dimension_) throw std::invalid_argument("polynomial dimension mismatch");
  Polynomial out(dimension_);
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : other.terms_) out.add_term(ma.times(mb), ca * cb);
  }
  return out;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial out(dimension_);
  if (s == 0.0) return out;
  for (const auto& [m, c] : terms_) out.add_term(m, c * s);
  return out;
}

bool Polynomial::same_terms(const Polynomial& other, double tol) const {
  if (other.dimension_ != dimension_) return false;
  Polynomial diff = *this - other;
  for (const auto& [m, c] : diff.terms()) {
    if (std::abs(c) > tol) return false;
  }
  return true;
}

std::string Polynomial::str(const std::vector<std::string>& names) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << "-";
    first = false;
    const double a = std::abs(c);
    const bool is_const = m.is_constant();
    if (a != 1.0 || is_const) os << a;
    bool printed = false;
    for (int i = 0; i < m.dimension(); ++i) {
      if (m.exponents[i] == 0) continue;
      if (printed || (a != 1.0 && !is_const)) os << "*";
      if (i < static_cast<int>(names.size())) os << names[i];
      else os << "x" << (i + 1);
      if (m.exponents[i] > 1) os << "^" << m.exponents[i];
      printed = true;
    }
  }
  return os.str();
}

namespace {

void enumerate_rec(int dimension, int var, int remaining, Monomial& current, std::vector<Monomial>& out) {
  if (var == dimension - 1) {
    current.exponents[var] = remaining;
    out.push_back(current);
    current.exponents[var] = 0;
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current.exponents[var] = e;
    enumerate_rec(dimension, var + 1, remaining - e, current, out);
  }
  current.exponents[var] = 0;
}

}  // namespace

std::vector<Monomial> monomial_basis(int dimension, int max_degree) {
  if (dimension < 1) throw std::invalid_argument("monomial_basis: dimension must be >= 1");
  if (max_degree < 0) throw std::invalid_argument("monomial_basis: negative degree");
  std::vector<Monomial> out;
  Monomial current = Monomial::constant(dimension);
  for (int d = 0; d <= max_degree; ++d) enumerate_rec(dimension, 0, d, current, out);
  return out;
}

Polynomial lie_derivative(const Polynomial& V, std::span<const Polynomial> field) {
  if (static_cast<int>(field.size()) != V.dimension())
    throw std::invalid_argument("lie_derivative: field length must equal dimension");
  Polynomial out(V.dimension());
  for (int i = 0; i < V.dimension(); ++i) out += V.partial(i) * field[i];
  return out;
}

Polynomial linear_combination(const Eigen::VectorXd& c, std::span<const Polynomial> basis) {
  if (static_cast<std::size_t>(c.size()) != basis.size())
    throw std::invalid_argument("linear_combination: length mismatch");
  if (basis.empty()) throw std::invalid_argument("linear_combination: empty basis");
  Polynomial out(basis[0].dimension());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (basis[k].dimension() != out.dimension())
      throw std::invalid_argument("linear_combination: basis dimension mismatch");
    out += basis[k] * c[static_cast<Eigen::Index>(k)];
  }
  return out;
}

}  // namespace clfsyn
