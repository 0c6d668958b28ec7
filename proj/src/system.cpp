#include "clfsyn/system.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "clfsyn/opt.hpp"

namespace clfsyn {

using nlohmann::json;

bool InputPolytope::contains(const Eigen::VectorXd& u, double tol) const {
  return ((A * u - b).array() >= -tol).all();
}

bool InputPolytope::is_box() const {
  if (rows() != 2 * input_dim()) return false;
  for (int i = 0; i < rows(); ++i) {
    int nz = 0;
    for (int j = 0; j < input_dim(); ++j) {
      if (A(i, j) != 0.0) ++nz;
    }
    if (nz != 1) return false;
  }
  return true;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> InputPolytope::box_bounds() const {
  const int m = input_dim();
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(m, -std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
  for (int i = 0; i < rows(); ++i) {
    for (int j = 0; j < m; ++j) {
      const double a = A(i, j);
      if (a == 0.0) continue;
      if (a > 0) lo[j] = std::max(lo[j], b[i] / a);
      else hi[j] = std::min(hi[j], b[i] / a);
    }
  }
  return {lo, hi};
}

std::vector<Eigen::VectorXd> InputPolytope::vertices() const {
  if (!is_box()) throw std::runtime_error("vertices: only box input polytopes supported");
  auto [lo, hi] = box_bounds();
  const int m = input_dim();
  std::vector<Eigen::VectorXd> out;
  for (int mask = 0; mask < (1 << m); ++mask) {
    Eigen::VectorXd v(m);
    for (int j = 0; j < m; ++j) v[j] = (mask >> j) & 1 ? hi[j] : lo[j];
    out.push_back(v);
  }
  return out;
}

InputPolytope interval_to_polytope(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  const int m = static_cast<int>(lo.size());
  if (hi.size() != m) throw std::invalid_argument("interval_to_polytope: length mismatch");
  for (int i = 0; i < m; ++i) {
    if (!(lo[i] < hi[i])) {
      throw std::invalid_argument("interval_to_polytope: lo >= hi in component " + std::to_string(i));
    }
  }
  InputPolytope P;
  P.A = Eigen::MatrixXd::Zero(2 * m, m);
  P.b.resize(2 * m);
  for (int i = 0; i < m; ++i) {
    P.A(i, i) = 1.0;
    P.b[i] = lo[i];
    P.A(m + i, i) = -1.0;
    P.b[m + i] = -hi[i];
  }
  return P;
}

Eigen::VectorXd ControlAffineSystem::eval_dynamics(const Eigen::VectorXd& x,
                                                   const Eigen::VectorXd& u) const {
  Eigen::VectorXd dx(n);
  for (int i = 0; i < n; ++i) {
    double v = f0[i].eval(x);
    for (int k = 0; k < m; ++k) v += f[k][i].eval(x) * u[k];
    dx[i] = v;
  }
  return dx;
}

bool SemiAlgebraicSet::contains(const Eigen::VectorXd& x, double tol) const {
  for (const auto& p : constraints) {
    if (p.eval(x) > tol) return false;
  }
  return true;
}

bool SemiAlgebraicSet::strictly_contains(const Eigen::VectorXd& x, double margin) const {
  for (const auto& p : constraints) {
    if (p.eval(x) >= -margin) return false;
  }
  return true;
}

namespace {

// Try to read a single constraint as an axis interval or a ball; returns
// per-axis [lo, hi] contributions or nothing.
bool constraint_box(const Polynomial& p, int dim, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
  // classify: max degree per variable, no cross terms allowed for recognition
  double quad_coeff = 0.0;
  bool common_quad = true;
  std::vector<double> quad(dim, 0.0), lin(dim, 0.0);
  double cst = 0.0;
  for (const auto& [mo, c] : p.terms()) {
    const int deg = mo.degree();
    if (deg == 0) {
      cst = c;
      continue;
    }
    int var = -1, e = 0;
    for (int i = 0; i < dim; ++i) {
      if (mo.exponents[i] > 0) {
        if (var >= 0) return false;  // cross term
        var = i;
        e = mo.exponents[i];
      }
    }
    if (e == 1) lin[var] = c;
    else if (e == 2) quad[var] = c;
    else return false;
  }
  int nquad = 0;
  for (int i = 0; i < dim; ++i) {
    if (quad[i] != 0.0) {
      ++nquad;
      if (quad_coeff == 0.0) quad_coeff = quad[i];
      else if (std::abs(quad[i] - quad_coeff) > 1e-12 * std::abs(quad_coeff)) common_quad = false;
    }
  }
  if (nquad == 0) {
    // linear row a'x + cst <= 0: bounds one axis if only one nonzero entry
    int var = -1;
    for (int i = 0; i < dim; ++i) {
      if (lin[i] != 0.0) {
        if (var >= 0) return false;
        var = i;
      }
    }
    if (var < 0) return false;
    if (lin[var] > 0) hi[var] = std::min(hi[var], -cst / lin[var]);
    else lo[var] = std::max(lo[var], -cst / lin[var]);
    return true;
  }
  if (nquad == 1) {
    // a x^2 + b x + c <= 0 with a > 0: between the roots
    int var = 0;
    while (quad[var] == 0.0) ++var;
    const double a = quad[var], bq = lin[var];
    if (a <= 0.0) return false;
    const double disc = bq * bq - 4 * a * cst;
    if (disc < 0.0) return false;
    lo[var] = std::max(lo[var], (-bq - std::sqrt(disc)) / (2 * a));
    hi[var] = std::min(hi[var], (-bq + std::sqrt(disc)) / (2 * a));
    return true;
  }
  // ball a(|x - c|^2 - r^2) <= 0
  if (nquad != dim || !common_quad || quad_coeff <= 0.0) return false;
  Eigen::VectorXd center(dim);
  for (int i = 0; i < dim; ++i) center[i] = -lin[i] / (2 * quad_coeff);
  const double r2 = center.squaredNorm() - cst / quad_coeff;
  if (r2 < 0.0) return false;
  const double r = std::sqrt(r2);
  for (int i = 0; i < dim; ++i) {
    lo[i] = std::max(lo[i], center[i] - r);
    hi[i] = std::min(hi[i], center[i] + r);
  }
  return true;
}

}  // namespace

std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> SemiAlgebraicSet::bounding_box(int dim) const {
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim, -std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  for (const auto& p : constraints) constraint_box(p, dim, lo, hi);
  for (int i = 0; i < dim; ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || lo[i] > hi[i]) return std::nullopt;
  }
  return std::make_pair(lo, hi);
}

SemiAlgebraicSet ball_set(const Eigen::VectorXd& center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("ball_set: radius must be positive");
  const int dim = static_cast<int>(center.size());
  Polynomial p(dim);
  for (int i = 0; i < dim; ++i) {
    p.add_term(Monomial::unit(dim, i, 2), 1.0);
    if (center[i] != 0.0) p.add_term(Monomial::unit(dim, i, 1), -2.0 * center[i]);
  }
  p.add_term(Monomial::constant(dim), center.squaredNorm() - radius * radius);
  return SemiAlgebraicSet{{p}};
}

SemiAlgebraicSet box_set(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  const int dim = static_cast<int>(lo.size());
  SemiAlgebraicSet s;
  for (int i = 0; i < dim; ++i) {
    // (x_i - lo)(x_i - hi) <= 0
    Polynomial p(dim);
    p.add_term(Monomial::unit(dim, i, 2), 1.0);
    p.add_term(Monomial::unit(dim, i, 1), -(lo[i] + hi[i]));
    p.add_term(Monomial::constant(dim), lo[i] * hi[i]);
    s.constraints.push_back(p);
  }
  return s;
}

bool spec_needs_origin_equality(SpecKind kind) {
  return kind == SpecKind::GlobalStability || kind == SpecKind::LocalStability ||
         kind == SpecKind::ReachWhileStay;
}

std::string spec_kind_name(SpecKind kind) {
  switch (kind) {
    case SpecKind::GlobalStability: return "global_stability";
    case SpecKind::LocalStability: return "local_stability";
    case SpecKind::Safety: return "safety";
    case SpecKind::ReachWhileStay: return "reach_while_stay";
    case SpecKind::Funnel: return "funnel";
  }
  return "?";
}

SpecKind spec_kind_from_name(const std::string& name) {
  if (name == "global_stability") return SpecKind::GlobalStability;
  if (name == "local_stability") return SpecKind::LocalStability;
  if (name == "safety") return SpecKind::Safety;
  if (name == "reach_while_stay") return SpecKind::ReachWhileStay;
  if (name == "funnel") return SpecKind::Funnel;
  throw LoadError("schema error: unknown spec type '" + name + "'");
}

int ProblemSpec::min_relaxation_degree() const {
  int max_deg = 0;
  const int n = system.n;
  for (const auto& g : basis) {
    max_deg = std::max(max_deg, g.degree());
    std::vector<Polynomial> grad_x;
    for (int i = 0; i < n; ++i) grad_x.push_back(g.partial(i));
    if (spec.kind == SpecKind::Funnel) max_deg = std::max(max_deg, g.partial(n).degree());
    for (int fi = 0; fi <= system.m; ++fi) {
      const auto& field = system.field(fi);
      Polynomial lie(g.dimension());
      for (int i = 0; i < n; ++i) {
        lie += grad_x[i] * field[i].lifted(g.dimension());
      }
      max_deg = std::max(max_deg, lie.degree());
    }
  }
  return (max_deg + 1) / 2;
}

namespace {

Polynomial poly_from_json(const json& j, int dim, const std::string& where) {
  if (!j.is_array()) throw LoadError("schema error: polynomial must be an array at " + where);
  Polynomial p(dim);
  for (const auto& term : j) {
    if (!term.contains("coeff") || !term.contains("exp")) {
      throw LoadError("schema error: polynomial term needs coeff/exp at " + where);
    }
    const auto& ex = term["exp"];
    if (!ex.is_array() || static_cast<int>(ex.size()) != dim) {
      throw LoadError("schema error: exponent length mismatch at " + where);
    }
    Monomial m = Monomial::constant(dim);
    for (int i = 0; i < dim; ++i) {
      m.exponents[i] = ex[i].get<int>();
      if (m.exponents[i] < 0) throw LoadError("schema error: negative exponent at " + where);
    }
    p.add_term(m, term["coeff"].get<double>());
  }
  return p;
}

json poly_to_json(const Polynomial& p) {
  json out = json::array();
  for (const auto& [m, c] : p.terms()) {
    out.push_back({{"coeff", c}, {"exp", m.exponents}});
  }
  return out;
}

SemiAlgebraicSet set_from_json(const json& j, int dim, const std::string& where) {
  if (!j.is_array() || j.empty()) throw LoadError("schema error: set needs constraints at " + where);
  SemiAlgebraicSet s;
  for (const auto& c : j) s.constraints.push_back(poly_from_json(c, dim, where));
  return s;
}

json set_to_json(const SemiAlgebraicSet& s) {
  json out = json::array();
  for (const auto& p : s.constraints) out.push_back(poly_to_json(p));
  return out;
}

void check_input_polytope(const InputPolytope& U) {
  const int m = U.input_dim();
  for (int j = 0; j < m; ++j) {
    for (int dir = 0; dir < 2; ++dir) {
      LinearProgram lp;
      lp.objective = Eigen::VectorXd::Zero(m);
      lp.objective[j] = dir ? 1.0 : -1.0;
      lp.G = U.A;
      lp.h = U.b;
      lp.E.resize(0, m);
      lp.d.resize(0);
      SolveOutcome oc = solve_lp(lp);
      if (oc.status == SolveStatus::Infeasible) throw LoadError("empty input polytope");
      if (oc.status == SolveStatus::Unbounded) throw LoadError("unbounded input polytope");
      if (!oc.optimal()) throw LoadError("input polytope check failed numerically");
    }
  }
}

void check_contained_in_interior(const SemiAlgebraicSet& inner, const SemiAlgebraicSet& outer,
                                 int dim, const std::string& what) {
  auto box = inner.bounding_box(dim);
  if (!box) throw LoadError("cannot bound " + what + " for the containment check");
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  int tested = 0;
  for (int k = 0; k < 10000; ++k) {
    Eigen::VectorXd x(dim);
    for (int i = 0; i < dim; ++i) x[i] = box->first[i] + ud(rng) * (box->second[i] - box->first[i]);
    if (!inner.contains(x)) continue;
    ++tested;
    if (!outer.strictly_contains(x)) {
      throw LoadError(what + " not contained in the interior of S");
    }
  }
  if (tested == 0) throw LoadError(what + " containment check sampled no points");
}

}  // namespace

ProblemSpec load_problem(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw LoadError(std::string("schema error: ") + e.what());
  }
  if (!j.contains("n") || !j.contains("m") || !j.contains("f0") || !j.contains("f") ||
      !j.contains("U") || !j.contains("spec")) {
    throw LoadError("schema error: missing required field");
  }
  ProblemSpec ps;
  ps.name = j.value("name", "");
  const int n = j["n"].get<int>();
  const int m = j["m"].get<int>();
  if (n < 1 || m < 1) throw LoadError("schema error: n and m must be positive");
  ps.system.n = n;
  ps.system.m = m;

  if (static_cast<int>(j["f0"].size()) != n) throw LoadError("schema error: f0 needs n components");
  for (int i = 0; i < n; ++i) ps.system.f0.push_back(poly_from_json(j["f0"][i], n, "f0"));
  if (static_cast<int>(j["f"].size()) != m) throw LoadError("schema error: f needs m fields");
  for (int k = 0; k < m; ++k) {
    if (static_cast<int>(j["f"][k].size()) != n) throw LoadError("schema error: field needs n components");
    std::vector<Polynomial> fk;
    for (int i = 0; i < n; ++i) fk.push_back(poly_from_json(j["f"][k][i], n, "f"));
    ps.system.f.push_back(std::move(fk));
  }

  const auto& ju = j["U"];
  if (ju.contains("lo")) {
    Eigen::VectorXd lo(m), hi(m);
    for (int i = 0; i < m; ++i) {
      lo[i] = ju["lo"][i].get<double>();
      hi[i] = ju["hi"][i].get<double>();
    }
    ps.system.U = interval_to_polytope(lo, hi);
  } else {
    const auto& A = ju["A"];
    const int rows = static_cast<int>(A.size());
    ps.system.U.A.resize(rows, m);
    ps.system.U.b.resize(rows);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < m; ++c) ps.system.U.A(r, c) = A[r][c].get<double>();
      ps.system.U.b[r] = ju["b"][r].get<double>();
    }
  }
  check_input_polytope(ps.system.U);

  const auto& js = j["spec"];
  ps.spec.kind = spec_kind_from_name(js.value("type", ""));
  switch (ps.spec.kind) {
    case SpecKind::GlobalStability:
      break;
    case SpecKind::LocalStability:
      ps.spec.S = set_from_json(js["S"], n, "spec.S");
      break;
    case SpecKind::Safety:
      ps.spec.S = set_from_json(js["S"], n, "spec.S");
      ps.spec.I = set_from_json(js["I"], n, "spec.I");
      break;
    case SpecKind::ReachWhileStay:
      ps.spec.S = set_from_json(js["S"], n, "spec.S");
      ps.spec.I = set_from_json(js["I"], n, "spec.I");
      ps.spec.T = set_from_json(js["T"], n, "spec.T");
      break;
    case SpecKind::Funnel:
      ps.spec.S = set_from_json(js["S"], n, "spec.S");
      ps.spec.I = set_from_json(js["I"], n, "spec.I");
      ps.spec.T = set_from_json(js["T"], n, "spec.T");
      ps.spec.horizon = js.value("horizon", 0.0);
      if (!(ps.spec.horizon > 0.0)) throw LoadError("schema error: funnel needs horizon > 0");
      break;
  }

  // stabilization specs drive the state to the origin: drift must vanish there
  if (spec_needs_origin_equality(ps.spec.kind)) {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (std::abs(ps.system.f0[i].eval(zero)) > 1e-9) {
        throw LoadError("f0 does not vanish at the origin (stabilization spec)");
      }
    }
  }
  if (ps.spec.kind == SpecKind::LocalStability || ps.spec.kind == SpecKind::ReachWhileStay) {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    if (!ps.spec.S.strictly_contains(zero)) throw LoadError("origin not interior to S");
  }
  if (ps.spec.kind == SpecKind::Safety || ps.spec.kind == SpecKind::ReachWhileStay) {
    check_contained_in_interior(ps.spec.I, ps.spec.S, n, "I");
  }
  if (ps.spec.kind == SpecKind::Funnel) {
    check_contained_in_interior(ps.spec.I, ps.spec.S, n, "I");
    check_contained_in_interior(ps.spec.T, ps.spec.S, n, "T");
  }

  const int cert_dim = ps.cert_dim();
  if (j.contains("basis") && j["basis"].is_array()) {
    for (const auto& g : j["basis"]) ps.basis.push_back(poly_from_json(g, cert_dim, "basis"));
  } else {
    std::string bs = j.value("basis", std::string("monomials:deg=2"));
    if (bs == "linear_only") bs = "monomials:deg=1";
    int deg = 0;
    bool exact = false;
    if (bs.rfind("monomials:deg=", 0) == 0) {
      deg = std::stoi(bs.substr(14));
      exact = true;
    } else if (bs.rfind("monomials:maxdeg=", 0) == 0) {
      deg = std::stoi(bs.substr(17));
    } else {
      throw LoadError("schema error: unknown basis spec '" + bs + "'");
    }
    for (const auto& mo : monomial_basis(cert_dim, deg)) {
      if (exact && mo.degree() != deg) continue;
      // the affine part of a vanishing-at-origin certificate is pinned to 0;
      // drop the constant monomial for those specs
      if (mo.is_constant() && spec_needs_origin_equality(ps.spec.kind)) continue;
      ps.basis.push_back(Polynomial::from_monomial(mo));
    }
  }
  if (ps.basis.empty()) throw LoadError("schema error: empty basis");

  ps.relaxation_degree = j.value("D", 0);
  if (ps.relaxation_degree == 0) ps.relaxation_degree = ps.min_relaxation_degree();
  if (ps.relaxation_degree < ps.min_relaxation_degree()) {
    throw LoadError("relaxation degree below the half-degree bound (needs >= " +
                    std::to_string(ps.min_relaxation_degree()) + ")");
  }
  ps.learner_box = j.value("Delta", 100.0);
  ps.robustness = j.value("delta", 1e-3);
  if (!(ps.learner_box > 0) || !(ps.robustness > 0) || ps.robustness >= ps.learner_box) {
    throw LoadError("schema error: need Delta > delta > 0");
  }

  ps.mpc.Qdiag = Eigen::VectorXd::Ones(n);
  ps.mpc.Rdiag = Eigen::VectorXd::Ones(m);
  if (j.contains("mpc")) {
    const auto& jm = j["mpc"];
    ps.mpc.tau = jm.value("tau", 0.1);
    ps.mpc.N = jm.value("N", 10);
    if (jm.contains("Q")) {
      for (int i = 0; i < n; ++i) ps.mpc.Qdiag[i] = jm["Q"][i].get<double>();
    }
    if (jm.contains("R")) {
      for (int i = 0; i < m; ++i) ps.mpc.Rdiag[i] = jm["R"][i].get<double>();
    }
    ps.mpc.max_iterations = jm.value("max_iters", 500);
    ps.mpc.tol = jm.value("tol", 1e-8);
    ps.mpc.step_rule = jm.value("step_rule", std::string("newton"));
    ps.mpc.substeps = jm.value("substeps", 1);
    if (jm.contains("x_ref")) {
      ps.mpc.x_ref.resize(n);
      for (int i = 0; i < n; ++i) ps.mpc.x_ref[i] = jm["x_ref"][i].get<double>();
    }
  }
  if (!(ps.mpc.tau > 0) || ps.mpc.N < 1 || (ps.mpc.Qdiag.array() < 0).any() ||
      (ps.mpc.Rdiag.array() < 0).any()) {
    throw LoadError("schema error: invalid mpc configuration");
  }

  if (j.contains("verify")) {
    const auto& jv = j["verify"];
    ps.verify.global_radius = jv.value("global_radius", ps.verify.global_radius);
    ps.verify.lambda_cap = jv.value("lambda_cap", ps.verify.lambda_cap);
    ps.verify.opt_tol = jv.value("opt_tol", ps.verify.opt_tol);
    ps.verify.sdp_tol = jv.value("sdp_tol", ps.verify.sdp_tol);
  }
  return ps;
}

ProblemSpec load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open problem file: " + path);
  return load_problem(in);
}

std::string serialize_problem(const ProblemSpec& ps) {
  json j;
  j["schema"] = 1;
  if (!ps.name.empty()) j["name"] = ps.name;
  j["n"] = ps.system.n;
  j["m"] = ps.system.m;
  j["f0"] = json::array();
  for (const auto& p : ps.system.f0) j["f0"].push_back(poly_to_json(p));
  j["f"] = json::array();
  for (const auto& fk : ps.system.f) {
    json jf = json::array();
    for (const auto& p : fk) jf.push_back(poly_to_json(p));
    j["f"].push_back(jf);
  }
  j["U"] = {{"A", json::array()}, {"b", json::array()}};
  for (int r = 0; r < ps.system.U.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < ps.system.U.input_dim(); ++c) row.push_back(ps.system.U.A(r, c));
    j["U"]["A"].push_back(row);
    j["U"]["b"].push_back(ps.system.U.b[r]);
  }
  json js;
  js["type"] = spec_kind_name(ps.spec.kind);
  if (ps.spec.kind != SpecKind::GlobalStability) js["S"] = set_to_json(ps.spec.S);
  if (ps.spec.kind == SpecKind::Safety || ps.spec.kind == SpecKind::ReachWhileStay ||
      ps.spec.kind == SpecKind::Funnel) {
    js["I"] = set_to_json(ps.spec.I);
  }
  if (ps.spec.kind == SpecKind::ReachWhileStay || ps.spec.kind == SpecKind::Funnel) {
    js["T"] = set_to_json(ps.spec.T);
  }
  if (ps.spec.kind == SpecKind::Funnel) js["horizon"] = ps.spec.horizon;
  j["spec"] = js;
  j["basis"] = json::array();
  for (const auto& g : ps.basis) j["basis"].push_back(poly_to_json(g));
  j["D"] = ps.relaxation_degree;
  j["Delta"] = ps.learner_box;
  j["delta"] = ps.robustness;
  json jm;
  jm["tau"] = ps.mpc.tau;
  jm["N"] = ps.mpc.N;
  jm["Q"] = json::array();
  for (int i = 0; i < ps.mpc.Qdiag.size(); ++i) jm["Q"].push_back(ps.mpc.Qdiag[i]);
  jm["R"] = json::array();
  for (int i = 0; i < ps.mpc.Rdiag.size(); ++i) jm["R"].push_back(ps.mpc.Rdiag[i]);
  jm["max_iters"] = ps.mpc.max_iterations;
  jm["tol"] = ps.mpc.tol;
  jm["step_rule"] = ps.mpc.step_rule;
  jm["substeps"] = ps.mpc.substeps;
  if (ps.mpc.x_ref.size()) {
    jm["x_ref"] = json::array();
    for (int i = 0; i < ps.mpc.x_ref.size(); ++i) jm["x_ref"].push_back(ps.mpc.x_ref[i]);
  }
  j["mpc"] = jm;
  j["verify"] = {{"global_radius", ps.verify.global_radius},
                 {"lambda_cap", ps.verify.lambda_cap},
                 {"opt_tol", ps.verify.opt_tol},
                 {"sdp_tol", ps.verify.sdp_tol}};
  return j.dump(2);
}

std::string poly_to_json_string(const Polynomial& p) { return poly_to_json(p).dump(); }

}  // namespace clfsyn
