#include "clfsyn/controller.hpp"

#include <cmath>
#include <ostream>

#include "clfsyn/opt.hpp"
#include "clfsyn/verifier.hpp"

namespace clfsyn {

namespace {

// dV/dt decomposition at (x, t): rate(u) = a + b'u.
void rate_coefficients(const Polynomial& V, const ControlAffineSystem& system,
                       const Eigen::VectorXd& x, double t, double& a, Eigen::VectorXd& b) {
  const int n = system.n;
  Eigen::VectorXd xfull(V.dimension());
  xfull.head(n) = x;
  if (V.dimension() > n) xfull[n] = t;
  Eigen::VectorXd gv(n);
  for (int i = 0; i < n; ++i) gv[i] = V.partial(i).eval(xfull);
  a = 0.0;
  for (int i = 0; i < n; ++i) a += gv[i] * system.f0[i].eval(x);
  if (V.dimension() > n) a += V.partial(n).eval(xfull);
  b.resize(system.m);
  for (int k = 0; k < system.m; ++k) {
    double v = 0.0;
    for (int i = 0; i < n; ++i) v += gv[i] * system.f[k][i].eval(x);
    b[k] = v;
  }
}

}  // namespace

Eigen::VectorXd sontag_input(const Polynomial& V, const ControlAffineSystem& system,
                             const Eigen::VectorXd& x, double t) {
  double a;
  Eigen::VectorXd b;
  rate_coefficients(V, system, x, t, a, b);
  const double beta = b.squaredNorm();
  if (beta < 1e-12) return Eigen::VectorXd::Zero(system.m);
  const double factor = (a + std::sqrt(a * a + beta * beta)) / beta;
  Eigen::VectorXd u = -factor * b;
  if (!u.allFinite()) throw std::runtime_error("sontag_input: non-finite feedback");
  return u;
}

Eigen::VectorXd minselect_input(const Polynomial& V, const ControlAffineSystem& system,
                                const Eigen::VectorXd& x, double t) {
  double a;
  Eigen::VectorXd b;
  rate_coefficients(V, system, x, t, a, b);
  const auto& U = system.U;
  const int m = U.input_dim();
  if (U.is_box()) {
    auto [lo, hi] = U.box_bounds();
    Eigen::VectorXd u(m);
    for (int i = 0; i < m; ++i) {
      if (b[i] > 0) u[i] = lo[i];
      else if (b[i] < 0) u[i] = hi[i];
      else u[i] = lo[i];  // lexicographically smallest optimal vertex
    }
    return u;
  }
  // general polytope: LP argmin with lexicographic refinement
  LinearProgram lp;
  lp.objective = -b;
  lp.G = U.A;
  lp.h = U.b;
  lp.E.resize(0, m);
  lp.d.resize(0);
  SolveOutcome oc = solve_lp(lp, 1e-9);
  if (!oc.optimal()) throw std::runtime_error("minselect_input: LP failed");
  double level = b.dot(oc.x);
  Eigen::MatrixXd G = U.A;
  Eigen::VectorXd h = U.b;
  Eigen::VectorXd u = oc.x;
  for (int j = 0; j < m; ++j) {
    LinearProgram lex;
    lex.objective = Eigen::VectorXd::Zero(m);
    lex.objective[j] = -1.0;  // minimize u_j
    lex.G.resize(G.rows() + 1 + j, m);
    lex.h.resize(G.rows() + 1 + j);
    lex.G.topRows(G.rows()) = G;
    lex.h.head(G.rows()) = h;
    lex.G.row(G.rows()) = -b.transpose();
    lex.h[G.rows()] = -(level + 1e-9);
    for (int i = 0; i < j; ++i) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(m);
      row[i] = -1.0;
      lex.G.row(G.rows() + 1 + i) = row.transpose();
      lex.h[G.rows() + 1 + i] = -(u[i] + 1e-9);
    }
    lex.E.resize(0, m);
    lex.d.resize(0);
    SolveOutcome lo_oc = solve_lp(lex, 1e-9);
    if (lo_oc.optimal()) u[j] = lo_oc.x[j];
  }
  return u;
}

Eigen::VectorXd feedback_input(const FeedbackLaw& law, const Eigen::VectorXd& x, double t) {
  if (x.norm() < 1e-9 && law.V.dimension() == law.system.n) {
    // avoid the Sontag discontinuity (and min-select chatter) at the equilibrium
    return Eigen::VectorXd::Zero(law.system.m);
  }
  return law.kind == FeedbackKind::Sontag ? sontag_input(law.V, law.system, x, t)
                                          : minselect_input(law.V, law.system, x, t);
}

SimulationTrace simulate(const ControlAffineSystem& system, const FeedbackLaw& law,
                         const Eigen::VectorXd& x0, double duration, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
  SimulationTrace tr;
  const long steps = std::lround(duration / dt);
  Eigen::VectorXd x = x0;
  auto vval = [&](const Eigen::VectorXd& xs, double t) {
    Eigen::VectorXd xf(law.V.dimension());
    xf.head(system.n) = xs;
    if (law.V.dimension() > system.n) xf[system.n] = t;
    return law.V.eval(xf);
  };
  auto rhs = [&](const Eigen::VectorXd& xs, double t) {
    return system.eval_dynamics(xs, feedback_input(law, xs, t));
  };
  for (long k = 0; k <= steps; ++k) {
    const double t = k * dt;
    tr.times.push_back(t);
    tr.states.push_back(x);
    tr.inputs.push_back(feedback_input(law, x, t));
    tr.v_values.push_back(vval(x, t));
    if (x.norm() > 1e6) {
      tr.diverged = true;
      break;
    }
    if (k == steps) break;
    const Eigen::VectorXd k1 = rhs(x, t);
    const Eigen::VectorXd k2 = rhs(x + 0.5 * dt * k1, t + 0.5 * dt);
    const Eigen::VectorXd k3 = rhs(x + 0.5 * dt * k2, t + 0.5 * dt);
    const Eigen::VectorXd k4 = rhs(x + dt * k3, t + dt);
    x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!x.allFinite()) {
      tr.diverged = true;
      break;
    }
  }
  return tr;
}

DecreaseAuditReport decrease_audit(const SimulationTrace& trace, const Polynomial& V,
                                   const SemiAlgebraicSet* target, double exclude_radius,
                                   double tol) {
  DecreaseAuditReport rep;
  auto excluded = [&](const Eigen::VectorXd& x) {
    if (target && !target->constraints.empty()) return target->contains(x);
    return x.norm() <= exclude_radius;
  };
  long decreasing = 0;
  for (std::size_t k = 0; k + 1 < trace.states.size(); ++k) {
    if (excluded(trace.states[k]) || excluded(trace.states[k + 1])) continue;
    ++rep.pairs_checked;
    const double dv = trace.v_values[k + 1] - trace.v_values[k];
    if (dv < 0) ++decreasing;
    if (dv > tol) ++rep.increases;
    rep.max_increase = std::max(rep.max_increase, dv);
  }
  rep.decrease_fraction = rep.pairs_checked ? static_cast<double>(decreasing) / rep.pairs_checked : 1.0;
  return rep;
}

double beta_star(const Polynomial& V, const SemiAlgebraicSet& S, int D, double rel_tol) {
  const int dim = V.dimension();
  const double eps = 1e-7;
  auto certified = [&](double beta) {
    for (const auto& p : S.constraints) {
      std::vector<Polynomial> supports;
      supports.push_back(Polynomial::constant(dim, beta) - V);
      supports.push_back(p.lifted(dim) - Polynomial::constant(dim, eps));
      if (!relaxed_set_empty(supports, dim, D)) return false;
    }
    return true;
  };
  double lo = 0.0, hi = 1.0;
  if (!certified(1e-9)) return 0.0;
  while (hi < 1e9 && certified(hi)) {
    lo = hi;
    hi *= 2.0;
  }
  if (lo == 0.0) {
    // shrink until something certifies
    hi = 1.0;
    double probe = 0.5;
    while (probe > 1e-9 && !certified(probe)) probe *= 0.5;
    if (probe <= 1e-9) return 0.0;
    lo = probe;
    hi = 2 * probe;
  }
  while ((hi - lo) > rel_tol * std::max(1e-12, lo)) {
    const double mid = 0.5 * (lo + hi);
    if (certified(mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

void trace_to_csv(const SimulationTrace& trace, std::ostream& os) {
  if (trace.states.empty()) return;
  const int n = static_cast<int>(trace.states[0].size());
  const int m = static_cast<int>(trace.inputs[0].size());
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= m; ++i) os << ",u" << i;
  os << ",V\n";
  os.precision(12);
  for (std::size_t k = 0; k < trace.states.size(); ++k) {
    os << trace.times[k];
    for (int i = 0; i < n; ++i) os << "," << trace.states[k][i];
    for (int i = 0; i < m; ++i) os << "," << trace.inputs[k][i];
    os << "," << trace.v_values[k] << "\n";
  }
}

}  // namespace clfsyn
