#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "clfsyn/verifier.hpp"

using namespace clfsyn;

namespace {

std::string bench(const std::string& name) { return std::string(CLFSYN_BENCH_DIR) + "/" + name; }

// scalar integrator problem built in code: xdot = u, U = [-1, 1], basis (x^2)
ProblemSpec scalar_problem() {
  ProblemSpec ps;
  ps.name = "scalar";
  ps.system.n = 1;
  ps.system.m = 1;
  ps.system.f0 = {Polynomial(1)};
  ps.system.f = {{Polynomial::constant(1, 1.0)}};
  Eigen::VectorXd lo(1), hi(1);
  lo << -1;
  hi << 1;
  ps.system.U = interval_to_polytope(lo, hi);
  ps.spec.kind = SpecKind::GlobalStability;
  ps.basis = {Polynomial::from_monomial(Monomial({2}))};
  ps.relaxation_degree = 2;
  return ps;
}

ProblemSpec planar_global() {
  // xdot = (u1, u2), global stability, quadratic basis
  ProblemSpec ps;
  ps.name = "planar";
  ps.system.n = 2;
  ps.system.m = 2;
  ps.system.f0 = {Polynomial(2), Polynomial(2)};
  ps.system.f = {{Polynomial::constant(2, 1.0), Polynomial(2)},
                 {Polynomial(2), Polynomial::constant(2, 1.0)}};
  Eigen::VectorXd lo(2), hi(2);
  lo << -1, -1;
  hi << 1, 1;
  ps.system.U = interval_to_polytope(lo, hi);
  ps.spec.kind = SpecKind::GlobalStability;
  for (const auto& mo : monomial_basis(2, 2)) {
    if (mo.degree() == 2) ps.basis.push_back(Polynomial::from_monomial(mo));
  }
  ps.relaxation_degree = 2;
  return ps;
}

Polynomial tora_published_clf() {
  Polynomial V(4);
  V.add_term(Monomial({0, 2, 0, 0}), 1.22);
  V.add_term(Monomial({0, 1, 1, 0}), 0.31);
  V.add_term(Monomial({0, 0, 2, 0}), 0.44);
  V.add_term(Monomial({0, 1, 0, 1}), -0.28);
  V.add_term(Monomial({0, 0, 1, 1}), 0.80);
  V.add_term(Monomial({0, 0, 0, 2}), 1.69);
  V.add_term(Monomial({1, 1, 0, 0}), 0.07);
  V.add_term(Monomial({1, 0, 1, 0}), -0.66);
  V.add_term(Monomial({1, 0, 0, 1}), -1.85);
  V.add_term(Monomial({2, 0, 0, 0}), 1.6);
  return V;
}

}  // namespace

TEST_CASE("frame combinatorics") {
  // n=2 state, 2 Farkas rows, D=2: w-dim 4, side C(6,2) = 15
  MomentFrame fr = build_frame(2, 2, 2);
  CHECK(fr.side() == 15);
  CHECK(fr.x_side() == 6);
  // n=4 positivity frame at D=2: side 15
  MomentFrame fp = build_frame(4, 0, 2);
  CHECK(fp.side() == 15);
  CHECK(fp.Z0()(0, 0) == 1.0);
  CHECK(fp.Z0().sum() == 1.0);
}

TEST_CASE("frame assembly consistency") {
  MomentFrame fr = build_frame(2, 0, 2);
  Polynomial g(2);
  g.add_term(Monomial({1, 1}), 1.0);  // x1 x2
  Eigen::MatrixXd G = fr.rep_matrix(g);
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  Eigen::MatrixXd Z = fr.assemble(x);
  CHECK((G.cwiseProduct(Z)).sum() == doctest::Approx(2.0));
  // every basis polynomial evaluates consistently through the lift
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ud(-1.5, 1.5);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd y(2);
    y << ud(rng), ud(rng);
    Polynomial p(2);
    p.add_term(Monomial({2, 0}), 0.7);
    p.add_term(Monomial({1, 1}), -0.3);
    p.add_term(Monomial({0, 2}), 1.1);
    p.add_term(Monomial({1, 0}), 0.2);
    Eigen::MatrixXd P = fr.rep_matrix(p);
    CHECK((P.cwiseProduct(fr.assemble(y))).sum() == doctest::Approx(p.eval(y)).epsilon(1e-9));
  }
}

TEST_CASE("lambda matrices select multipliers") {
  MomentFrame fr = build_frame(1, 2, 2);
  Eigen::VectorXd w(3);
  w << 0.5, 2.0, 3.0;  // x, lambda1, lambda2
  Eigen::MatrixXd Z = fr.assemble(w);
  CHECK((fr.lambda_matrix(0).cwiseProduct(Z)).sum() == doctest::Approx(2.0));
  CHECK((fr.lambda_matrix(1).cwiseProduct(Z)).sum() == doctest::Approx(3.0));
}

TEST_CASE("global positivity: PD quadratic verifies, indefinite refuted") {
  ProblemSpec ps = planar_global();
  Verifier ver(ps);
  CHECK(ver.positivity_task_count() == 1);
  CHECK(ver.decrease_task_count() == 1);

  // V = x1^2 + x2^2 -> (c for basis order x1^2, x1x2, x2^2) = (1, 0, 1)
  Eigen::VectorXd c(3);
  c << 1.0, 0.0, 1.0;
  std::optional<MomentCounterexample> ce;
  TaskReport rep = ver.solve_task(0, c, &ce);
  CHECK(rep.passed);
  CHECK(rep.optimum == doctest::Approx(1.0).epsilon(1e-5));

  // V = x1^2 - x2^2: refuted with a counterexample whose x2 moment is active
  Eigen::VectorXd cbad(3);
  cbad << 1.0, 0.0, -1.0;
  ce.reset();
  TaskReport repb = ver.solve_task(0, cbad, &ce);
  CHECK_FALSE(repb.passed);
  REQUIRE(ce);
  CHECK(ce->kind == TaskKind::Positivity);
  // brute-force sign check at the projected state: V(pi(Z)) <= small
  Polynomial V = linear_combination(cbad, ps.basis);
  if (ce->state.norm() > 1e-6) {
    CHECK(V.eval(ce->state) <= 1e-6);
  }
  // cut excludes the refuted candidate
  CHECK(ce->value_functional.dot(cbad) <= 1e-6);
}

TEST_CASE("scalar decrease task: V=x^2 passes, -x^2 fails, pinned-zero input fails") {
  ProblemSpec ps = scalar_problem();
  Verifier ver(ps);
  Eigen::VectorXd c(1);
  c << 1.0;
  VerifyResult vr = ver.verify(c);
  CHECK(std::holds_alternative<Verified>(vr));
  const auto& transcript = std::get<Verified>(vr).transcript;
  REQUIRE(transcript.size() == 2);
  CHECK(transcript[1].optimum == doctest::Approx(1.0).epsilon(1e-4));

  Eigen::VectorXd cneg(1);
  cneg << -1.0;
  VerifyResult vr2 = ver.verify(cneg);
  REQUIRE(std::holds_alternative<MomentCounterexample>(vr2));
  CHECK(std::get<MomentCounterexample>(vr2).kind == TaskKind::Positivity);

  // U = {0}: lambda free along (t,t); decrease must fail for V = x^2
  ProblemSpec pinned = scalar_problem();
  pinned.system.f0 = {Polynomial(1)};
  pinned.system.U.A.resize(2, 1);
  pinned.system.U.A << 1, -1;
  pinned.system.U.b = Eigen::VectorXd::Zero(2);
  Verifier ver2(pinned);
  std::optional<MomentCounterexample> ce;
  TaskReport rep = ver2.solve_task(1, c, &ce);
  CHECK_FALSE(rep.passed);
  CHECK(rep.optimum > 1.0 + 1e-6);
  REQUIRE(ce);
  CHECK(ce->kind == TaskKind::Decrease);
}

TEST_CASE("decrease counterexample satisfies the lifted vertex inequality") {
  // lemma direction: for every decrease counterexample Z, the lifted rate is
  // nonnegative at all vertices of the box U
  ProblemSpec ps = planar_global();
  Verifier ver(ps);
  // V with an uncontrollable growth direction? For the planar integrator any
  // PD V works, so force a decrease failure with an indefinite V whose
  // positivity happens to hold on a thin cone... simpler: shrink U to {0}.
  ps.system.U.b = Eigen::VectorXd::Zero(4);
  Verifier ver0(ps);
  Eigen::VectorXd c(3);
  c << 1.0, 0.0, 1.0;
  std::optional<MomentCounterexample> ce;
  TaskReport rep = ver0.solve_task(1, c, &ce);
  CHECK_FALSE(rep.passed);
  REQUIRE(ce);
  REQUIRE(ce->has_decrease);
  for (const auto& u : ps.system.U.vertices()) {
    const double rate = c.dot(ce->lie_drift + ce->lie_inputs * u);
    CHECK(rate >= -1e-6);
  }
  // Z is PSD-legitimate on the frame with unit corner and excess trace
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ce->Z);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-6);
  CHECK(ce->Z(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(ce->Z.trace() > 1.0 + 1e-8);
  CHECK(ce->lambda.minCoeff() >= -1e-8);
}

TEST_CASE("farkas oracle hand cases") {
  // U = [-1,1]; A = [[1],[-1]], b = (-1,-1)
  ProblemSpec ps = scalar_problem();
  // build V and x so that grad V f0 = a0, grad V f1 = b1 at x=1:
  // V = a x^2 has grad 2a x; choose f0 = c x to hit the values
  // (a0=2, b1=0.5): f0 = 2x.../ simpler: dedicated systems below.
  ControlAffineSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.U = ps.system.U;
  // case 1: grad V . f0 = 2, grad V . f1 = 0.5 at x=1 -> feasible (min rate 1.5)
  sys.f0 = {Polynomial::constant(1, 0.0)};
  sys.f = {{Polynomial::constant(1, 0.0)}};
  Polynomial V(1);
  V.add_term(Monomial({2}), 1.0);  // grad = 2x
  Eigen::VectorXd x(1);
  x << 1.0;
  sys.f0 = {Polynomial::constant(1, 1.0)};    // grad V . f0 = 2*1*1 = 2
  sys.f = {{Polynomial::constant(1, 0.25)}};  // grad V . f1 = 0.5
  CHECK(farkas_feasible(x, V, sys));
  // case 2: grad V . f0 = -1, grad V . f1 = 0 -> infeasible
  sys.f0 = {Polynomial::constant(1, -0.5)};
  sys.f = {{Polynomial::constant(1, 0.0)}};
  CHECK_FALSE(farkas_feasible(x, V, sys));
  // case 3: grad V . f0 = 0.4, grad V . f1 = 0.5 -> u=-1 gives -0.1 < 0
  sys.f0 = {Polynomial::constant(1, 0.2)};
  sys.f = {{Polynomial::constant(1, 0.25)}};
  CHECK_FALSE(farkas_feasible(x, V, sys));
}

TEST_CASE("farkas oracle agrees with grid search on random instances") {
  std::mt19937 rng(2024);
  std::normal_distribution<double> nd(0, 1);
  std::uniform_real_distribution<double> ud(-1.2, 1.2);
  int agreements = 0, skipped = 0;
  for (int inst = 0; inst < 120; ++inst) {
    const int n = 1 + (inst % 3);
    const int m = 1 + (inst % 2);
    ControlAffineSystem sys;
    sys.n = n;
    sys.m = m;
    Eigen::VectorXd lo = -Eigen::VectorXd::Ones(m), hi = Eigen::VectorXd::Ones(m);
    sys.U = interval_to_polytope(lo, hi);
    auto rnd_poly = [&](int deg) {
      Polynomial p(n);
      for (const auto& mo : monomial_basis(n, deg)) {
        if (nd(rng) > 0.3) continue;
        p.add_term(mo, nd(rng));
      }
      return p;
    };
    for (int i = 0; i < n; ++i) sys.f0.push_back(rnd_poly(2));
    for (int k = 0; k < m; ++k) {
      std::vector<Polynomial> fk;
      for (int i = 0; i < n; ++i) fk.push_back(rnd_poly(1));
      sys.f.push_back(std::move(fk));
    }
    Polynomial V(n);
    for (const auto& mo : monomial_basis(n, 2)) {
      if (mo.degree() == 2) V.add_term(mo, nd(rng));
    }
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = ud(rng);
    if (x.norm() < 1e-3) continue;

    // grid oracle: min over u grid of grad V . f(x, u)
    auto grad = V.gradient();
    Eigen::VectorXd gv(n);
    for (int i = 0; i < n; ++i) gv[i] = grad[i].eval(x);
    double a0 = 0.0;
    Eigen::VectorXd bb(m);
    for (int i = 0; i < n; ++i) a0 += gv[i] * sys.f0[i].eval(x);
    for (int k = 0; k < m; ++k) {
      double v = 0.0;
      for (int i = 0; i < n; ++i) v += gv[i] * sys.f[k][i].eval(x);
      bb[k] = v;
    }
    double gridmin = std::numeric_limits<double>::infinity();
    const int pts = 201;
    if (m == 1) {
      for (int a = 0; a < pts; ++a) {
        const double u = -1.0 + 2.0 * a / (pts - 1);
        gridmin = std::min(gridmin, a0 + bb[0] * u);
      }
    } else {
      for (int a = 0; a < pts; ++a) {
        for (int b2 = 0; b2 < pts; ++b2) {
          const double u1 = -1.0 + 2.0 * a / (pts - 1);
          const double u2 = -1.0 + 2.0 * b2 / (pts - 1);
          gridmin = std::min(gridmin, a0 + bb[0] * u1 + bb[1] * u2);
        }
      }
    }
    if (std::abs(gridmin) <= 1e-5) {
      ++skipped;  // too close to the boundary for a sign comparison
      continue;
    }
    const bool feas = farkas_feasible(x, V, sys);
    CHECK(feas == (gridmin >= 0));
    ++agreements;
  }
  CHECK(agreements >= 100);
  MESSAGE("agreements: ", agreements, ", near-boundary skipped: ", skipped);
}

TEST_CASE("published TORA certificate re-verifies" * doctest::timeout(600)) {
  ProblemSpec ps = load_problem_file(bench("tora.json"));
  Verifier ver(ps);
  // express the published CLF in the loaded basis order
  Polynomial V = tora_published_clf();
  Eigen::VectorXd c(ps.basis_size());
  for (int k = 0; k < ps.basis_size(); ++k) {
    const auto& terms = ps.basis[k].terms();
    REQUIRE(terms.size() == 1);
    c[k] = V.coefficient(terms.begin()->first);
  }
  VerifyResult vr = ver.verify(c);
  if (!std::holds_alternative<Verified>(vr)) {
    const auto& ce = std::get<MomentCounterexample>(vr);
    MESSAGE("refuted: kind=", ce.kind == TaskKind::Positivity ? "pos" : "dec", " id=", ce.task_id,
            " gamma=", ce.gamma, " |x|=", ce.state.norm());
  }
  CHECK(std::holds_alternative<Verified>(vr));

  // soundness sampling audit of the same certificate
  AuditReport audit = audit_certificate(ps, V, 10000, 7);
  CHECK(audit.failures == 0);
  CHECK(audit.worst_positivity > 0);
  CHECK(audit.worst_decrease > 0);
}

TEST_CASE("relaxed_set_empty basics") {
  // {x^2 <= -1} is empty
  Polynomial p(1);
  p.add_term(Monomial({2}), -1.0);
  p.add_term(Monomial({0}), -1.0);  // -x^2 - 1 >= 0 impossible
  CHECK(relaxed_set_empty({p}, 1, 2));
  // {x in [1,2]} is nonempty: q = (x-1)(2-x) >= 0
  Polynomial q(1);
  q.add_term(Monomial({2}), -1.0);
  q.add_term(Monomial({1}), 3.0);
  q.add_term(Monomial({0}), -2.0);
  CHECK_FALSE(relaxed_set_empty({q}, 1, 2));
}
