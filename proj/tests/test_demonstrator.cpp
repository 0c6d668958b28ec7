#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "clfsyn/demonstrator.hpp"

using namespace clfsyn;

namespace {

ControlAffineSystem scalar_system() {
  ControlAffineSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.f0 = {Polynomial(1)};
  sys.f = {{Polynomial::constant(1, 1.0)}};
  Eigen::VectorXd lo(1), hi(1);
  lo << -1;
  hi << 1;
  sys.U = interval_to_polytope(lo, hi);
  return sys;
}

ControlAffineSystem tora_system() {
  ControlAffineSystem sys;
  sys.n = 4;
  sys.m = 1;
  Polynomial f02(4);
  f02.add_term(Monomial({1, 0, 0, 0}), -1.0);
  f02.add_term(Monomial({0, 0, 1, 0}), 0.1);
  f02.add_term(Monomial({0, 0, 3, 0}), -0.1 / 6.0);
  sys.f0 = {Polynomial::variable(4, 1), f02, Polynomial::variable(4, 3), Polynomial(4)};
  sys.f = {{Polynomial(4), Polynomial(4), Polynomial(4), Polynomial::constant(4, 1.0)}};
  Eigen::VectorXd lo(1), hi(1);
  lo << -1.5;
  hi << 1.5;
  sys.U = interval_to_polytope(lo, hi);
  return sys;
}

}  // namespace

TEST_CASE("discrete step") {
  ControlAffineSystem sys = scalar_system();
  Eigen::VectorXd x(1), u(1);
  x << 0.0;
  u << 1.0;
  CHECK(discrete_step(sys, x, u, 0.5)[0] == doctest::Approx(0.5));

  // xdot = -x decays to 0 in one Euler step at tau = 1
  ControlAffineSystem decay = scalar_system();
  decay.f0 = {-Polynomial::variable(1, 0)};
  x << 2.0;
  CHECK(discrete_step(decay, x, u * 0.0, 1.0)[0] == doctest::Approx(0.0));

  // TORA equilibrium is preserved
  ControlAffineSystem tora = tora_system();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(4), u0 = Eigen::VectorXd::Zero(1);
  CHECK(discrete_step(tora, z, u0, 1.0).norm() == doctest::Approx(0.0));
}

TEST_CASE("rollout cost stage convention") {
  ControlAffineSystem sys = scalar_system();
  MpcConfig cfg;
  cfg.tau = 1.0;
  cfg.N = 1;
  cfg.Qdiag = Eigen::VectorXd::Ones(1);
  cfg.Rdiag = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  std::vector<Eigen::VectorXd> u = {-Eigen::VectorXd::Ones(1)};
  // u(0)^2 R + N x(1)^2 Q = 1 + 1*0 = 1
  CHECK(rollout_cost(sys, x0, u, cfg) == doctest::Approx(1.0));

  // equilibrium with zero inputs costs nothing
  std::vector<Eigen::VectorXd> zs(5, Eigen::VectorXd::Zero(1));
  cfg.N = 5;
  CHECK(rollout_cost(sys, Eigen::VectorXd::Zero(1), zs, cfg) == doctest::Approx(0.0));

  // with R = 0, doubling Q doubles the cost of any fixed rollout
  cfg.Rdiag = Eigen::VectorXd::Zero(1);
  std::vector<Eigen::VectorXd> useq(5, 0.3 * Eigen::VectorXd::Ones(1));
  const double base = rollout_cost(sys, x0, useq, cfg);
  cfg.Qdiag *= 2.0;
  CHECK(rollout_cost(sys, x0, useq, cfg) == doctest::Approx(2.0 * base).epsilon(1e-12));
}

TEST_CASE("mpc demonstrator basics") {
  ControlAffineSystem sys = scalar_system();
  MpcConfig cfg;
  cfg.tau = 0.1;
  cfg.N = 10;
  cfg.Qdiag = Eigen::VectorXd::Ones(1);
  cfg.Rdiag = Eigen::VectorXd::Ones(1);
  MpcDemonstrator mpc(sys, cfg);

  // equilibrium: zero sequence is stationary
  Demonstration d0 = mpc.demonstrate(Eigen::VectorXd::Zero(1));
  CHECK(d0.u.norm() < 1e-9);
  CHECK(d0.cost == doctest::Approx(0.0));

  // far state saturates toward the origin
  Eigen::VectorXd x(1);
  x << 5.0;
  Demonstration d = mpc.demonstrate(x);
  CHECK(d.u[0] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(sys.U.contains(d.u, 1e-9));

  // determinism
  Demonstration d2 = mpc.demonstrate(x);
  CHECK(d.u[0] == d2.u[0]);
  CHECK(d.cost == d2.cost);
}

TEST_CASE("mpc improves on the zero sequence and stays feasible (tora)") {
  ControlAffineSystem sys = tora_system();
  MpcConfig cfg;
  cfg.tau = 1.0;
  cfg.N = 30;
  cfg.Qdiag = Eigen::VectorXd::Ones(4);
  cfg.Rdiag = Eigen::VectorXd::Ones(1);
  MpcDemonstrator mpc(sys, cfg);
  Eigen::VectorXd x(4);
  x << 0.5, 0.0, 0.0, 0.0;
  Demonstration d = mpc.demonstrate(x);
  CHECK(sys.U.contains(d.u, 1e-9));
  std::vector<Eigen::VectorXd> zero(cfg.N, Eigen::VectorXd::Zero(1));
  CHECK(d.cost <= rollout_cost(sys, x, zero, cfg));
}

TEST_CASE("input projection") {
  ControlAffineSystem sys = scalar_system();
  Eigen::VectorXd u(1);
  u << 3.0;
  CHECK(project_input(sys.U, u)[0] == doctest::Approx(1.0));
  u << -0.4;
  CHECK(project_input(sys.U, u)[0] == doctest::Approx(-0.4));

  // non-box polytope: triangle u1 >= 0, u2 >= 0, u1 + u2 <= 1
  InputPolytope tri;
  tri.A.resize(3, 2);
  tri.A << 1, 0, 0, 1, -1, -1;
  tri.b.resize(3);
  tri.b << 0, 0, -1;
  Eigen::VectorXd v(2);
  v << 1.0, 1.0;
  Eigen::VectorXd pv = project_input(tri, v);
  CHECK(pv[0] == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(pv[1] == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("external demonstrator line protocol") {
  std::istringstream replies("0.25 -0.5\n");
  std::ostringstream requests;
  ExternalDemonstrator ext(replies, requests, 2);
  Eigen::VectorXd x(3);
  x << 1.0, 2.0, 3.0;
  Eigen::VectorXd u = ext.demonstrate_input(x);
  CHECK(u[0] == doctest::Approx(0.25));
  CHECK(u[1] == doctest::Approx(-0.5));
  CHECK(requests.str() == "1 2 3\n");
}
