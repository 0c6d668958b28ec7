#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "clfsyn/conic.hpp"
#include "clfsyn/opt.hpp"

using namespace clfsyn;

TEST_CASE("lp box") {
  // max u s.t. u >= -1.5, -u >= -1.5
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Ones(1);
  lp.G.resize(2, 1);
  lp.G << 1, -1;
  lp.h.resize(2);
  lp.h << -1.5, -1.5;
  lp.E.resize(0, 1);
  lp.d.resize(0);
  SolveOutcome oc = solve_lp(lp);
  REQUIRE(oc.optimal());
  CHECK(oc.objective == doctest::Approx(1.5).epsilon(1e-7));
  CHECK(oc.x[0] == doctest::Approx(1.5).epsilon(1e-7));
  CHECK(std::abs(oc.objective - oc.dual_objective) < 1e-6);
}

TEST_CASE("lp infeasible") {
  // u >= 1 and -u >= 0 cannot hold together
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Zero(1);
  lp.G.resize(2, 1);
  lp.G << 1, -1;
  lp.h.resize(2);
  lp.h << 1, 0;
  lp.E.resize(0, 1);
  lp.d.resize(0);
  CHECK(solve_lp(lp).status == SolveStatus::Infeasible);
}

TEST_CASE("lp unbounded") {
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Ones(1);
  lp.G.resize(1, 1);
  lp.G << 1;
  lp.h.resize(1);
  lp.h << 0;
  lp.E.resize(0, 1);
  lp.d.resize(0);
  CHECK(solve_lp(lp).status == SolveStatus::Unbounded);
}

TEST_CASE("chebyshev center of the square") {
  Eigen::MatrixXd A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  Eigen::VectorXd b = Eigen::VectorXd::Ones(4);
  ChebyshevResult c = chebyshev_center(A, b);
  REQUIRE(c.status == SolveStatus::Optimal);
  CHECK(c.center.norm() < 1e-6);
  CHECK(c.radius == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("lp with equality rows") {
  // max x + y s.t. x + y + z = 1, x,y,z >= 0  -> 1
  LinearProgram lp;
  lp.objective.resize(3);
  lp.objective << 1, 1, 0;
  lp.G = Eigen::MatrixXd::Identity(3, 3);
  lp.h = Eigen::VectorXd::Zero(3);
  lp.E.resize(1, 3);
  lp.E << 1, 1, 1;
  lp.d.resize(1);
  lp.d << 1;
  SolveOutcome oc = solve_lp(lp);
  REQUIRE(oc.optimal());
  CHECK(oc.objective == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("sdp trace pinned at base") {
  // max <I,Z> s.t. Z >= Z0 (= e1 e1'), <I,Z> <= 1  -> optimum 1 at Z = Z0
  const int side = 3;
  SemidefiniteProgram sdp;
  sdp.side = side;
  sdp.C = Eigen::MatrixXd::Identity(side, side);
  sdp.Z_base = Eigen::MatrixXd::Zero(side, side);
  sdp.Z_base(0, 0) = 1.0;
  sdp.constraints.push_back({Eigen::MatrixXd::Identity(side, side), ConstraintSense::Le, 1.0});
  SolveOutcome oc = solve_sdp(sdp);
  REQUIRE(oc.optimal());
  CHECK(oc.objective == doctest::Approx(1.0).epsilon(1e-6));
  CHECK((oc.Z - sdp.Z_base).norm() < 1e-5);
}

TEST_CASE("sdp diagonal") {
  // max <I,Z>, 2x2, Z >= 0, Z11 = 1, Z22 <= 2 -> 3
  SemidefiniteProgram sdp;
  sdp.side = 2;
  sdp.C = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd E11 = Eigen::MatrixXd::Zero(2, 2);
  E11(0, 0) = 1;
  Eigen::MatrixXd E22 = Eigen::MatrixXd::Zero(2, 2);
  E22(1, 1) = 1;
  sdp.constraints.push_back({E11, ConstraintSense::Eq, 1.0});
  sdp.constraints.push_back({E22, ConstraintSense::Le, 2.0});
  SolveOutcome oc = solve_sdp(sdp);
  REQUIRE(oc.optimal());
  CHECK(oc.objective == doctest::Approx(3.0).epsilon(1e-6));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(oc.Z);
  CHECK(eig.eigenvalues().minCoeff() > -1e-6);
}

TEST_CASE("sdp infeasible") {
  // <I,Z> <= 0 with Z >= Z0, <I,Z0> = 1
  SemidefiniteProgram sdp;
  sdp.side = 2;
  sdp.C = Eigen::MatrixXd::Identity(2, 2);
  sdp.Z_base = Eigen::MatrixXd::Zero(2, 2);
  sdp.Z_base(0, 0) = 1.0;
  sdp.constraints.push_back({Eigen::MatrixXd::Identity(2, 2), ConstraintSense::Le, 0.0});
  CHECK(solve_sdp(sdp).status == SolveStatus::Infeasible);
}

TEST_CASE("sdp min eigenvalue check against independent routine") {
  // random feasibility-style SDP: max <C,Z>, tr Z <= 2, Z >= Z_base
  std::mt19937 rng(3);
  std::normal_distribution<double> nd(0, 1);
  for (int rep = 0; rep < 5; ++rep) {
    const int side = 4;
    Eigen::MatrixXd Craw(side, side);
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) Craw(i, j) = nd(rng);
    SemidefiniteProgram sdp;
    sdp.side = side;
    sdp.C = 0.5 * (Craw + Craw.transpose());
    Eigen::MatrixXd Braw(side, side);
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) Braw(i, j) = 0.2 * nd(rng);
    sdp.Z_base = Braw * Braw.transpose() * 0.1;
    sdp.constraints.push_back({Eigen::MatrixXd::Identity(side, side), ConstraintSense::Le,
                               sdp.Z_base.trace() + 2.0});
    SolveOutcome oc = solve_sdp(sdp, 1e-7);
    REQUIRE(oc.optimal());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(oc.Z - sdp.Z_base);
    CHECK(eig.eigenvalues().minCoeff() >= -10 * 1e-7);
  }
}

TEST_CASE("mve of boxes") {
  Eigen::MatrixXd A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  SUBCASE("unit square") {
    Eigen::VectorXd b = Eigen::VectorXd::Ones(4);
    MveResult r = max_volume_ellipsoid(A, b);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.ellipsoid.center.norm() < 1e-5);
    CHECK((r.ellipsoid.shape - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-4);
  }
  SUBCASE("rectangle [-2,2]x[-1,1]") {
    Eigen::VectorXd b(4);
    b << 2, 2, 1, 1;
    MveResult r = max_volume_ellipsoid(A, b);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.ellipsoid.center.norm() < 1e-5);
    Eigen::MatrixXd want = Eigen::Vector2d(2, 1).asDiagonal();
    CHECK((r.ellipsoid.shape - want).norm() < 1e-4);
  }
}

TEST_CASE("mve of triangle is the Steiner inellipse") {
  // x >= 0, y >= 0, x + y <= 1: center at the centroid, det = 1/(6 sqrt(3))
  Eigen::MatrixXd A(3, 2);
  A << -1, 0, 0, -1, 1, 1;
  Eigen::VectorXd b(3);
  b << 0, 0, 1;
  MveResult r = max_volume_ellipsoid(A, b);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.ellipsoid.center[0] == doctest::Approx(1.0 / 3).epsilon(1e-4));
  CHECK(r.ellipsoid.center[1] == doctest::Approx(1.0 / 3).epsilon(1e-4));
  CHECK(r.ellipsoid.shape.determinant() == doctest::Approx(1.0 / (6 * std::sqrt(3.0))).epsilon(1e-4));
}

TEST_CASE("mve boundary points satisfy region constraints") {
  std::mt19937 rng(17);
  std::normal_distribution<double> nd(0, 1);
  // random bounded polytope around the origin
  const int d = 3;
  const int m = 12;
  Eigen::MatrixXd A(m, d);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd a(d);
    for (int j = 0; j < d; ++j) a[j] = nd(rng);
    a.normalize();
    A.row(i) = a.transpose();
    b[i] = 0.5 + std::abs(nd(rng));
  }
  MveResult r = max_volume_ellipsoid(A, b);
  REQUIRE(r.status == SolveStatus::Optimal);
  std::uniform_real_distribution<double> ud(-1, 1);
  for (int k = 0; k < 10000; ++k) {
    Eigen::VectorXd v(d);
    for (int j = 0; j < d; ++j) v[j] = nd(rng);
    v.normalize();
    Eigen::VectorXd pt = r.ellipsoid.center + r.ellipsoid.shape * v;
    CHECK((A * pt - b).maxCoeff() <= 1e-7);
  }
}

TEST_CASE("mve empty region reported infeasible") {
  Eigen::MatrixXd A(2, 1);
  A << 1, -1;
  Eigen::VectorXd b(2);
  b << -1, -1;  // x <= -1 and -x <= -1
  MveResult r = max_volume_ellipsoid(A, b);
  CHECK(r.status == SolveStatus::Infeasible);
}

TEST_CASE("mve optimality spot check: no larger inscribed ellipsoid on a grid") {
  // shrink the returned shape by 1.05 on an axis and recenter on a coarse grid;
  // nothing strictly larger may fit (sanity, not proof)
  Eigen::MatrixXd A(4, 2);
  A << 1, 0.2, -1, 0.1, 0.3, 1, -0.2, -1;
  Eigen::VectorXd b(4);
  b << 1.0, 0.8, 1.2, 0.9;
  MveResult r = max_volume_ellipsoid(A, b);
  REQUIRE(r.status == SolveStatus::Optimal);
  const double vol = r.ellipsoid.shape.determinant();
  auto fits = [&](const Eigen::VectorXd& c, const Eigen::MatrixXd& S) {
    for (int i = 0; i < A.rows(); ++i) {
      const Eigen::VectorXd a = A.row(i).transpose();
      if ((S * a).norm() + a.dot(c) > b[i] + 1e-12) return false;
    }
    return true;
  };
  Eigen::MatrixXd grow = r.ellipsoid.shape;
  grow(0, 0) *= 1.05 * 1.05 / 1.0;  // grow one axis, shrink none
  for (double cx = -0.8; cx <= 0.8; cx += 0.1) {
    for (double cy = -0.8; cy <= 0.8; cy += 0.1) {
      Eigen::MatrixXd Sg = grow;
      if (fits(Eigen::Vector2d(cx, cy), Sg)) {
        CHECK(Sg.determinant() <= vol * 1.0001);
      }
    }
  }
}
