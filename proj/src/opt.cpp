#include "clfsyn/opt.hpp"

#include <cmath>
#include <sstream>

#include "clfsyn/conic.hpp"

namespace clfsyn {

namespace {

SolveStatus map_status(ConicStatus st, bool maximize_as_min_negation) {
  switch (st) {
    case ConicStatus::Optimal:
      return SolveStatus::Optimal;
    case ConicStatus::PrimalInfeasible:
      return SolveStatus::Infeasible;
    case ConicStatus::DualInfeasible:
      // primal (min) unbounded below == our maximization unbounded above
      return maximize_as_min_negation ? SolveStatus::Unbounded : SolveStatus::Unbounded;
    default:
      return SolveStatus::NumericalTrouble;
  }
}

}  // namespace

SolveOutcome solve_lp(const LinearProgram& lp, double tolerance) {
  const int n = lp.num_vars();
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> hvals;
  auto add_row = [&](const Eigen::VectorXd& row, double rhs) {
    const int r = static_cast<int>(hvals.size());
    for (int j = 0; j < n; ++j) {
      if (row[j] != 0.0) trips.emplace_back(r, j, row[j]);
    }
    hvals.push_back(rhs);
  };
  // G x >= h  ->  -G x <= -h
  for (int i = 0; i < lp.G.rows(); ++i) add_row(-lp.G.row(i).transpose(), -lp.h[i]);
  if (lp.lower) {
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row[j] = -1.0;
      add_row(row, -(*lp.lower)[j]);
    }
  }
  if (lp.upper) {
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row[j] = 1.0;
      add_row(row, (*lp.upper)[j]);
    }
  }

  ConicProblem cp;
  cp.c = -lp.objective;  // maximize -> minimize
  const int mrows = static_cast<int>(hvals.size());
  cp.G.resize(mrows, n);
  cp.G.setFromTriplets(trips.begin(), trips.end());
  cp.h = Eigen::Map<const Eigen::VectorXd>(hvals.data(), mrows);
  cp.A = lp.E.sparseView();
  cp.b = lp.d.size() ? lp.d : Eigen::VectorXd::Zero(0);
  if (lp.E.size() == 0) {
    cp.A.resize(0, n);
    cp.b.resize(0);
  }
  cp.cone.nonneg = mrows;

  ConicOptions opts;
  opts.feas_tol = tolerance;
  opts.gap_tol = tolerance;
  ConicResult cr = solve_conic(cp, opts);

  SolveOutcome out;
  out.status = map_status(cr.status, true);
  out.iterations = cr.iterations;
  if (cr.status == ConicStatus::Optimal) {
    out.x = cr.x;
    out.objective = -cr.pobj;
    out.dual_objective = -cr.dobj;
    out.achieved_tol = std::max({cr.pres, cr.dres, cr.rel_gap});
  }
  return out;
}

SolveOutcome solve_sdp(const SemidefiniteProgram& sdp, double tolerance) {
  const int side = sdp.side;
  const int n = svec_size(side);
  const Eigen::MatrixXd Zb =
      sdp.Z_base.size() ? sdp.Z_base : Eigen::MatrixXd::Zero(side, side).eval();

  // variable: x = svec(Z - Z_base), PSD slack block enforces Z >= Z_base
  std::vector<Eigen::Triplet<double>> gtrips;
  std::vector<double> hvals;
  int nonneg_rows = 0;
  auto add_scalar_row = [&](const Eigen::MatrixXd& Amat, double rhs, double sign) {
    // sign * <A, X> <= sign * rhs
    Eigen::VectorXd arow = mat_to_svec(Amat);
    const int r = nonneg_rows++;
    for (int j = 0; j < n; ++j) {
      if (arow[j] != 0.0) gtrips.emplace_back(r, j, sign * arow[j]);
    }
    hvals.push_back(sign * rhs);
  };

  std::vector<Eigen::Triplet<double>> atrips;
  std::vector<double> bvals;
  for (const auto& con : sdp.constraints) {
    const double rhs = con.rhs - (con.A.cwiseProduct(Zb)).sum();
    if (con.sense == ConstraintSense::Eq) {
      Eigen::VectorXd arow = mat_to_svec(con.A);
      const int r = static_cast<int>(bvals.size());
      for (int j = 0; j < n; ++j) {
        if (arow[j] != 0.0) atrips.emplace_back(r, j, arow[j]);
      }
      bvals.push_back(rhs);
    } else if (con.sense == ConstraintSense::Le) {
      add_scalar_row(con.A, rhs, 1.0);
    } else {
      add_scalar_row(con.A, rhs, -1.0);
    }
  }

  ConicProblem cp;
  cp.c = -mat_to_svec(sdp.C);
  const int mrows = nonneg_rows + n;
  cp.G.resize(mrows, n);
  // PSD slack: s_psd = x  ->  G_psd = -I, h = 0
  for (int j = 0; j < n; ++j) gtrips.emplace_back(nonneg_rows + j, j, -1.0);
  cp.G.setFromTriplets(gtrips.begin(), gtrips.end());
  cp.h = Eigen::VectorXd::Zero(mrows);
  for (int i = 0; i < nonneg_rows; ++i) cp.h[i] = hvals[i];
  cp.A.resize(static_cast<int>(bvals.size()), n);
  cp.A.setFromTriplets(atrips.begin(), atrips.end());
  cp.b = Eigen::Map<const Eigen::VectorXd>(bvals.data(), static_cast<Eigen::Index>(bvals.size()));
  cp.cone.nonneg = nonneg_rows;
  cp.cone.psd = {side};

  ConicOptions opts;
  opts.feas_tol = tolerance;
  opts.gap_tol = tolerance;
  ConicResult cr = solve_conic(cp, opts);

  SolveOutcome out;
  out.status = map_status(cr.status, true);
  out.iterations = cr.iterations;
  if (cr.status == ConicStatus::Optimal) {
    out.x = cr.x;
    out.Z = Zb + svec_to_mat(cr.x, side);
    out.Z = 0.5 * (out.Z + out.Z.transpose()).eval();
    const double base_obj = (sdp.C.cwiseProduct(Zb)).sum();
    out.objective = -cr.pobj + base_obj;
    out.dual_objective = -cr.dobj + base_obj;
    out.achieved_tol = std::max({cr.pres, cr.dres, cr.rel_gap});
  }
  return out;
}

ChebyshevResult chebyshev_center(const Eigen::MatrixXd& rows_A, const Eigen::VectorXd& rows_b,
                                 double tolerance) {
  // max rho  s.t.  a_i'x + |a_i| rho <= b_i
  const int n = static_cast<int>(rows_A.cols());
  const int m = static_cast<int>(rows_A.rows());
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Zero(n + 1);
  lp.objective[n] = 1.0;
  lp.G.resize(m, n + 1);
  lp.h.resize(m);
  for (int i = 0; i < m; ++i) {
    const double na = rows_A.row(i).norm();
    lp.G.row(i).head(n) = -rows_A.row(i);
    lp.G(i, n) = -na;
    lp.h[i] = -rows_b[i];
  }
  lp.E.resize(0, n + 1);
  lp.d.resize(0);
  SolveOutcome oc = solve_lp(lp, tolerance);
  ChebyshevResult out;
  out.status = oc.status;
  if (oc.optimal()) {
    out.center = oc.x.head(n);
    out.radius = oc.x[n];
  }
  return out;
}

MveResult max_volume_ellipsoid(const Eigen::MatrixXd& rows_A, const Eigen::VectorXd& rows_b,
                               double tolerance) {
  MveResult out;
  const int d = static_cast<int>(rows_A.cols());
  const int m = static_cast<int>(rows_A.rows());
  if (d == 0 || m == 0) return out;

  // Strictly feasible start from the Chebyshev center.
  ChebyshevResult cheb = chebyshev_center(rows_A, rows_b, 1e-9);
  if (cheb.status == SolveStatus::Infeasible || cheb.status == SolveStatus::Unbounded) {
    out.status = cheb.status;
    return out;
  }
  if (cheb.status != SolveStatus::Optimal || cheb.radius <= 1e-12) {
    out.status = (cheb.status == SolveStatus::Optimal) ? SolveStatus::Infeasible
                                                       : SolveStatus::NumericalTrouble;
    return out;
  }

  // maximize log det B  s.t.  |B a_i| <= b_i - a_i'x  via path-following on
  //   phi_t = t*(-log det B) - sum_i log((b_i - a_i'x)^2 - |B a_i|^2).
  // Variables: plain-packed lower triangle of symmetric B, then x.
  const int nb = svec_size(d);
  const int nvar = nb + d;
  Eigen::MatrixXd B = 0.5 * cheb.radius * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd x = cheb.center;

  auto unpack = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd M(d, d);
    int k = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) {
        M(i, j) = v[k];
        M(j, i) = v[k];
        ++k;
      }
    return M;
  };
  auto gaps = [&](const Eigen::MatrixXd& Bm, const Eigen::VectorXd& xm, Eigen::VectorXd& g) {
    g.resize(m);
    for (int i = 0; i < m; ++i) {
      const double u = rows_b[i] - rows_A.row(i).dot(xm);
      const Eigen::VectorXd v = Bm * rows_A.row(i).transpose();
      g[i] = (u <= 0.0) ? -1.0 : u * u - v.squaredNorm();
    }
  };

  double t = 1.0;
  const double mu_t = 20.0;
  const double tol_abs = std::max(tolerance, 1e-10);
  bool converged = false;
  for (int outer = 0; outer < 60; ++outer) {
    for (int it = 0; it < 100; ++it) {
      Eigen::LLT<Eigen::MatrixXd> Bllt(B);
      if (Bllt.info() != Eigen::Success) return out;
      Eigen::MatrixXd Binv = Bllt.solve(Eigen::MatrixXd::Identity(d, d));
      Eigen::VectorXd g;
      gaps(B, x, g);
      if (g.minCoeff() <= 0.0) return out;

      Eigen::VectorXd grad = Eigen::VectorXd::Zero(nvar);
      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(nvar, nvar);

      // -t log det B: gradient and Hessian in the packed basis
      {
        int k1 = 0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j <= i; ++j, ++k1) {
            grad[k1] = -t * ((i == j) ? Binv(i, i) : 2.0 * Binv(i, j));
            int k2 = 0;
            for (int a = 0; a < d; ++a)
              for (int c = 0; c <= a; ++c, ++k2) {
                double v = Binv(i, a) * Binv(j, c) + Binv(i, c) * Binv(j, a);
                if (i != j) v *= 2.0;
                if (a != c) v *= 2.0;
                hess(k1, k2) += t * 0.5 * v;
              }
          }
      }

      for (int i = 0; i < m; ++i) {
        const Eigen::VectorXd a = rows_A.row(i).transpose();
        const double u = rows_b[i] - a.dot(x);
        const Eigen::VectorXd v = B * a;
        // packed gradient of g_i = u^2 - |B a|^2
        Eigen::MatrixXd dgB = -(v * a.transpose() + a * v.transpose());
        Eigen::VectorXd dg(nvar);
        {
          int k = 0;
          for (int r = 0; r < d; ++r)
            for (int c = 0; c <= r; ++c, ++k) dg[k] = (r == c) ? dgB(r, r) : 2.0 * dgB(r, c);
        }
        dg.tail(d) = -2.0 * u * a;
        grad -= dg / g[i];
        hess += dg * dg.transpose() / (g[i] * g[i]);
        // -Hess(g_i)/g_i: the B-part of Hess(g) is E -> -2 |E a|^2; columns of
        // Wm hold E_k a for the packed symmetric basis.
        Eigen::MatrixXd Wm = Eigen::MatrixXd::Zero(d, nb);
        {
          int k = 0;
          for (int r = 0; r < d; ++r)
            for (int c = 0; c <= r; ++c, ++k) {
              if (r == c) {
                Wm(r, k) = a[r];
              } else {
                Wm(r, k) = a[c];
                Wm(c, k) = a[r];
              }
            }
        }
        hess.topLeftCorner(nb, nb) += (2.0 / g[i]) * (Wm.transpose() * Wm);
        hess.bottomRightCorner(d, d) -= (2.0 / g[i]) * (a * a.transpose());
      }

      Eigen::LDLT<Eigen::MatrixXd> hl(hess);
      Eigen::VectorXd step = hl.solve(-grad);
      const double dec = -grad.dot(step);
      if (!std::isfinite(dec)) return out;
      if (dec * 0.5 <= 1e-11 * (1.0 + t)) break;

      double alpha = 1.0;
      bool moved = false;
      Eigen::VectorXd gtry;
      for (int ls = 0; ls < 60; ++ls) {
        Eigen::MatrixXd Btry = B + alpha * unpack(step.head(nb));
        Eigen::VectorXd xtry = x + alpha * step.tail(d);
        Eigen::LLT<Eigen::MatrixXd> btl(Btry);
        if (btl.info() == Eigen::Success) {
          gaps(Btry, xtry, gtry);
          if (gtry.minCoeff() > 0.0) {
            B = Btry;
            x = xtry;
            moved = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!moved) return out;
    }
    if (2.0 * m / t <= tol_abs) {
      converged = true;
      break;
    }
    t *= mu_t;
  }
  if (!converged) return out;

  out.status = SolveStatus::Optimal;
  out.ellipsoid.center = x;
  out.ellipsoid.shape = 0.5 * (B + B.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.ellipsoid.shape, Eigen::EigenvaluesOnly);
  out.ellipsoid.log_det = 0.0;
  for (int i = 0; i < d; ++i) out.ellipsoid.log_det += std::log(std::max(eig.eigenvalues()[i], 1e-300));
  return out;
}

double unit_ball_volume(int d) {
  return std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

std::string debug_dump(const LinearProgram& lp) {
  std::ostringstream os;
  os << "lp max c'x\nc = " << lp.objective.transpose() << "\nG (>= h):\n" << lp.G << "\nh = "
     << lp.h.transpose() << "\n";
  if (lp.E.rows()) os << "E (= d):\n" << lp.E << "\nd = " << lp.d.transpose() << "\n";
  return os.str();
}

std::string debug_dump(const SemidefiniteProgram& sdp) {
  std::ostringstream os;
  os << "sdp side " << sdp.side << " max <C,Z>\nC:\n" << sdp.C << "\n";
  for (const auto& c : sdp.constraints) {
    os << "constraint " << (c.sense == ConstraintSense::Eq ? "=" : (c.sense == ConstraintSense::Le ? "<=" : ">="))
       << " " << c.rhs << ":\n" << c.A << "\n";
  }
  if (sdp.Z_base.size()) os << "Z_base:\n" << sdp.Z_base << "\n";
  return os.str();
}

}  // namespace clfsyn
