#include "clfsyn/conic.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace clfsyn {

int ConeSpec::svec_dim() const {
  int d = nonneg;
  for (int p : psd) d += svec_size(p);
  return d;
}

int ConeSpec::barrier_degree() const {
  int d = nonneg;
  for (int p : psd) d += p;
  return d;
}

int svec_size(int side) { return side * (side + 1) / 2; }

int svec_index(int i, int j) {
  if (j > i) std::swap(i, j);
  return i * (i + 1) / 2 + j;
}

Eigen::VectorXd mat_to_svec(const Eigen::MatrixXd& M) {
  const int p = static_cast<int>(M.rows());
  Eigen::VectorXd v(svec_size(p));
  const double rt2 = std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      v[k++] = (i == j) ? M(i, i) : rt2 * 0.5 * (M(i, j) + M(j, i));
    }
  }
  return v;
}

Eigen::MatrixXd svec_to_mat(const Eigen::VectorXd& v, int side) {
  Eigen::MatrixXd M(side, side);
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double val = (i == j) ? v[k] : inv_rt2 * v[k];
      M(i, j) = val;
      M(j, i) = val;
      ++k;
    }
  }
  return M;
}

namespace {

struct BlockLayout {
  int nonneg = 0;
  std::vector<int> psd_side;
  std::vector<int> psd_offset;  // row offset of each PSD block within s

  static BlockLayout make(const ConeSpec& cone) {
    BlockLayout L;
    L.nonneg = cone.nonneg;
    int off = cone.nonneg;
    for (int p : cone.psd) {
      L.psd_side.push_back(p);
      L.psd_offset.push_back(off);
      off += svec_size(p);
    }
    return L;
  }
};

// Nesterov-Todd scaling per cone block.
struct Scaling {
  Eigen::VectorXd w;                 // nonneg block
  std::vector<Eigen::MatrixXd> R;    // psd blocks
  std::vector<Eigen::MatrixXd> Rinv;
  std::vector<Eigen::MatrixXd> Pinv;  // (R R')^{-1}
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chol_s;  // factor of current S block
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chol_z;
  Eigen::VectorXd lambda;            // scaled point, svec layout

  bool compute(const BlockLayout& L, const Eigen::VectorXd& s, const Eigen::VectorXd& z);
};

bool Scaling::compute(const BlockLayout& L, const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
  const int m = static_cast<int>(s.size());
  lambda.resize(m);
  w.resize(L.nonneg);
  for (int i = 0; i < L.nonneg; ++i) {
    if (s[i] <= 0.0 || z[i] <= 0.0) return false;
    w[i] = std::sqrt(s[i] / z[i]);
    lambda[i] = std::sqrt(s[i] * z[i]);
  }
  const int nb = static_cast<int>(L.psd_side.size());
  R.assign(nb, {});
  Rinv.assign(nb, {});
  Pinv.assign(nb, {});
  chol_s.clear();
  chol_s.resize(nb);
  chol_z.clear();
  chol_z.resize(nb);
  for (int b = 0; b < nb; ++b) {
    const int p = L.psd_side[b];
    Eigen::MatrixXd S = svec_to_mat(s.segment(L.psd_offset[b], svec_size(p)), p);
    Eigen::MatrixXd Z = svec_to_mat(z.segment(L.psd_offset[b], svec_size(p)), p);
    chol_s[b].compute(S);
    chol_z[b].compute(Z);
    if (chol_s[b].info() != Eigen::Success || chol_z[b].info() != Eigen::Success) return false;
    Eigen::MatrixXd Ls = chol_s[b].matrixL();
    Eigen::MatrixXd Lz = chol_z[b].matrixL();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd sig = svd.singularValues();
    if (sig.minCoeff() <= 0.0) return false;
    const Eigen::VectorXd sig_isqrt = sig.array().sqrt().inverse();
    R[b] = Ls * svd.matrixV() * sig_isqrt.asDiagonal();
    // R^{-1} = diag(sig)^{1/2} V' Ls^{-1}
    Eigen::MatrixXd LsInv = Eigen::MatrixXd::Identity(p, p);
    Ls.triangularView<Eigen::Lower>().solveInPlace(LsInv);
    Rinv[b] = sig.array().sqrt().matrix().asDiagonal() * svd.matrixV().transpose() * LsInv;
    Pinv[b] = Rinv[b].transpose() * Rinv[b];
    Eigen::VectorXd lam_blk = Eigen::VectorXd::Zero(svec_size(p));
    for (int i = 0; i < p; ++i) lam_blk[svec_index(i, i)] = sig[i];
    lambda.segment(L.psd_offset[b], svec_size(p)) = lam_blk;
  }
  return true;
}

// v <- per-block op applied to the svec layout; matrix op given as M -> Lm * M * Rm.
Eigen::VectorXd apply_congruence(const BlockLayout& L, const Eigen::VectorXd& v,
                                 const Eigen::VectorXd& nonneg_scale,
                                 const std::vector<Eigen::MatrixXd>& Lm,
                                 const std::vector<Eigen::MatrixXd>& Rm) {
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < L.nonneg; ++i) out[i] = v[i] * nonneg_scale[i];
  for (std::size_t b = 0; b < L.psd_side.size(); ++b) {
    const int p = L.psd_side[b];
    Eigen::MatrixXd M = svec_to_mat(v.segment(L.psd_offset[b], svec_size(p)), p);
    Eigen::MatrixXd Q = Lm[b] * M * Rm[b];
    out.segment(L.psd_offset[b], svec_size(p)) = mat_to_svec(0.5 * (Q + Q.transpose()));
  }
  return out;
}

struct ScalingOps {
  const BlockLayout* L;
  const Scaling* W;

  // W z -> scaled: nonneg w.*v, psd R' M R
  Eigen::VectorXd W_apply(const Eigen::VectorXd& v) const {
    std::vector<Eigen::MatrixXd> Lm, Rm;
    for (std::size_t b = 0; b < L->psd_side.size(); ++b) {
      Lm.push_back(W->R[b].transpose());
      Rm.push_back(W->R[b]);
    }
    return apply_congruence(*L, v, W->w, Lm, Rm);
  }
  // W^{-T} s: nonneg v./w, psd R^{-1} M R^{-T}
  Eigen::VectorXd Winvt_apply(const Eigen::VectorXd& v) const {
    std::vector<Eigen::MatrixXd> Lm, Rm;
    for (std::size_t b = 0; b < L->psd_side.size(); ++b) {
      Lm.push_back(W->Rinv[b]);
      Rm.push_back(W->Rinv[b].transpose());
    }
    Eigen::VectorXd sc = W->w.array().inverse();
    return apply_congruence(*L, v, sc, Lm, Rm);
  }
  // W^T v: nonneg w.*v, psd R M R'
  Eigen::VectorXd Wt_apply(const Eigen::VectorXd& v) const {
    std::vector<Eigen::MatrixXd> Lm, Rm;
    for (std::size_t b = 0; b < L->psd_side.size(); ++b) {
      Lm.push_back(W->R[b]);
      Rm.push_back(W->R[b].transpose());
    }
    return apply_congruence(*L, v, W->w, Lm, Rm);
  }
  // (W'W)^{-1} v: nonneg v.*z/s = v./w^2, psd Pinv M Pinv
  Eigen::VectorXd WtW_inv_apply(const Eigen::VectorXd& v) const {
    std::vector<Eigen::MatrixXd> Lm, Rm;
    for (std::size_t b = 0; b < L->psd_side.size(); ++b) {
      Lm.push_back(W->Pinv[b]);
      Rm.push_back(W->Pinv[b]);
    }
    Eigen::VectorXd sc = W->w.array().square().inverse();
    return apply_congruence(*L, v, sc, Lm, Rm);
  }
};

// Largest step a with v + a*dv staying in the cone (1-block eigenvalue test
// against the Cholesky factor of the current point).
double max_step(const BlockLayout& L, const Eigen::VectorXd& v, const Eigen::VectorXd& dv,
                const std::vector<Eigen::LLT<Eigen::MatrixXd>>& chol) {
  double amax = std::numeric_limits<double>::infinity();
  for (int i = 0; i < L.nonneg; ++i) {
    if (dv[i] < 0.0) amax = std::min(amax, -v[i] / dv[i]);
  }
  for (std::size_t b = 0; b < L.psd_side.size(); ++b) {
    const int p = L.psd_side[b];
    Eigen::MatrixXd D = svec_to_mat(dv.segment(L.psd_offset[b], svec_size(p)), p);
    Eigen::MatrixXd Lf = chol[b].matrixL();
    Lf.triangularView<Eigen::Lower>().solveInPlace(D);
    Eigen::MatrixXd Dt = D.transpose();
    Lf.triangularView<Eigen::Lower>().solveInPlace(Dt);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (Dt + Dt.transpose()),
                                                       Eigen::EigenvaluesOnly);
    const double mineig = eig.eigenvalues().minCoeff();
    if (mineig < 0.0) amax = std::min(amax, -1.0 / mineig);
  }
  return amax;
}

// Jordan product x o y per block.
Eigen::VectorXd jordan_product(const BlockLayout& L, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(a.size());
  for (int i = 0; i < L.nonneg; ++i) out[i] = a[i] * b[i];
  for (std::size_t blk = 0; blk < L.psd_side.size(); ++blk) {
    const int p = L.psd_side[blk];
    Eigen::MatrixXd A = svec_to_mat(a.segment(L.psd_offset[blk], svec_size(p)), p);
    Eigen::MatrixXd B = svec_to_mat(b.segment(L.psd_offset[blk], svec_size(p)), p);
    Eigen::MatrixXd J = 0.5 * (A * B + B * A);
    out.segment(L.psd_offset[blk], svec_size(p)) = mat_to_svec(J);
  }
  return out;
}

// Solve lambda o u = rhs where lambda is a scaled (diagonal) point.
Eigen::VectorXd jordan_solve_lambda(const BlockLayout& L, const Eigen::VectorXd& lambda,
                                    const Eigen::VectorXd& rhs) {
  Eigen::VectorXd out(rhs.size());
  for (int i = 0; i < L.nonneg; ++i) out[i] = rhs[i] / lambda[i];
  for (std::size_t blk = 0; blk < L.psd_side.size(); ++blk) {
    const int p = L.psd_side[blk];
    const int off = L.psd_offset[blk];
    Eigen::VectorXd lam_diag(p);
    for (int i = 0; i < p; ++i) lam_diag[i] = lambda[off + svec_index(i, i)];
    Eigen::MatrixXd Rm = svec_to_mat(rhs.segment(off, svec_size(p)), p);
    Eigen::MatrixXd U(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) U(i, j) = 2.0 * Rm(i, j) / (lam_diag[i] + lam_diag[j]);
    out.segment(off, svec_size(p)) = mat_to_svec(0.5 * (U + U.transpose()));
  }
  return out;
}

struct KktSolver {
  const ConicProblem* prob;
  const BlockLayout* L;
  ScalingOps ops;
  Eigen::SparseMatrix<double> Gt;  // G'
  Eigen::MatrixXd T;               // (W'W)^{-1} G, dense buffer
  Eigen::LLT<Eigen::MatrixXd> Hchol;
  Eigen::FullPivLU<Eigen::MatrixXd> Mlu;  // A H^{-1} A'
  int n = 0, p = 0, m = 0;
  bool has_eq = false;

  bool factor(const Scaling& W) {
    n = static_cast<int>(prob->c.size());
    p = static_cast<int>(prob->A.rows());
    m = static_cast<int>(prob->h.size());
    has_eq = p > 0;
    T.setZero(m, n);
    // Fill T = (W'W)^{-1} G block by block using the sparse columns of G.
    const double inv_rt2 = 1.0 / std::sqrt(2.0);
    Eigen::MatrixXd Mbuf;
    for (int j = 0; j < n; ++j) {
      // nonneg rows
      for (Eigen::SparseMatrix<double>::InnerIterator it(prob->G, j); it; ++it) {
        if (it.row() < L->nonneg) T(it.row(), j) = it.value() / (W.w[it.row()] * W.w[it.row()]);
      }
    }
    for (std::size_t b = 0; b < L->psd_side.size(); ++b) {
      const int side = L->psd_side[b];
      const int off = L->psd_offset[b];
      const int sv = svec_size(side);
      // local (i1,i2) per svec index
      std::vector<std::pair<int, int>> ij(sv);
      for (int i = 0, k = 0; i < side; ++i)
        for (int jj = 0; jj <= i; ++jj, ++k) ij[k] = {i, jj};
      for (int j = 0; j < n; ++j) {
        bool touched = false;
        for (Eigen::SparseMatrix<double>::InnerIterator it(prob->G, j); it; ++it) {
          const int r = static_cast<int>(it.row()) - off;
          if (r < 0 || r >= sv) continue;
          if (!touched) {
            Mbuf.setZero(side, side);
            touched = true;
          }
          const auto [i1, i2] = ij[r];
          if (i1 == i2) {
            Mbuf.noalias() += it.value() * (W.Pinv[b].col(i1) * W.Pinv[b].col(i1).transpose());
          } else {
            const double v = it.value() * inv_rt2;
            Mbuf.noalias() += v * (W.Pinv[b].col(i1) * W.Pinv[b].col(i2).transpose());
            Mbuf.noalias() += v * (W.Pinv[b].col(i2) * W.Pinv[b].col(i1).transpose());
          }
        }
        if (touched) {
          const double rt2 = std::sqrt(2.0);
          for (int k = 0; k < sv; ++k) {
            const auto [i1, i2] = ij[k];
            T(off + k, j) = (i1 == i2) ? Mbuf(i1, i1) : rt2 * 0.5 * (Mbuf(i1, i2) + Mbuf(i2, i1));
          }
        }
      }
    }
    Eigen::MatrixXd H = Gt * T;
    H = 0.5 * (H + H.transpose());
    double reg = 1e-12 * (1.0 + H.trace() / std::max(1, n));
    for (int attempt = 0; attempt < 3; ++attempt) {
      Eigen::MatrixXd Hr = H + reg * Eigen::MatrixXd::Identity(n, n);
      Hchol.compute(Hr);
      if (Hchol.info() == Eigen::Success) break;
      reg *= 1e4;
    }
    if (Hchol.info() != Eigen::Success) return false;
    if (has_eq) {
      Eigen::MatrixXd At = prob->A.transpose();
      Eigen::MatrixXd HiAt = Hchol.solve(At);
      Eigen::MatrixXd M = prob->A * HiAt;
      Mlu.compute(M);
    }
    return true;
  }

  void solve(const Eigen::VectorXd& bx, const Eigen::VectorXd& by, const Eigen::VectorXd& bz,
             Eigen::VectorXd& ux, Eigen::VectorXd& uy, Eigen::VectorXd& uz) const {
    solve_once(bx, by, bz, ux, uy, uz);
    // one round of iterative refinement
    Eigen::VectorXd rx = bx - (prob->A.transpose() * uy + Gt * uz);
    Eigen::VectorXd ry = by - prob->A * ux;
    Eigen::VectorXd rz = bz - prob->G * ux + ops.Wt_apply(ops.W_apply(uz));
    Eigen::VectorXd cx, cy, cz;
    solve_once(rx, ry, rz, cx, cy, cz);
    ux += cx;
    uy += cy;
    uz += cz;
  }

  void solve_once(const Eigen::VectorXd& bx, const Eigen::VectorXd& by, const Eigen::VectorXd& bz,
                  Eigen::VectorXd& ux, Eigen::VectorXd& uy, Eigen::VectorXd& uz) const {
    Eigen::VectorXd t = ops.WtW_inv_apply(bz);
    Eigen::VectorXd rhs1 = bx + Gt * t;
    if (has_eq) {
      Eigen::VectorXd w1 = Hchol.solve(rhs1);
      uy = Mlu.solve(prob->A * w1 - by);
      ux = Hchol.solve(rhs1 - prob->A.transpose() * uy);
    } else {
      uy.resize(0);
      ux = Hchol.solve(rhs1);
    }
    uz = ops.WtW_inv_apply((prob->G * ux - bz).eval());
  }
};

Eigen::VectorXd cone_identity(const BlockLayout& L, int m) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < L.nonneg; ++i) e[i] = 1.0;
  for (std::size_t b = 0; b < L.psd_side.size(); ++b) {
    for (int i = 0; i < L.psd_side[b]; ++i) e[L.psd_offset[b] + svec_index(i, i)] = 1.0;
  }
  return e;
}

// Distance to cone boundary: min over nonneg entries and PSD eigenvalues.
double min_eig_cone(const BlockLayout& L, const Eigen::VectorXd& v) {
  double me = std::numeric_limits<double>::infinity();
  for (int i = 0; i < L.nonneg; ++i) me = std::min(me, v[i]);
  for (std::size_t b = 0; b < L.psd_side.size(); ++b) {
    const int p = L.psd_side[b];
    Eigen::MatrixXd M = svec_to_mat(v.segment(L.psd_offset[b], svec_size(p)), p);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
    me = std::min(me, eig.eigenvalues().minCoeff());
  }
  return me;
}

}  // namespace

ConicResult solve_conic(const ConicProblem& prob, const ConicOptions& opts) {
  ConicResult res;
  const int n = static_cast<int>(prob.c.size());
  const int p = static_cast<int>(prob.A.rows());
  const int m = static_cast<int>(prob.h.size());
  const BlockLayout L = BlockLayout::make(prob.cone);
  if (prob.cone.svec_dim() != m || prob.G.rows() != m || prob.G.cols() != n ||
      (p > 0 && prob.A.cols() != n)) {
    return res;  // malformed: NumericalTrouble
  }

  const Eigen::VectorXd e = cone_identity(L, m);
  const double nu = prob.cone.barrier_degree() + 1;

  Scaling W;
  KktSolver kkt;
  kkt.prob = &prob;
  kkt.L = &L;
  kkt.Gt = prob.G.transpose();
  kkt.ops = ScalingOps{&L, &W};

  // Initial point: W = I solves, then shift into the cone interior.
  Eigen::VectorXd x, y, s, z;
  Scaling Wid;
  {
    Wid.w = Eigen::VectorXd::Ones(L.nonneg);
    for (std::size_t b = 0; b < L.psd_side.size(); ++b) {
      const int side = L.psd_side[b];
      Wid.R.push_back(Eigen::MatrixXd::Identity(side, side));
      Wid.Rinv.push_back(Eigen::MatrixXd::Identity(side, side));
      Wid.Pinv.push_back(Eigen::MatrixXd::Identity(side, side));
    }
    kkt.ops = ScalingOps{&L, &Wid};
    if (!kkt.factor(Wid)) return res;
    Eigen::VectorXd ux, uy, uz;
    kkt.solve_once(Eigen::VectorXd::Zero(n), prob.b, prob.h, ux, uy, uz);
    x = ux;
    s = -(prob.G * x - prob.h);
    double alpha = -min_eig_cone(L, s);
    if (alpha >= -1e-8) s += (1.0 + alpha) * e;
    kkt.solve_once(-prob.c, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(m), ux, uy, uz);
    y = uy;
    z = uz;
    alpha = -min_eig_cone(L, z);
    if (alpha >= -1e-8) z += (1.0 + alpha) * e;
    if (p == 0) y.resize(0);
    kkt.ops = ScalingOps{&L, &W};
  }
  double tau = 1.0, kappa = 1.0;

  const double bnorm = std::max(1.0, prob.b.size() ? prob.b.norm() : 0.0);
  const double hnorm = std::max(1.0, prob.h.norm());
  const double cnorm = std::max(1.0, prob.c.norm());

  double best_gap = std::numeric_limits<double>::infinity();
  int stall = 0;
  double best_metric = std::numeric_limits<double>::infinity();
  Eigen::VectorXd bx, bs, bz, by;
  double bpobj = 0, bdobj = 0, bgap = 0, brelgap = 0, bpres = 0, bdres = 0;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    res.iterations = iter;
    // residuals
    Eigen::VectorXd res_x = prob.A.transpose() * y + kkt.Gt * z + prob.c * tau;
    Eigen::VectorXd res_y = prob.A * x - prob.b * tau;
    Eigen::VectorXd res_z = prob.G * x + s - prob.h * tau;
    const double res_tau = prob.c.dot(x) + (p ? prob.b.dot(y) : 0.0) + prob.h.dot(z) + kappa;
    const double mu = (s.dot(z) + tau * kappa) / nu;

    // convergence metrics on the de-homogenized point
    const double pcost = prob.c.dot(x) / tau;
    const double dcost = -((p ? prob.b.dot(y) : 0.0) + prob.h.dot(z)) / tau;
    const double gap = s.dot(z) / (tau * tau);
    const double relgap = gap / std::max(1.0, std::abs(pcost));
    const double pres = std::max((p ? (res_y.norm() / tau) / bnorm : 0.0), (res_z.norm() / tau) / hnorm);
    const double dres = (res_x.norm() / tau) / cnorm;

    res.pobj = pcost;
    res.dobj = dcost;
    res.gap = gap;
    res.rel_gap = relgap;
    res.pres = pres;
    res.dres = dres;

    if (pres <= opts.feas_tol && dres <= opts.feas_tol &&
        (gap <= opts.gap_tol || relgap <= opts.gap_tol)) {
      res.status = ConicStatus::Optimal;
      res.x = x / tau;
      res.s = s / tau;
      res.z = z / tau;
      res.y = p ? (y / tau).eval() : Eigen::VectorXd();
      return res;
    }
    if (getenv("CLFSYN_CONIC_TRACE")) {
      fprintf(stderr, "it %d pobj %.3e dobj %.3e gap %.3e relgap %.3e pres %.3e dres %.3e\n", iter,
              pcost, dcost, gap, relgap, pres, dres);
    }
    const double metric = std::max({pres, dres, std::min(gap, relgap)});
    if (metric < best_metric) {
      best_metric = metric;
      bx = x / tau;
      bs = s / tau;
      bz = z / tau;
      by = p ? (y / tau).eval() : Eigen::VectorXd();
      bpobj = pcost;
      bdobj = dcost;
      bgap = gap;
      brelgap = relgap;
      bpres = pres;
      bdres = dres;
    }
    // infeasibility certificates
    const double hz_by = prob.h.dot(z) + (p ? prob.b.dot(y) : 0.0);
    if (hz_by < 0.0) {
      const double xi = -hz_by;
      if ((prob.A.transpose() * y + kkt.Gt * z).norm() / xi <= opts.feas_tol * cnorm) {
        res.status = ConicStatus::PrimalInfeasible;
        res.z = z / xi;
        res.y = p ? (y / xi).eval() : Eigen::VectorXd();
        return res;
      }
    }
    const double cx = prob.c.dot(x);
    if (cx < 0.0) {
      const double zeta = -cx;
      const double unb = std::max((p ? (prob.A * x).norm() : 0.0), (prob.G * x + s).norm());
      if (unb / zeta <= opts.feas_tol * std::max(bnorm, hnorm)) {
        res.status = ConicStatus::DualInfeasible;
        res.x = x / zeta;
        res.s = s / zeta;
        return res;
      }
    }

    if (mu < best_gap * 0.999) {
      best_gap = mu;
      stall = 0;
    } else if (++stall > 12) {
      break;
    }

    if (!W.compute(L, s, z)) break;
    if (!kkt.factor(W)) break;

    Eigen::VectorXd u1x, u1y, u1z;
    kkt.solve(-prob.c, prob.b, prob.h, u1x, u1y, u1z);

    auto compute_direction = [&](double sigma, const Eigen::VectorXd& corr, double corr_tk,
                                 Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& dz,
                                 Eigen::VectorXd& ds, double& dtau, double& dkappa) {
      Eigen::VectorXd rhs_lam = sigma * mu * e - jordan_product(L, W.lambda, W.lambda) - corr;
      Eigen::VectorXd dst = jordan_solve_lambda(L, W.lambda, rhs_lam);
      Eigen::VectorXd bx = -(1.0 - sigma) * res_x;
      Eigen::VectorXd by = -(1.0 - sigma) * res_y;
      Eigen::VectorXd bz = -(1.0 - sigma) * res_z - kkt.ops.Wt_apply(dst);
      Eigen::VectorXd u2x, u2y, u2z;
      kkt.solve(bx, by, bz, u2x, u2y, u2z);
      const double tk_rhs = (sigma * mu - tau * kappa - corr_tk) / tau;
      const double denom = prob.c.dot(u1x) + (p ? prob.b.dot(u1y) : 0.0) + prob.h.dot(u1z) - kappa / tau;
      const double numer = -(1.0 - sigma) * res_tau - tk_rhs - (prob.c.dot(u2x) + (p ? prob.b.dot(u2y) : 0.0) + prob.h.dot(u2z));
      dtau = numer / denom;
      dx = u2x + dtau * u1x;
      if (p) dy = u2y + dtau * u1y; else dy.resize(0);
      dz = u2z + dtau * u1z;
      ds = kkt.ops.Wt_apply((dst - kkt.ops.W_apply(dz)).eval());
      dkappa = tk_rhs - (kappa / tau) * dtau;
    };

    auto step_bound = [&](const Eigen::VectorXd& ds, const Eigen::VectorXd& dz, double dtau,
                          double dkappa) {
      double a = std::min(max_step(L, s, ds, W.chol_s), max_step(L, z, dz, W.chol_z));
      if (dtau < 0.0) a = std::min(a, -tau / dtau);
      if (dkappa < 0.0) a = std::min(a, -kappa / dkappa);
      return a;
    };

    // affine (predictor) direction
    Eigen::VectorXd dx, dy, dz, ds;
    double dtau, dkappa;
    compute_direction(0.0, Eigen::VectorXd::Zero(m), 0.0, dx, dy, dz, ds, dtau, dkappa);
    double a_aff = std::min(1.0, step_bound(ds, dz, dtau, dkappa));
    double sigma = std::pow(1.0 - a_aff, 3);
    sigma = std::min(0.999, std::max(sigma, 1e-8));

    // Mehrotra correction in the scaled space
    Eigen::VectorXd eta_s = kkt.ops.Winvt_apply(ds);
    Eigen::VectorXd eta_z = kkt.ops.W_apply(dz);
    Eigen::VectorXd corr = jordan_product(L, eta_s, eta_z);
    const double corr_tk = dtau * dkappa;

    compute_direction(sigma, corr, corr_tk, dx, dy, dz, ds, dtau, dkappa);
    double a = std::min(1.0, opts.step_fraction * step_bound(ds, dz, dtau, dkappa));
    if (!std::isfinite(a) || a <= 1e-12) break;

    x += a * dx;
    if (p) y += a * dy;
    z += a * dz;
    s += a * ds;
    tau += a * dtau;
    kappa += a * dkappa;
    if (!(tau > 0.0) || !(kappa > 0.0) || !x.allFinite() || !s.allFinite() || !z.allFinite()) break;
  }

  // Solver stopped early. A near-converged best iterate still counts as
  // optimal at its achieved (reported) accuracy.
  if (bx.size() && best_metric <= std::max(1e-5, 1000.0 * opts.feas_tol)) {
    res.status = ConicStatus::Optimal;
    res.x = bx;
    res.s = bs;
    res.z = bz;
    res.y = by;
    res.pobj = bpobj;
    res.dobj = bdobj;
    res.gap = bgap;
    res.rel_gap = brelgap;
    res.pres = bpres;
    res.dres = bdres;
    return res;
  }
  res.status = ConicStatus::NumericalTrouble;
  if (bx.size()) {
    res.x = bx;
    res.s = bs;
    res.z = bz;
    res.y = by;
  } else {
    res.x = x / tau;
    res.s = s / tau;
    res.z = z / tau;
    res.y = p ? (y / tau).eval() : Eigen::VectorXd();
  }
  return res;
}

}  // namespace clfsyn
