#include "clfsyn/demonstrator.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "clfsyn/conic.hpp"
#include "clfsyn/opt.hpp"

namespace clfsyn {

Eigen::VectorXd discrete_step(const ControlAffineSystem& system, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u, double tau) {
  return x + tau * system.eval_dynamics(x, u);
}

double rollout_cost(const ControlAffineSystem& system, const Eigen::VectorXd& x0,
                    const std::vector<Eigen::VectorXd>& u_seq, const MpcConfig& cfg) {
  const int N = static_cast<int>(u_seq.size());
  const Eigen::VectorXd ref =
      cfg.x_ref.size() ? cfg.x_ref : Eigen::VectorXd::Zero(system.n).eval();
  Eigen::VectorXd x = x0;
  double cost = 0.0;
  for (int i = 0; i < N; ++i) {
    cost += u_seq[i].dot(cfg.Rdiag.cwiseProduct(u_seq[i]));
    x = discrete_step(system, x, u_seq[i], cfg.tau);
    const Eigen::VectorXd e = x - ref;
    const double xcost = e.dot(cfg.Qdiag.cwiseProduct(e));
    cost += (i == N - 1) ? N * xcost : xcost;
  }
  return cost;
}

Eigen::VectorXd project_input(const InputPolytope& U, const Eigen::VectorXd& u) {
  if (U.contains(u)) return u;
  if (U.is_box()) {
    auto [lo, hi] = U.box_bounds();
    return u.cwiseMax(lo).cwiseMin(hi);
  }
  // min |v - u|^2 s.t. A v >= b, as a small SDP via the Schur complement
  const int m = U.input_dim();
  SemidefiniteProgram sdp;
  sdp.side = m + 1;
  // Z = [[I, v - u], [(v - u)', s]]; constraints pin the identity block and
  // tie v to the polytope rows; objective minimizes s >= |v - u|^2.
  sdp.C = Eigen::MatrixXd::Zero(m + 1, m + 1);
  sdp.C(m, m) = -1.0;
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      Eigen::MatrixXd E = Eigen::MatrixXd::Zero(m + 1, m + 1);
      E(i, j) = E(j, i) = 1.0;
      sdp.constraints.push_back({E, ConstraintSense::Eq, i == j ? 1.0 : 0.0});
    }
  }
  for (int r = 0; r < U.rows(); ++r) {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(m + 1, m + 1);
    for (int j = 0; j < m; ++j) E(j, m) = E(m, j) = 0.5 * U.A(r, j);
    sdp.constraints.push_back({E, ConstraintSense::Ge, U.b[r] - U.A.row(r).dot(u)});
  }
  SolveOutcome oc = solve_sdp(sdp, 1e-9);
  if (!oc.optimal()) throw std::runtime_error("project_input: projection solve failed");
  Eigen::VectorXd v(m);
  for (int j = 0; j < m; ++j) v[j] = oc.Z(j, m) + u[j];
  return v;
}

MpcDemonstrator::MpcDemonstrator(ControlAffineSystem system, MpcConfig cfg)
    : system_(std::move(system)), cfg_(std::move(cfg)) {
  if (cfg_.Qdiag.size() == 0) cfg_.Qdiag = Eigen::VectorXd::Ones(system_.n);
  if (cfg_.Rdiag.size() == 0) cfg_.Rdiag = Eigen::VectorXd::Ones(system_.m);
  for (int i = 0; i < system_.n; ++i) {
    std::vector<Polynomial> row;
    for (int j = 0; j < system_.n; ++j) row.push_back(system_.f0[i].partial(j));
    jac_f0_.push_back(std::move(row));
  }
  for (int k = 0; k < system_.m; ++k) {
    std::vector<std::vector<Polynomial>> jk;
    for (int i = 0; i < system_.n; ++i) {
      std::vector<Polynomial> row;
      for (int j = 0; j < system_.n; ++j) row.push_back(system_.f[k][i].partial(j));
      jk.push_back(std::move(row));
    }
    jac_f_.push_back(std::move(jk));
  }
}

Eigen::VectorXd MpcDemonstrator::block_step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  const int K = std::max(1, cfg_.substeps);
  const double h = cfg_.tau / K;
  Eigen::VectorXd cur = x;
  for (int s = 0; s < K; ++s) cur = discrete_step(system_, cur, u, h);
  return cur;
}

double MpcDemonstrator::block_cost(const Eigen::VectorXd& x0,
                                   const std::vector<Eigen::VectorXd>& u_seq) const {
  const int N = static_cast<int>(u_seq.size());
  const Eigen::VectorXd ref =
      cfg_.x_ref.size() ? cfg_.x_ref : Eigen::VectorXd::Zero(system_.n).eval();
  Eigen::VectorXd x = x0;
  double cost = 0.0;
  for (int i = 0; i < N; ++i) {
    cost += u_seq[i].dot(cfg_.Rdiag.cwiseProduct(u_seq[i]));
    x = block_step(x, u_seq[i]);
    if (!x.allFinite() || x.squaredNorm() > 1e16) {
      // finite-time blowup: penalize by how early the rollout diverged so the
      // descent still has a slope toward stabilizing sequences
      return 1e18 * (N - i) + cost;
    }
    const Eigen::VectorXd e = x - ref;
    const double xcost = e.dot(cfg_.Qdiag.cwiseProduct(e));
    cost += (i == N - 1) ? N * xcost : xcost;
  }
  return cost;
}

Demonstration MpcDemonstrator::demonstrate(const Eigen::VectorXd& x) const {
  if (!x.allFinite()) throw std::invalid_argument("demonstrate: non-finite query state");
  const int N = cfg_.N;
  const int m = system_.m;
  if (cfg_.step_rule == "gradient" || !system_.U.is_box()) {
    return descend_gradient(x, Eigen::VectorXd::Zero(m));
  }

  // deterministic multi-start: the zero sequence plus constant sequences at
  // fractions of the input range (long-horizon rollout costs are nonconvex
  // enough to trap a single descent)
  std::vector<Eigen::VectorXd> starts = {Eigen::VectorXd::Zero(m)};
  if (system_.U.is_box()) {
    auto [lo, hi] = system_.U.box_bounds();
    for (double frac : {0.6, -0.6, 0.95, -0.95}) {
      Eigen::VectorXd mid = 0.5 * (lo + hi);
      starts.push_back(mid + frac * 0.5 * (hi - lo));
    }
  }
  Demonstration best;
  bool have = false;
  for (const auto& s : starts) {
    Demonstration d = descend(x, s);
    if (!have || d.cost < best.cost) {
      best = d;
      have = true;
    }
  }
  // horizon continuation: short horizons are near-convex; their solutions
  // seed the full-length problem along the physically meaningful branch
  if (system_.U.is_box() && N >= 8) {
    Eigen::VectorXd useq;
    for (int Nh : {N / 4, N / 2, N}) {
      if (Nh < 1) continue;
      MpcConfig sub = cfg_;
      sub.N = Nh;
      MpcDemonstrator subm(system_, sub);
      Eigen::VectorXd init(Nh * m);
      if (useq.size() == 0) {
        init.setZero();
      } else {
        const int prev = static_cast<int>(useq.size()) / m;
        for (int k = 0; k < Nh; ++k) {
          init.segment(k * m, m) = useq.segment(std::min(k, prev - 1) * m, m);
        }
      }
      useq = subm.descend_newton_seq(x, init);
    }
    std::vector<Eigen::VectorXd> seq(N);
    for (int k = 0; k < N; ++k) seq[k] = useq.segment(k * m, m);
    const double J = rollout_cost(system_, x, seq, cfg_);
    if (!have || J < best.cost) {
      best.x = x;
      best.u = seq[0];
      best.cost = J;
    }
  }
  return best;
}

Demonstration MpcDemonstrator::descend(const Eigen::VectorXd& x, const Eigen::VectorXd& u_init) const {
  if (system_.U.is_box()) return descend_newton(x, u_init);
  return descend_gradient(x, u_init);
}

// Projected Gauss-Newton for box inputs. Long unstable rollouts make the cost
// too ill-conditioned for first-order steps (the TORA horizon conditions like
// 2^N), while the Gauss-Newton model is exact up to the small cubic terms.
Demonstration MpcDemonstrator::descend_newton(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& u_init) const {
  const int N = cfg_.N;
  const int m = system_.m;
  Eigen::VectorXd init(N * m);
  for (int k = 0; k < N; ++k) init.segment(k * m, m) = u_init;
  Eigen::VectorXd u = descend_newton_seq(x, init);
  std::vector<Eigen::VectorXd> seq(N);
  for (int k = 0; k < N; ++k) seq[k] = u.segment(k * m, m);
  Demonstration d;
  d.x = x;
  d.u = seq[0];
  d.cost = rollout_cost(system_, x, seq, cfg_);
  return d;
}

Eigen::VectorXd MpcDemonstrator::descend_newton_seq(const Eigen::VectorXd& x,
                                                    const Eigen::VectorXd& seq_init) const {
  const int N = cfg_.N;
  const int n = system_.n;
  const int m = system_.m;
  const int nu = N * m;
  const Eigen::VectorXd ref = cfg_.x_ref.size() ? cfg_.x_ref : Eigen::VectorXd::Zero(n).eval();
  auto [lo, hi] = system_.U.box_bounds();

  Eigen::VectorXd u = seq_init;
  for (int i = 0; i < nu; ++i) u[i] = std::min(hi[i % m], std::max(lo[i % m], u[i]));

  auto cost_of = [&](const Eigen::VectorXd& useq) {
    std::vector<Eigen::VectorXd> seq(N);
    for (int k = 0; k < N; ++k) seq[k] = useq.segment(k * m, m);
    return block_cost(x, seq);
  };

  double J = cost_of(u);
  if (!std::isfinite(J)) throw std::runtime_error("demonstrate: non-finite rollout cost");

  const int K = std::max(1, cfg_.substeps);
  const double h = cfg_.tau / K;
  std::vector<Eigen::VectorXd> xs(N + 1);
  // divergent rollouts carry no usable curvature; walk block-by-block toward
  // a finite rollout first
  for (int attempt = 0; attempt < 4 && J >= 1e18; ++attempt) {
    bool improved_any = false;
    for (int k = 0; k < N; ++k) {
      for (double frac : {-0.95, -0.5, 0.5, 0.95}) {
        Eigen::VectorXd trial = u;
        for (int i = 0; i < m; ++i) {
          const double mid = 0.5 * (lo[i] + hi[i]);
          trial[k * m + i] = mid + frac * 0.5 * (hi[i] - lo[i]);
        }
        const double Jt = cost_of(trial);
        if (Jt < J) {
          u = trial;
          J = Jt;
          improved_any = true;
        }
      }
    }
    if (!improved_any) break;
  }
  for (int iter = 0; iter < cfg_.max_iterations; ++iter) {
    // forward sensitivities S = dx/du through the micro-steps and the
    // Gauss-Newton model at the block boundaries
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nu);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nu, nu);
    for (int k = 0; k < N; ++k) {
      for (int i = 0; i < m; ++i) {
        g[k * m + i] += 2.0 * cfg_.Rdiag[i] * u[k * m + i];
        H(k * m + i, k * m + i) += 2.0 * cfg_.Rdiag[i];
      }
    }
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, nu);
    Eigen::VectorXd xcur = x;
    xs[0] = x;
    Eigen::MatrixXd Jx(n, n);
    for (int k = 0; k < N; ++k) {
      for (int sub = 0; sub < K; ++sub) {
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            double v = jac_f0_[i][j].eval(xcur);
            for (int c = 0; c < m; ++c) v += u[k * m + c] * jac_f_[c][i][j].eval(xcur);
            Jx(i, j) = v;
          }
        }
        S = (Eigen::MatrixXd::Identity(n, n) + h * Jx) * S;
        for (int c = 0; c < m; ++c) {
          for (int i = 0; i < n; ++i) S(i, k * m + c) += h * system_.f[c][i].eval(xcur);
        }
        xcur = discrete_step(system_, xcur, u.segment(k * m, m), h);
      }
      xs[k + 1] = xcur;
      if (!xcur.allFinite() || xcur.squaredNorm() > 1e16) {
        g.setZero();  // no usable model from a divergent rollout
        break;
      }
      const double w = (k == N - 1) ? static_cast<double>(N) : 1.0;
      const Eigen::VectorXd e = xs[k + 1] - ref;
      g.noalias() += 2.0 * w * S.transpose() * cfg_.Qdiag.cwiseProduct(e);
      H.noalias() += 2.0 * w * S.transpose() * cfg_.Qdiag.asDiagonal() * S;
      if (!g.allFinite()) throw std::runtime_error("demonstrate: non-finite gradient");
    }
    if (g.isZero(0.0)) break;

    // projected Newton: clamp active bounds, solve on the free set
    std::vector<int> free_idx;
    for (int i = 0; i < nu; ++i) {
      const bool at_lo = u[i] <= lo[i % m] + 1e-12 && g[i] > 0;
      const bool at_hi = u[i] >= hi[i % m] - 1e-12 && g[i] < 0;
      if (!at_lo && !at_hi) free_idx.push_back(i);
    }
    if (free_idx.empty()) break;
    Eigen::MatrixXd Hf(free_idx.size(), free_idx.size());
    Eigen::VectorXd gf(free_idx.size());
    for (std::size_t a = 0; a < free_idx.size(); ++a) {
      gf[static_cast<Eigen::Index>(a)] = g[free_idx[a]];
      for (std::size_t b = 0; b < free_idx.size(); ++b) {
        Hf(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = H(free_idx[a], free_idx[b]);
      }
    }
    Hf.diagonal().array() += 1e-9 * (1.0 + Hf.trace() / std::max<std::size_t>(1, free_idx.size()));
    Eigen::LDLT<Eigen::MatrixXd> hl(Hf);
    Eigen::VectorXd df = hl.solve(-gf);

    double alpha = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      Eigen::VectorXd ut = u;
      for (std::size_t a = 0; a < free_idx.size(); ++a) {
        ut[free_idx[a]] += alpha * df[static_cast<Eigen::Index>(a)];
      }
      for (int i = 0; i < nu; ++i) ut[i] = std::min(hi[i % m], std::max(lo[i % m], ut[i]));
      const double Jt = cost_of(ut);
      if (std::isfinite(Jt) && Jt < J - 1e-12 * (1.0 + std::abs(J))) {
        const double drop = J - Jt;
        u = ut;
        J = Jt;
        improved = true;
        if (drop < cfg_.tol * (1.0 + std::abs(J))) iter = cfg_.max_iterations;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
  }
  return u;
}

Demonstration MpcDemonstrator::descend_gradient(const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& u_init) const {
  const int N = cfg_.N;
  const int n = system_.n;
  const int m = system_.m;
  const Eigen::VectorXd ref = cfg_.x_ref.size() ? cfg_.x_ref : Eigen::VectorXd::Zero(n).eval();

  std::vector<Eigen::VectorXd> u(N, u_init);
  for (auto& ui : u) ui = project_input(system_.U, ui);

  auto cost_of = [&](const std::vector<Eigen::VectorXd>& useq) {
    return block_cost(x, useq);
  };

  double J = cost_of(u);
  if (!std::isfinite(J)) throw std::runtime_error("demonstrate: non-finite rollout cost");

  std::vector<Eigen::VectorXd> xs(N + 1);
  std::vector<Eigen::VectorXd> grad(N, Eigen::VectorXd::Zero(m));
  std::vector<Eigen::VectorXd> grad_prev, u_prev;
  double alpha_bb = 0.0;
  int small_steps = 0;
  const int K = std::max(1, cfg_.substeps);
  const double h = cfg_.tau / K;
  std::vector<std::vector<Eigen::VectorXd>> micro(N);
  for (int iter = 0; iter < cfg_.max_iterations; ++iter) {
    // forward rollout, keeping the micro-states for the adjoint
    xs[0] = x;
    for (int k = 0; k < N; ++k) {
      Eigen::VectorXd cur = xs[k];
      micro[k].assign(K, Eigen::VectorXd());
      for (int sub = 0; sub < K; ++sub) {
        micro[k][sub] = cur;
        cur = discrete_step(system_, cur, u[k], h);
      }
      xs[k + 1] = cur;
    }
    // adjoint sweep through the micro-steps
    Eigen::VectorXd p = 2.0 * N * cfg_.Qdiag.cwiseProduct(xs[N] - ref);
    for (int k = N - 1; k >= 0; --k) {
      grad[k] = 2.0 * cfg_.Rdiag.cwiseProduct(u[k]);
      for (int sub = K - 1; sub >= 0; --sub) {
        const Eigen::VectorXd& xm = micro[k][sub];
        Eigen::MatrixXd B(n, m);
        for (int c = 0; c < m; ++c) {
          for (int i = 0; i < n; ++i) B(i, c) = system_.f[c][i].eval(xm);
        }
        grad[k] += h * B.transpose() * p;
        Eigen::MatrixXd Jx(n, n);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            double v = jac_f0_[i][j].eval(xm);
            for (int c = 0; c < m; ++c) v += u[k][c] * jac_f_[c][i][j].eval(xm);
            Jx(i, j) = v;
          }
        }
        p = (Eigen::MatrixXd::Identity(n, n) + h * Jx).transpose() * p;
        if (!p.allFinite()) throw std::runtime_error("demonstrate: non-finite adjoint");
      }
      if (k > 0) p += 2.0 * cfg_.Qdiag.cwiseProduct(xs[k] - ref);
    }

    double gnorm2 = 0.0;
    for (int k = 0; k < N; ++k) gnorm2 += grad[k].squaredNorm();
    if (gnorm2 < 1e-16) break;

    // Barzilai-Borwein step seed (the rollout cost is badly conditioned for
    // long horizons), safeguarded by Armijo backtracking on the projected step
    double alpha = alpha_bb;
    if (!grad_prev.empty()) {
      double sy = 0.0, yy = 0.0;
      for (int k = 0; k < N; ++k) {
        const Eigen::VectorXd sk = u[k] - u_prev[k];
        const Eigen::VectorXd yk = grad[k] - grad_prev[k];
        sy += sk.dot(yk);
        yy += yk.squaredNorm();
      }
      if (sy > 0.0 && yy > 0.0) alpha = sy / yy;
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) alpha = 1.0 / (1.0 + std::sqrt(gnorm2));
    alpha = std::min(alpha, 1e6);

    grad_prev = grad;
    u_prev = u;
    bool improved = false;
    for (int ls = 0; ls < 60; ++ls) {
      std::vector<Eigen::VectorXd> trial(N);
      double dist2 = 0.0;
      for (int k = 0; k < N; ++k) {
        trial[k] = project_input(system_.U, u[k] - alpha * grad[k]);
        dist2 += (trial[k] - u[k]).squaredNorm();
      }
      if (dist2 < 1e-24) break;
      const double Jt = cost_of(trial);
      if (std::isfinite(Jt) && Jt <= J - 1e-4 / alpha * dist2) {
        const double drop = J - Jt;
        u = std::move(trial);
        J = Jt;
        improved = true;
        alpha_bb = alpha;
        small_steps = drop < cfg_.tol * (1.0 + std::abs(J)) ? small_steps + 1 : 0;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved || small_steps >= 3) break;
  }

  Demonstration d;
  d.x = x;
  d.u = project_input(system_.U, u[0]);
  d.cost = J;
  return d;
}

Eigen::VectorXd MpcDemonstrator::demonstrate_input(const Eigen::VectorXd& x) {
  return demonstrate(x).u;
}

ExternalDemonstrator::ExternalDemonstrator(std::istream& in, std::ostream& out, int input_dim)
    : in_(in), out_(out), input_dim_(input_dim) {}

Eigen::VectorXd ExternalDemonstrator::demonstrate_input(const Eigen::VectorXd& x) {
  std::ostringstream line;
  line.precision(17);
  for (int i = 0; i < x.size(); ++i) {
    if (i) line << ' ';
    line << x[i];
  }
  out_ << line.str() << '\n';
  out_.flush();
  std::string reply;
  if (!std::getline(in_, reply)) throw std::runtime_error("external demonstrator: stream closed");
  std::istringstream rs(reply);
  Eigen::VectorXd u(input_dim_);
  for (int i = 0; i < input_dim_; ++i) {
    if (!(rs >> u[i])) throw std::runtime_error("external demonstrator: short reply");
  }
  return u;
}

}  // namespace clfsyn
