#include "clfsyn/verifier.hpp"

#include <cmath>
#include <functional>
#include <random>

#include "clfsyn/conic.hpp"
#include "clfsyn/opt.hpp"

namespace clfsyn {

namespace {

Monomial lift_monomial(const Monomial& m, int new_dim) {
  Monomial out = m;
  out.exponents.resize(new_dim, 0);
  return out;
}

Polynomial shrink_dim(const Polynomial& p, int dim) {
  Polynomial out(dim);
  for (const auto& [m, c] : p.terms()) {
    for (int i = dim; i < m.dimension(); ++i) {
      if (m.exponents[i] != 0) throw std::logic_error("shrink_dim: nonzero tail exponent");
    }
    Monomial sm = m;
    sm.exponents.resize(dim);
    out.add_term(sm, c);
  }
  return out;
}

}  // namespace

MomentFrame build_frame(int state_dim, int lambda_dim, int D) {
  if (D < 1) throw std::invalid_argument("build_frame: relaxation degree must be >= 1");
  MomentFrame fr;
  fr.state_dim = state_dim;
  fr.lambda_dim = lambda_dim;
  fr.D = D;
  fr.w_basis = monomial_basis(state_dim + lambda_dim, D);
  fr.x_basis = monomial_basis(state_dim, D);
  fr.moment_basis = monomial_basis(state_dim, 2 * D);
  for (std::size_t i = 0; i < fr.w_basis.size(); ++i) fr.w_index[fr.w_basis[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < fr.moment_basis.size(); ++i)
    fr.moment_index[fr.moment_basis[i]] = static_cast<int>(i);
  return fr;
}

Eigen::MatrixXd MomentFrame::Z0() const {
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(side(), side());
  Z(0, 0) = 1.0;
  return Z;
}

Eigen::MatrixXd MomentFrame::assemble(const Eigen::VectorXd& w) const {
  Eigen::VectorXd m(side());
  for (int i = 0; i < side(); ++i) m[i] = w_basis[i].eval(w);
  return m * m.transpose();
}

Eigen::MatrixXd MomentFrame::rep_matrix(const Polynomial& p) const {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(side(), side());
  const int wdim = state_dim + lambda_dim;
  for (const auto& [mono, coeff] : p.terms()) {
    const Monomial lifted = lift_monomial(mono, wdim);
    bool placed = false;
    for (int ia = 0; ia < side() && !placed; ++ia) {
      const Monomial& alpha = w_basis[ia];
      Monomial beta = lifted;
      bool ok = true;
      for (int v = 0; v < wdim; ++v) {
        beta.exponents[v] -= alpha.exponents[v];
        if (beta.exponents[v] < 0) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      auto it = w_index.find(beta);
      if (it == w_index.end()) continue;
      const int ib = it->second;
      if (ia == ib) {
        P(ia, ia) += coeff;
      } else {
        P(ia, ib) += coeff / 2;
        P(ib, ia) += coeff / 2;
      }
      placed = true;
    }
    if (!placed) throw std::invalid_argument("rep_matrix: polynomial degree exceeds the frame");
  }
  return P;
}

Eigen::MatrixXd MomentFrame::lambda_matrix(int l) const {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(side(), side());
  Monomial m = Monomial::unit(state_dim + lambda_dim, state_dim + l);
  const int idx = w_index.at(m);
  P(0, idx) = 0.5;
  P(idx, 0) = 0.5;
  return P;
}

// ---------------------------------------------------------------------------

namespace {

struct LinExpr {
  std::vector<std::pair<int, double>> coeffs;  // moment-variable index (y0 excluded)
  double constant = 0.0;
};

// One candidate-weighted localizing block: entries are linear in c, built from
// per-basis triplet sets merged at solve time.
struct WeightedBlock {
  int side = 0;
  // per basis element k: (relative svec row, moment var, coefficient)
  std::vector<std::vector<Eigen::Triplet<double>>> trips;
  std::vector<std::vector<std::pair<int, double>>> hparts;  // (relative row, value)
};

struct TaskStructure {
  TaskKind kind = TaskKind::Positivity;
  int id = 0;
  int sdim = 0;
  int D = 0;
  std::vector<Monomial> xbasis;
  std::vector<Monomial> moments;
  std::map<Monomial, int, GrlexLess> midx;

  std::vector<Eigen::Triplet<double>> psd_trips;  // rows relative to PSD section
  std::vector<double> psd_h;
  std::vector<int> psd_sides;

  std::vector<LinExpr> value_lifts;               // per basis
  ConstraintSense value_sense = ConstraintSense::Le;
  double cut_sign = 1.0;

  bool is_decrease = false;
  bool positivity_row_valid = false;
  std::vector<LinExpr> lie0_lifts;                // per basis
  std::vector<std::vector<LinExpr>> liei_lifts;   // per basis, per input

  // source polynomials for atom validation (all over sdim variables)
  std::vector<Polynomial> support_src;            // q >= 0
  std::vector<Polynomial> value_src;              // per basis
  std::vector<Polynomial> lie0_src;
  std::vector<std::vector<Polynomial>> liei_src;

  // Decrease tasks: the violation set {x : rate(x, u) >= 0 for all u in U} is
  // the conjunction of vertex-rate inequalities (the rate is affine in u);
  // each vertex contributes one candidate-weighted localizing block.
  std::vector<Eigen::VectorXd> vertices;
  std::vector<WeightedBlock> vertex_blocks;

  double fixed_time = 0.0;   // C1/C2 funnel tasks: the substituted time
  bool has_fixed_time = false;

  std::vector<int> trace_vars;  // moment-variable indices of y_{2a}, a != 0
};

LinExpr lift_poly(const TaskStructure& ts, const Polynomial& p) {
  LinExpr e;
  for (const auto& [m, c] : p.terms()) {
    if (m.degree() == 0) {
      e.constant += c;
    } else {
      auto it = ts.midx.find(m);
      if (it == ts.midx.end()) throw std::invalid_argument("moment degree bound violated");
      e.coeffs.emplace_back(it->second - 1, c);
    }
  }
  return e;
}

// Structural PSD section: moment matrix block plus one localizing block per
// support polynomial q >= 0.
void build_psd_section(TaskStructure& ts, const std::vector<Polynomial>& supports) {
  const double rt2 = std::sqrt(2.0);
  int row = 0;
  auto add_block = [&](const std::vector<Monomial>& basis, const Polynomial& q) {
    const int side = static_cast<int>(basis.size());
    ts.psd_sides.push_back(side);
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j <= i; ++j, ++row) {
        const double scale = (i == j) ? 1.0 : rt2;
        const Monomial prod = basis[i].times(basis[j]);
        double hval = 0.0;
        for (const auto& [qm, qc] : q.terms()) {
          const Monomial total = prod.times(qm);
          if (total.degree() == 0) {
            hval += scale * qc;  // y_0 = 1
          } else {
            auto it = ts.midx.find(total);
            if (it == ts.midx.end()) throw std::invalid_argument("localizing degree bound violated");
            // s = h - G y  must equal  scale * sum qc y_total
            ts.psd_trips.emplace_back(row, it->second - 1, -scale * qc);
          }
        }
        ts.psd_h.push_back(hval);
      }
    }
  };
  add_block(ts.xbasis, Polynomial::constant(ts.sdim, 1.0));
  for (const auto& q : supports) {
    const int order = ts.D - (q.degree() + 1) / 2;
    if (order < 0) throw std::invalid_argument("support degree exceeds the relaxation order");
    add_block(monomial_basis(ts.sdim, order), q);
  }
}

TaskStructure make_task(TaskKind kind, int id, int sdim, int D,
                        const std::vector<Polynomial>& supports) {
  TaskStructure ts;
  ts.kind = kind;
  ts.id = id;
  ts.sdim = sdim;
  ts.D = D;
  ts.xbasis = monomial_basis(sdim, D);
  ts.moments = monomial_basis(sdim, 2 * D);
  for (std::size_t i = 0; i < ts.moments.size(); ++i) ts.midx[ts.moments[i]] = static_cast<int>(i);
  ts.support_src = supports;
  build_psd_section(ts, supports);
  for (const auto& a : ts.xbasis) {
    if (a.degree() == 0) continue;
    ts.trace_vars.push_back(ts.midx.at(a.times(a)) - 1);
  }
  return ts;
}

std::vector<Polynomial> negate_all(const std::vector<Polynomial>& ps) {
  std::vector<Polynomial> out;
  out.reserve(ps.size());
  for (const auto& p : ps) out.push_back(-p);
  return out;
}

// Localizing block for a candidate-weighted polynomial sum_k c_k p_k + slack >= 0;
// the trailing triplet set belongs to the constant-1 slack term.
WeightedBlock make_weighted_block(TaskStructure& ts, const std::vector<Polynomial>& per_basis_in) {
  std::vector<Polynomial> per_basis = per_basis_in;
  per_basis.push_back(Polynomial::constant(ts.sdim, 1.0));
  int deg = 1;
  for (const auto& p : per_basis) deg = std::max(deg, p.degree());
  const int order = ts.D - (deg + 1) / 2;
  if (order < 0) throw std::invalid_argument("vertex rate degree exceeds the relaxation order");
  const auto basis = monomial_basis(ts.sdim, order);
  const double rt2 = std::sqrt(2.0);
  WeightedBlock blk;
  blk.side = static_cast<int>(basis.size());
  blk.trips.resize(per_basis.size());
  blk.hparts.resize(per_basis.size());
  for (std::size_t k = 0; k < per_basis.size(); ++k) {
    int row = 0;
    for (int i = 0; i < blk.side; ++i) {
      for (int j = 0; j <= i; ++j, ++row) {
        const double scale = (i == j) ? 1.0 : rt2;
        const Monomial prod = basis[i].times(basis[j]);
        for (const auto& [qm, qc] : per_basis[k].terms()) {
          const Monomial total = prod.times(qm);
          if (total.degree() == 0) {
            blk.hparts[k].emplace_back(row, scale * qc);
          } else {
            auto it = ts.midx.find(total);
            if (it == ts.midx.end()) throw std::invalid_argument("vertex localizing degree bound");
            blk.trips[k].emplace_back(row, it->second - 1, -scale * qc);
          }
        }
      }
    }
  }
  return blk;
}

std::vector<Eigen::VectorXd> polytope_vertices(const InputPolytope& U) {
  if (U.is_box()) return U.vertices();
  // small-scale exact enumeration: every feasible intersection of m rows
  const int m = U.input_dim();
  const int rows = U.rows();
  std::vector<Eigen::VectorXd> verts;
  std::vector<int> pick(m);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == m) {
      Eigen::MatrixXd A(m, m);
      Eigen::VectorXd b(m);
      for (int i = 0; i < m; ++i) {
        A.row(i) = U.A.row(pick[i]);
        b[i] = U.b[pick[i]];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (!lu.isInvertible()) return;
      Eigen::VectorXd v = lu.solve(b);
      if (!U.contains(v, 1e-7)) return;
      for (const auto& w : verts) {
        if ((w - v).norm() < 1e-9) return;
      }
      verts.push_back(v);
      return;
    }
    for (int i = start; i < rows; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  if (verts.empty()) throw std::runtime_error("polytope_vertices: no vertices found");
  return verts;
}

}  // namespace

struct Verifier::Impl {
  ProblemSpec problem;
  std::vector<TaskStructure> tasks;  // positivity first
  int n_positivity = 0;
  MomentFrame pos_frame;
  MomentFrame dec_frame;

  explicit Impl(const ProblemSpec& ps) : problem(ps) {
    const int n = ps.system.n;
    const int cdim = ps.cert_dim();
    const int D = ps.relaxation_degree;
    const auto& spec = ps.spec;
    pos_frame = build_frame(cdim, 0, D);
    dec_frame = build_frame(cdim, ps.system.U.rows(), D);

    // Lie-derivative polynomials of each basis element along each field,
    // lifted to the certificate dimension (time appended for funnels).
    const int r = ps.basis_size();
    std::vector<Polynomial> drift_lie(r, Polynomial(cdim));
    std::vector<std::vector<Polynomial>> input_lie(r);
    for (int k = 0; k < r; ++k) {
      const Polynomial& g = ps.basis[k];
      Polynomial d0(cdim);
      for (int i = 0; i < n; ++i) d0 += g.partial(i) * ps.system.f0[i].lifted(cdim);
      if (spec.kind == SpecKind::Funnel) d0 += g.partial(n);  // dV/dt
      drift_lie[k] = d0;
      for (int fi = 0; fi < ps.system.m; ++fi) {
        Polynomial di(cdim);
        for (int i = 0; i < n; ++i) di += g.partial(i) * ps.system.f[fi][i].lifted(cdim);
        input_lie[k].push_back(di);
      }
    }

    auto fill_value = [&](TaskStructure& ts, const std::vector<Polynomial>& vals) {
      for (const auto& v : vals) {
        ts.value_lifts.push_back(lift_poly(ts, v));
        ts.value_src.push_back(v);
      }
    };
    auto fill_decrease = [&](TaskStructure& ts) {
      ts.is_decrease = true;
      for (int k = 0; k < r; ++k) {
        ts.lie0_lifts.push_back(lift_poly(ts, drift_lie[k]));
        std::vector<LinExpr> per_input;
        for (int fi = 0; fi < ps.system.m; ++fi) per_input.push_back(lift_poly(ts, input_lie[k][fi]));
        ts.liei_lifts.push_back(std::move(per_input));
      }
      ts.lie0_src = drift_lie;
      ts.liei_src = input_lie;
      ts.vertices = polytope_vertices(ps.system.U);
      for (const auto& uv : ts.vertices) {
        std::vector<Polynomial> rate;
        rate.reserve(r);
        for (int k = 0; k < r; ++k) {
          Polynomial p = drift_lie[k];
          for (int fi = 0; fi < ps.system.m; ++fi) p += input_lie[k][fi] * uv[fi];
          rate.push_back(std::move(p));
        }
        ts.vertex_blocks.push_back(make_weighted_block(ts, rate));
      }
      // the value lifts double as the V>0 row material for stability specs
      for (int k = 0; k < r; ++k) {
        ts.value_lifts.push_back(lift_poly(ts, ps.basis[k]));
        ts.value_src.push_back(ps.basis[k]);
      }
    };

    std::vector<Polynomial> plain_basis = ps.basis;

    switch (spec.kind) {
      case SpecKind::GlobalStability:
      case SpecKind::LocalStability:
      case SpecKind::ReachWhileStay: {
        std::vector<Polynomial> domain =
            spec.kind == SpecKind::GlobalStability
                ? negate_all(ball_set(Eigen::VectorXd::Zero(n), ps.verify.global_radius).constraints)
                : negate_all(spec.S.constraints);
        TaskStructure pos = make_task(TaskKind::Positivity, 0, cdim, D, domain);
        pos.value_sense = ConstraintSense::Le;  // violation {V <= 0}
        pos.cut_sign = 1.0;
        fill_value(pos, plain_basis);
        tasks.push_back(std::move(pos));
        n_positivity = 1;

        if (spec.kind == SpecKind::ReachWhileStay) {
          int id = 0;
          for (const auto& pt : spec.T.constraints) {
            std::vector<Polynomial> dom = domain;
            dom.push_back(pt);  // p_T >= 0: outside int(T)
            TaskStructure dec = make_task(TaskKind::Decrease, id++, cdim, D, dom);
            fill_decrease(dec);
            dec.positivity_row_valid = true;
            tasks.push_back(std::move(dec));
          }
        } else {
          TaskStructure dec = make_task(TaskKind::Decrease, 0, cdim, D, domain);
          fill_decrease(dec);
          dec.positivity_row_valid = true;
          tasks.push_back(std::move(dec));
        }
        break;
      }
      case SpecKind::Safety: {
        // barrier: B < 0 on I; B > 0 outside int(S); decrease on S \ int(I)
        TaskStructure ti = make_task(TaskKind::Positivity, 0, cdim, D, negate_all(spec.I.constraints));
        ti.value_sense = ConstraintSense::Ge;  // violation {B >= 0}
        ti.cut_sign = -1.0;
        fill_value(ti, plain_basis);
        tasks.push_back(std::move(ti));
        int id = 1;
        for (const auto& psx : spec.S.constraints) {
          TaskStructure tb = make_task(TaskKind::Positivity, id++, cdim, D, {psx});
          tb.value_sense = ConstraintSense::Le;  // violation {B <= 0} outside S
          tb.cut_sign = 1.0;
          fill_value(tb, plain_basis);
          tasks.push_back(std::move(tb));
        }
        n_positivity = id;
        int did = 0;
        for (const auto& pi : spec.I.constraints) {
          std::vector<Polynomial> dom = negate_all(spec.S.constraints);
          dom.push_back(pi);  // p_I >= 0: outside int(I)
          TaskStructure dec = make_task(TaskKind::Decrease, did++, cdim, D, dom);
          fill_decrease(dec);
          dec.positivity_row_valid = false;
          tasks.push_back(std::move(dec));
        }
        break;
      }
      case SpecKind::Funnel: {
        const double horizon = spec.horizon;
        // time support t(T - t) >= 0 over (x, t)
        Polynomial tpoly = Polynomial::variable(cdim, n);
        Polynomial tsupport = tpoly * (Polynomial::constant(cdim, horizon) - tpoly);
        auto lift_all = [&](const std::vector<Polynomial>& ps_) {
          std::vector<Polynomial> out;
          for (const auto& p : ps_) out.push_back((-p).lifted(cdim));
          return out;
        };
        // C1: x in I, V(x, 0) >= 0
        TaskStructure c1 = make_task(TaskKind::Positivity, 0, n, D, negate_all(spec.I.constraints));
        c1.value_sense = ConstraintSense::Ge;
        c1.cut_sign = -1.0;
        c1.has_fixed_time = true;
        c1.fixed_time = 0.0;
        for (const auto& g : plain_basis) {
          Polynomial sub = shrink_dim(g.substitute(n, 0.0), n);
          c1.value_lifts.push_back(lift_poly(c1, sub));
          c1.value_src.push_back(sub);
        }
        tasks.push_back(std::move(c1));
        int id = 1;
        // C2: x outside int(T), V(x, horizon) <= 0
        for (const auto& pt : spec.T.constraints) {
          TaskStructure c2 = make_task(TaskKind::Positivity, id++, n, D, {pt});
          c2.value_sense = ConstraintSense::Le;
          c2.cut_sign = 1.0;
          c2.has_fixed_time = true;
          c2.fixed_time = horizon;
          for (const auto& g : plain_basis) {
            Polynomial sub = shrink_dim(g.substitute(n, horizon), n);
            c2.value_lifts.push_back(lift_poly(c2, sub));
            c2.value_src.push_back(sub);
          }
          tasks.push_back(std::move(c2));
        }
        // C3: t in [0,T], x outside int(S), V(x,t) <= 0
        for (const auto& psx : spec.S.constraints) {
          std::vector<Polynomial> dom = {psx.lifted(cdim), tsupport};
          TaskStructure c3 = make_task(TaskKind::Positivity, id++, cdim, D, dom);
          c3.value_sense = ConstraintSense::Le;
          c3.cut_sign = 1.0;
          fill_value(c3, plain_basis);
          tasks.push_back(std::move(c3));
        }
        n_positivity = id;
        // C4: decrease over S x [0, T]
        std::vector<Polynomial> dom = lift_all(spec.S.constraints);
        dom.push_back(tsupport);
        TaskStructure dec = make_task(TaskKind::Decrease, 0, cdim, D, dom);
        fill_decrease(dec);
        dec.positivity_row_valid = false;
        tasks.push_back(std::move(dec));
        break;
      }
    }
    if (n_positivity == 0) n_positivity = 1;
  }

  struct SolveResult {
    ConicStatus status = ConicStatus::NumericalTrouble;
    Eigen::VectorXd y;       // moment variables (without y0)
    Eigen::VectorXd lambda;
    double trace = 0.0;
    double gamma = 0.0;
    // positivity tasks: extremal value of L(V_c) in the violating direction
    // and its dual bound (certified when dres is small)
    double mu = 0.0;
    double mu_bound = 0.0;
    double dres = 1.0;
    double pres = 1.0;
  };

  SolveResult solve_lowered(const TaskStructure& ts, const Eigen::VectorXd& c, bool max_violation,
                            double tol) const {
    const int ny = static_cast<int>(ts.moments.size()) - 1;
    const int ngamma = (max_violation && ts.is_decrease) ? 1 : 0;
    const int nvars = ny + ngamma;
    const int gamma_var = ny;
    const double kappa = 1e-9;  // interior slack for the decrease supports

    std::vector<Eigen::Triplet<double>> gtrips;
    std::vector<double> hvals;
    auto add_nonneg = [&](const std::vector<std::pair<int, double>>& coeffs, double rhs) {
      // sum coeff*var <= rhs
      const int row = static_cast<int>(hvals.size());
      for (const auto& [v, cc] : coeffs) gtrips.emplace_back(row, v, cc);
      hvals.push_back(rhs);
    };

    auto candidate_expr = [&](const std::vector<LinExpr>& lifts) {
      LinExpr e;
      std::map<int, double> acc;
      for (int k = 0; k < static_cast<int>(lifts.size()); ++k) {
        e.constant += c[k] * lifts[k].constant;
        for (const auto& [v, cc] : lifts[k].coeffs) acc[v] += c[k] * cc;
      }
      for (const auto& [v, cc] : acc) e.coeffs.emplace_back(v, cc);
      return e;
    };

    LinExpr value_expr;
    if (!ts.is_decrease) {
      // the extremal value of L(V_c) over the supported moments is the
      // objective; the violation test compares it against the slack
      value_expr = candidate_expr(ts.value_lifts);
    } else if (max_violation) {
      // mean vertex rates exceed gamma: -L(rate_v) + gamma <= 0
      for (std::size_t v = 0; v < ts.vertices.size(); ++v) {
        std::vector<LinExpr> rates;
        rates.reserve(ts.lie0_lifts.size());
        for (std::size_t k = 0; k < ts.lie0_lifts.size(); ++k) {
          LinExpr e = ts.lie0_lifts[k];
          for (int fi = 0; fi < problem.system.m; ++fi) {
            const LinExpr& li = ts.liei_lifts[k][fi];
            e.constant += ts.vertices[v][fi] * li.constant;
            for (const auto& [var, cc] : li.coeffs) e.coeffs.emplace_back(var, ts.vertices[v][fi] * cc);
          }
          rates.push_back(std::move(e));
        }
        LinExpr e = candidate_expr(rates);
        std::vector<std::pair<int, double>> row;
        for (const auto& [var, cc] : e.coeffs) row.emplace_back(var, -cc);
        row.emplace_back(gamma_var, 1.0);
        add_nonneg(row, e.constant);
      }
    }
    const int n_nonneg = static_cast<int>(hvals.size());

    for (const auto& t : ts.psd_trips) gtrips.emplace_back(n_nonneg + t.row(), t.col(), t.value());
    int row_off = n_nonneg + static_cast<int>(ts.psd_h.size());
    std::vector<double> extra_h;
    std::vector<int> psd_sides = ts.psd_sides;
    // candidate-weighted vertex-rate localizing blocks
    for (const auto& blk : ts.vertex_blocks) {
      const int sv = svec_size(blk.side);
      std::vector<double> hblk(sv, 0.0);
      for (std::size_t k = 0; k < blk.trips.size(); ++k) {
        const double ck = k + 1 < blk.trips.size() ? c[static_cast<Eigen::Index>(k)] : kappa;
        if (ck == 0.0) continue;
        for (const auto& t : blk.trips[k]) gtrips.emplace_back(row_off + t.row(), t.col(), ck * t.value());
        for (const auto& [rrow, val] : blk.hparts[k]) hblk[rrow] += ck * val;
      }
      extra_h.insert(extra_h.end(), hblk.begin(), hblk.end());
      psd_sides.push_back(blk.side);
      row_off += sv;
    }
    const int mrows = row_off;

    ConicProblem cp;
    cp.c = Eigen::VectorXd::Zero(nvars);
    if (!ts.is_decrease) {
      // minimize L(V_c) for the <= sense, maximize for the >= sense
      const double sgn = ts.value_sense == ConstraintSense::Le ? 1.0 : -1.0;
      for (const auto& [v, cc] : value_expr.coeffs) cp.c[v] += sgn * cc;
    } else if (max_violation) {
      cp.c[gamma_var] = -1.0;  // maximize gamma
    } else {
      for (int v : ts.trace_vars) cp.c[v] -= 1.0;  // maximize the moment trace
    }
    cp.G.resize(mrows, nvars);
    cp.G.setFromTriplets(gtrips.begin(), gtrips.end());
    cp.h = Eigen::VectorXd::Zero(mrows);
    for (int i = 0; i < n_nonneg; ++i) cp.h[i] = hvals[i];
    for (std::size_t i = 0; i < ts.psd_h.size(); ++i) cp.h[n_nonneg + static_cast<int>(i)] = ts.psd_h[i];
    for (std::size_t i = 0; i < extra_h.size(); ++i) {
      cp.h[n_nonneg + static_cast<int>(ts.psd_h.size() + i)] = extra_h[i];
    }
    cp.cone.nonneg = n_nonneg;
    cp.cone.psd = psd_sides;
    cp.A.resize(0, nvars);
    cp.b.resize(0);

    ConicOptions opts;
    opts.feas_tol = tol;
    opts.gap_tol = tol;
    opts.max_iterations = 120;
    ConicResult cr = solve_conic(cp, opts);

    SolveResult out;
    out.status = cr.status;
    out.dres = cr.dres;
    out.pres = cr.pres;
    if (cr.x.size() == nvars) {
      out.y = cr.x.head(ny);
      out.trace = 1.0;
      for (int v : ts.trace_vars) out.trace += cr.x[v];
      if (ngamma) out.gamma = cr.x[gamma_var];
      if (!ts.is_decrease) {
        const double sgn = ts.value_sense == ConstraintSense::Le ? 1.0 : -1.0;
        // cr.pobj = sgn * (L(V_c) - const); mu in the violating direction
        out.mu = sgn * (cr.pobj + sgn * value_expr.constant);
        out.mu_bound = sgn * (cr.dobj + sgn * value_expr.constant);
        out.gamma = ts.value_sense == ConstraintSense::Le ? -out.mu : out.mu;
      }
    }
    return out;
  }

  Eigen::MatrixXd moment_matrix(const TaskStructure& ts, const Eigen::VectorXd& y) const {
    const int side = static_cast<int>(ts.xbasis.size());
    Eigen::MatrixXd M(side, side);
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j <= i; ++j) {
        const Monomial prod = ts.xbasis[i].times(ts.xbasis[j]);
        const double v = prod.degree() == 0 ? 1.0 : y[ts.midx.at(prod) - 1];
        M(i, j) = v;
        M(j, i) = v;
      }
    }
    return M;
  }

  // Lift the task solution onto the spec-facing frame: deterministic tail
  // coordinates (substituted time, Farkas multipliers) multiply the state
  // pseudo-moments.
  Eigen::MatrixXd lift_to_frame(const MomentFrame& fr, const TaskStructure& ts,
                                const Eigen::VectorXd& y, const Eigen::VectorXd& lambda) const {
    const int side = fr.side();
    const int wdim = fr.state_dim + fr.lambda_dim;
    const int fixed0 = ts.sdim;  // frame coords >= fixed0 are deterministic
    Eigen::VectorXd fixed(wdim - fixed0);
    int fi = 0;
    for (int vcoord = fixed0; vcoord < fr.state_dim; ++vcoord) fixed[fi++] = ts.fixed_time;
    for (int l = 0; l < fr.lambda_dim; ++l) fixed[fi++] = lambda.size() > l ? lambda[l] : 0.0;

    Eigen::MatrixXd Z(side, side);
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j <= i; ++j) {
        Monomial prod = fr.w_basis[i].times(fr.w_basis[j]);
        double scale = 1.0;
        Monomial state_part = Monomial::constant(ts.sdim);
        bool ok = true;
        for (int v = 0; v < wdim; ++v) {
          const int e = prod.exponents[v];
          if (e == 0) continue;
          if (v < ts.sdim) {
            state_part.exponents[v] = e;
          } else {
            scale *= std::pow(fixed[v - fixed0], e);
          }
        }
        double moment = 1.0;
        if (state_part.degree() > 0) {
          auto it = ts.midx.find(state_part);
          if (it == ts.midx.end()) {
            ok = false;  // beyond the state moment horizon (high lambda powers)
          } else {
            moment = y[it->second - 1];
          }
        }
        const double val = ok ? scale * moment : 0.0;
        Z(i, j) = val;
        Z(j, i) = val;
      }
    }
    // clip solver-tolerance negative eigenvalues so the lifted matrix is PSD
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Z);
    if (eig.eigenvalues().minCoeff() < 0.0) {
      Z = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
          eig.eigenvectors().transpose();
      Z = 0.5 * (Z + Z.transpose()).eval();
    }
    return Z;
  }

  // Candidate states recovered from the pseudo-moments: the first-row entries
  // plus the principal directions of the second-moment block (symmetric
  // two-point solutions project to zero, their atoms do not).
  std::vector<Eigen::VectorXd> atom_candidates(const TaskStructure& ts,
                                               const Eigen::VectorXd& y) const {
    std::vector<Eigen::VectorXd> out;
    Eigen::VectorXd first(ts.sdim);
    for (int i = 0; i < ts.sdim; ++i) first[i] = y[ts.midx.at(Monomial::unit(ts.sdim, i)) - 1];
    if (first.norm() > 1e-6) out.push_back(first);
    Eigen::MatrixXd P(ts.sdim, ts.sdim);
    for (int i = 0; i < ts.sdim; ++i) {
      for (int j = 0; j <= i; ++j) {
        const double v = y[ts.midx.at(Monomial::unit(ts.sdim, i).times(Monomial::unit(ts.sdim, j))) - 1];
        P(i, j) = v;
        P(j, i) = v;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P);
    for (int k = ts.sdim - 1; k >= 0; --k) {
      const double lam = eig.eigenvalues()[k];
      if (lam < 1e-8 || lam < 1e-4 * eig.eigenvalues().maxCoeff()) continue;
      Eigen::VectorXd atom = std::sqrt(lam) * eig.eigenvectors().col(k);
      out.push_back(atom);
      out.push_back(-atom);
    }
    return out;
  }

  bool atom_valid(const TaskStructure& ts, const Eigen::VectorXd& atom,
                  const Eigen::VectorXd& c) const {
    for (const auto& q : ts.support_src) {
      if (q.eval(atom) < -1e-6) return false;
    }
    if (!ts.is_decrease) {
      double val = 0.0, scale = 1.0;
      for (int k = 0; k < c.size(); ++k) {
        const double gk = ts.value_src[k].eval(atom);
        val += c[k] * gk;
        scale += std::abs(c[k] * gk);
      }
      const double tol = 1e-7 * scale;
      return ts.value_sense == ConstraintSense::Le ? val <= tol : val >= -tol;
    }
    double a = 0.0;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(problem.system.m);
    Eigen::VectorXd full = atom;
    if (ts.sdim < problem.cert_dim()) {
      full.conservativeResize(problem.cert_dim());
      full[problem.cert_dim() - 1] = ts.fixed_time;
    }
    double scale = 1.0;
    for (int k = 0; k < c.size(); ++k) {
      const double d0 = ts.lie0_src[k].eval(full);
      a += c[k] * d0;
      scale += std::abs(c[k] * d0);
      for (int fi = 0; fi < problem.system.m; ++fi) b[fi] += c[k] * ts.liei_src[k][fi].eval(full);
    }
    return min_input_rate(problem.system, a, b).first >= -1e-7 * scale;
  }

  // Exact pseudo-moments of the Dirac mass at the atom.
  Eigen::VectorXd atom_moments(const TaskStructure& ts, const Eigen::VectorXd& atom) const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(ts.moments.size()) - 1);
    for (std::size_t i = 1; i < ts.moments.size(); ++i) {
      y[static_cast<Eigen::Index>(i - 1)] = ts.moments[i].eval(atom);
    }
    return y;
  }

  // Signed violation margin of the task conditions at a concrete state
  // (positive = violating). Used by the direct counterexample search.
  double violation_margin(const TaskStructure& ts, const Eigen::VectorXd& pt,
                          const Eigen::VectorXd& c) const {
    if (!ts.is_decrease) {
      double val = 0.0;
      for (int k = 0; k < c.size(); ++k) val += c[k] * ts.value_src[k].eval(pt);
      return ts.value_sense == ConstraintSense::Le ? -val : val;
    }
    double a = 0.0;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(problem.system.m);
    Eigen::VectorXd full = pt;
    if (ts.sdim < problem.cert_dim()) {
      full.conservativeResize(problem.cert_dim());
      full[problem.cert_dim() - 1] = ts.fixed_time;
    }
    for (int k = 0; k < c.size(); ++k) {
      a += c[k] * ts.lie0_src[k].eval(full);
      for (int fi = 0; fi < problem.system.m; ++fi) b[fi] += c[k] * ts.liei_src[k][fi].eval(full);
    }
    return min_input_rate(problem.system, a, b).first;
  }

  // Deterministic sampling over the task domain looking for concrete
  // violating states; the relaxation stays the verdict authority, this only
  // supplies cut material.
  void search_witnesses(const TaskStructure& ts, const Eigen::VectorXd& c,
                        const std::function<void(const Eigen::VectorXd&)>& offer) const {
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(ts.sdim, -problem.verify.global_radius);
    Eigen::VectorXd hi = -lo;
    SemiAlgebraicSet neg;
    for (const auto& q : ts.support_src) neg.constraints.push_back(-q);
    if (auto bb = neg.bounding_box(ts.sdim)) {
      lo = bb->first;
      hi = bb->second;
    }
    auto in_domain = [&](const Eigen::VectorXd& pt) {
      for (const auto& q : ts.support_src) {
        if (q.eval(pt) < -1e-9) return false;
      }
      return true;
    };
    static const int primes[] = {2, 3, 5, 7, 11, 13};
    auto halton = [&](int index, int base) {
      double f = 1.0, r = 0.0;
      int i = index;
      while (i > 0) {
        f /= base;
        r += f * (i % base);
        i /= base;
      }
      return r;
    };
    int hits = 0;
    Eigen::VectorXd best_sample;
    double best_margin = 1e-9;
    for (int s = 1; s <= 400 && hits < 6; ++s) {
      Eigen::VectorXd pt(ts.sdim);
      for (int d = 0; d < ts.sdim; ++d) {
        pt[d] = lo[d] + halton(s, primes[d % 6]) * (hi[d] - lo[d]);
      }
      for (double scale : {1.0, 0.3, 0.05}) {
        Eigen::VectorXd q = scale * pt;
        if (!in_domain(q)) continue;
        const double mg = violation_margin(ts, q, c);
        if (mg > 1e-9) {
          offer(q);
          ++hits;
        }
        if (mg > best_margin) {
          best_margin = mg;
          best_sample = q;
        }
      }
    }
    if (hits == 0 && best_sample.size()) {
      // nothing validated directly: polish the best sample uphill
      Eigen::VectorXd cur = polish(ts, c, best_sample, lo, hi, 0.0);
      offer(cur);
    } else if (hits == 0) {
      // margins nonpositive everywhere sampled: ascend from the box center
      Eigen::VectorXd cur = polish(ts, c, (0.5 * (lo + hi)).eval(), lo, hi, 0.0);
      offer(cur);
    }
  }

  Eigen::VectorXd polish(const TaskStructure& ts, const Eigen::VectorXd& c, Eigen::VectorXd cur,
                         const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double norm_penalty) const {
    auto in_domain = [&](const Eigen::VectorXd& pt) {
      for (const auto& q : ts.support_src) {
        if (q.eval(pt) < -1e-9) return false;
      }
      return true;
    };
    auto score = [&](const Eigen::VectorXd& pt) {
      return violation_margin(ts, pt, c) - norm_penalty * pt.squaredNorm();
    };
    double curs = score(cur);
    double step = 0.25 * (hi - lo).maxCoeff();
    for (int it = 0; it < 60 && step > 1e-9; ++it) {
      bool moved = false;
      for (int d = 0; d < ts.sdim; ++d) {
        for (double sgn : {1.0, -1.0}) {
          Eigen::VectorXd trial = cur;
          trial[d] = std::min(hi[d], std::max(lo[d], trial[d] + sgn * step));
          if (!in_domain(trial)) continue;
          const double sc = score(trial);
          if (sc > curs) {
            cur = trial;
            curs = sc;
            moved = true;
          }
        }
      }
      if (!moved) step *= 0.5;
    }
    return cur;
  }

  // Move a validated witness toward the minimum-norm part of its violation
  // region: the demonstrator is much better behaved at moderate states.
  Eigen::VectorXd gentle_witness(const TaskStructure& ts, const Eigen::VectorXd& c,
                                 Eigen::VectorXd witness) const {
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(ts.sdim, -problem.verify.global_radius);
    Eigen::VectorXd hi = -lo;
    SemiAlgebraicSet neg;
    for (const auto& q : ts.support_src) neg.constraints.push_back(-q);
    if (auto bb = neg.bounding_box(ts.sdim)) {
      lo = bb->first;
      hi = bb->second;
    }
    const double m0 = violation_margin(ts, witness, c);
    for (double rho : {0.03, 0.3, 3.0}) {
      Eigen::VectorXd cand = polish(ts, c, witness, lo, hi, rho * std::max(1e-6, m0));
      if (cand.norm() < witness.norm() && atom_valid(ts, cand, c)) witness = cand;
    }
    return witness;
  }

  MomentCounterexample extract(const TaskStructure& ts, const SolveResult& sr_in,
                               const Eigen::VectorXd& c, bool spurious) const {
    SolveResult sr = sr_in;
    // Prefer a concrete violating state over the averaged pseudo-moments: the
    // learner's cuts then match the unlifted observation semantics and the
    // demonstrator is queried away from the origin.
    // Collect validated concrete witnesses: moment atoms first (the solver's
    // own solution), then generic sample hits; ray-rescaled variants included.
    // A moderate-norm witness is preferred: extremal states bias the
    // demonstrator queries toward regions where control strategies conflict.
    std::vector<Eigen::VectorXd> witnesses;
    auto offer = [&](const Eigen::VectorXd& w) {
      if (!atom_valid(ts, w, c)) return;
      for (const auto& have : witnesses) {
        if ((have - w).norm() < 1e-9) return;
      }
      witnesses.push_back(w);
      const double norm = w.norm();
      for (double f : {0.5 / std::max(norm, 1e-12), std::sqrt(0.5 / std::max(norm, 1e-12)), 0.7}) {
        if (f >= 1.0 || f <= 0.0) continue;
        Eigen::VectorXd cand = f * w;
        if (atom_valid(ts, cand, c)) witnesses.push_back(cand);
      }
    };
    for (const auto& atom : atom_candidates(ts, sr.y)) offer(atom);
    search_witnesses(ts, c, offer);
    bool atomized = false;
    if (!witnesses.empty()) {
      const double target = 0.45;
      Eigen::VectorXd best = witnesses.front();
      double bestscore = std::abs(best.norm() - target);
      for (const auto& w : witnesses) {
        const double sc = std::abs(w.norm() - target);
        if (sc < bestscore) {
          bestscore = sc;
          best = w;
        }
      }
      sr.y = atom_moments(ts, best);
      atomized = true;
    }
    MomentCounterexample ce;
    ce.atomized = atomized;
    ce.kind = ts.kind;
    ce.task_id = ts.id;
    ce.gamma = sr.gamma != 0.0 ? sr.gamma : sr.trace - 1.0;
    ce.spurious = spurious;
    const int n = problem.system.n;
    ce.state = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < std::min(n, ts.sdim); ++i) {
      ce.state[i] = sr.y[ts.midx.at(Monomial::unit(ts.sdim, i)) - 1];
    }
    if (ts.has_fixed_time) {
      ce.time = ts.fixed_time;
    } else if (ts.sdim > n) {
      ce.time = sr.y[ts.midx.at(Monomial::unit(ts.sdim, n)) - 1];
    }
    const int r = problem.basis_size();
    ce.value_functional.resize(r);
    for (int k = 0; k < r; ++k) {
      const LinExpr& e = ts.value_lifts[k];
      double v = e.constant;
      for (const auto& [var, cc] : e.coeffs) v += cc * sr.y[var];
      ce.value_functional[k] = ts.cut_sign * v;
    }
    if (ts.is_decrease) {
      ce.has_decrease = true;
      ce.positivity_row_valid = ts.positivity_row_valid;
      ce.lie_drift.resize(r);
      ce.lie_inputs.resize(r, problem.system.m);
      for (int k = 0; k < r; ++k) {
        double v = ts.lie0_lifts[k].constant;
        for (const auto& [var, cc] : ts.lie0_lifts[k].coeffs) v += cc * sr.y[var];
        ce.lie_drift[k] = v;
        for (int i = 0; i < problem.system.m; ++i) {
          double w = ts.liei_lifts[k][i].constant;
          for (const auto& [var, cc] : ts.liei_lifts[k][i].coeffs) w += cc * sr.y[var];
          ce.lie_inputs(k, i) = w;
        }
      }
      ce.lambda = farkas_multipliers(ce, c);
      ce.Z = lift_to_frame(dec_frame, ts, sr.y, ce.lambda);
    } else {
      ce.Z = lift_to_frame(pos_frame, ts, sr.y, Eigen::VectorXd());
    }
    return ce;
  }

  // Multipliers certifying the lifted inequalities for the refuted candidate:
  // A_i'lambda = <F_i, Z>, lambda >= 0, b'lambda >= -<F_0, Z> (the vertex-rate
  // localizing constraints guarantee feasibility). Closed form for boxes.
  Eigen::VectorXd farkas_multipliers(const MomentCounterexample& ce, const Eigen::VectorXd& c) const {
    const auto& U = problem.system.U;
    const int m = problem.system.m;
    Eigen::VectorXd v = ce.lie_inputs.transpose() * c;
    if (U.is_box() && U.A.topRows(m).isApprox(Eigen::MatrixXd::Identity(m, m))) {
      Eigen::VectorXd lam = Eigen::VectorXd::Zero(2 * m);
      for (int i = 0; i < m; ++i) {
        lam[i] = std::max(v[i], 0.0);
        lam[m + i] = std::max(-v[i], 0.0);
      }
      return lam;
    }
    LinearProgram lp;
    lp.objective = U.b;  // maximize b'lambda
    lp.G.resize(0, U.rows());
    lp.h.resize(0);
    lp.E.resize(m, U.rows());
    for (int i = 0; i < m; ++i) lp.E.row(i) = U.A.col(i).transpose();
    lp.d = v;
    lp.lower = Eigen::VectorXd::Zero(U.rows());
    SolveOutcome oc = solve_lp(lp, 1e-9);
    if (oc.optimal()) return oc.x;
    return Eigen::VectorXd::Zero(U.rows());
  }

  TaskReport run_task(const TaskStructure& ts, const Eigen::VectorXd& c_raw, CounterexampleMode mode,
                      std::optional<MomentCounterexample>* ce_out) const {
    TaskReport rep;
    rep.kind = ts.kind;
    rep.id = ts.id;
    const double opt_tol = problem.verify.opt_tol;
    // every task is homogeneous in the candidate; solve at unit scale
    const double cnorm = c_raw.norm();
    const Eigen::VectorXd c = cnorm > 1e-12 ? (c_raw / cnorm).eval() : c_raw;
    SolveResult sr = solve_lowered(ts, c, false, problem.verify.sdp_tol);
    bool spurious = false;
    if (sr.status == ConicStatus::PrimalInfeasible) {
      rep.optimum = 1.0;
      rep.passed = true;
      return rep;
    }
    if (sr.status != ConicStatus::Optimal) {
      // retry once with a looser tolerance before declaring trouble
      SolveResult retry = solve_lowered(ts, c, false, 10.0 * problem.verify.sdp_tol);
      if (retry.status == ConicStatus::Optimal || retry.status == ConicStatus::PrimalInfeasible) {
        sr = retry;
        if (sr.status == ConicStatus::PrimalInfeasible) {
          rep.optimum = 1.0;
          rep.passed = true;
          return rep;
        }
      } else {
        spurious = true;
        if (retry.y.size() > 0 && !(sr.y.size() > 0)) sr = retry;
      }
    }
    if (sr.y.size() == 0) {
      rep.numerical_trouble = true;
      return rep;
    }
    rep.optimum = sr.trace;
    bool pass;
    if (!ts.is_decrease) {
      // verdict on the extremal value of L(V_c) (dual bound when unconverged)
      const double mu = spurious ? (ts.value_sense == ConstraintSense::Le
                                        ? std::max(sr.mu, sr.mu_bound)
                                        : std::min(sr.mu, sr.mu_bound))
                                 : sr.mu;
      pass = ts.value_sense == ConstraintSense::Le ? mu >= -opt_tol : mu <= opt_tol;
      if (spurious && sr.dres > 1e-5) pass = false;  // bound not certified
    } else {
      pass = sr.trace <= 1.0 + opt_tol;
    }
    if (pass && !spurious) {
      rep.passed = true;
      return rep;
    }
    if (pass && spurious) {
      // unconverged but certified-looking: do not emit a counterexample
      rep.numerical_trouble = !(sr.dres <= 1e-6 && sr.pres <= 1e-6);
      rep.passed = !rep.numerical_trouble;
      return rep;
    }
    // refuted: require a meaningfully violating iterate to cut with
    const bool usable = ts.is_decrease ? sr.trace > 1.0 + 1e-8
                                       : (ts.value_sense == ConstraintSense::Le ? sr.mu < -1e-9
                                                                                : sr.mu > 1e-9) ||
                                             sr.trace > 1.0 + 1e-8;
    if (!usable) {
      rep.numerical_trouble = true;
      return rep;
    }
    rep.passed = false;
    if (ce_out) {
      // Decrease counterexamples are extracted from the slack-maximizing
      // solution: it concentrates mass at the most-violating state (near
      // rank-1, so the atom recovery works) instead of the corner-heavy
      // trace maximizer.
      if (ts.is_decrease) {
        SolveResult mv = solve_lowered(ts, c, true, problem.verify.sdp_tol);
        if (mv.status == ConicStatus::Optimal && mv.y.size() > 0 && mv.trace > 1.0 + 1e-8) {
          *ce_out = extract(ts, mv, c, spurious);
          return rep;
        }
      }
      *ce_out = extract(ts, sr, c, spurious);
    }
    return rep;
  }
};

Verifier::Verifier(const ProblemSpec& problem) : impl_(std::make_unique<Impl>(problem)) {}
Verifier::~Verifier() = default;
Verifier::Verifier(Verifier&&) noexcept = default;
Verifier& Verifier::operator=(Verifier&&) noexcept = default;

int Verifier::positivity_task_count() const { return impl_->n_positivity; }
int Verifier::decrease_task_count() const {
  return static_cast<int>(impl_->tasks.size()) - impl_->n_positivity;
}
const MomentFrame& Verifier::positivity_frame() const { return impl_->pos_frame; }
const MomentFrame& Verifier::decrease_frame() const { return impl_->dec_frame; }

TaskReport Verifier::solve_task(int task_index, const Eigen::VectorXd& c,
                                std::optional<MomentCounterexample>* ce) const {
  return impl_->run_task(impl_->tasks.at(task_index), c, CounterexampleMode::First, ce);
}

VerifyResult Verifier::verify(const Eigen::VectorXd& c, CounterexampleMode mode) const {
  if (c.size() != impl_->problem.basis_size()) throw std::invalid_argument("verify: bad candidate size");
  if (spec_needs_origin_equality(impl_->problem.spec.kind)) {
    double v0 = 0.0;
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(impl_->problem.cert_dim());
    for (int k = 0; k < c.size(); ++k) v0 += c[k] * impl_->problem.basis[k].eval(zero);
    if (std::abs(v0) > 1e-9) throw std::invalid_argument("verify: candidate does not vanish at 0");
  }
  Verified verified;
  std::optional<MomentCounterexample> shell;
  for (const auto& ts : impl_->tasks) {
    std::optional<MomentCounterexample> ce;
    TaskReport rep = impl_->run_task(ts, c, mode, &ce);
    verified.transcript.push_back(rep);
    if (!rep.passed && ce) return *ce;
    if (rep.numerical_trouble && !shell) {
      // remember the unusable solve; a later task may still make progress
      MomentCounterexample sh;
      sh.kind = ts.kind;
      sh.task_id = ts.id;
      sh.spurious = true;
      shell = sh;
    }
  }
  if (shell) return *shell;
  return verified;
}

bool farkas_feasible(const Eigen::VectorXd& x, const Polynomial& V,
                     const ControlAffineSystem& system) {
  if (x.norm() == 0.0) throw std::invalid_argument("farkas_feasible: x must be nonzero");
  auto grad = V.gradient();
  Eigen::VectorXd gv(system.n);
  for (int i = 0; i < system.n; ++i) gv[i] = grad[i].eval(x);
  double a0 = 0.0;
  for (int i = 0; i < system.n; ++i) a0 += gv[i] * system.f0[i].eval(x);
  Eigen::VectorXd bi(system.m);
  for (int k = 0; k < system.m; ++k) {
    double v = 0.0;
    for (int i = 0; i < system.n; ++i) v += gv[i] * system.f[k][i].eval(x);
    bi[k] = v;
  }
  // exists lambda >= 0: A_i' lambda = b_i, b' lambda >= -a0
  const int rows = system.U.rows();
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Zero(rows);
  lp.G.resize(1, rows);
  lp.G.row(0) = system.U.b.transpose();
  lp.h.resize(1);
  lp.h[0] = -a0;
  lp.E.resize(system.m, rows);
  for (int i = 0; i < system.m; ++i) lp.E.row(i) = system.U.A.col(i).transpose();
  lp.d = bi;
  lp.lower = Eigen::VectorXd::Zero(rows);
  SolveOutcome oc = solve_lp(lp, 1e-9);
  if (oc.status == SolveStatus::Infeasible) return false;
  if (oc.optimal() || oc.status == SolveStatus::Unbounded) return true;
  throw std::runtime_error("farkas_feasible: LP solver trouble");
}

std::pair<double, Eigen::VectorXd> min_input_rate(const ControlAffineSystem& system, double a,
                                                  const Eigen::VectorXd& b) {
  const auto& U = system.U;
  if (U.is_box()) {
    auto [lo, hi] = U.box_bounds();
    Eigen::VectorXd u(U.input_dim());
    for (int i = 0; i < U.input_dim(); ++i) u[i] = b[i] > 0 ? lo[i] : (b[i] < 0 ? hi[i] : lo[i]);
    return {a + b.dot(u), u};
  }
  LinearProgram lp;
  lp.objective = -b;
  lp.G = U.A;
  lp.h = U.b;
  lp.E.resize(0, U.input_dim());
  lp.d.resize(0);
  SolveOutcome oc = solve_lp(lp, 1e-9);
  if (!oc.optimal()) throw std::runtime_error("min_input_rate: LP failed");
  return {a + b.dot(oc.x), oc.x};
}

namespace {

Eigen::VectorXd sample_box(std::mt19937& rng, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  Eigen::VectorXd x(lo.size());
  for (int i = 0; i < lo.size(); ++i) x[i] = lo[i] + ud(rng) * (hi[i] - lo[i]);
  return x;
}

}  // namespace

bool relaxed_set_empty(const std::vector<Polynomial>& supports_ge0, int dim, int D,
                       double sdp_tol, double opt_tol) {
  TaskStructure ts = make_task(TaskKind::Positivity, 0, dim, D, supports_ge0);
  const int ny = static_cast<int>(ts.moments.size()) - 1;
  std::vector<Eigen::Triplet<double>> gtrips;
  for (const auto& t : ts.psd_trips) gtrips.emplace_back(t.row(), t.col(), t.value());
  ConicProblem cp;
  cp.c = Eigen::VectorXd::Zero(ny);
  for (int v : ts.trace_vars) cp.c[v] -= 1.0;
  cp.G.resize(static_cast<int>(ts.psd_h.size()), ny);
  cp.G.setFromTriplets(gtrips.begin(), gtrips.end());
  cp.h = Eigen::Map<const Eigen::VectorXd>(ts.psd_h.data(), static_cast<Eigen::Index>(ts.psd_h.size()));
  cp.A.resize(0, ny);
  cp.b.resize(0);
  cp.cone.psd = ts.psd_sides;
  ConicOptions opts;
  opts.feas_tol = sdp_tol;
  opts.gap_tol = sdp_tol;
  ConicResult cr = solve_conic(cp, opts);
  if (cr.status == ConicStatus::PrimalInfeasible) return true;
  if (cr.status != ConicStatus::Optimal) return false;
  double trace = 1.0;
  for (int v : ts.trace_vars) trace += cr.x[v];
  return trace <= 1.0 + opt_tol;
}

AuditReport audit_certificate(const ProblemSpec& problem, const Polynomial& V, int samples,
                              unsigned seed) {
  AuditReport rep;
  std::mt19937 rng(seed);
  const int n = problem.system.n;
  const auto& spec = problem.spec;

  auto grad = V.gradient();
  auto decrease_margin = [&](const Eigen::VectorXd& x, double t) {
    Eigen::VectorXd xfull(V.dimension());
    xfull.head(n) = x;
    if (V.dimension() > n) xfull[n] = t;
    double a0 = 0.0;
    Eigen::VectorXd bi(problem.system.m);
    for (int i = 0; i < n; ++i) {
      const double gi = grad[i].eval(xfull);
      a0 += gi * problem.system.f0[i].eval(x);
      for (int k = 0; k < problem.system.m; ++k) bi[k] += 0.0;
    }
    for (int k = 0; k < problem.system.m; ++k) {
      double v = 0.0;
      for (int i = 0; i < n; ++i) v += grad[i].eval(xfull) * problem.system.f[k][i].eval(x);
      bi[k] = v;
    }
    if (V.dimension() > n) a0 += grad[n].eval(xfull);  // dV/dt
    return min_input_rate(problem.system, a0, bi).first;
  };
  auto vval = [&](const Eigen::VectorXd& x, double t) {
    Eigen::VectorXd xfull(V.dimension());
    xfull.head(n) = x;
    if (V.dimension() > n) xfull[n] = t;
    return V.eval(xfull);
  };

  auto domain_box = [&]() -> std::pair<Eigen::VectorXd, Eigen::VectorXd> {
    if (spec.kind == SpecKind::GlobalStability) {
      const double R = problem.verify.global_radius;
      return {Eigen::VectorXd::Constant(n, -R), Eigen::VectorXd::Constant(n, R)};
    }
    auto bb = spec.S.bounding_box(n);
    if (!bb) throw std::runtime_error("audit: cannot bound the domain");
    return *bb;
  };

  auto [lo, hi] = domain_box();
  std::uniform_real_distribution<double> ut(0.0, spec.horizon > 0 ? spec.horizon : 1.0);
  int done = 0;
  int guard = 0;
  while (done < samples && guard < 200 * samples) {
    ++guard;
    Eigen::VectorXd x = sample_box(rng, lo, hi);
    switch (spec.kind) {
      case SpecKind::GlobalStability: {
        if (x.norm() > problem.verify.global_radius || x.norm() < 1e-9) continue;
        const double pv = vval(x, 0);
        const double dm = decrease_margin(x, 0);
        rep.worst_positivity = std::min(rep.worst_positivity, pv);
        rep.worst_decrease = std::min(rep.worst_decrease, -dm);
        if (pv <= 0 || dm >= 0) ++rep.failures;
        ++done;
        break;
      }
      case SpecKind::LocalStability:
      case SpecKind::ReachWhileStay: {
        if (!spec.S.contains(x) || x.norm() < 1e-9) continue;
        const double pv = vval(x, 0);
        rep.worst_positivity = std::min(rep.worst_positivity, pv);
        bool fail = pv <= 0;
        const bool in_decrease_domain =
            spec.kind == SpecKind::LocalStability || !spec.T.strictly_contains(x);
        if (in_decrease_domain) {
          const double dm = decrease_margin(x, 0);
          rep.worst_decrease = std::min(rep.worst_decrease, -dm);
          fail = fail || dm >= 0;
        }
        if (fail) ++rep.failures;
        ++done;
        break;
      }
      case SpecKind::Safety: {
        // alternate the three barrier conditions over the sample stream
        const int which = done % 3;
        if (which == 0) {
          if (!spec.I.contains(x)) continue;
          const double bv = vval(x, 0);
          rep.worst_positivity = std::min(rep.worst_positivity, -bv);
          if (bv >= 0) ++rep.failures;
        } else if (which == 1) {
          Eigen::VectorXd xw = sample_box(rng, (1.5 * lo).eval(), (1.5 * hi).eval());
          if (spec.S.strictly_contains(xw)) continue;
          const double bv = vval(xw, 0);
          rep.worst_positivity = std::min(rep.worst_positivity, bv);
          if (bv <= 0) ++rep.failures;
        } else {
          if (!spec.S.contains(x) || spec.I.strictly_contains(x)) continue;
          const double dm = decrease_margin(x, 0);
          rep.worst_decrease = std::min(rep.worst_decrease, -dm);
          if (dm >= 0) ++rep.failures;
        }
        ++done;
        break;
      }
      case SpecKind::Funnel: {
        const int which = done % 4;
        if (which == 0) {
          if (!spec.I.contains(x)) continue;
          const double bv = vval(x, 0.0);
          rep.worst_positivity = std::min(rep.worst_positivity, -bv);
          if (bv >= 0) ++rep.failures;
        } else if (which == 1) {
          if (spec.T.strictly_contains(x)) continue;
          const double bv = vval(x, spec.horizon);
          rep.worst_positivity = std::min(rep.worst_positivity, bv);
          if (bv <= 0) ++rep.failures;
        } else if (which == 2) {
          Eigen::VectorXd xw = sample_box(rng, (1.5 * lo).eval(), (1.5 * hi).eval());
          if (spec.S.strictly_contains(xw)) continue;
          const double bv = vval(xw, ut(rng));
          rep.worst_positivity = std::min(rep.worst_positivity, bv);
          if (bv <= 0) ++rep.failures;
        } else {
          if (!spec.S.contains(x)) continue;
          const double dm = decrease_margin(x, ut(rng));
          rep.worst_decrease = std::min(rep.worst_decrease, -dm);
          if (dm >= 0) ++rep.failures;
        }
        ++done;
        break;
      }
    }
  }
  rep.samples = done;
  return rep;
}

}  // namespace clfsyn
