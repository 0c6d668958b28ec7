#include "clfsyn/learner.hpp"

#include <cmath>
#include <sstream>

namespace clfsyn {

CandidateRegion::CandidateRegion(int r, double box_delta) : r_(r), delta_(box_delta) {
  c0_ = Eigen::VectorXd::Zero(r);
  N_ = Eigen::MatrixXd::Identity(r, r);
}

void CandidateRegion::recompute_basis() {
  const int k = static_cast<int>(eq_rows_.size());
  if (k == 0) {
    c0_ = Eigen::VectorXd::Zero(r_);
    N_ = Eigen::MatrixXd::Identity(r_, r_);
    return;
  }
  Eigen::MatrixXd E(k, r_);
  Eigen::VectorXd d(k);
  for (int i = 0; i < k; ++i) {
    E.row(i) = eq_rows_[i].first.transpose();
    d[i] = eq_rows_[i].second;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(E, Eigen::ComputeFullV | Eigen::ComputeThinU);
  c0_ = svd.solve(d);  // min-norm particular solution
  const auto& V = svd.matrixV();
  const auto& sv = svd.singularValues();
  int rank = 0;
  const double cutoff = 1e-12 * std::max(1.0, sv.size() ? sv[0] : 0.0);
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) ++rank;
  }
  N_ = V.rightCols(r_ - rank);
}

void CandidateRegion::add_equality(const Eigen::VectorXd& a, double b) {
  const double na = a.norm();
  if (na < 1e-14) return;
  eq_rows_.emplace_back(a / na, b / na);
  recompute_basis();
}

bool CandidateRegion::add_cut(const Eigen::VectorXd& functional, CutKind kind, int iteration) {
  const double na = functional.norm();
  if (!(na > 1e-12)) return false;
  RegionRow row;
  row.a = functional / na;
  row.b = 0.0;
  row.kind = kind;
  row.iteration = iteration;
  for (const auto& r : rows_) {
    if (std::abs(r.a.dot(row.a) - 1.0) < 1e-12 && std::abs(r.b - row.b) < 1e-12) return false;
  }
  rows_.push_back(std::move(row));
  return true;
}

bool CandidateRegion::contains(const Eigen::VectorXd& c, double tol) const {
  if ((c.array().abs() > delta_ + tol).any()) return false;
  for (const auto& [a, b] : eq_rows_) {
    if (std::abs(a.dot(c) - b) > tol) return false;
  }
  for (const auto& row : rows_) {
    if (row.a.dot(c) < row.b + kStrictMargin - tol) return false;
  }
  return true;
}

double CandidateRegion::worst_row_margin(const Eigen::VectorXd& c) const {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& row : rows_) {
    worst = std::min(worst, row.a.dot(c) - (row.b + kStrictMargin));
  }
  for (int i = 0; i < r_; ++i) {
    worst = std::min(worst, delta_ - std::abs(c[i]));
  }
  return worst;
}

void CandidateRegion::reduced_rows(Eigen::MatrixXd& A, Eigen::VectorXd& b) const {
  const int d = reduced_dim();
  const int nrows = 2 * r_ + static_cast<int>(rows_.size());
  A.resize(nrows, d);
  b.resize(nrows);
  int k = 0;
  for (int i = 0; i < r_; ++i) {
    // |c0_i + (N z)_i| <= Delta
    A.row(k) = N_.row(i);
    b[k] = delta_ - c0_[i];
    ++k;
    A.row(k) = -N_.row(i);
    b[k] = delta_ + c0_[i];
    ++k;
  }
  for (const auto& row : rows_) {
    // a'(c0 + N z) >= b + margin
    A.row(k) = -(row.a.transpose() * N_);
    b[k] = row.a.dot(c0_) - row.b - kStrictMargin;
    ++k;
  }
}

Eigen::VectorXd CandidateRegion::to_full(const Eigen::VectorXd& z) const { return c0_ + N_ * z; }

Eigen::VectorXd CandidateRegion::to_reduced(const Eigen::VectorXd& c) const {
  return N_.transpose() * (c - c0_);
}

CandidateProposal CandidateRegion::propose(CandidateStrategy strategy) const {
  CandidateProposal out;
  const int d = reduced_dim();
  if (d == 0) {
    // fully pinned: the single point is the candidate if it satisfies the rows
    if (contains(c0_, 1e-9)) {
      out.status = RegionStatus::Ok;
      out.c = c0_;
    } else {
      out.status = RegionStatus::Empty;
    }
    return out;
  }
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  reduced_rows(A, b);

  ChebyshevResult cheb = chebyshev_center(A, b);
  if (cheb.status == SolveStatus::Infeasible || (cheb.status == SolveStatus::Optimal && cheb.radius <= 0.0)) {
    out.status = RegionStatus::Empty;
    return out;
  }
  if (cheb.status != SolveStatus::Optimal) {
    out.status = RegionStatus::Numerical;
    return out;
  }

  switch (strategy) {
    case CandidateStrategy::Chebyshev: {
      out.status = RegionStatus::Ok;
      out.c = to_full(cheb.center);
      return out;
    }
    case CandidateStrategy::Analytic: {
      Eigen::VectorXd z = cheb.center;
      for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd s = b - A * z;
        if (s.minCoeff() <= 0.0) break;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < A.rows(); ++i) {
          const Eigen::VectorXd a = A.row(i).transpose();
          g += a / s[i];
          H += (a * a.transpose()) / (s[i] * s[i]);
        }
        Eigen::LDLT<Eigen::MatrixXd> hl(H);
        Eigen::VectorXd step = hl.solve(-g);
        const double dec = -g.dot(step);
        if (dec * 0.5 < 1e-12) break;
        double alpha = 1.0;
        while (alpha > 1e-14 && ((b - A * (z + alpha * step)).minCoeff() <= 0.0)) alpha *= 0.5;
        z += alpha * step;
      }
      out.status = RegionStatus::Ok;
      out.c = to_full(z);
      return out;
    }
    case CandidateStrategy::MVE: {
      MveResult mve = max_volume_ellipsoid(A, b);
      if (mve.status == SolveStatus::Infeasible) {
        out.status = RegionStatus::Empty;
        return out;
      }
      if (mve.status != SolveStatus::Optimal) {
        out.status = RegionStatus::Numerical;
        return out;
      }
      InscribedEllipsoid e;
      e.center = mve.ellipsoid.center;
      e.shape = mve.ellipsoid.shape;
      e.reduced_dim = d;
      e.log_volume = std::log(unit_ball_volume(d)) + mve.ellipsoid.log_det;
      out.status = RegionStatus::Ok;
      out.c = to_full(e.center);
      out.ellipsoid = e;
      return out;
    }
  }
  return out;
}

bool CandidateRegion::refactor_affine_hull() {
  const int d = reduced_dim();
  if (d == 0) return false;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  reduced_rows(A, b);
  bool changed = false;
  // A row is an implicit equality when it cannot be slack anywhere in the region.
  for (std::size_t idx = 0; idx < rows_.size(); ++idx) {
    const Eigen::VectorXd arow = rows_[idx].a.transpose() * N_;
    if (arow.norm() < 1e-12) continue;
    LinearProgram lp;
    lp.objective = arow;
    lp.G = -A;
    lp.h = -b;
    lp.E.resize(0, d);
    lp.d.resize(0);
    SolveOutcome oc = solve_lp(lp, 1e-9);
    if (!oc.optimal()) continue;
    const double lo_val = rows_[idx].b + kStrictMargin - rows_[idx].a.dot(c0_);
    if (oc.objective <= lo_val + 10 * kStrictMargin) {
      add_equality(rows_[idx].a, rows_[idx].b + kStrictMargin);
      changed = true;
    }
  }
  return changed;
}

std::string CandidateRegion::dump() const {
  std::ostringstream os;
  os << "region r=" << r_ << " reduced=" << reduced_dim() << " delta=" << delta_ << "\n";
  for (const auto& [a, b] : eq_rows_) {
    os << "  eq  " << a.transpose() << " = " << b << "\n";
  }
  for (const auto& row : rows_) {
    const char* tag = row.kind == CutKind::Positivity ? "pos"
                      : row.kind == CutKind::Decrease ? "dec"
                                                      : "init";
    os << "  cut(" << tag << " it=" << row.iteration << ") " << row.a.transpose() << " > " << row.b
       << "\n";
  }
  return os.str();
}

CandidateRegion init_region(std::span<const Polynomial> basis, double box_delta, bool pin_origin) {
  CandidateRegion region(static_cast<int>(basis.size()), box_delta);
  if (pin_origin && !basis.empty()) {
    Eigen::VectorXd g0(static_cast<Eigen::Index>(basis.size()));
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(basis[0].dimension());
    for (std::size_t k = 0; k < basis.size(); ++k) g0[static_cast<Eigen::Index>(k)] = basis[k].eval(zero);
    if (g0.norm() > 1e-14) region.add_equality(g0, 0.0);
  }
  return region;
}

bool should_terminate(const InscribedEllipsoid& e, double delta) {
  const double threshold = std::log(unit_ball_volume(e.reduced_dim)) + e.reduced_dim * std::log(delta);
  return e.log_volume < threshold;
}

long iteration_bound(int d, double Delta, double delta) {
  if (!(Delta > delta)) return 0;
  const double bound = d * (std::log(Delta) - std::log(delta)) / (-std::log(8.0 / 9.0));
  return static_cast<long>(std::ceil(bound));
}

}  // namespace clfsyn
