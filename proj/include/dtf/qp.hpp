#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace dtf {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// min ½ xᵀ P x + qᵀ x  s.t.  A x = b,  l <= C x <= u.
/// P is stored fully (both triangles). Infinite bounds disable a side.
struct QuadraticProgram {
  SparseMatrix P;
  Eigen::VectorXd q;
  SparseMatrix A;
  Eigen::VectorXd b;
  SparseMatrix C;
  Eigen::VectorXd l;
  Eigen::VectorXd u;

  Eigen::Index num_variables() const { return q.size(); }

  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(P * x) + q.dot(x); }

  double max_violation(const Eigen::VectorXd& x) const {
    double v = 0.0;
    if (A.rows() > 0) v = (A * x - b).cwiseAbs().maxCoeff();
    if (C.rows() > 0) {
      const Eigen::VectorXd cx = C * x;
      for (Eigen::Index i = 0; i < cx.size(); ++i) v = std::max({v, l[i] - cx[i], cx[i] - u[i]});
    }
    return v;
  }
};

enum class QpStatus { Solved, PrimalInfeasible, MaxIterations, NumericalError };

struct QpSettings {
  double tolerance = 1e-9;
  int max_iterations = 100;
  /// A run that ends early is still accepted when its best iterate meets
  /// this looser tolerance.
  double relaxed_tolerance = 1e-7;
  double regularization = 1e-11;
  /// Elastic phase-one solve after a failed run, to separate infeasibility
  /// from numerical trouble.
  bool detect_infeasibility = true;
  double infeasibility_tolerance = 1e-6;
};

struct QpSolution {
  QpStatus status = QpStatus::NumericalError;
  Eigen::VectorXd x;
  /// Multipliers of A x = b.
  Eigen::VectorXd y;
  /// Multipliers of C x: positive at an active upper bound, negative at an
  /// active lower bound.
  Eigen::VectorXd z;
  int iterations = 0;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// Smallest achievable constraint violation when the elastic solve ran.
  double min_violation = 0.0;
};

namespace detail {

/// Mehrotra predictor-corrector interior point over
///   min ½ xᵀPx + qᵀx  s.t.  Ax = b,  Gx + s = h,  s >= 0.
class InteriorPoint {
 public:
  InteriorPoint(const SparseMatrix& p, const Eigen::VectorXd& q, const SparseMatrix& a,
                const Eigen::VectorXd& b, const SparseMatrix& g, const Eigen::VectorXd& h,
                const QpSettings& settings)
      : p_(p), q_(q), a_(a), b_(b), g_(g), h_(h), settings_(settings) {
    n_ = q.size();
    me_ = a.rows();
    mi_ = g.rows();
    at_ = a_.transpose();
    gt_ = g_.transpose();
  }

  QpStatus run(Eigen::VectorXd& x, Eigen::VectorXd& y, Eigen::VectorXd& z, int& iterations,
               double& pres, double& dres) {
    best_merit_ = std::numeric_limits<double>::infinity();
    const QpStatus status = iterate(x, y, z, iterations, pres, dres);
    if (status == QpStatus::Solved || !(best_merit_ <= settings_.relaxed_tolerance)) return status;
    x = best_x_;
    y = best_y_;
    z = best_z_;
    return QpStatus::Solved;
  }

 private:
  QpStatus iterate(Eigen::VectorXd& x, Eigen::VectorXd& y, Eigen::VectorXd& z, int& iterations,
                   double& pres, double& dres) {
    Eigen::VectorXd s;
    if (!initialize(x, y, z, s)) return QpStatus::NumericalError;

    const double tol = settings_.tolerance;
    const double bscale = 1.0 + std::max(inf_norm(b_), inf_norm(h_));
    const double qscale = 1.0 + inf_norm(q_);
    int stalls = 0;
    double best_pres = std::numeric_limits<double>::infinity();
    int best_iter = 0;

    for (iterations = 0; iterations <= settings_.max_iterations; ++iterations) {
      const Eigen::VectorXd rd = p_ * x + q_ + at_ * y + gt_ * z;
      const Eigen::VectorXd rp = a_ * x - b_;
      const Eigen::VectorXd rg = g_ * x + s - h_;
      const double gap = mi_ > 0 ? s.dot(z) : 0.0;
      pres = std::max(inf_norm(rp), inf_norm(rg));
      dres = inf_norm(rd);
      const double pobj = 0.5 * x.dot(p_ * x) + q_.dot(x);
      const double merit = std::max({pres / bscale, dres / qscale, gap / (1.0 + std::abs(pobj))});
      if (merit <= tol) return QpStatus::Solved;
      if (merit < best_merit_ && x.allFinite()) {
        best_merit_ = merit;
        best_x_ = x;
        best_y_ = y;
        best_z_ = z;
      }
      if (!std::isfinite(pres) || !std::isfinite(dres)) return QpStatus::NumericalError;
      if (mi_ > 0 && z.cwiseAbs().maxCoeff() > 1e14) return QpStatus::NumericalError;
      if (iterations == settings_.max_iterations) break;

      // A primal residual that stops shrinking while the gap closes points at
      // an empty feasible set.
      if (pres < 0.5 * best_pres) {
        best_pres = pres;
        best_iter = iterations;
      } else if (iterations - best_iter > 25 && pres > 1e3 * tol * bscale) {
        return QpStatus::MaxIterations;
      }

      if (mi_ == 0) {
        // Equality-constrained: one Newton step is exact.
        Eigen::VectorXd dx, dy, dz, ds;
        if (!factor(Eigen::VectorXd())) return QpStatus::NumericalError;
        solve(rd, rp, rg, Eigen::VectorXd(), s, z, dx, dy, dz, ds);
        x += dx;
        y += dy;
        continue;
      }

      const Eigen::VectorXd w = z.cwiseQuotient(s);
      if (!factor(w)) return QpStatus::NumericalError;

      const double mu = gap / static_cast<double>(mi_);
      Eigen::VectorXd dx, dy, dz, ds;
      Eigen::VectorXd rsz = s.cwiseProduct(z);
      solve(rd, rp, rg, rsz, s, z, dx, dy, dz, ds);
      const double alpha_aff = max_step(s, ds, z, dz);
      const double mu_aff = (s + alpha_aff * ds).dot(z + alpha_aff * dz) / static_cast<double>(mi_);
      const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

      rsz += ds.cwiseProduct(dz);
      rsz.array() -= sigma * mu;
      solve(rd, rp, rg, rsz, s, z, dx, dy, dz, ds);
      const double alpha = std::min(1.0, 0.99 * max_step(s, ds, z, dz));
      if (alpha < 1e-10) {
        if (++stalls > 3) return QpStatus::NumericalError;
      } else {
        stalls = 0;
      }
      x += alpha * dx;
      y += alpha * dy;
      z += alpha * dz;
      s += alpha * ds;
    }
    return QpStatus::MaxIterations;
  }

  static double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

  static double max_step(const Eigen::VectorXd& s, const Eigen::VectorXd& ds, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& dz) {
    double alpha = 1.0 / 0.99 + 1.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (ds[i] < 0.0) alpha = std::min(alpha, -s[i] / ds[i]);
      if (dz[i] < 0.0) alpha = std::min(alpha, -z[i] / dz[i]);
    }
    return alpha;
  }

  /// Factors [P + GᵀWG + δI, Aᵀ; A, -δI], raising δ until the LDLᵀ
  /// factorization meets no zero pivot.
  bool factor(const Eigen::VectorXd& w) {
    SparseMatrix h = p_;
    if (w.size() > 0) h += gt_ * w.asDiagonal() * g_;
    std::vector<Triplet> trips;
    trips.reserve(h.nonZeros() + a_.nonZeros() + n_ + me_);
    for (int k = 0; k < h.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(h, k); it; ++it) {
        if (it.row() >= it.col()) trips.emplace_back(it.row(), it.col(), it.value());
      }
    }
    for (int k = 0; k < a_.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(a_, k); it; ++it) trips.emplace_back(n_ + it.row(), it.col(), it.value());
    }
    // Explicit diagonal entries keep the sparsity pattern fixed.
    for (Eigen::Index i = 0; i < n_ + me_; ++i) trips.emplace_back(i, i, 0.0);
    kkt0_.resize(n_ + me_, n_ + me_);
    kkt0_.setFromTriplets(trips.begin(), trips.end());
    if (!analyzed_) {
      ldlt_.analyzePattern(kkt0_);
      analyzed_ = true;
    }
    double delta = settings_.regularization;
    for (int attempt = 0; attempt < 6; ++attempt, delta *= 100.0) {
      kkt_ = kkt0_;
      for (Eigen::Index i = 0; i < n_ + me_; ++i) kkt_.coeffRef(i, i) += (i < n_ ? delta : -delta);
      ldlt_.factorize(kkt_);
      // Pivots of a quasi-definite matrix stay at least δ away from zero;
      // anything smaller is round-off.
      if (ldlt_.info() == Eigen::Success && ldlt_.vectorD().allFinite() &&
          ldlt_.vectorD().cwiseAbs().minCoeff() >= 0.1 * delta) {
        return true;
      }
    }
    return false;
  }

  Eigen::VectorXd solve_kkt(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd sol = ldlt_.solve(rhs);
    const double scale = 1.0 + rhs.cwiseAbs().maxCoeff();
    for (int i = 0; i < 8; ++i) {
      const Eigen::VectorXd r = rhs - kkt0_.selfadjointView<Eigen::Lower>() * sol;
      if (r.cwiseAbs().maxCoeff() <= 1e-15 * scale) break;
      sol += ldlt_.solve(r);
    }
    return sol;
  }

  /// Newton direction for residuals (rd, rp, rg) and complementarity target
  /// rsz (s∘z shifted by the centering/corrector terms).
  void solve(const Eigen::VectorXd& rd, const Eigen::VectorXd& rp, const Eigen::VectorXd& rg,
             const Eigen::VectorXd& rsz, const Eigen::VectorXd& s, const Eigen::VectorXd& z,
             Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& dz, Eigen::VectorXd& ds) const {
    Eigen::VectorXd rhs(n_ + me_);
    if (mi_ > 0) {
      const Eigen::VectorXd t = (z.cwiseProduct(rg) - rsz).cwiseQuotient(s);
      rhs.head(n_) = -rd - gt_ * t;
    } else {
      rhs.head(n_) = -rd;
    }
    rhs.tail(me_) = -rp;
    const Eigen::VectorXd sol = solve_kkt(rhs);
    dx = sol.head(n_);
    dy = sol.tail(me_);
    if (mi_ > 0) {
      ds = -rg - g_ * dx;
      dz = (-rsz - z.cwiseProduct(ds)).cwiseQuotient(s);
    } else {
      ds.resize(0);
      dz.resize(0);
    }
  }

  bool initialize(Eigen::VectorXd& x, Eigen::VectorXd& y, Eigen::VectorXd& z, Eigen::VectorXd& s) {
    if (!factor(Eigen::VectorXd::Ones(mi_))) return false;
    Eigen::VectorXd rhs(n_ + me_);
    rhs.head(n_) = -q_ + (mi_ > 0 ? Eigen::VectorXd(gt_ * h_) : Eigen::VectorXd::Zero(n_));
    rhs.tail(me_) = b_;
    const Eigen::VectorXd sol = solve_kkt(rhs);
    x = sol.head(n_);
    y = sol.tail(me_);
    if (!x.allFinite() || !y.allFinite()) return false;
    s = h_ - g_ * x;
    z = -s;
    if (mi_ > 0) {
      const double ap = -s.minCoeff();
      if (ap >= 0.0) s.array() += 1.0 + ap;
      const double ad = -z.minCoeff();
      if (ad >= 0.0) z.array() += 1.0 + ad;
    }
    return true;
  }

  const SparseMatrix& p_;
  const Eigen::VectorXd& q_;
  const SparseMatrix& a_;
  const Eigen::VectorXd& b_;
  const SparseMatrix& g_;
  const Eigen::VectorXd& h_;
  QpSettings settings_;
  SparseMatrix at_, gt_;
  Eigen::Index n_ = 0, me_ = 0, mi_ = 0;
  SparseMatrix kkt_, kkt0_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool analyzed_ = false;
  double best_merit_ = 0.0;
  Eigen::VectorXd best_x_, best_y_, best_z_;
};

inline Eigen::VectorXd row_inf_norms(const SparseMatrix& m) {
  Eigen::VectorXd n = Eigen::VectorXd::Zero(m.rows());
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) n[it.row()] = std::max(n[it.row()], std::abs(it.value()));
  }
  return n;
}

}  // namespace detail

/// Solves a convex QP. Rows of A and C are equilibrated before the interior
/// point run; results are reported in the original units.
inline QpSolution solve_qp(const QuadraticProgram& qp, const QpSettings& settings = {}) {
  const Eigen::Index n = qp.num_variables();
  const Eigen::Index me = qp.A.rows();
  const Eigen::Index mc = qp.C.rows();

  // Equality scaling.
  Eigen::VectorXd de = detail::row_inf_norms(qp.A);
  for (Eigen::Index i = 0; i < me; ++i) de[i] = de[i] > 0.0 ? 1.0 / de[i] : 1.0;
  const SparseMatrix a = de.asDiagonal() * qp.A;
  const Eigen::VectorXd b = de.cwiseProduct(qp.b);

  // Two-sided rows become one-sided G x <= h rows.
  Eigen::VectorXd dc = detail::row_inf_norms(qp.C);
  for (Eigen::Index i = 0; i < mc; ++i) dc[i] = dc[i] > 0.0 ? 1.0 / dc[i] : 1.0;
  std::vector<Triplet> gtrips;
  std::vector<double> hvals;
  std::vector<std::pair<Eigen::Index, double>> gmap;  // (C row, sign)
  {
    std::vector<std::vector<std::pair<int, double>>> rows(mc);
    for (int k = 0; k < qp.C.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(qp.C, k); it; ++it) rows[it.row()].emplace_back(it.col(), it.value());
    }
    for (Eigen::Index r = 0; r < mc; ++r) {
      for (double sign : {1.0, -1.0}) {
        const double bound = sign > 0 ? qp.u[r] : -qp.l[r];
        if (!std::isfinite(bound)) continue;
        const Eigen::Index gi = static_cast<Eigen::Index>(hvals.size());
        for (const auto& [col, val] : rows[r]) gtrips.emplace_back(gi, col, sign * dc[r] * val);
        hvals.push_back(dc[r] * bound);
        gmap.emplace_back(r, sign);
      }
    }
  }
  SparseMatrix g(static_cast<Eigen::Index>(hvals.size()), n);
  g.setFromTriplets(gtrips.begin(), gtrips.end());
  const Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(hvals.data(), static_cast<Eigen::Index>(hvals.size()));

  QpSolution sol;
  Eigen::VectorXd ys, zs;
  detail::InteriorPoint ipm(qp.P, qp.q, a, b, g, h, settings);
  sol.status = ipm.run(sol.x, ys, zs, sol.iterations, sol.primal_residual, sol.dual_residual);
  if (sol.x.size() != n) sol.x = Eigen::VectorXd::Zero(n);
  sol.y = ys.size() == me ? Eigen::VectorXd(de.cwiseProduct(ys)) : Eigen::VectorXd::Zero(me);
  sol.z = Eigen::VectorXd::Zero(mc);
  if (zs.size() == static_cast<Eigen::Index>(gmap.size())) {
    for (std::size_t i = 0; i < gmap.size(); ++i) sol.z[gmap[i].first] += gmap[i].second * dc[gmap[i].first] * zs[i];
  }
  sol.objective = qp.objective(sol.x);
  sol.primal_residual = qp.max_violation(sol.x);
  sol.dual_residual = (qp.P * sol.x + qp.q + qp.A.transpose() * sol.y + qp.C.transpose() * sol.z).cwiseAbs().maxCoeff();

  if (sol.status == QpStatus::Solved || !settings.detect_infeasibility) return sol;

  // Elastic phase one: min 1ᵀ(e⁺ + e⁻ + t) + ε/2 |x|² with
  //   A x - e⁺ + e⁻ = b,  l - t <= C x <= u + t,  e, t >= 0.
  const Eigen::Index ne = n + 2 * me + mc;
  QuadraticProgram elastic;
  {
    std::vector<Triplet> pt;
    for (Eigen::Index i = 0; i < n; ++i) pt.emplace_back(i, i, 1e-8);
    elastic.P.resize(ne, ne);
    elastic.P.setFromTriplets(pt.begin(), pt.end());
    elastic.q = Eigen::VectorXd::Zero(ne);
    elastic.q.tail(2 * me + mc).setOnes();
    std::vector<Triplet> at;
    for (int k = 0; k < qp.A.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(qp.A, k); it; ++it) at.emplace_back(it.row(), it.col(), it.value());
    }
    for (Eigen::Index i = 0; i < me; ++i) {
      at.emplace_back(i, n + i, -1.0);
      at.emplace_back(i, n + me + i, 1.0);
    }
    elastic.A.resize(me, ne);
    elastic.A.setFromTriplets(at.begin(), at.end());
    elastic.b = qp.b;
    std::vector<Triplet> ct;
    Eigen::Index rows = 0;
    std::vector<double> lo, hi;
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (int k = 0; k < qp.C.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(qp.C, k); it; ++it) ct.emplace_back(it.row(), it.col(), it.value());
    }
    for (Eigen::Index r = 0; r < mc; ++r) {
      // l - t <= C x <= u + t  as  C x + t >= l  and  C x - t <= u.
      ct.emplace_back(r, n + 2 * me + r, -1.0);
      lo.push_back(-inf);
      hi.push_back(qp.u[r]);
    }
    rows = mc;
    for (int k = 0; k < qp.C.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(qp.C, k); it; ++it) ct.emplace_back(rows + it.row(), it.col(), it.value());
    }
    for (Eigen::Index r = 0; r < mc; ++r) {
      ct.emplace_back(rows + r, n + 2 * me + r, 1.0);
      lo.push_back(qp.l[r]);
      hi.push_back(inf);
    }
    rows += mc;
    for (Eigen::Index i = 0; i < 2 * me + mc; ++i) {
      ct.emplace_back(rows + i, n + i, 1.0);
      lo.push_back(0.0);
      hi.push_back(inf);
    }
    rows += 2 * me + mc;
    elastic.C.resize(rows, ne);
    elastic.C.setFromTriplets(ct.begin(), ct.end());
    elastic.l = Eigen::Map<Eigen::VectorXd>(lo.data(), rows);
    elastic.u = Eigen::Map<Eigen::VectorXd>(hi.data(), rows);
  }
  QpSettings es = settings;
  es.detect_infeasibility = false;
  es.tolerance = std::max(settings.tolerance, 1e-8);
  es.relaxed_tolerance = std::max(settings.relaxed_tolerance, 1e-6);
  const QpSolution phase1 = solve_qp(elastic, es);
  sol.min_violation = qp.max_violation(phase1.x.head(n));
  const double scale = 1.0 + std::max(qp.b.size() ? qp.b.cwiseAbs().maxCoeff() : 0.0, 0.0);
  if (phase1.status == QpStatus::Solved && sol.min_violation > settings.infeasibility_tolerance * scale) {
    sol.status = QpStatus::PrimalInfeasible;
  }
  return sol;
}

}  // namespace dtf
