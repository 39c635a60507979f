#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "dtf/qp.hpp"

namespace dtf {

/// min f(x)  s.t.  A x = b,  l <= C x <= u,  h(x) = 0.
/// The Hessian callback returns a positive semidefinite approximation of the
/// Lagrangian Hessian ∇²f + Σ λ_i ∇²h_i.
struct NonlinearProgram {
  Eigen::Index num_variables = 0;
  SparseMatrix A;
  Eigen::VectorXd b;
  SparseMatrix C;
  Eigen::VectorXd l, u;
  std::function<double(const Eigen::VectorXd&)> cost;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> cost_gradient;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> constraints;
  std::function<SparseMatrix(const Eigen::VectorXd&)> constraint_jacobian;
  std::function<SparseMatrix(const Eigen::VectorXd&, const Eigen::VectorXd&)> hessian;

  double linear_violation(const Eigen::VectorXd& x) const {
    double v = 0.0;
    if (A.rows() > 0) v = (A * x - b).cwiseAbs().maxCoeff();
    if (C.rows() > 0) {
      const Eigen::VectorXd cx = C * x;
      v = std::max(v, (l - cx).cwiseMax(cx - u).maxCoeff());
    }
    return std::max(v, 0.0);
  }
};

struct SqpSettings {
  int max_iterations = 150;
  double constraint_tolerance = 1e-5;
  /// Relative to max(1, |∇f|∞).
  double stationarity_tolerance = 1e-4;
  double initial_penalty = 100.0;
  /// Proximal term added to the Hessian.
  double proximal = 1e-8;
  QpSettings qp;
};

enum class SqpStatus { Converged, LinearInfeasible, MaxIterations, Stalled, NumericalError };

struct SqpResult {
  SqpStatus status = SqpStatus::NumericalError;
  Eigen::VectorXd x;
  /// Multipliers of h(x) = 0.
  Eigen::VectorXd lambda;
  int iterations = 0;
  double violation = 0.0;
  double stationarity = 0.0;
  double cost = 0.0;
};

namespace detail {

inline SparseMatrix stack_rows(const SparseMatrix& top, const SparseMatrix& bottom) {
  SparseMatrix out(top.rows() + bottom.rows(), top.cols());
  std::vector<Triplet> t;
  t.reserve(top.nonZeros() + bottom.nonZeros());
  for (int k = 0; k < top.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(top, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  }
  for (int k = 0; k < bottom.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(bottom, k); it; ++it) {
      t.emplace_back(top.rows() + it.row(), it.col(), it.value());
    }
  }
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

}  // namespace detail

/// Closest point (Euclidean) to x0 satisfying the linear constraints.
inline QpSolution project_onto_linear(const NonlinearProgram& nlp, const Eigen::VectorXd& x0,
                                      const QpSettings& settings) {
  QuadraticProgram qp;
  const Eigen::Index n = nlp.num_variables;
  qp.P.resize(n, n);
  qp.P.setIdentity();
  qp.q = -x0;
  qp.A = nlp.A;
  qp.b = nlp.b;
  qp.C = nlp.C;
  qp.l = nlp.l;
  qp.u = nlp.u;
  return solve_qp(qp, settings);
}

/// Sℓ1QP sequential quadratic programming: the linear constraints hold at
/// every iterate, h(x) = 0 enters each subproblem elastically, and steps are
/// accepted on the merit f + ν |h|₁.
inline SqpResult solve_sqp(const NonlinearProgram& nlp, const Eigen::VectorXd& x0, const SqpSettings& settings = {}) {
  const Eigen::Index n = nlp.num_variables;
  SqpResult res;

  const QpSolution proj = project_onto_linear(nlp, x0, settings.qp);
  if (proj.status == QpStatus::PrimalInfeasible) {
    res.status = SqpStatus::LinearInfeasible;
    res.x = x0;
    return res;
  }
  if (proj.status != QpStatus::Solved) {
    res.status = SqpStatus::NumericalError;
    res.x = x0;
    return res;
  }
  Eigen::VectorXd x = proj.x;

  const Eigen::Index me = nlp.A.rows();
  Eigen::VectorXd h = nlp.constraints(x);
  const Eigen::Index mh = h.size();
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(mh);
  double nu = settings.initial_penalty;
  double f = nlp.cost(x);
  int stalls = 0;

  // Constant parts of the subproblem: elastic columns and their bounds.
  const Eigen::Index nq = n + 2 * mh;
  SparseMatrix elastic(mh, nq);
  {
    std::vector<Triplet> t;
    for (Eigen::Index i = 0; i < mh; ++i) {
      t.emplace_back(i, n + i, -1.0);
      t.emplace_back(i, n + mh + i, 1.0);
    }
    elastic.setFromTriplets(t.begin(), t.end());
  }
  SparseMatrix c_ext(nlp.C.rows() + 2 * mh, nq);
  {
    std::vector<Triplet> t;
    for (int k = 0; k < nlp.C.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(nlp.C, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    }
    for (Eigen::Index i = 0; i < 2 * mh; ++i) t.emplace_back(nlp.C.rows() + i, n + i, 1.0);
    c_ext.setFromTriplets(t.begin(), t.end());
  }
  SparseMatrix a_pad(me, nq);
  {
    std::vector<Triplet> t;
    for (int k = 0; k < nlp.A.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(nlp.A, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    }
    a_pad.setFromTriplets(t.begin(), t.end());
  }
  constexpr double inf = std::numeric_limits<double>::infinity();

  for (res.iterations = 0; res.iterations < settings.max_iterations; ++res.iterations) {
    const Eigen::VectorXd g = nlp.cost_gradient(x);
    const SparseMatrix jac = nlp.constraint_jacobian(x);
    SparseMatrix hess = nlp.hessian(x, lambda);

    QuadraticProgram qp;
    {
      std::vector<Triplet> t;
      for (int k = 0; k < hess.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(hess, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
      }
      for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(i, i, settings.proximal);
      qp.P.resize(nq, nq);
      qp.P.setFromTriplets(t.begin(), t.end());
    }
    qp.q = Eigen::VectorXd::Constant(nq, nu);
    qp.q.head(n) = g;
    SparseMatrix j_pad(mh, nq);
    {
      std::vector<Triplet> t;
      for (int k = 0; k < jac.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(jac, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
      }
      j_pad.setFromTriplets(t.begin(), t.end());
      j_pad += elastic;
    }
    qp.A = detail::stack_rows(a_pad, j_pad);
    qp.b.resize(me + mh);
    qp.b.head(me) = nlp.b - nlp.A * x;
    qp.b.tail(mh) = -h;
    qp.C = c_ext;
    qp.l.resize(c_ext.rows());
    qp.u.resize(c_ext.rows());
    const Eigen::VectorXd cx = nlp.C * x;
    qp.l.head(nlp.C.rows()) = nlp.l - cx;
    qp.u.head(nlp.C.rows()) = nlp.u - cx;
    qp.l.tail(2 * mh).setZero();
    qp.u.tail(2 * mh).setConstant(inf);

    const QpSolution sub = solve_qp(qp, settings.qp);
    if (sub.status != QpStatus::Solved) {
      res.status = SqpStatus::NumericalError;
      break;
    }
    const Eigen::VectorXd d = sub.x.head(n);
    const Eigen::VectorXd mu = sub.y.head(me);
    const Eigen::VectorXd lam = sub.y.tail(mh);
    const Eigen::VectorXd z = sub.z.head(nlp.C.rows());

    const Eigen::VectorXd grad_l = g + jac.transpose() * lam + nlp.A.transpose() * mu + nlp.C.transpose() * z;
    res.stationarity = grad_l.cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff());
    res.violation = std::max(h.size() ? h.cwiseAbs().maxCoeff() : 0.0, nlp.linear_violation(x));
    lambda = lam;
    if (res.violation <= settings.constraint_tolerance && res.stationarity <= settings.stationarity_tolerance) {
      res.status = SqpStatus::Converged;
      break;
    }

    if (lam.size() && nu < 1.1 * lam.cwiseAbs().maxCoeff()) nu = 2.0 * lam.cwiseAbs().maxCoeff() + 1.0;
    const double h1 = h.cwiseAbs().sum();
    const double model_h1 = sub.x.tail(2 * mh).sum();
    const double decrease = -g.dot(d) - 0.5 * d.dot(hess * d) + nu * (h1 - model_h1);
    const double merit = f + nu * h1;

    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new, h_new;
    double f_new = 0.0;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      x_new = x + alpha * d;
      h_new = nlp.constraints(x_new);
      f_new = nlp.cost(x_new);
      if (!std::isfinite(f_new) || !h_new.allFinite()) continue;
      if (f_new + nu * h_new.cwiseAbs().sum() <= merit - 1e-4 * alpha * std::max(decrease, 0.0)) {
        accepted = true;
        break;
      }
      if (ls == 0) {
        // Second-order correction against the curvature of h.
        qp.b.tail(mh) = -h_new + jac * d;
        const QpSolution soc = solve_qp(qp, settings.qp);
        if (soc.status == QpStatus::Solved) {
          const Eigen::VectorXd x_soc = x + soc.x.head(n);
          const Eigen::VectorXd h_soc = nlp.constraints(x_soc);
          const double f_soc = nlp.cost(x_soc);
          if (std::isfinite(f_soc) && h_soc.allFinite() &&
              f_soc + nu * h_soc.cwiseAbs().sum() <= merit - 1e-4 * std::max(decrease, 0.0)) {
            x_new = x_soc;
            h_new = h_soc;
            f_new = f_soc;
            accepted = true;
            break;
          }
        }
      }
    }
    if (!accepted) {
      if (++stalls >= 3) {
        res.status = SqpStatus::Stalled;
        break;
      }
      // Take a tiny step anyway so the Hessian is rebuilt at a new point.
      x_new = x + alpha * d;
      h_new = nlp.constraints(x_new);
      f_new = nlp.cost(x_new);
    } else {
      stalls = 0;
    }
    x = x_new;
    h = h_new;
    f = f_new;
    res.status = SqpStatus::MaxIterations;
  }
  res.x = x;
  res.lambda = lambda;
  res.cost = nlp.cost(x);
  res.violation = std::max(h.size() ? h.cwiseAbs().maxCoeff() : 0.0, nlp.linear_violation(x));
  return res;
}

}  // namespace dtf
