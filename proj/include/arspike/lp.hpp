#ifndef ARSPIKE_LP_HPP
#define ARSPIKE_LP_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "arspike/common.hpp"

namespace arspike {

/// Shared numeric knobs.  The feasibility/gap values double as the KKT
/// acceptance thresholds reported by the solvers.
struct SolverOptions {
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-7;
  Index max_iterations = 50000;  // coordinate-descent sweeps
  Index ipm_max_iterations = 200;
  double margin_tol = 1e-6;  // strict "< 1" tested as <= 1 - margin_tol
  // Solve Newton steps through the augmented KKT system instead of the
  // normal equations.  Slower, but keeps the primal residual converging on
  // problems whose x/s spread defeats the normal-equation back substitution.
  bool robust_newton = false;
};

enum class SolveStatus { optimal, max_iter, infeasible };

struct LpResult {
  Vector x;
  Vector dual;  // multipliers of the original (pre-reduction) equality rows
  SolveStatus status = SolveStatus::max_iter;
  Index iterations = 0;
  double objective = 0.0;
};

namespace detail {

/// Mehrotra predictor-corrector interior point method for
///   min c'x  s.t.  Ax = b, x >= 0
/// with A dense and full row rank.  Normal-equations form; the tiny LDLT
/// regularization keeps late iterations from failing on near-singular
/// A D A' without noticeably perturbing the solution.
inline LpResult ipm_standard_form(const Matrix& A, const Vector& b,
                                  const Vector& c, const SolverOptions& opts) {
  const Index rows = A.rows();
  const Index cols = A.cols();
  LpResult res;

  if (rows == 0) {
    // No constraints: minimum of c'x over x >= 0 is at x = 0.
    res.x = Vector::Zero(cols);
    res.dual = Vector();
    res.status = SolveStatus::optimal;
    res.objective = 0.0;
    return res;
  }

  Matrix AAt = A * A.transpose();
  AAt.diagonal().array() += 1e-12 * (1.0 + AAt.diagonal().maxCoeff());
  Eigen::LDLT<Matrix> ldlt0(AAt);
  Vector x = A.transpose() * ldlt0.solve(b);
  Vector lambda = ldlt0.solve(A * c);
  Vector s = c - A.transpose() * lambda;

  const double dx = std::max(-1.5 * x.minCoeff(), 0.0);
  const double ds = std::max(-1.5 * s.minCoeff(), 0.0);
  x.array() += dx;
  s.array() += ds;
  const double xs = x.dot(s);
  if (xs <= 0.0) {
    x = Vector::Ones(cols);
    s = Vector::Ones(cols);
  } else {
    x.array() += 0.5 * xs / s.sum();
    s.array() += 0.5 * xs / x.sum();
  }

  const double bnorm = 1.0 + b.lpNorm<Eigen::Infinity>();
  const double cnorm = 1.0 + c.lpNorm<Eigen::Infinity>();

  Vector rb(rows), rc(cols), d(cols), rhs_y(rows);
  Vector dx_aff(cols), ds_aff(cols), dl_aff(rows);
  Vector dx_cc(cols), ds_cc(cols), dl_cc(rows);
  Vector fx(cols), fl(rows), fs(cols);
  Matrix M(rows, rows);
  Matrix K;
  Eigen::LDLT<Matrix> fac;
  Eigen::PartialPivLU<Matrix> lu;
  bool robust = opts.robust_newton;

  // One Newton solve for A dx = f1, A'dl + ds = f2, S dx + X ds = f3,
  // using whichever factorization the current mode prepared.
  auto kkt_once = [&](const Vector& f1, const Vector& f2, const Vector& f3,
                      Vector& dxo, Vector& dlo, Vector& dso) {
    if (robust) {
      Vector rhs(cols + rows);
      rhs.head(cols) = f2 - (f3.array() / x.array()).matrix();
      rhs.tail(rows) = f1;
      Vector sol = lu.solve(rhs);
      dxo = sol.head(cols);
      dlo = sol.tail(rows);
      dso = f2 - A.transpose() * dlo;
    } else {
      rhs_y = f1 - A * ((f3.array() - x.array() * f2.array()) / s.array()).matrix();
      dlo = fac.solve(rhs_y);
      dso = f2 - A.transpose() * dlo;
      dxo = ((f3.array() - x.array() * dso.array()) / s.array()).matrix();
    }
  };

  // Newton solve with two rounds of refinement against the full KKT
  // residuals; the back substitution loses digits when x/s spreads.
  auto solve_newton = [&](const Vector& rxs, Vector& dxo, Vector& dlo,
                          Vector& dso) {
    kkt_once(-rb, -rc, -rxs, dxo, dlo, dso);
    for (int round = 0; round < 2; ++round) {
      Vector r1 = A * dxo + rb;
      Vector r2 = A.transpose() * dlo + dso + rc;
      Vector r3 = s.cwiseProduct(dxo) + x.cwiseProduct(dso) + rxs;
      kkt_once(-r1, -r2, -r3, fx, fl, fs);
      dxo += fx;
      dlo += fl;
      dso += fs;
    }
  };

  double best_score = std::numeric_limits<double>::infinity();
  Vector best_x = x, best_lambda = lambda;
  Index best_it = 0;
  double prev_pinf = std::numeric_limits<double>::infinity();
  int stalls = 0;

  for (Index it = 1; it <= opts.ipm_max_iterations; ++it) {
    rb = A * x - b;
    rc = A.transpose() * lambda + s - c;
    const double mu = x.dot(s) / static_cast<double>(cols);
    const double pinf = rb.lpNorm<Eigen::Infinity>() / bnorm;
    const double dinf = rc.lpNorm<Eigen::Infinity>() / cnorm;
    const double pobj = c.dot(x);
    const double dobj = b.dot(lambda);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));

    const double score = std::max({pinf, dinf, gap});
    if (!std::isfinite(score)) break;
    if (score < best_score) {
      best_score = score;
      best_x = x;
      best_lambda = lambda;
      best_it = it - 1;
    }

    if (pinf <= opts.feasibility_tol && dinf <= opts.feasibility_tol &&
        gap <= opts.gap_tol) {
      res.x = x;
      res.dual = lambda;
      res.status = SolveStatus::optimal;
      res.iterations = it - 1;
      res.objective = pobj;
      return res;
    }

    // The cheap mode can stall once complementarity outruns feasibility;
    // retry those iterations through the augmented system before giving up.
    if (mu < 1e-8 && pinf > opts.feasibility_tol && pinf > 0.5 * prev_pinf) {
      if (++stalls >= 3) {
        if (!robust) {
          robust = true;
          stalls = 0;
        } else {
          break;
        }
      }
    } else {
      stalls = 0;
    }
    prev_pinf = pinf;

    if (robust) {
      K.setZero(cols + rows, cols + rows);
      K.topLeftCorner(cols, cols).diagonal() =
          (-(s.array() / x.array()) - 1e-10).matrix();
      K.topRightCorner(cols, rows) = A.transpose();
      K.bottomLeftCorner(rows, cols) = A;
      K.bottomRightCorner(rows, rows).diagonal().setConstant(1e-10);
      lu.compute(K);
    } else {
      d = x.array() / s.array();
      M.noalias() = A * d.asDiagonal() * A.transpose();
      M.diagonal().array() += 1e-13 * (1.0 + M.diagonal().maxCoeff());
      fac.compute(M);
    }

    // Predictor: pure Newton step toward complementarity zero.
    solve_newton(x.cwiseProduct(s), dx_aff, dl_aff, ds_aff);

    auto max_step = [](const Vector& v, const Vector& dv) {
      double a = 1.0;
      for (Index i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
      return a;
    };
    const double ap_aff = max_step(x, dx_aff);
    const double ad_aff = max_step(s, ds_aff);
    const double mu_aff = (x + ap_aff * dx_aff).dot(s + ad_aff * ds_aff) /
                          static_cast<double>(cols);
    const double sigma = std::pow(mu_aff / mu, 3);

    // Corrector: recenter and cancel the predictor's second-order term.
    Vector rxs = x.cwiseProduct(s) + dx_aff.cwiseProduct(ds_aff);
    rxs.array() -= sigma * mu;
    solve_newton(rxs, dx_cc, dl_cc, ds_cc);

    const double ap = std::min(1.0, 0.9995 * max_step(x, dx_cc));
    const double ad = std::min(1.0, 0.9995 * max_step(s, ds_cc));
    x += ap * dx_cc;
    lambda += ad * dl_cc;
    s += ad * ds_cc;
  }

  res.x = best_x;
  res.dual = best_lambda;
  res.status = SolveStatus::max_iter;
  res.iterations = best_it;
  res.objective = c.dot(best_x);
  return res;
}

/// Rank-revealing reduction of Ax = b to independent rows.  Returns false
/// when b is inconsistent with the row space (primal infeasible).  The
/// reduced system is A' = U_r' A, b' = U_r' b; duals of the reduced system
/// map back as lambda = U_r lambda'.
struct RowReduction {
  Matrix A;
  Vector b;
  Matrix Ur;
  bool consistent = true;
};

inline RowReduction reduce_rows(const Matrix& A, const Vector& b,
                                double feas_tol) {
  RowReduction red;
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  const double thresh =
      smax * std::max(A.rows(), A.cols()) * Eigen::NumTraits<double>::epsilon();
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > thresh) ++rank;

  red.Ur = svd.matrixU().leftCols(rank);
  red.b = red.Ur.transpose() * b;
  red.A.resize(rank, A.cols());
  for (Index i = 0; i < rank; ++i)
    red.A.row(i) = sv[i] * svd.matrixV().col(i).transpose();

  const double resid = (b - red.Ur * red.b).norm();
  red.consistent = resid <= feas_tol * (1.0 + b.norm());
  return red;
}

}  // namespace detail

/// Solve min c'x s.t. Ax = b, x >= 0 for general (possibly row-rank
/// deficient) A.  Infeasible status means b is not in the row space.
inline LpResult solve_standard_lp(const Matrix& A, const Vector& b,
                                  const Vector& c,
                                  const SolverOptions& opts = {}) {
  auto red = detail::reduce_rows(A, b, opts.feasibility_tol);
  if (!red.consistent) {
    LpResult res;
    res.x = Vector::Zero(A.cols());
    res.dual = Vector::Zero(A.rows());
    res.status = SolveStatus::infeasible;
    return res;
  }
  LpResult res = detail::ipm_standard_form(red.A, red.b, c, opts);
  res.dual = red.Ur * res.dual;
  return res;
}

}  // namespace arspike

#endif  // ARSPIKE_LP_HPP
