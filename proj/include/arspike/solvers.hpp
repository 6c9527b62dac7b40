#ifndef ARSPIKE_SOLVERS_HPP
#define ARSPIKE_SOLVERS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "arspike/common.hpp"
#include "arspike/lp.hpp"

namespace arspike {

/// min ||u||_1 (equality / ball mode) or least squares + lambda ||u||_1
/// (penalized mode) over the affine family  A_u u = A_free f + b,
/// respectively residual r = A_u u - A_free f - b.
struct L1Problem {
  Matrix A_u;
  Matrix A_free;  // zero columns when absent
  Vector b;

  enum class Mode { equality, ball, penalized };
  Mode mode = Mode::equality;
  double epsilon = 0.0;  // ball radius
  double lambda = 0.0;   // penalty weight

  Index rows() const { return b.size(); }

  void check_shapes() const {
    if (A_u.rows() != b.size())
      throw DimensionError("L1Problem: A_u rows != b length");
    if (A_free.size() > 0 && A_free.rows() != b.size())
      throw DimensionError("L1Problem: A_free rows != b length");
  }
};

/// Dual certificate attached to optimal equality solves.
struct DualCertificate {
  Vector pi;
  double max_abs_penalized = 0.0;  // ||pi' A_u||_inf, must be <= 1 + tol
  double free_residual = 0.0;      // ||pi' A_free||_inf
  double gap = 0.0;                // |pi'b - ||u||_1|
};

struct SolveReport {
  Vector u;
  Vector free;
  double objective = 0.0;
  double residual_norm = 0.0;
  Index iterations = 0;
  SolveStatus status = SolveStatus::max_iter;
  std::optional<DualCertificate> certificate;
};

/// Least squares via column-pivoted QR; refuses rank-deficient systems.
inline Vector least_squares(const Matrix& A, const Vector& b) {
  if (A.rows() != b.size()) throw DimensionError("least_squares: shape mismatch");
  if (A.cols() == 0) return Vector();
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  if (qr.rank() < A.cols())
    throw RankDeficientError("least_squares: numerical rank " +
                             std::to_string(qr.rank()) + " < " +
                             std::to_string(A.cols()) + " columns");
  return qr.solve(b);
}

namespace detail {

/// Orthonormal basis Q1 of range(A_free); empty matrix when no free block.
inline Matrix free_range_basis(const Matrix& A_free) {
  if (A_free.size() == 0) return Matrix(A_free.rows(), 0);
  Eigen::ColPivHouseholderQR<Matrix> qr(A_free);
  const Index rank = qr.rank();
  Matrix Q = qr.householderQ() * Matrix::Identity(A_free.rows(), rank);
  return Q;
}

/// Best free vector for fixed u: minimizes ||A_u u - A_free f - b||.
inline Vector recover_free(const Matrix& A_free, const Vector& target) {
  if (A_free.size() == 0) return Vector();
  Eigen::ColPivHouseholderQR<Matrix> qr(A_free);
  return qr.solve(target);
}

}  // namespace detail

/// Equality-constrained l1 minimization with unpenalized variables.
/// The free block is eliminated against the orthogonal complement of its
/// range, the remaining constraints are reduced to independent rows, and
/// the reduced problem min ||u||_1 s.t. Bu = d is solved as a standard
/// form LP over the split u = u+ - u-.  The LP dual is mapped back through
/// both reductions to produce the optimality certificate pi.
inline SolveReport solve_l1_equality(const L1Problem& problem,
                                     const SolverOptions& opts = {}) {
  problem.check_shapes();
  const Index nu = problem.A_u.cols();
  const Index rows = problem.rows();
  SolveReport rep;
  if (nu == 0) throw DimensionError("solve_l1_equality: A_u has no columns");

  Matrix Q2;  // basis of the left null space of A_free
  if (problem.A_free.size() > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(problem.A_free);
    const Index rank = qr.rank();
    Q2 = qr.householderQ() *
         Matrix::Identity(rows, rows).rightCols(rows - rank);
  } else {
    Q2 = Matrix::Identity(rows, rows);
  }

  const Matrix B = Q2.transpose() * problem.A_u;
  const Vector d = Q2.transpose() * problem.b;

  auto finish = [&](const Vector& u, SolveStatus status, Index iters) {
    rep.u = u;
    rep.free = detail::recover_free(problem.A_free, problem.A_u * u - problem.b);
    rep.objective = u.lpNorm<1>();
    Vector resid = problem.A_u * u - problem.b;
    if (problem.A_free.size() > 0) resid -= problem.A_free * rep.free;
    rep.residual_norm = resid.norm();
    rep.status = status;
    rep.iterations = iters;
  };

  if (B.rows() == 0) {
    // Free variables span every constraint: u = 0 is optimal.
    finish(Vector::Zero(nu), SolveStatus::optimal, 0);
    rep.certificate = DualCertificate{Vector::Zero(rows), 0.0, 0.0, 0.0};
    return rep;
  }

  auto red = detail::reduce_rows(B, d, opts.feasibility_tol);
  if (!red.consistent) {
    finish(Vector::Zero(nu), SolveStatus::infeasible, 0);
    return rep;
  }
  if (red.A.rows() == 0) {
    finish(Vector::Zero(nu), SolveStatus::optimal, 0);
    rep.certificate = DualCertificate{Vector::Zero(rows), 0.0, 0.0, 0.0};
    return rep;
  }

  Matrix A_lp(red.A.rows(), 2 * nu);
  A_lp << red.A, -red.A;
  const Vector c_lp = Vector::Ones(2 * nu);
  LpResult lp = detail::ipm_standard_form(A_lp, red.b, c_lp, opts);

  const Vector u = lp.x.head(nu) - lp.x.tail(nu);
  finish(u, lp.status, lp.iterations);

  if (lp.status == SolveStatus::optimal) {
    DualCertificate cert;
    cert.pi = Q2 * (red.Ur * lp.dual);
    cert.max_abs_penalized =
        (cert.pi.transpose() * problem.A_u).lpNorm<Eigen::Infinity>();
    cert.free_residual =
        problem.A_free.size() > 0
            ? (cert.pi.transpose() * problem.A_free).lpNorm<Eigen::Infinity>()
            : 0.0;
    cert.gap = std::abs(cert.pi.dot(problem.b) - rep.objective);
    rep.certificate = cert;
  }
  return rep;
}

/// LASSO: min 1/2 ||A_u u - A_free f - b||^2 + lambda ||u||_1, solved by
/// cyclic coordinate descent on the reduced problem after projecting the
/// free block out.  Termination is by the KKT residual, not iteration
/// count, so optimal status certifies stationarity.
inline SolveReport solve_lasso(const L1Problem& problem,
                               const SolverOptions& opts = {},
                               const Vector* warm_start = nullptr) {
  problem.check_shapes();
  if (problem.lambda <= 0.0) throw Error("solve_lasso: lambda must be > 0");
  const Index nu = problem.A_u.cols();
  const Index rows = problem.rows();
  const double lambda = problem.lambda;
  SolveReport rep;

  // Gram = M'M and g = M't for M = P A_u, t = P b, with P the projector
  // onto the orthogonal complement of range(A_free).  When A_u is the
  // identity (blind deconvolution) Gram is P itself.
  Matrix gram;
  Vector g;
  const bool has_free = problem.A_free.size() > 0;
  const bool unit_Au =
      problem.A_u.rows() == problem.A_u.cols() && problem.A_u.isIdentity(1e-14);
  if (unit_Au) {
    if (has_free) {
      const Matrix Q1 = detail::free_range_basis(problem.A_free);
      gram = Matrix::Identity(rows, rows) - Q1 * Q1.transpose();
    } else {
      gram = Matrix::Identity(rows, rows);
    }
    g = gram * problem.b;
  } else {
    Matrix Mred = problem.A_u;
    Vector tred = problem.b;
    if (has_free) {
      const Matrix Q1 = detail::free_range_basis(problem.A_free);
      Mred -= Q1 * (Q1.transpose() * Mred);
      tred -= Q1 * (Q1.transpose() * tred);
    }
    gram.noalias() = Mred.transpose() * Mred;
    g.noalias() = Mred.transpose() * tred;
  }

  Vector u = (warm_start && warm_start->size() == nu) ? *warm_start
                                                      : Vector::Zero(nu);
  Vector grad = gram * u - g;  // gradient of the smooth part
  const double scale = std::max({1.0, lambda, g.lpNorm<Eigen::Infinity>()});
  const double kkt_tol = 1e-11 * scale;

  Index sweeps = 0;
  double violation = std::numeric_limits<double>::infinity();
  while (sweeps < opts.max_iterations) {
    ++sweeps;
    if (sweeps % 64 == 0) grad = gram * u - g;  // undo incremental drift
    for (Index i = 0; i < nu; ++i) {
      const double gii = gram(i, i);
      if (gii <= 1e-300) {
        u[i] = 0.0;
        continue;
      }
      const double rho = gii * u[i] - grad[i];  // partial fit for coord i
      const double unew =
          std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) / gii;
      const double delta = unew - u[i];
      if (delta != 0.0) {
        grad += delta * gram.col(i);
        u[i] = unew;
      }
    }
    violation = 0.0;
    for (Index i = 0; i < nu; ++i) {
      if (u[i] != 0.0)
        violation = std::max(violation,
                             std::abs(grad[i] + lambda * (u[i] > 0 ? 1.0 : -1.0)));
      else
        violation = std::max(violation, std::max(std::abs(grad[i]) - lambda, 0.0));
    }
    if (violation <= kkt_tol) break;
  }

  rep.u = u;
  rep.free = detail::recover_free(problem.A_free, problem.A_u * u - problem.b);
  Vector resid = problem.A_u * u - problem.b;
  if (has_free) resid -= problem.A_free * rep.free;
  rep.residual_norm = resid.norm();
  rep.objective = 0.5 * resid.squaredNorm() + lambda * u.lpNorm<1>();
  rep.iterations = sweeps;
  rep.status = violation <= kkt_tol ? SolveStatus::optimal : SolveStatus::max_iter;
  return rep;
}

/// l1 minimization over a residual ball ||A_u u - A_free f - b|| <= eps.
/// Solved through the LASSO path: the penalized solution traces the ball
/// problem as lambda varies, so bisection on lambda lands the residual
/// just inside the ball.  Status infeasible (with residual_norm = the
/// least-squares floor) when even the unpenalized fit cannot reach eps.
inline SolveReport solve_l1_ball(const L1Problem& problem,
                                 const SolverOptions& opts = {}) {
  problem.check_shapes();
  if (problem.epsilon <= 0.0) throw Error("solve_l1_ball: epsilon must be > 0");
  const Index nu = problem.A_u.cols();
  const double eps = problem.epsilon;
  SolveReport rep;

  const bool has_free = problem.A_free.size() > 0;
  Matrix Mred = problem.A_u;
  Vector tred = problem.b;
  if (has_free) {
    const Matrix Q1 = detail::free_range_basis(problem.A_free);
    Mred -= Q1 * (Q1.transpose() * Mred);
    tred -= Q1 * (Q1.transpose() * tred);
  }

  auto finish = [&](const Vector& u, SolveStatus status, Index iters) {
    rep.u = u;
    rep.free = detail::recover_free(problem.A_free, problem.A_u * u - problem.b);
    Vector resid = problem.A_u * u - problem.b;
    if (has_free) resid -= problem.A_free * rep.free;
    rep.residual_norm = resid.norm();
    rep.objective = u.lpNorm<1>();
    rep.status = status;
    rep.iterations = iters;
  };

  if (tred.norm() <= eps) {
    finish(Vector::Zero(nu), SolveStatus::optimal, 0);
    return rep;
  }

  // Least-squares floor: unreachable eps is reported, not silently missed.
  {
    Eigen::ColPivHouseholderQR<Matrix> qr(Mred);
    const Vector ustar = qr.solve(tred);
    const double floor_resid = (Mred * ustar - tred).norm();
    if (floor_resid > eps + opts.feasibility_tol * (1.0 + eps)) {
      finish(ustar, SolveStatus::infeasible, 0);
      rep.residual_norm = floor_resid;
      return rep;
    }
  }

  L1Problem sub;
  sub.A_u = Mred;
  sub.b = tred;
  sub.mode = L1Problem::Mode::penalized;

  const double target_lo = (1.0 - 1e-3) * eps;
  double lam_hi = (Mred.transpose() * tred).lpNorm<Eigen::Infinity>();
  double lam_lo = lam_hi;
  Vector warm = Vector::Zero(nu);
  Index total_iters = 0;

  auto residual_at = [&](double lam, Vector& u_out) {
    sub.lambda = lam;
    SolveReport r = solve_lasso(sub, opts, &warm);
    total_iters += r.iterations;
    u_out = r.u;
    return (Mred * r.u - tred).norm();
  };

  Vector u_best;
  double r_best = residual_at(lam_hi, u_best);  // == ||tred|| > eps
  // Walk lambda down until the residual drops inside the ball.
  Vector u_cur;
  for (int step = 0; step < 80 && r_best > eps; ++step) {
    lam_hi = lam_lo;  // keep the bisection bracket tight
    lam_lo *= 0.25;
    warm = u_best;
    const double r = residual_at(lam_lo, u_cur);
    if (r <= eps) {
      u_best = u_cur;
      r_best = r;
      break;
    }
    u_best = u_cur;
    r_best = r;
    if (lam_lo < 1e-280) break;
  }
  if (r_best > eps) {
    // The floor check above passed, so this indicates lost precision.
    finish(u_best, SolveStatus::max_iter, total_iters);
    return rep;
  }

  // Bisect between the infeasible lam_hi and feasible lam_lo until the
  // residual sits in [(1 - 1e-3) eps, eps].
  for (int step = 0; step < 100 && r_best < target_lo; ++step) {
    const double lam_mid = std::sqrt(lam_hi * lam_lo);
    warm = u_best;
    const double r = residual_at(lam_mid, u_cur);
    if (r <= eps) {
      lam_lo = lam_mid;
      u_best = u_cur;
      r_best = r;
    } else {
      lam_hi = lam_mid;
    }
    if (lam_hi / lam_lo < 1.0 + 1e-12) break;
  }

  finish(u_best, SolveStatus::optimal, total_iters);
  return rep;
}

/// Exhaustive support enumeration, the independent oracle for tests.
/// Supports are visited in (size, lexicographic) order and a strictly
/// smaller objective is required to replace the incumbent, so ties go to
/// the lexicographically smallest support.
inline SolveReport brute_force_l1(const L1Problem& problem, Index max_support,
                                  const SolverOptions& opts = {}) {
  problem.check_shapes();
  const Index nu = problem.A_u.cols();
  const Index nf = problem.A_free.size() > 0 ? problem.A_free.cols() : 0;
  if (nu > 20 || max_support > 3)
    throw SizeLimitError("brute_force_l1: guard is n <= 20 and max_support <= 3");

  SolveReport best;
  best.status = SolveStatus::infeasible;
  double best_obj = std::numeric_limits<double>::infinity();
  Index tried = 0;
  const double feas_tol = opts.feasibility_tol * (1.0 + problem.b.norm());

  std::vector<Index> supp;
  auto try_support = [&]() {
    ++tried;
    const Index ks = static_cast<Index>(supp.size());
    Matrix A(problem.rows(), ks + nf);
    for (Index j = 0; j < ks; ++j) A.col(j) = problem.A_u.col(supp[j]);
    if (nf > 0) A.rightCols(nf) = -problem.A_free;
    Vector sol;
    if (ks + nf == 0) {
      sol = Vector();
    } else {
      // Minimum-norm least squares tolerates rank-deficient supports.
      sol = A.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(problem.b);
    }
    const Vector resid = (ks + nf == 0) ? problem.b : Vector(A * sol - problem.b);
    if (resid.norm() > feas_tol) return;
    double obj = 0.0;
    for (Index j = 0; j < ks; ++j) obj += std::abs(sol[j]);
    if (obj < best_obj - 1e-12) {
      best_obj = obj;
      best.u = Vector::Zero(nu);
      for (Index j = 0; j < ks; ++j) best.u[supp[j]] = sol[j];
      best.free = nf > 0 ? Vector(sol.tail(nf)) : Vector();
      best.objective = obj;
      best.residual_norm = resid.norm();
      best.status = SolveStatus::optimal;
    }
  };

  // Size 0, then all supports of each larger size in lexicographic order.
  try_support();
  std::vector<Index> idx;
  for (Index size = 1; size <= std::min(max_support, nu); ++size) {
    idx.assign(size, 0);
    for (Index j = 0; j < size; ++j) idx[j] = j;
    for (;;) {
      supp.assign(idx.begin(), idx.end());
      try_support();
      Index j = size - 1;
      while (j >= 0 && idx[j] == nu - size + j) --j;
      if (j < 0) break;
      ++idx[j];
      for (Index t = j + 1; t < size; ++t) idx[t] = idx[t - 1] + 1;
    }
  }
  best.iterations = tried;
  return best;
}

}  // namespace arspike

#endif  // ARSPIKE_SOLVERS_HPP
