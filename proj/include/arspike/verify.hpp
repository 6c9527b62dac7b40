#ifndef ARSPIKE_VERIFY_HPP
#define ARSPIKE_VERIFY_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "arspike/common.hpp"
#include "arspike/lp.hpp"
#include "arspike/rng.hpp"
#include "arspike/sensing.hpp"
#include "arspike/signal_model.hpp"
#include "arspike/solvers.hpp"

namespace arspike {

/// Outcome of the dual-optimality check.  pi certifies u* as the unique
/// l1 minimizer when the support equalities hold, pi annihilates Y, and
/// the off-support magnitudes stay strictly below one.
struct DocCertificate {
  Vector pi;
  double support_equalities_residual = 0.0;
  double off_support_max = 0.0;
  double null_residual = 0.0;
  bool feasible = false;

  enum class Status { feasible, off_support_too_large, equality_infeasible, solver_failure };
  Status status = Status::solver_failure;
};

/// Searches for the best dual vector by LP: minimize t subject to
/// (pi'Gsub)_i = signs_i on the support, pi'Y = 0, |(pi'Gsub)_j| <= t off
/// support.  Equality-system infeasibility is detected up front and
/// reported distinctly from an optimal t at or above one.
inline DocCertificate check_doc(const Matrix& Gsub, const Matrix& Y,
                                const std::vector<Index>& support,
                                const std::vector<double>& signs,
                                const SolverOptions& opts = {}) {
  if (support.empty()) throw Error("check_doc: support must be nonempty");
  if (signs.size() != support.size())
    throw DimensionError("check_doc: signs and support sizes differ");
  const Index mr = Gsub.rows();
  const Index n = Gsub.cols();
  const Index p = Y.cols();
  const Index ns = static_cast<Index>(support.size());
  if (Y.size() > 0 && Y.rows() != mr)
    throw DimensionError("check_doc: Y rows != Gsub rows");

  std::vector<bool> on_support(n, false);
  for (Index i : support) {
    if (i < 0 || i >= n) throw DimensionError("check_doc: support index out of range");
    on_support[static_cast<std::size_t>(i)] = true;
  }
  std::vector<Index> off;
  off.reserve(n - ns);
  for (Index j = 0; j < n; ++j)
    if (!on_support[static_cast<std::size_t>(j)]) off.push_back(j);
  const Index noff = static_cast<Index>(off.size());

  DocCertificate cert;
  auto measure = [&](const Vector& pi) {
    cert.pi = pi;
    double eq = 0.0;
    for (Index s = 0; s < ns; ++s)
      eq = std::max(eq, std::abs(pi.dot(Gsub.col(support[s])) - signs[s]));
    cert.support_equalities_residual = eq;
    cert.null_residual =
        p > 0 ? (pi.transpose() * Y).lpNorm<Eigen::Infinity>() : 0.0;
    double om = 0.0;
    for (Index j : off) om = std::max(om, std::abs(pi.dot(Gsub.col(j))));
    cert.off_support_max = om;
  };

  // Feasibility of the equality block alone, via minimum-norm solve.
  {
    Matrix C(mr, ns + p);
    for (Index s = 0; s < ns; ++s) C.col(s) = Gsub.col(support[s]);
    if (p > 0) C.rightCols(p) = Y;
    Vector d = Vector::Zero(ns + p);
    for (Index s = 0; s < ns; ++s) d[s] = signs[s];
    Vector pi0 = C.transpose()
                     .bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
                     .solve(d);
    if ((C.transpose() * pi0 - d).lpNorm<Eigen::Infinity>() >
        opts.feasibility_tol * 10.0) {
      measure(pi0);
      cert.status = DocCertificate::Status::equality_infeasible;
      cert.feasible = false;
      return cert;
    }
    if (noff == 0) {
      // No off-support coordinates: the equality solution settles it.
      measure(pi0);
      cert.status = DocCertificate::Status::feasible;
      cert.feasible = true;
      return cert;
    }
  }

  // Standard-form LP over [pi+, pi-, t, s1, s2].
  const Index cols = 2 * mr + 1 + 2 * noff;
  const Index rows = ns + p + 2 * noff;
  Matrix A = Matrix::Zero(rows, cols);
  Vector b = Vector::Zero(rows);
  Vector c = Vector::Zero(cols);
  c[2 * mr] = 1.0;

  for (Index s = 0; s < ns; ++s) {
    A.block(s, 0, 1, mr) = Gsub.col(support[s]).transpose();
    A.block(s, mr, 1, mr) = -Gsub.col(support[s]).transpose();
    b[s] = signs[s];
  }
  for (Index j = 0; j < p; ++j) {
    A.block(ns + j, 0, 1, mr) = Y.col(j).transpose();
    A.block(ns + j, mr, 1, mr) = -Y.col(j).transpose();
  }
  for (Index k = 0; k < noff; ++k) {
    const Index r1 = ns + p + 2 * k;
    A.block(r1, 0, 1, mr) = Gsub.col(off[k]).transpose();
    A.block(r1, mr, 1, mr) = -Gsub.col(off[k]).transpose();
    A(r1, 2 * mr) = -1.0;
    A(r1, 2 * mr + 1 + 2 * k) = 1.0;
    const Index r2 = r1 + 1;
    A.block(r2, 0, 1, mr) = -Gsub.col(off[k]).transpose();
    A.block(r2, mr, 1, mr) = Gsub.col(off[k]).transpose();
    A(r2, 2 * mr) = -1.0;
    A(r2, 2 * mr + 1 + 2 * k + 1) = 1.0;
  }

  SolverOptions lp_opts = opts;
  lp_opts.robust_newton = true;
  LpResult lp = solve_standard_lp(A, b, c, lp_opts);
  if (lp.status == SolveStatus::infeasible) {
    measure(Vector::Zero(mr));
    cert.status = DocCertificate::Status::equality_infeasible;
    cert.feasible = false;
    return cert;
  }

  // Judge by the recovered multipliers themselves; the solver status only
  // breaks ties when the measured numbers fail.
  measure(lp.x.head(mr) - lp.x.segment(mr, mr));
  const double tol = 1e-6;
  cert.feasible = cert.support_equalities_residual <= tol &&
                  cert.null_residual <= tol &&
                  cert.off_support_max <= 1.0 - opts.margin_tol;
  if (cert.feasible)
    cert.status = DocCertificate::Status::feasible;
  else
    cert.status = lp.status == SolveStatus::optimal
                      ? DocCertificate::Status::off_support_too_large
                      : DocCertificate::Status::solver_failure;
  return cert;
}

/// Separation constant demanded by the recovery theorem:
///   l = (log(2/(1-rho)) + p log(6 beta_max M / beta_min)) / log(1/rho) + p.
inline double theorem1_l_required(Index p, const DecayEnvelope& env,
                                  double beta_min, double beta_max) {
  if (env.rho >= 1.0 || env.rho <= 0.0)
    return std::numeric_limits<double>::infinity();
  return (std::log(2.0 / (1.0 - env.rho)) +
          static_cast<double>(p) *
              std::log(6.0 * beta_max * env.M / beta_min)) /
             std::log(1.0 / env.rho) +
         static_cast<double>(p);
}

/// Measured quantities behind each Theorem 1 assumption, with the
/// separation constant computed from the fitted envelope.
struct AssumptionReport {
  Index p = 0;
  double M = 0.0;
  double rho = 0.0;
  double l_required = 0.0;
  double l_actual = 0.0;  // +inf when fewer than two spikes
  bool separation_ok = false;
  double beta_min = 0.0;
  double beta_max = 0.0;
  bool amplitudes_ok = false;
  Index k = 0;
  double sparsity_bound = 0.0;  // min(S/l, S/3)
  bool sparsity_ok = false;
  double r_value = 0.0;
  double r_bound = 0.0;
  bool r_check_applicable = false;
  bool r_ok = false;
  bool envelope_ok = false;
  bool all_pass = false;
};

inline AssumptionReport check_theorem1_assumptions(const ArModel& model,
                                                   const SpikeTrain& u_star,
                                                   Index S,
                                                   Index horizon = 400,
                                                   double delta_safety = 0.01) {
  AssumptionReport rep;
  rep.p = model.order();
  rep.k = u_star.k();

  DecayEnvelope env;
  try {
    env = fit_decay_envelope(model, horizon, delta_safety);
    rep.envelope_ok = env.rho < 1.0;
  } catch (const InstabilityError&) {
    rep.envelope_ok = false;
    rep.rho = model.max_pole_modulus();
    return rep;
  }
  rep.M = env.M;
  rep.rho = env.rho;

  if (rep.k > 0) {
    double bmin = std::numeric_limits<double>::infinity();
    double bmax = 0.0;
    for (Index i : u_star.support) {
      bmin = std::min(bmin, std::abs(u_star.values[i]));
      bmax = std::max(bmax, std::abs(u_star.values[i]));
    }
    rep.beta_min = bmin;
    rep.beta_max = bmax;
  } else {
    rep.beta_min = rep.beta_max = 1.0;
  }
  if (u_star.meta) {
    rep.amplitudes_ok = rep.k == 0 || (rep.beta_min >= u_star.meta->beta_min - 1e-12 &&
                                       rep.beta_max <= u_star.meta->beta_max + 1e-12);
  } else {
    rep.amplitudes_ok = true;  // measured bounds hold by construction
  }

  const double rho = rep.rho;
  rep.l_required = theorem1_l_required(rep.p, env, rep.beta_min, rep.beta_max);
  rep.l_actual = min_support_gap(u_star);
  rep.separation_ok = rep.l_actual > rep.l_required;

  rep.sparsity_bound =
      std::min(static_cast<double>(S) / rep.l_required, static_cast<double>(S) / 3.0);
  rep.sparsity_ok = static_cast<double>(rep.k) <= rep.sparsity_bound;

  const double rho_l = std::pow(rho, rep.l_required);
  rep.r_value = rep.beta_min * (1.0 - rho_l) / (rep.beta_max * rep.M) - rho_l;
  rep.r_bound = rep.beta_min / (3.0 * rep.beta_max * rep.M);
  rep.r_check_applicable = rho_l <= rep.r_bound;
  rep.r_ok = !rep.r_check_applicable || rep.r_value >= rep.r_bound - 1e-12;

  rep.all_pass = rep.envelope_ok && rep.separation_ok && rep.amplitudes_ok &&
                 rep.sparsity_ok && rep.r_ok;
  return rep;
}

/// Oracle LASSO solution on the true support:
///   u_I = (P_I'P_I)^{-1}(P_I'e - lambda sgn(u*_I)) + u*_I,  u_{I^c} = 0,
///   a   = -(Y'Y)^{-1}Y'(y - u),
/// with P = I - Y(Y'Y)^{-1}Y'.
inline std::pair<Vector, Vector> theorem2_closed_form(const Vector& y,
                                                      const Matrix& Y,
                                                      const Vector& u_star,
                                                      const Vector& e,
                                                      double lambda) {
  const Index n = y.size();
  if (Y.rows() != n || u_star.size() != n || e.size() != n)
    throw DimensionError("theorem2_closed_form: shape mismatch");
  const Matrix YtY = Y.transpose() * Y;
  Eigen::LDLT<Matrix> ldlt(YtY);
  if (ldlt.info() != Eigen::Success ||
      (YtY * ldlt.solve(Matrix::Identity(Y.cols(), Y.cols())) -
       Matrix::Identity(Y.cols(), Y.cols()))
              .norm() > 1e-6)
    throw SingularSystemError("theorem2_closed_form: Y'Y numerically singular");

  std::vector<Index> support;
  for (Index i = 0; i < n; ++i)
    if (u_star[i] != 0.0) support.push_back(i);
  const Index k = static_cast<Index>(support.size());

  const Matrix P = Matrix::Identity(n, n) - Y * ldlt.solve(Y.transpose());
  Vector u_hat = Vector::Zero(n);
  if (k > 0) {
    Matrix PI(n, k);
    Vector sgn(k), uI(k);
    for (Index j = 0; j < k; ++j) {
      PI.col(j) = P.col(support[j]);
      sgn[j] = u_star[support[j]] > 0 ? 1.0 : -1.0;
      uI[j] = u_star[support[j]];
    }
    const Matrix H = PI.transpose() * PI;
    Eigen::LDLT<Matrix> hl(H);
    const Vector rhs = PI.transpose() * e - lambda * sgn;
    const Vector delta = hl.solve(rhs);
    if ((H * delta - rhs).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + rhs.norm()))
      throw SingularSystemError("theorem2_closed_form: P_I'P_I numerically singular");
    for (Index j = 0; j < k; ++j) u_hat[support[j]] = delta[j] + uI[j];
  }
  const Vector a_hat = -ldlt.solve(Y.transpose() * (y - u_hat));
  return {u_hat, a_hat};
}

/// Numeric evaluation of the blind-deconvolution conditions on a concrete
/// instance.  c is not assumed: the implied value ||x||^2 / lambda_min is
/// reported and reused in condition (3).  Logs are natural logs.
struct Theorem2Conditions {
  double lambda_min_X2 = 0.0;
  double x_norm_sq = 0.0;
  double c_implied = 0.0;
  double noise_floor = 0.0;  // 4 n p sigma^2 / (sqrt(2)-1)^2
  bool cond1 = false;

  double x1_sgn_inf = 0.0;
  double cond2_bound = 0.0;
  bool cond2 = false;

  double x_max = 0.0;
  double cond3_snr_bound = 0.0;  // 2 sigma sqrt(log n)
  double ratio = 0.0;            // x_max^2 / ||x||^2
  double ratio_bound = 0.0;
  bool cond3 = false;

  double lambda = 0.0;
  double lambda_bound = 0.0;  // 6 sigma p a_max sqrt(log n)
  bool lambda_ok = false;
  double u_min = 0.0;
  bool u_min_ok = false;

  bool all_pass = false;
};

inline Theorem2Conditions check_theorem2_conditions(const Vector& x,
                                                    const Vector& u_star,
                                                    double sigma, double lambda,
                                                    const ArModel& model) {
  const Index n = x.size();
  const Index p = model.order();
  Theorem2Conditions rep;
  rep.lambda = lambda;

  Matrix X = Matrix::Zero(n, p);
  for (Index t = 0; t < n; ++t)
    for (Index c = 0; c < p; ++c)
      if (t - 1 - c >= 0) X(t, c) = x[t - 1 - c];

  std::vector<Index> support;
  for (Index i = 0; i < n; ++i)
    if (u_star[i] != 0.0) support.push_back(i);
  const Index k = static_cast<Index>(support.size());

  Matrix X1(k, p);
  Vector sgn(k);
  Matrix X2(n - k, p);
  {
    Index r1 = 0, r2 = 0;
    std::vector<bool> on(n, false);
    for (Index i : support) on[static_cast<std::size_t>(i)] = true;
    for (Index t = 0; t < n; ++t) {
      if (on[static_cast<std::size_t>(t)]) {
        X1.row(r1) = X.row(t);
        sgn[r1] = u_star[t] > 0 ? 1.0 : -1.0;
        ++r1;
      } else {
        X2.row(r2++) = X.row(t);
      }
    }
  }

  rep.x_norm_sq = x.squaredNorm();
  const double logn = std::log(static_cast<double>(n));

  if (p > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(X2.transpose() * X2);
    rep.lambda_min_X2 = es.eigenvalues().minCoeff();
  }
  rep.noise_floor = 4.0 * static_cast<double>(n) * static_cast<double>(p) *
                    sigma * sigma / ((std::sqrt(2.0) - 1.0) * (std::sqrt(2.0) - 1.0));
  rep.c_implied = rep.lambda_min_X2 > 0.0 ? rep.x_norm_sq / rep.lambda_min_X2
                                          : std::numeric_limits<double>::infinity();
  rep.cond1 = p == 0 || (rep.lambda_min_X2 < rep.x_norm_sq &&
                         rep.lambda_min_X2 >= rep.noise_floor);

  rep.x1_sgn_inf = k > 0 && p > 0
                       ? (X1.transpose() * sgn).lpNorm<Eigen::Infinity>()
                       : 0.0;
  rep.cond2_bound = std::sqrt(rep.x_norm_sq) * std::sqrt(logn);
  rep.cond2 = rep.x1_sgn_inf <= rep.cond2_bound;

  rep.x_max = x.lpNorm<Eigen::Infinity>();
  rep.cond3_snr_bound = 2.0 * sigma * std::sqrt(logn);
  rep.ratio = rep.x_max * rep.x_max / rep.x_norm_sq;
  const double c = rep.c_implied;
  const double b1 = 1.0 / (4.0 * c * std::sqrt(2.0 * static_cast<double>(p) *
                                               static_cast<double>(n)));
  const double b2 = 1.0 / (24.0 * c * static_cast<double>(p) * std::sqrt(logn));
  rep.ratio_bound = p > 0 ? std::min(b1, b2 * b2)
                          : std::numeric_limits<double>::infinity();
  rep.cond3 = rep.x_max >= rep.cond3_snr_bound && rep.ratio <= rep.ratio_bound;

  const double a_max = p > 0 ? model.a.lpNorm<Eigen::Infinity>() : 0.0;
  rep.lambda_bound = 6.0 * sigma * static_cast<double>(p) * a_max * std::sqrt(logn);
  rep.lambda_ok = lambda >= rep.lambda_bound;
  rep.u_min = k > 0 ? [&] {
    double v = std::numeric_limits<double>::infinity();
    for (Index i : support) v = std::min(v, std::abs(u_star[i]));
    return v;
  }()
                    : 0.0;
  rep.u_min_ok = rep.u_min >= 2.0 * lambda;

  rep.all_pass =
      rep.cond1 && rep.cond2 && rep.cond3 && rep.lambda_ok && rep.u_min_ok;
  return rep;
}

struct RipEstimate {
  Index S = 0;
  double delta_lower = 0.0;
  Index trials = 0;
  enum class Method { exhaustive, sampled };
  Method method = Method::sampled;
};

/// The three isometry-side conditions floating around the main theorem;
/// which one binds is ambiguous, so all three are reported.
struct RipConditionReport {
  double ratio = 0.0;  // delta_S / (1 - 3 delta_S), negative sentinel when 3*delta_S >= 1
  bool ratio_ok = false;
  double delta_2S = 0.0;
  bool delta_2S_ok = false;
  double k_ratio = 0.0;  // sqrt(3k/S)
  bool k_ratio_ok = false;
};

inline RipConditionReport check_rip_conditions(double delta_S, double delta_2S,
                                               Index k, Index S) {
  RipConditionReport rep;
  if (3.0 * delta_S < 1.0) {
    rep.ratio = delta_S / (1.0 - 3.0 * delta_S);
    rep.ratio_ok = rep.ratio < 1.0;
  } else {
    rep.ratio = -1.0;
    rep.ratio_ok = false;
  }
  rep.delta_2S = delta_2S;
  rep.delta_2S_ok = delta_2S <= 1.0 / 3.0;
  rep.k_ratio = std::sqrt(3.0 * static_cast<double>(k) / static_cast<double>(S));
  rep.k_ratio_ok = rep.k_ratio <= 1.0;
  return rep;
}

namespace detail {

inline double support_deviation(const Matrix& A, const std::vector<Index>& T) {
  const Index s = static_cast<Index>(T.size());
  Matrix sub(A.rows(), s);
  for (Index j = 0; j < s; ++j) sub.col(j) = A.col(T[j]);
  Eigen::SelfAdjointEigenSolver<Matrix> es(sub.transpose() * sub);
  return std::max(es.eigenvalues().maxCoeff() - 1.0,
                  1.0 - es.eigenvalues().minCoeff());
}

}  // namespace detail

/// Restricted isometry constant of the column-normalized matrix.  When
/// (n choose S) is small the enumeration over supports of size exactly S
/// is exact (eigenvalue interlacing makes smaller supports redundant).
/// Otherwise: random supports give a lower bound, seeded with a greedy
/// chain grown from the worst singleton so the estimate is monotone in S
/// by construction.
inline RipEstimate estimate_rip(const Matrix& G, Index S, Index trials,
                                std::uint64_t seed = 0,
                                bool force_sampled = false) {
  const Index n = G.cols();
  if (S < 1 || S > n) throw DimensionError("estimate_rip: need 1 <= S <= n");
  const Matrix A = G / std::sqrt(static_cast<double>(G.rows()));

  RipEstimate est;
  est.S = S;

  double log_count = 0.0;
  for (Index i = 0; i < S; ++i)
    log_count += std::log(static_cast<double>(n - i)) -
                 std::log(static_cast<double>(i + 1));
  const bool exhaustive = !force_sampled && log_count <= std::log(1e5);

  if (exhaustive) {
    est.method = RipEstimate::Method::exhaustive;
    std::vector<Index> idx(S);
    for (Index j = 0; j < S; ++j) idx[j] = j;
    double worst = 0.0;
    Index count = 0;
    for (;;) {
      worst = std::max(worst, detail::support_deviation(A, idx));
      ++count;
      Index j = S - 1;
      while (j >= 0 && idx[j] == n - S + j) --j;
      if (j < 0) break;
      ++idx[j];
      for (Index t = j + 1; t < S; ++t) idx[t] = idx[t - 1] + 1;
    }
    est.delta_lower = worst;
    est.trials = count;
    return est;
  }

  est.method = RipEstimate::Method::sampled;
  double worst = 0.0;

  // Greedy chain: worst singleton, then the extension that hurts most at
  // each size.  Interlacing makes the chain's deviation nondecreasing, so
  // estimates at growing S never shrink.
  std::vector<Index> chain;
  {
    Index best = 0;
    double bestdev = -1.0;
    for (Index j = 0; j < n; ++j) {
      const double dev = std::abs(A.col(j).squaredNorm() - 1.0);
      if (dev > bestdev) {
        bestdev = dev;
        best = j;
      }
    }
    chain.push_back(best);
    std::vector<bool> used(n, false);
    used[static_cast<std::size_t>(best)] = true;
    while (static_cast<Index>(chain.size()) < S) {
      Index arg = -1;
      double argdev = -1.0;
      for (Index j = 0; j < n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        chain.push_back(j);
        const double dev = detail::support_deviation(A, chain);
        chain.pop_back();
        if (dev > argdev) {
          argdev = dev;
          arg = j;
        }
      }
      chain.push_back(arg);
      used[static_cast<std::size_t>(arg)] = true;
    }
    worst = detail::support_deviation(A, chain);
  }

  Rng rng(seed);
  std::vector<Index> T(S);
  for (Index t = 0; t < trials; ++t) {
    // Uniform S-subset by selection sampling.
    Index chosen = 0;
    for (Index j = 0; j < n && chosen < S; ++j) {
      const double accept = static_cast<double>(S - chosen) /
                            static_cast<double>(n - j);
      if (rng.uniform() < accept) T[static_cast<std::size_t>(chosen++)] = j;
    }
    worst = std::max(worst, detail::support_deviation(A, T));
  }
  est.delta_lower = worst;
  est.trials = trials + 1;
  return est;
}

}  // namespace arspike

#endif  // ARSPIKE_VERIFY_HPP
