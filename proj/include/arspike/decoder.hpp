#ifndef ARSPIKE_DECODER_HPP
#define ARSPIKE_DECODER_HPP

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "arspike/common.hpp"
#include "arspike/sensing.hpp"
#include "arspike/signal_model.hpp"
#include "arspike/solvers.hpp"

namespace arspike {

enum class DecodeSuccess { exact, approx, failed };

struct DecodeResult {
  Vector u_hat;
  Vector a_hat;
  std::optional<Vector> b_hat;
  Vector x_hat;
  SolveReport report;
  std::optional<DecodeSuccess> success;
  bool a_stable = true;
  /// Set when u_hat == 0 leaves the coefficient system without information.
  bool a_indeterminate = false;
  Index measurements_used = 0;
};

enum class DecodeMode { joint, projected };

inline Vector reconstruct_x(const Vector& a_hat, const Vector& u_hat,
                            const std::optional<Vector>& b_hat = std::nullopt) {
  if (b_hat && b_hat->size() > 0)
    return arma_forward(ArmaModel{ArModel{a_hat}, *b_hat}, u_hat);
  return ar_forward(ArModel{a_hat}, u_hat);
}

namespace detail {

inline void fill_reconstruction(DecodeResult& res) {
  ArModel m{res.a_hat};
  res.a_stable = m.is_stable();
  res.x_hat = reconstruct_x(res.a_hat, res.u_hat, res.b_hat);
}

/// a from the pseudo-inverse relation Y a = Gsub u - rhs, done through the
/// rank-checked least-squares rather than forming (Y'Y)^{-1}.
inline Vector recover_a(const RegressorSystem& sys, const Vector& u_hat,
                        bool& indeterminate) {
  indeterminate = false;
  if (sys.p == 0) return Vector();
  try {
    return least_squares(sys.Y, sys.Gsub * u_hat - sys.rhs);
  } catch (const RankDeficientError&) {
    indeterminate = true;
    return Vector::Zero(sys.p);
  }
}

inline double cond_yty(const Matrix& Y) {
  if (Y.cols() == 0) return 1.0;
  Eigen::BDCSVD<Matrix> svd(Y);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return (smax / smin) * (smax / smin);
}

}  // namespace detail

/// Scores a decode against ground truth.  exact needs the thresholded
/// support to match plus tight u and a errors; approx needs the support
/// only.  An all-zero truth counts as exact when the estimate is
/// numerically zero (recovering silence is trivially right).
inline DecodeSuccess evaluate_success(const DecodeResult& res, const Vector& u_star,
                                      const Vector& a_star) {
  const double beta_max = u_star.lpNorm<Eigen::Infinity>();
  if (beta_max == 0.0) {
    return res.u_hat.lpNorm<Eigen::Infinity>() <= 1e-6 ? DecodeSuccess::exact
                                                       : DecodeSuccess::failed;
  }
  const double thresh = 1e-6 * beta_max;
  bool support_match = true;
  for (Index i = 0; i < u_star.size(); ++i) {
    const bool truth = u_star[i] != 0.0;
    const bool est = std::abs(res.u_hat[i]) > thresh;
    if (truth != est) {
      support_match = false;
      break;
    }
  }
  if (!support_match) return DecodeSuccess::failed;
  const double u_rel = (res.u_hat - u_star).norm() / u_star.norm();
  const double a_err = a_star.size() > 0
                           ? (res.a_hat - a_star).lpNorm<Eigen::Infinity>()
                           : 0.0;
  if (u_rel <= 1e-4 && a_err <= 1e-3 && !res.a_indeterminate)
    return DecodeSuccess::exact;
  return DecodeSuccess::approx;
}

/// Joint mode solves min ||u||_1 s.t. Y a + rhs = Gsub u over (u, a);
/// projected mode eliminates a with P = I - Y(Y'Y)^{-1}Y' first and gets a
/// back from the pseudo-inverse relation.
inline DecodeResult decode_ar_compressed(const RegressorSystem& sys,
                                         DecodeMode mode,
                                         const SolverOptions& opts = {}) {
  DecodeResult res;
  res.measurements_used = sys.measurements_used;

  if (mode == DecodeMode::joint) {
    L1Problem prob;
    prob.A_u = sys.Gsub;
    prob.A_free = sys.Y;
    prob.b = sys.rhs;
    res.report = solve_l1_equality(prob, opts);
    res.u_hat = res.report.u;
    res.a_hat = res.report.free;
    if (res.u_hat.lpNorm<Eigen::Infinity>() <= 1e-12 &&
        sys.rhs.lpNorm<Eigen::Infinity>() <= 1e-12)
      res.a_indeterminate = sys.p > 0;
  } else {
    const double cond = detail::cond_yty(sys.Y);
    if (!(cond < 1e8))
      throw IllConditionedError("decode_ar_compressed: cond(Y'Y) = " +
                                std::to_string(cond) + " blocks projected mode");
    Matrix P = Matrix::Identity(sys.Y.rows(), sys.Y.rows());
    if (sys.p > 0) {
      Eigen::HouseholderQR<Matrix> qr(sys.Y);
      Matrix Q1 = qr.householderQ() * Matrix::Identity(sys.Y.rows(), sys.Y.cols());
      P -= Q1 * Q1.transpose();
    }
    L1Problem prob;
    prob.A_u = P * sys.Gsub;
    prob.b = P * sys.rhs;
    res.report = solve_l1_equality(prob, opts);
    res.u_hat = res.report.u;
    res.a_hat = detail::recover_a(sys, res.u_hat, res.a_indeterminate);
  }
  detail::fill_reconstruction(res);
  return res;
}

inline DecodeResult decode_ar_compressed(const Vector& y, const SensingOperator& G,
                                         Index p, DecodeMode mode,
                                         const SolverOptions& opts = {}) {
  return decode_ar_compressed(build_regressor_compressed(y, G, p), mode, opts);
}

/// Blind deconvolution from direct noisy observation: LASSO over (u, a)
/// on the n x p lagged system, a recovered as -(Y'Y)^{-1}Y'(y - u).
inline DecodeResult decode_blind(const Vector& y, Index p, double lambda,
                                 const SolverOptions& opts = {}) {
  const RegressorSystem sys = build_regressor_blind(y, p);
  DecodeResult res;
  res.measurements_used = sys.measurements_used;

  // ||y + Y a - u|| == ||u - Y a - y||, matching the solver's residual
  // convention r = A_u u - A_free f - b with f = a.
  L1Problem prob;
  prob.mode = L1Problem::Mode::penalized;
  prob.lambda = lambda;
  prob.A_u = Matrix::Identity(y.size(), y.size());
  prob.A_free = sys.Y;
  prob.b = y;
  res.report = solve_lasso(prob, opts);
  res.u_hat = res.report.u;
  res.a_hat = res.report.free;
  detail::fill_reconstruction(res);
  return res;
}

/// Known zero locations: min ||u||_1 s.t. Y a + rhs = Gsub B u.
inline DecodeResult decode_arma_known_B(const Vector& y, const SensingOperator& G,
                                        Index p, const Vector& b_coeffs,
                                        const SolverOptions& opts = {}) {
  const RegressorSystem sys = build_regressor_compressed(y, G, p);
  const Matrix B = ArmaModel{ArModel{}, b_coeffs}.input_matrix(G.n);
  DecodeResult res;
  res.measurements_used = sys.measurements_used;

  L1Problem prob;
  prob.A_u = sys.Gsub * B;
  prob.A_free = sys.Y;
  prob.b = sys.rhs;
  res.report = solve_l1_equality(prob, opts);
  res.u_hat = res.report.u;
  res.a_hat = res.report.free;
  res.b_hat = b_coeffs;
  detail::fill_reconstruction(res);
  return res;
}

struct EpsilonStage {
  double epsilon;
  Index rounds;
};

using EpsilonSchedule = std::vector<EpsilonStage>;

inline void check_schedule(const EpsilonSchedule& schedule) {
  if (schedule.empty()) throw Error("epsilon schedule must not be empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i].epsilon <= 0.0 || schedule[i].rounds < 1)
      throw Error("epsilon schedule entries need epsilon > 0 and rounds >= 1");
    if (i > 0 && schedule[i].epsilon >= schedule[i - 1].epsilon)
      throw Error("epsilon schedule must be strictly decreasing");
  }
}

struct ArmaRound {
  Index round;
  double epsilon;
  Vector b;
};

struct ArmaTrace {
  std::vector<ArmaRound> rounds;
};

/// Alternating estimation with unknown zeros: at fixed B solve the
/// eps-ball l1 program for (u, a); at fixed (u, a) refit b by least
/// squares using the lagged-u matrix (B u = u + U b).  Every inner solve
/// is cold-started so a rerun of the same config reproduces the same
/// trajectory.
inline DecodeResult decode_arma_iterative(const Vector& y, const SensingOperator& G,
                                          Index p, Index q,
                                          const EpsilonSchedule& schedule,
                                          ArmaTrace* trace = nullptr,
                                          const SolverOptions& opts = {}) {
  check_schedule(schedule);
  const RegressorSystem sys = build_regressor_compressed(y, G, p);
  const Index n = G.n;
  DecodeResult res;
  res.measurements_used = sys.measurements_used;

  if (q == 0) {
    // Nothing to alternate over; the problem is the plain compressed one.
    res = decode_ar_compressed(sys, DecodeMode::joint, opts);
    res.b_hat = Vector();
    if (trace) trace->rounds.push_back({1, schedule.front().epsilon, Vector()});
    return res;
  }

  Vector b = Vector::Zero(q);
  Vector u = Vector::Zero(n);
  Vector a = Vector::Zero(p);
  Index round = 0;

  for (const auto& stage : schedule) {
    for (Index r = 0; r < stage.rounds; ++r) {
      ++round;
      const Matrix B = ArmaModel{ArModel{}, b}.input_matrix(n);
      L1Problem prob;
      prob.mode = L1Problem::Mode::ball;
      prob.epsilon = stage.epsilon;
      prob.A_u = sys.Gsub * B;
      prob.A_free = sys.Y;
      prob.b = sys.rhs;
      SolveReport rep = solve_l1_ball(prob, opts);
      if (rep.status == SolveStatus::infeasible)
        throw InfeasibleEpsilonError(
            "decode_arma_iterative: epsilon " + std::to_string(stage.epsilon) +
                " is below the least-squares floor " +
                std::to_string(rep.residual_norm),
            rep.residual_norm);
      u = rep.u;
      a = rep.free;
      res.report = rep;

      // b-update: minimize ||Y a + rhs - Gsub(u + U b)|| over b.
      Matrix U = Matrix::Zero(n, q);
      for (Index t = 0; t < n; ++t)
        for (Index j = 1; j <= q && j <= t; ++j) U(t, j - 1) = u[t - j];
      const Vector target = sys.Y * a + sys.rhs - sys.Gsub * u;
      try {
        b = least_squares(sys.Gsub * U, target);
      } catch (const RankDeficientError&) {
        // Degenerate u (for instance all zeros) gives no information
        // about b; keep the previous iterate.
      }
      if (trace) trace->rounds.push_back({round, stage.epsilon, b});
    }
  }

  res.u_hat = u;
  res.a_hat = a;
  res.b_hat = b;
  detail::fill_reconstruction(res);
  return res;
}

/// Non-causal decoding.  Circulant boundary requires a circulant operator
/// (the lag identity is exact there).  With an open boundary the exact
/// path needs the 2p boundary samples; without them a LASSO with small
/// lambda absorbs the boundary bias into the residual.
inline DecodeResult decode_noncausal(
    const Vector& y, const SensingOperator& G, Index p, Boundary boundary,
    const std::optional<BoundaryValues>& boundary_values = std::nullopt,
    double lambda = 1e-3, bool exact_open = false,
    const SolverOptions& opts = {}) {
  DecodeResult res;

  if (p == 0) {
    // Degenerate: u = x and there is nothing to deconvolve.
    L1Problem prob;
    prob.A_u = G.entries;
    prob.b = y;
    res.report = solve_l1_equality(prob, opts);
    res.u_hat = res.report.u;
    res.a_hat = Vector();
    res.x_hat = res.u_hat;
    res.measurements_used = y.size();
    return res;
  }

  if (boundary == Boundary::circulant) {
    if (G.structure != Structure::circulant)
      throw Error("decode_noncausal: circulant boundary needs a circulant operator");
    const RegressorSystem sys = build_regressor_noncausal(y, G, p);
    res.measurements_used = sys.measurements_used;
    L1Problem prob;
    prob.A_u = sys.Gsub;
    prob.A_free = sys.Y;
    prob.b = sys.rhs;
    res.report = solve_l1_equality(prob, opts);
    res.u_hat = res.report.u;
    res.a_hat = res.report.free;
  } else if (exact_open || boundary_values) {
    if (!boundary_values)
      throw MissingBoundaryError(
          "decode_noncausal: exact open-boundary mode needs the 2p boundary samples");
    const RegressorSystem sys = build_regressor_noncausal(y, G, p, boundary_values);
    res.measurements_used = sys.measurements_used;
    L1Problem prob;
    prob.A_u = sys.Gsub;
    prob.A_free = sys.Y;
    prob.b = sys.rhs;
    res.report = solve_l1_equality(prob, opts);
    res.u_hat = res.report.u;
    res.a_hat = res.report.free;
  } else {
    // Biased path: the open-boundary terms are not representable, so the
    // equality is solved in the penalized sense.
    const RegressorSystem sys = build_regressor_noncausal(y, G, p);
    res.measurements_used = sys.measurements_used;
    L1Problem prob;
    prob.mode = L1Problem::Mode::penalized;
    prob.lambda = lambda;
    prob.A_u = sys.Gsub;
    prob.A_free = sys.Y;
    prob.b = sys.rhs;
    res.report = solve_lasso(prob, opts);
    res.u_hat = res.report.u;
    res.a_hat = res.report.free;
  }

  NoncausalArModel model;
  model.forward = res.a_hat.head(p);
  model.backward = res.a_hat.tail(p);
  model.boundary = boundary;
  try {
    res.x_hat = noncausal_forward(model, res.u_hat);
  } catch (const SingularSystemError&) {
    res.x_hat = Vector::Zero(res.u_hat.size());
    res.a_stable = false;
  }
  return res;
}

}  // namespace arspike

#endif  // ARSPIKE_DECODER_HPP
