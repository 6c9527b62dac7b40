#ifndef ARSPIKE_SIGNAL_MODEL_HPP
#define ARSPIKE_SIGNAL_MODEL_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "arspike/common.hpp"
#include "arspike/rng.hpp"

namespace arspike {

enum class SignMode { bernoulli, all_positive };

/// Sparse driving process u: a length-n vector whose nonzeros sit on
/// `support`.  When produced by make_spike_train the generator parameters
/// are kept so that assumption validators can check amplitude and
/// separation constraints against what was requested, not just observed.
struct SpikeTrain {
  Vector values;
  std::vector<Index> support;
  Index n = 0;

  struct Meta {
    Index min_sep = 0;
    double beta_min = 0.0;
    double beta_max = 0.0;
    SignMode sign_mode = SignMode::bernoulli;
    std::uint64_t seed = 0;
  };
  std::optional<Meta> meta;

  Index k() const { return static_cast<Index>(support.size()); }
};

/// All-pole recursion x(t) + a_1 x(t-1) + ... + a_p x(t-p) = u(t).
struct ArModel {
  Vector a;

  Index order() const { return a.size(); }

  /// Roots of lambda^p + a_1 lambda^{p-1} + ... + a_p, via the companion
  /// matrix.  Empty for p = 0.
  std::vector<std::complex<double>> poles() const {
    const Index p = order();
    std::vector<std::complex<double>> out;
    if (p == 0) return out;
    if (p == 1) {
      out.emplace_back(-a[0], 0.0);
      return out;
    }
    Matrix companion = Matrix::Zero(p, p);
    for (Index i = 0; i < p; ++i) companion(0, i) = -a[i];
    for (Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Matrix> es(companion, false);
    out.reserve(p);
    for (Index i = 0; i < p; ++i) out.push_back(es.eigenvalues()[i]);
    return out;
  }

  double max_pole_modulus() const {
    double r = 0.0;
    for (const auto& z : poles()) r = std::max(r, std::abs(z));
    return r;
  }

  // The 1e-9 pad keeps poles computed as 1.0 - eps from flapping between
  // verdicts across platforms.
  bool is_stable() const { return max_pole_modulus() < 1.0 - 1e-9; }
};

/// AR part plus moving-average taps b_1..b_q acting on the input:
/// x(t) + sum a_i x(t-i) = u(t) + sum b_j u(t-j).
struct ArmaModel {
  ArModel ar;
  Vector b;

  Index p() const { return ar.order(); }
  Index q() const { return b.size(); }

  /// Unit-diagonal banded lower-triangular input matrix of size n.
  Matrix input_matrix(Index n) const {
    Matrix B = Matrix::Identity(n, n);
    for (Index t = 0; t < n; ++t)
      for (Index j = 1; j <= q() && j <= t; ++j) B(t, t - j) = b[j - 1];
    return B;
  }
};

enum class Boundary { circulant, open };

/// Two-sided recursion x(n) + sum a_i x(n-i) + sum a_{-i} x(n+i) = u(n).
/// `forward` holds a_1..a_p, `backward` holds a_{-1}..a_{-p}.
struct NoncausalArModel {
  Vector forward;
  Vector backward;
  Boundary boundary = Boundary::circulant;

  Index order() const { return forward.size(); }

  /// The n x n system matrix A with A x = u.
  Matrix system_matrix(Index n) const {
    if (backward.size() != forward.size())
      throw DimensionError("noncausal model: forward/backward orders differ");
    Matrix A = Matrix::Identity(n, n);
    const Index p = order();
    for (Index t = 0; t < n; ++t) {
      for (Index i = 1; i <= p; ++i) {
        if (boundary == Boundary::circulant) {
          A(t, ((t - i) % n + n) % n) += forward[i - 1];
          A(t, (t + i) % n) += backward[i - 1];
        } else {
          if (t - i >= 0) A(t, t - i) += forward[i - 1];
          if (t + i < n) A(t, t + i) += backward[i - 1];
        }
      }
    }
    return A;
  }
};

/// Envelope |h(t)| <= M rho^t fitted over a finite horizon.
struct DecayEnvelope {
  double M = 1.0;
  double rho = 0.0;
};

/// Draw a k-sparse spike train with pairwise support gaps > min_sep and
/// amplitudes uniform in [beta_min, beta_max], signed per sign_mode.
///
/// Placement draws the gap vector uniformly over the feasible set by the
/// usual combination bijection: subtracting i*min_sep from the i-th sorted
/// position turns valid placements into plain k-subsets of a shrunken
/// range, which are sampled by selection sampling.  No rejection loop, so
/// tight configurations terminate.
inline SpikeTrain make_spike_train(Index n, Index k, Index min_sep,
                                   double beta_min, double beta_max,
                                   SignMode sign_mode, std::uint64_t seed) {
  if (n <= 0) throw DimensionError("make_spike_train: n must be positive");
  if (k < 0 || min_sep < 0)
    throw DimensionError("make_spike_train: k and min_sep must be >= 0");
  if (!(0.0 < beta_min && beta_min <= beta_max))
    throw Error("make_spike_train: need 0 < beta_min <= beta_max");
  if (k * (min_sep + 1) > n)
    throw SeparationError("make_spike_train: " + std::to_string(k) +
                          " spikes with separation " + std::to_string(min_sep) +
                          " do not fit in " + std::to_string(n) + " slots");

  SpikeTrain train;
  train.n = n;
  train.values = Vector::Zero(n);
  train.meta = SpikeTrain::Meta{min_sep, beta_min, beta_max, sign_mode, seed};
  if (k == 0) return train;

  Rng rng(seed);
  const Index reduced = n - (k - 1) * min_sep;
  Index chosen = 0;
  for (Index t = 0; t < reduced && chosen < k; ++t) {
    const double accept =
        static_cast<double>(k - chosen) / static_cast<double>(reduced - t);
    if (rng.uniform() < accept) {
      train.support.push_back(t + chosen * min_sep);
      ++chosen;
    }
  }
  for (Index idx : train.support) {
    double amp = rng.uniform(beta_min, beta_max);
    if (sign_mode == SignMode::bernoulli) amp *= rng.sign();
    train.values[idx] = amp;
  }
  return train;
}

/// Run the AR recursion forward with zero initial conditions.
inline Vector ar_forward(const ArModel& model, const Vector& u) {
  const Index n = u.size();
  const Index p = model.order();
  Vector x(n);
  for (Index t = 0; t < n; ++t) {
    double acc = u[t];
    for (Index i = 1; i <= p && i <= t; ++i) acc -= model.a[i - 1] * x[t - i];
    x[t] = acc;
  }
  return x;
}

inline Vector ar_forward(const ArModel& model, const SpikeTrain& u) {
  return ar_forward(model, u.values);
}

inline Vector impulse_response(const ArModel& model, Index length) {
  if (length < 1) throw DimensionError("impulse_response: length must be >= 1");
  Vector impulse = Vector::Zero(length);
  impulse[0] = 1.0;
  return ar_forward(model, impulse);
}

/// Fit |h(t)| <= M rho^t on t = 0..horizon.  rho is the largest pole
/// modulus; when that modulus is attained by a repeated (or numerically
/// clustered) pole the envelope at exactly rho fails for any constant M,
/// so rho is inflated by delta_safety and capped below 1.
inline DecayEnvelope fit_decay_envelope(const ArModel& model,
                                        Index horizon = 400,
                                        double delta_safety = 0.01) {
  if (!model.is_stable())
    throw InstabilityError("fit_decay_envelope: model has a pole with modulus >= 1");
  if (model.order() == 0) return DecayEnvelope{1.0, 1e-12};

  const auto poles = model.poles();
  double rho = 0.0;
  for (const auto& z : poles) rho = std::max(rho, std::abs(z));

  bool clustered = false;
  for (std::size_t i = 0; i < poles.size() && !clustered; ++i) {
    if (std::abs(poles[i]) < rho - 1e-6) continue;
    for (std::size_t j = i + 1; j < poles.size(); ++j)
      if (std::abs(poles[i] - poles[j]) < 1e-4 * std::max(1.0, rho)) {
        clustered = true;
        break;
      }
  }
  if (clustered) rho = std::min(1.0 - 1e-6, rho * (1.0 + delta_safety));
  rho = std::max(rho, 1e-12);

  const Vector h = impulse_response(model, std::max<Index>(horizon, model.order() + 1));
  double M = 0.0;
  double pw = 1.0;
  for (Index t = 0; t < h.size(); ++t) {
    M = std::max(M, std::abs(h[t]) / pw);
    pw *= rho;
    if (pw < 1e-300) break;
  }
  return DecayEnvelope{std::max(M, 1.0), rho};
}

/// Apply the MA taps then run the AR recursion:
/// x(t) = (B u)(t) - sum a_i x(t-i).
inline Vector arma_forward(const ArmaModel& model, const Vector& u) {
  const Index n = u.size();
  const Index q = model.q();
  Vector v(n);
  for (Index t = 0; t < n; ++t) {
    double acc = u[t];
    for (Index j = 1; j <= q && j <= t; ++j) acc += model.b[j - 1] * u[t - j];
    v[t] = acc;
  }
  return ar_forward(model.ar, v);
}

inline Vector arma_forward(const ArmaModel& model, const SpikeTrain& u) {
  return arma_forward(model, u.values);
}

/// Solve the banded two-sided system A x = u exactly (dense LU; the model
/// is only used at desk scale).
inline Vector noncausal_forward(const NoncausalArModel& model, const Vector& u) {
  const Index n = u.size();
  if (n == 0) return Vector();
  Matrix A = model.system_matrix(n);
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible())
    throw SingularSystemError("noncausal_forward: system matrix is singular for n=" +
                              std::to_string(n));
  return lu.solve(u);
}

inline Vector noncausal_forward(const NoncausalArModel& model, const SpikeTrain& u) {
  return noncausal_forward(model, u.values);
}

/// Minimum pairwise support gap; +infinity when fewer than two spikes.
inline double min_support_gap(const SpikeTrain& u) {
  if (u.support.size() < 2) return std::numeric_limits<double>::infinity();
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < u.support.size(); ++i)
    g = std::min(g, static_cast<double>(u.support[i] - u.support[i - 1]));
  return g;
}

}  // namespace arspike

#endif  // ARSPIKE_SIGNAL_MODEL_HPP
