#ifndef ARSPIKE_SENSING_HPP
#define ARSPIKE_SENSING_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "arspike/common.hpp"
#include "arspike/rng.hpp"

namespace arspike {

enum class Structure { toeplitz, circulant, dense };
enum class Ensemble { gaussian, bernoulli };

inline std::string to_string(Structure s) {
  switch (s) {
    case Structure::toeplitz: return "toeplitz";
    case Structure::circulant: return "circulant";
    default: return "dense";
  }
}
inline std::string to_string(Ensemble e) {
  return e == Ensemble::gaussian ? "gaussian" : "bernoulli";
}

/// Random measurement map y = G x.
///
/// toeplitz:  G(i,j) = g[n-m+i-j] when that index lies in [0, n-1], else 0,
///            for one generator vector g of length n.  Row i+1 is row i
///            shifted right by one, which is what lets the lagged regressor
///            reuse measurements.
/// circulant: G(i,j) = g[(n-m+i-j) mod n].
/// dense:     IID entries, no generator.
struct SensingOperator {
  Structure structure = Structure::toeplitz;
  Ensemble ensemble = Ensemble::gaussian;
  Index m = 0;
  Index n = 0;
  std::uint64_t seed = 0;
  Matrix entries;
  Vector generator;  // empty for dense

  std::string kind_string() const {
    return to_string(structure) + "-" + to_string(ensemble);
  }
};

inline SensingOperator build_sensing(Structure structure, Ensemble ensemble,
                                     Index m, Index n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw DimensionError("build_sensing: m and n must be >= 1");
  if (structure != Structure::dense && m > n)
    throw DimensionError("build_sensing: structured operators need m <= n");

  SensingOperator op;
  op.structure = structure;
  op.ensemble = ensemble;
  op.m = m;
  op.n = n;
  op.seed = seed;
  Rng rng(seed);
  auto draw = [&]() {
    return ensemble == Ensemble::gaussian ? rng.normal() : rng.sign();
  };

  if (structure == Structure::dense) {
    op.entries.resize(m, n);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < n; ++j) op.entries(i, j) = draw();
    return op;
  }

  op.generator.resize(n);
  for (Index i = 0; i < n; ++i) op.generator[i] = draw();
  op.entries = Matrix::Zero(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) {
      const Index idx = n - m + i - j;
      if (structure == Structure::toeplitz) {
        if (idx >= 0 && idx < n) op.entries(i, j) = op.generator[idx];
      } else {
        op.entries(i, j) = op.generator[((idx % n) + n) % n];
      }
    }
  return op;
}

inline Vector apply(const SensingOperator& G, const Vector& x) {
  if (x.size() != G.n)
    throw DimensionError("apply: x has length " + std::to_string(x.size()) +
                         ", operator expects " + std::to_string(G.n));
  return G.entries * x;
}

inline Vector add_noise(const Vector& y, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw Error("add_noise: sigma must be >= 0");
  if (sigma == 0.0) return y;
  Rng rng(seed);
  Vector out = y;
  for (Index i = 0; i < out.size(); ++i) out[i] += sigma * rng.normal();
  return out;
}

enum class RegressorVariant {
  compressed,
  blind,
  arma,
  noncausal_circ,
  noncausal_open,
  noncausal_open_exact,
  dense_lagged
};

/// Lagged-measurement system pairing Y with a right-hand side so that the
/// unknown filter coefficients enter linearly:  Y a + rhs = Gsub u.
struct RegressorSystem {
  Matrix Y;
  Vector rhs;
  Matrix Gsub;
  RegressorVariant variant = RegressorVariant::compressed;
  Index p = 0;
  Index q = 0;
  /// Raw measurements consumed to assemble the system.  Structured
  /// operators reuse their m outputs across all lags; dense projections
  /// must measure each lag separately, so this grows to m*(p+1).
  Index measurements_used = 0;
};

/// Compressed variant: Y is (m-p) x p with Y(r,c) = y[p+r-1-c], rhs is the
/// trailing measurements (y_p..y_{m-1}), Gsub the matching trailing rows
/// of G.
inline RegressorSystem build_regressor_compressed(const Vector& y,
                                                  const SensingOperator& G,
                                                  Index p) {
  const Index m = y.size();
  if (m != G.m) throw DimensionError("build_regressor: y length != operator rows");
  if (m <= p)
    throw InsufficientMeasurementsError(
        "build_regressor: need m > p, got m=" + std::to_string(m) +
        ", p=" + std::to_string(p));
  RegressorSystem sys;
  sys.variant = RegressorVariant::compressed;
  sys.p = p;
  sys.measurements_used = m;
  sys.Y.resize(m - p, p);
  for (Index r = 0; r < m - p; ++r)
    for (Index c = 0; c < p; ++c) sys.Y(r, c) = y[p + r - 1 - c];
  sys.rhs = y.tail(m - p);
  sys.Gsub = G.entries.bottomRows(m - p);
  return sys;
}

/// Blind variant (G = identity): Y is n x p with Y(t,c) = y[t-1-c], zero
/// for negative indices, so that y + Y a = u + e.
inline RegressorSystem build_regressor_blind(const Vector& y, Index p) {
  const Index n = y.size();
  if (n <= p)
    throw InsufficientMeasurementsError("build_regressor: need n > p for blind variant");
  RegressorSystem sys;
  sys.variant = RegressorVariant::blind;
  sys.p = p;
  sys.measurements_used = n;
  sys.Y = Matrix::Zero(n, p);
  for (Index t = 0; t < n; ++t)
    for (Index c = 0; c < p; ++c)
      if (t - 1 - c >= 0) sys.Y(t, c) = y[t - 1 - c];
  sys.rhs = y;
  sys.Gsub = Matrix::Identity(n, n);
  return sys;
}

/// Boundary samples of the underlying signal, needed to de-bias the
/// open-boundary non-causal system: x_0..x_{p-1} and x_{n-p}..x_{n-1}.
struct BoundaryValues {
  Vector left;
  Vector right;
};

/// Non-causal variant: rows are interior times t = p..m-p-1.  Forward
/// columns c = 1..p hold y[t-c], backward columns hold y[t+c], and
/// Y~ a + rhs = Gsub u holds exactly for circulant G with a circulant
/// boundary.  With an open boundary the same display is only approximate;
/// supplying the 2p boundary samples subtracts the exact correction
///   forward  column c, row t:  sum_{s=n-c}^{n-1} G(t-c, s) x_s
///   backward column c, row t:  sum_{s=0}^{c-1}   G(t+c, s) x_s
/// turning Y~ into the de-biased Y-bar whose identity is again exact.
inline RegressorSystem build_regressor_noncausal(
    const Vector& y, const SensingOperator& G, Index p,
    const std::optional<BoundaryValues>& boundary = std::nullopt) {
  const Index m = y.size();
  const Index n = G.n;
  if (m != G.m) throw DimensionError("build_regressor: y length != operator rows");
  if (m <= 2 * p)
    throw InsufficientMeasurementsError(
        "build_regressor: non-causal variant needs m > 2p");
  RegressorSystem sys;
  sys.variant = boundary ? RegressorVariant::noncausal_open_exact
                         : RegressorVariant::noncausal_circ;
  sys.p = p;
  sys.measurements_used = m + (boundary ? 2 * p : 0);
  const Index rows = m - 2 * p;
  sys.Y.resize(rows, 2 * p);
  for (Index r = 0; r < rows; ++r) {
    const Index t = p + r;
    for (Index c = 1; c <= p; ++c) {
      sys.Y(r, c - 1) = y[t - c];
      sys.Y(r, p + c - 1) = y[t + c];
    }
  }
  sys.rhs = y.segment(p, rows);
  sys.Gsub = G.entries.middleRows(p, rows);

  if (boundary) {
    if (boundary->left.size() != p || boundary->right.size() != p)
      throw DimensionError("build_regressor: boundary blocks must each have length p");
    for (Index r = 0; r < rows; ++r) {
      const Index t = p + r;
      for (Index c = 1; c <= p; ++c) {
        double fwd = 0.0;
        for (Index s = n - c; s < n; ++s)
          fwd += G.entries(t - c, s) * boundary->right[s - (n - p)];
        sys.Y(r, c - 1) -= fwd;
        double bwd = 0.0;
        for (Index s = 0; s < c; ++s)
          bwd += G.entries(t + c, s) * boundary->left[s];
        sys.Y(r, p + c - 1) -= bwd;
      }
    }
  }
  return sys;
}

/// Dense projections have no shift structure to reuse, so the lagged
/// columns are measured outright: block c applies G to x delayed by c,
/// costing m measurements per lag, m(p+1) in total.  The resulting system
/// uses all m rows of G and satisfies Y a + y = G u by construction.
struct LaggedMeasurements {
  Vector y0;
  Matrix lags;  // column c-1 holds G * shift(x, c)
  Index total_measurements = 0;
};

inline LaggedMeasurements measure_lagged(const SensingOperator& G,
                                         const Vector& x, Index p) {
  if (x.size() != G.n) throw DimensionError("measure_lagged: x length != n");
  LaggedMeasurements out;
  out.y0 = G.entries * x;
  out.lags.resize(G.m, p);
  Vector shifted = x;
  for (Index c = 1; c <= p; ++c) {
    for (Index j = G.n - 1; j >= 1; --j) shifted[j] = shifted[j - 1];
    shifted[0] = 0.0;
    out.lags.col(c - 1) = G.entries * shifted;
  }
  out.total_measurements = G.m * (p + 1);
  return out;
}

inline RegressorSystem build_regressor_dense(const LaggedMeasurements& lm,
                                             const SensingOperator& G) {
  RegressorSystem sys;
  sys.variant = RegressorVariant::dense_lagged;
  sys.p = lm.lags.cols();
  sys.measurements_used = lm.total_measurements;
  sys.Y = lm.lags;
  sys.rhs = lm.y0;
  sys.Gsub = G.entries;
  return sys;
}

}  // namespace arspike

#endif  // ARSPIKE_SENSING_HPP
