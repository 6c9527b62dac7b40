#ifndef ARSPIKE_EXPERIMENTS_HPP
#define ARSPIKE_EXPERIMENTS_HPP

#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "arspike/csv.hpp"
#include "arspike/decoder.hpp"
#include "arspike/rng.hpp"
#include "arspike/sensing.hpp"
#include "arspike/signal_model.hpp"
#include "arspike/solvers.hpp"
#include "arspike/svg.hpp"
#include "arspike/verify.hpp"

namespace arspike {

enum class ExperimentKind {
  success_vs_sparsity,
  tv_stress,
  success_vs_order,
  sign_pattern,
  arma_trajectory,
  reconstruction_demo
};

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::success_vs_sparsity: return "success_vs_sparsity";
    case ExperimentKind::tv_stress: return "tv_stress";
    case ExperimentKind::success_vs_order: return "success_vs_order";
    case ExperimentKind::sign_pattern: return "sign_pattern";
    case ExperimentKind::arma_trajectory: return "arma_trajectory";
    default: return "reconstruction_demo";
  }
}

/// Everything a run needs; profiles fill one of these and the CLI can
/// override individual fields.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::success_vs_sparsity;
  std::string name = "custom";
  Index m = 50;
  Index n = 200;
  Vector a;       // AR coefficients; drawn per trial for the order sweep
  Vector b_true;  // MA coefficients for the trajectory experiment
  std::vector<Index> sweep;
  Index k = 8;         // sparsity when the sweep is over something else
  Index min_sep = -1;  // -1: separation rule (see auto_min_sep)
  double beta_min = 1.0;
  double beta_max = 2.0;
  SignMode sign_mode = SignMode::bernoulli;
  Structure structure = Structure::toeplitz;
  std::vector<Ensemble> ensembles = {Ensemble::gaussian};
  double sigma = 0.0;        // measurement noise; ignored when snr_db >= 0
  double snr_db = -1.0;      // fixes sigma per instance from ||x||
  double lambda = -1.0;      // fixed penalty when > 0
  double lambda_mult = -1.0; // lambda = mult * sigma * sqrt(log n) when > 0
  double epsilon = -1.0;     // ball radius for the noisy demo; -1: 2 sigma sqrt(m-p)
  EpsilonSchedule schedule = {{3.0, 50}, {0.3, 10}};
  Index trials = 50;
  std::uint64_t base_seed = 1;
  Index threads = 0;  // 0: hardware concurrency
};

inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw Error("experiment config: trials must be >= 1");
  if (cfg.kind != ExperimentKind::tv_stress &&
      cfg.kind != ExperimentKind::success_vs_order && cfg.a.size() > 0 &&
      !ArModel{cfg.a}.is_stable())
    throw InstabilityError("experiment config: model must be stable for kind " +
                           to_string(cfg.kind));
}

struct TrialRecord {
  std::uint64_t seed = 0;
  Index min_sep = 0;
  bool exact = false;
  bool approx = false;
  double u_err = std::numeric_limits<double>::infinity();
  double a_err = std::numeric_limits<double>::infinity();
  double runtime_ms = 0.0;
};

struct CurvePoint {
  double sweep_value = 0.0;
  Index trials = 0;
  Index exact_successes = 0;
  Index approx_successes = 0;
  Index min_sep_used = -1;  // -1 when it varies across the point's trials
  double mean_runtime_ms = 0.0;
};

struct SuccessCurve {
  std::string name;
  std::vector<CurvePoint> points;
  std::vector<std::vector<TrialRecord>> records;  // parallel to points
  bool outside_theorem1 = false;
};

/// Wilson score interval at 95% coverage.
inline std::pair<double, double> wilson_interval(Index successes, Index trials,
                                                 double z = 1.96) {
  if (trials <= 0) return {0.0, 1.0};
  const double nt = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / nt;
  const double z2 = z * z;
  const double den = 1.0 + z2 / nt;
  const double centre = ph + z2 / (2.0 * nt);
  const double half = z * std::sqrt(ph * (1.0 - ph) / nt + z2 / (4.0 * nt * nt));
  return {std::max(0.0, (centre - half) / den),
          std::min(1.0, (centre + half) / den)};
}

/// Stable model with poles drawn uniformly in modulus on [0.2, 0.9],
/// placed as real values or conjugate pairs, expanded to coefficients.
inline ArModel random_stable_model(Index p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::complex<double>> poles;
  while (static_cast<Index>(poles.size()) < p) {
    const Index remaining = p - static_cast<Index>(poles.size());
    const double r = rng.uniform(0.2, 0.9);
    if (remaining >= 2 && rng.uniform() < 0.5) {
      const double theta = rng.uniform(0.1, 3.0415926535897931);
      poles.emplace_back(r * std::cos(theta), r * std::sin(theta));
      poles.emplace_back(r * std::cos(theta), -r * std::sin(theta));
    } else {
      poles.emplace_back(rng.sign() * r, 0.0);
    }
  }
  std::vector<std::complex<double>> coef{1.0};
  for (const auto& pole : poles) {
    std::vector<std::complex<double>> next(coef.size() + 1, 0.0);
    for (std::size_t i = 0; i < coef.size(); ++i) {
      next[i] += coef[i];
      next[i + 1] -= coef[i] * pole;
    }
    coef = std::move(next);
  }
  ArModel model;
  model.a.resize(p);
  for (Index i = 0; i < p; ++i) model.a[i] = coef[static_cast<std::size_t>(i) + 1].real();
  return model;
}

/// Separation rule for sweeps: the theorem's l when it fits, otherwise
/// the largest separation the generator accepts for k spikes in n slots.
inline Index auto_min_sep(const ArModel& model, double beta_min, double beta_max,
                          Index n, Index k) {
  double l = std::numeric_limits<double>::infinity();
  if (model.order() == 0) l = 0.0;
  else if (model.is_stable())
    l = theorem1_l_required(model.order(), fit_decay_envelope(model), beta_min,
                           beta_max);
  if (k <= 1) {
    const Index cap = n - 1;
    return std::isfinite(l) ? std::min(static_cast<Index>(std::floor(l)), cap) : cap;
  }
  const Index max_feasible = n / k - 1;
  if (std::isfinite(l)) {
    const Index sep = static_cast<Index>(std::floor(l));
    if (sep <= max_feasible) return sep;
  }
  return std::max<Index>(max_feasible, 0);
}

namespace detail {

template <typename F>
inline void parallel_for(Index count, Index threads, F&& body) {
  Index nt = threads > 0
                 ? threads
                 : static_cast<Index>(std::thread::hardware_concurrency());
  if (nt < 1) nt = 1;
  nt = std::min(nt, count);
  if (nt <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  auto worker = [&] {
    for (;;) {
      const Index i = next.fetch_add(1);
      if (i >= count) return;
      body(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nt) - 1);
  for (Index t = 0; t + 1 < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

inline CurvePoint aggregate_point(double sweep_value,
                                  const std::vector<TrialRecord>& records) {
  CurvePoint pt;
  pt.sweep_value = sweep_value;
  pt.trials = static_cast<Index>(records.size());
  double rt = 0.0;
  bool sep_uniform = true;
  for (std::size_t i = 0; i < records.size(); ++i) {
    pt.exact_successes += records[i].exact ? 1 : 0;
    pt.approx_successes += records[i].approx ? 1 : 0;
    rt += records[i].runtime_ms;
    if (records[i].min_sep != records[0].min_sep) sep_uniform = false;
  }
  if (pt.trials > 0) pt.mean_runtime_ms = rt / static_cast<double>(pt.trials);
  pt.min_sep_used = (sep_uniform && !records.empty()) ? records[0].min_sep : -1;
  return pt;
}

inline double relative_u_error(const Vector& u_hat, const Vector& u_star) {
  const double denom = u_star.norm();
  if (denom == 0.0) return u_hat.norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (u_hat - u_star).norm() / denom;
}

/// One synthesize-measure-decode pass for the recovery sweeps.  Any
/// failure (solver, separation, conditioning) scores as a failed trial.
inline TrialRecord recovery_trial(const ExperimentConfig& cfg, Ensemble ens,
                                  const ArModel& model, Index k, Index sep,
                                  std::uint64_t seed) {
  TrialRecord rec;
  rec.seed = seed;
  rec.min_sep = sep;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const SpikeTrain u = make_spike_train(cfg.n, k, sep, cfg.beta_min,
                                          cfg.beta_max, cfg.sign_mode,
                                          derive_seed(seed, 1));
    const Vector x = ar_forward(model, u.values);
    const SensingOperator G =
        build_sensing(cfg.structure, ens, cfg.m, cfg.n, derive_seed(seed, 2));
    Vector y = apply(G, x);
    if (cfg.sigma > 0.0) y = add_noise(y, cfg.sigma, derive_seed(seed, 3));
    DecodeResult res = decode_ar_compressed(y, G, model.order(), DecodeMode::joint);
    const DecodeSuccess s = evaluate_success(res, u.values, model.a);
    rec.exact = s == DecodeSuccess::exact;
    rec.approx = s != DecodeSuccess::failed;
    rec.u_err = relative_u_error(res.u_hat, u.values);
    rec.a_err = model.order() > 0
                    ? (res.a_hat - model.a).lpNorm<Eigen::Infinity>()
                    : 0.0;
  } catch (const std::exception&) {
    rec.exact = rec.approx = false;
  }
  rec.runtime_ms = ms_since(t0);
  return rec;
}

}  // namespace detail

/// Success-rate curves over sparsity, one curve per ensemble.  Also
/// backs the total-variation stress case (same pipeline, unstable model).
inline std::vector<SuccessCurve> run_success_vs_sparsity(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ArModel model{cfg.a};
  if (cfg.kind == ExperimentKind::tv_stress) {
    model.a = Vector::Constant(1, -1.0);
  }
  const bool outside = !model.is_stable();

  std::vector<SuccessCurve> curves;
  for (Ensemble ens : cfg.ensembles) {
    SuccessCurve curve;
    curve.name = cfg.name + "-" + to_string(ens);
    curve.outside_theorem1 = outside;
    for (Index kv : cfg.sweep) {
      const Index sep =
          cfg.min_sep >= 0
              ? cfg.min_sep
              : auto_min_sep(model, cfg.beta_min, cfg.beta_max, cfg.n, kv);
      std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.trials));
      detail::parallel_for(cfg.trials, cfg.threads, [&](Index t) {
        const std::uint64_t seed =
            derive_seed(cfg.base_seed, static_cast<std::uint64_t>(kv),
                        static_cast<std::uint64_t>(t));
        records[static_cast<std::size_t>(t)] =
            detail::recovery_trial(cfg, ens, model, kv, sep, seed);
      });
      curve.points.push_back(
          detail::aggregate_point(static_cast<double>(kv), records));
      curve.records.push_back(std::move(records));
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

inline std::vector<SuccessCurve> run_tv_stress(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.kind = ExperimentKind::tv_stress;
  return run_success_vs_sparsity(c);
}

/// Success over model order at fixed sparsity; a fresh stable model is
/// drawn for every trial.
inline std::vector<SuccessCurve> run_success_vs_order(const ExperimentConfig& cfg) {
  validate_config(cfg);
  std::vector<SuccessCurve> curves;
  for (Ensemble ens : cfg.ensembles) {
    SuccessCurve curve;
    curve.name = cfg.name + "-" + to_string(ens);
    for (Index pv : cfg.sweep) {
      std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.trials));
      detail::parallel_for(cfg.trials, cfg.threads, [&](Index t) {
        const std::uint64_t seed =
            derive_seed(cfg.base_seed, static_cast<std::uint64_t>(pv),
                        static_cast<std::uint64_t>(t));
        const ArModel model = random_stable_model(pv, derive_seed(seed, 4));
        const Index sep =
            cfg.min_sep >= 0
                ? cfg.min_sep
                : auto_min_sep(model, cfg.beta_min, cfg.beta_max, cfg.n, cfg.k);
        records[static_cast<std::size_t>(t)] =
            detail::recovery_trial(cfg, ens, model, cfg.k, sep, seed);
      });
      curve.points.push_back(
          detail::aggregate_point(static_cast<double>(pv), records));
      curve.records.push_back(std::move(records));
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

namespace detail {

inline bool sign_patterns_match(const Vector& u_hat, const Vector& u_star) {
  const double tau =
      1e-9 * std::max({u_hat.lpNorm<Eigen::Infinity>(),
                       u_star.lpNorm<Eigen::Infinity>(), 1e-300});
  auto sgn = [tau](double v) { return v > tau ? 1 : (v < -tau ? -1 : 0); };
  for (Index i = 0; i < u_star.size(); ++i)
    if (sgn(u_hat[i]) != sgn(u_star[i])) return false;
  return true;
}

inline bool supports_match(const Vector& u_hat, const Vector& u_star) {
  const double tau =
      1e-9 * std::max({u_hat.lpNorm<Eigen::Infinity>(),
                       u_star.lpNorm<Eigen::Infinity>(), 1e-300});
  for (Index i = 0; i < u_star.size(); ++i)
    if ((std::abs(u_hat[i]) > tau) != (u_star[i] != 0.0)) return false;
  return true;
}

inline double resolve_lambda(const ExperimentConfig& cfg, double sigma,
                             const ArModel& model, Index n) {
  if (cfg.lambda > 0.0) return cfg.lambda;
  const double logn = std::log(static_cast<double>(n));
  double lam;
  if (cfg.lambda_mult > 0.0) {
    lam = cfg.lambda_mult * sigma * std::sqrt(logn);
  } else {
    const double a_max =
        model.order() > 0 ? model.a.lpNorm<Eigen::Infinity>() : 0.0;
    lam = 6.0 * sigma * static_cast<double>(model.order()) * a_max *
          std::sqrt(logn);
  }
  return std::max(lam, 1e-6);  // keep the penalty valid in noiseless runs
}

}  // namespace detail

/// Blind deconvolution under noise: sign-recovery frequency vs spike
/// count, once per sign regime.  The "exact" counter means the full sign
/// pattern matched; "approx" means the support matched.
inline std::vector<SuccessCurve> run_sign_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const ArModel model{cfg.a};
  std::vector<SuccessCurve> curves;
  for (SignMode mode : {SignMode::bernoulli, SignMode::all_positive}) {
    SuccessCurve curve;
    curve.name = cfg.name + (mode == SignMode::bernoulli ? "-bernoulli-signs"
                                                         : "-all-positive");
    for (Index kv : cfg.sweep) {
      const Index sep = cfg.min_sep >= 0 ? cfg.min_sep : 2;
      std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.trials));
      detail::parallel_for(cfg.trials, cfg.threads, [&](Index t) {
        const std::uint64_t seed =
            derive_seed(cfg.base_seed, static_cast<std::uint64_t>(kv),
                        static_cast<std::uint64_t>(t));
        TrialRecord rec;
        rec.seed = seed;
        rec.min_sep = sep;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const SpikeTrain u =
              make_spike_train(cfg.n, kv, sep, cfg.beta_min, cfg.beta_max,
                               mode, derive_seed(seed, 1));
          const Vector x = ar_forward(model, u.values);
          double sigma = cfg.sigma;
          if (cfg.snr_db >= 0.0)
            sigma = std::sqrt(x.squaredNorm() /
                              (static_cast<double>(cfg.n) *
                               std::pow(10.0, cfg.snr_db / 10.0)));
          Vector y = x;
          if (sigma > 0.0) y = add_noise(y, sigma, derive_seed(seed, 3));
          const double lambda = detail::resolve_lambda(cfg, sigma, model, cfg.n);
          DecodeResult res = decode_blind(y, model.order(), lambda);
          rec.exact = detail::sign_patterns_match(res.u_hat, u.values);
          rec.approx = detail::supports_match(res.u_hat, u.values);
          rec.u_err = detail::relative_u_error(res.u_hat, u.values);
          rec.a_err = (res.a_hat - model.a).lpNorm<Eigen::Infinity>();
        } catch (const std::exception&) {
          rec.exact = rec.approx = false;
        }
        rec.runtime_ms = detail::ms_since(t0);
        records[static_cast<std::size_t>(t)] = rec;
      });
      curve.points.push_back(
          detail::aggregate_point(static_cast<double>(kv), records));
      curve.records.push_back(std::move(records));
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  Vector b_true;
  ArmaTrace trace;
  std::vector<Index> stage_starts;  // first round of each epsilon stage
  DecodeResult result;
  double final_b_err = std::numeric_limits<double>::infinity();
};

inline TrajectoryRecord run_arma_trajectory(const ExperimentConfig& cfg) {
  validate_config(cfg);
  check_schedule(cfg.schedule);
  TrajectoryRecord out;
  out.seed = cfg.base_seed;
  out.b_true = cfg.b_true;
  const std::uint64_t seed = derive_seed(cfg.base_seed, 0, 0);

  const Index sep = cfg.min_sep >= 0 ? cfg.min_sep : 15;
  const SpikeTrain u = make_spike_train(cfg.n, cfg.k, sep, cfg.beta_min,
                                        cfg.beta_max, cfg.sign_mode,
                                        derive_seed(seed, 1));
  const ArmaModel model{ArModel{cfg.a}, cfg.b_true};
  const Vector x = arma_forward(model, u.values);
  const SensingOperator G = build_sensing(cfg.structure, cfg.ensembles.front(),
                                          cfg.m, cfg.n, derive_seed(seed, 2));
  Vector y = apply(G, x);
  if (cfg.sigma > 0.0) y = add_noise(y, cfg.sigma, derive_seed(seed, 3));

  Index round = 1;
  for (const auto& stage : cfg.schedule) {
    out.stage_starts.push_back(round);
    round += stage.rounds;
  }

  out.result = decode_arma_iterative(y, G, model.p(), model.q(), cfg.schedule,
                                     &out.trace);
  if (out.result.b_hat && out.result.b_hat->size() == cfg.b_true.size())
    out.final_b_err = (*out.result.b_hat - cfg.b_true).norm();
  return out;
}

struct DemoRecord {
  std::uint64_t seed = 0;
  SpikeTrain u_star;
  Vector x;
  Vector y;
  double sigma = 0.0;
  double epsilon_used = 0.0;
  DecodeResult result;
  bool support_match = false;  // top-k entries of |u_hat| sit on the support
  double u_err_inf = std::numeric_limits<double>::infinity();
  double x_err_inf = std::numeric_limits<double>::infinity();
};

/// One end-to-end instance.  Noiseless input decodes through the
/// equality program; with noise the epsilon-ball variant absorbs it.
inline DemoRecord run_reconstruction_demo(const ExperimentConfig& cfg) {
  validate_config(cfg);
  DemoRecord out;
  out.seed = cfg.base_seed;
  const std::uint64_t seed = derive_seed(cfg.base_seed, 0, 0);
  const ArModel model{cfg.a};

  const Index sep = cfg.min_sep >= 0 ? cfg.min_sep : 20;
  out.u_star = make_spike_train(cfg.n, cfg.k, sep, cfg.beta_min, cfg.beta_max,
                                cfg.sign_mode, derive_seed(seed, 1));
  out.x = ar_forward(model, out.u_star.values);
  const SensingOperator G = build_sensing(cfg.structure, cfg.ensembles.front(),
                                          cfg.m, cfg.n, derive_seed(seed, 2));
  out.sigma = cfg.sigma;
  out.y = apply(G, out.x);
  if (cfg.sigma > 0.0) out.y = add_noise(out.y, cfg.sigma, derive_seed(seed, 3));

  if (cfg.sigma == 0.0) {
    out.result = decode_ar_compressed(out.y, G, model.order(), DecodeMode::joint);
  } else {
    const RegressorSystem sys = build_regressor_compressed(out.y, G, model.order());
    out.epsilon_used =
        cfg.epsilon > 0.0
            ? cfg.epsilon
            : 2.0 * cfg.sigma * std::sqrt(static_cast<double>(sys.rhs.size()));
    L1Problem prob;
    prob.mode = L1Problem::Mode::ball;
    prob.epsilon = out.epsilon_used;
    prob.A_u = sys.Gsub;
    prob.A_free = sys.Y;
    prob.b = sys.rhs;
    out.result.report = solve_l1_ball(prob);
    out.result.u_hat = out.result.report.u;
    out.result.a_hat = out.result.report.free;
    out.result.measurements_used = sys.measurements_used;
    detail::fill_reconstruction(out.result);
  }

  // Demo-grade support check: the k largest magnitudes land on the truth.
  std::vector<Index> order(static_cast<std::size_t>(cfg.n));
  for (Index i = 0; i < cfg.n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::partial_sort(order.begin(),
                    order.begin() + static_cast<std::ptrdiff_t>(out.u_star.k()),
                    order.end(), [&](Index l, Index r) {
                      return std::abs(out.result.u_hat[l]) >
                             std::abs(out.result.u_hat[r]);
                    });
  std::vector<Index> top(order.begin(),
                         order.begin() + static_cast<std::ptrdiff_t>(out.u_star.k()));
  std::sort(top.begin(), top.end());
  out.support_match = top == out.u_star.support;
  out.u_err_inf = (out.result.u_hat - out.u_star.values).lpNorm<Eigen::Infinity>();
  out.x_err_inf = (out.result.x_hat - out.x).lpNorm<Eigen::Infinity>();
  return out;
}

// --- output emission ---

enum class OutputFormat { csv, svg, both };

inline bool want_csv(OutputFormat f) { return f != OutputFormat::svg; }
inline bool want_svg(OutputFormat f) { return f != OutputFormat::csv; }

inline std::string curve_csv_text(const SuccessCurve& curve, bool approx_counts) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& pt : curve.points) {
    const Index succ = approx_counts ? pt.approx_successes : pt.exact_successes;
    const double freq =
        pt.trials > 0 ? static_cast<double>(succ) / static_cast<double>(pt.trials)
                      : 0.0;
    const auto ci = wilson_interval(succ, pt.trials);
    rows.push_back({format_stat(pt.sweep_value), std::to_string(pt.trials),
                    std::to_string(succ), format_stat(freq),
                    format_stat(ci.first), format_stat(ci.second),
                    format_stat(pt.mean_runtime_ms)});
  }
  return table_csv_text({"sweep_value", "trials", "successes", "frequency",
                         "ci_lo", "ci_hi", "mean_runtime_ms"},
                        rows);
}

inline std::string records_csv_text(const SuccessCurve& curve) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t pi = 0; pi < curve.points.size(); ++pi) {
    const auto& recs = curve.records[pi];
    for (std::size_t t = 0; t < recs.size(); ++t) {
      const auto& r = recs[t];
      rows.push_back({format_stat(curve.points[pi].sweep_value),
                      std::to_string(t), std::to_string(r.seed),
                      std::to_string(r.min_sep), std::to_string(r.exact ? 1 : 0),
                      std::to_string(r.approx ? 1 : 0), format_stat(r.u_err),
                      format_stat(r.a_err), format_stat(r.runtime_ms)});
    }
  }
  return table_csv_text({"sweep_value", "trial", "seed", "min_sep", "exact",
                         "approx", "u_err", "a_err", "runtime_ms"},
                        rows);
}

inline std::vector<std::string> emit_curves(const std::string& dir,
                                            const std::string& stem,
                                            const std::vector<SuccessCurve>& curves,
                                            OutputFormat fmt) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  if (want_csv(fmt)) {
    for (const auto& curve : curves) {
      const std::string base = dir + "/" + curve.name;
      write_text_file(base + ".csv", curve_csv_text(curve, false));
      paths.push_back(base + ".csv");
      write_text_file(base + "_approx.csv", curve_csv_text(curve, true));
      paths.push_back(base + "_approx.csv");
      write_text_file(base + "_records.csv", records_csv_text(curve));
      paths.push_back(base + "_records.csv");
    }
  }
  if (want_svg(fmt)) {
    std::vector<PlotSeries> series;
    for (const auto& curve : curves) {
      PlotSeries s;
      s.label = curve.name;
      for (const auto& pt : curve.points) {
        s.x.push_back(pt.sweep_value);
        s.y.push_back(pt.trials > 0 ? static_cast<double>(pt.exact_successes) /
                                          static_cast<double>(pt.trials)
                                    : 0.0);
      }
      series.push_back(std::move(s));
    }
    const std::string path = dir + "/" + stem + ".svg";
    write_svg_plot(path, stem, "sweep value", "success frequency", series);
    paths.push_back(path);
  }
  return paths;
}

inline std::vector<std::string> emit_trajectory(const std::string& dir,
                                                const std::string& stem,
                                                const TrajectoryRecord& rec,
                                                OutputFormat fmt) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  const Index q = rec.b_true.size();
  if (want_csv(fmt)) {
    std::vector<std::string> header{"round", "epsilon"};
    for (Index j = 0; j < q; ++j) header.push_back("b_" + std::to_string(j + 1));
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : rec.trace.rounds) {
      std::vector<std::string> row{std::to_string(r.round), format_stat(r.epsilon)};
      for (Index j = 0; j < q; ++j)
        row.push_back(j < r.b.size() ? format_full(r.b[j]) : "0");
      rows.push_back(std::move(row));
    }
    const std::string path = dir + "/" + stem + "_trajectory.csv";
    write_text_file(path, table_csv_text(header, rows));
    paths.push_back(path);
  }
  if (want_svg(fmt)) {
    std::vector<PlotSeries> series;
    for (Index j = 0; j < q; ++j) {
      PlotSeries s;
      s.label = "b_" + std::to_string(j + 1);
      for (const auto& r : rec.trace.rounds) {
        s.x.push_back(static_cast<double>(r.round));
        s.y.push_back(j < r.b.size() ? r.b[j] : 0.0);
      }
      series.push_back(std::move(s));
      PlotSeries target;
      target.label = "";
      if (!rec.trace.rounds.empty()) {
        target.x = {1.0, static_cast<double>(rec.trace.rounds.back().round)};
        target.y = {rec.b_true[j], rec.b_true[j]};
        target.dashed = true;
        series.push_back(std::move(target));
      }
    }
    const std::string path = dir + "/" + stem + ".svg";
    write_svg_plot(path, stem, "round", "coefficient value", series);
    paths.push_back(path);
  }
  return paths;
}

inline std::vector<std::string> emit_demo(const std::string& dir,
                                          const std::string& stem,
                                          const DemoRecord& rec,
                                          OutputFormat fmt) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  if (want_csv(fmt)) {
    {
      std::vector<std::vector<std::string>> rows;
      for (Index i = 0; i < rec.u_star.n; ++i)
        rows.push_back({std::to_string(i), format_full(rec.u_star.values[i]),
                        format_full(rec.result.u_hat[i])});
      const std::string path = dir + "/" + stem + "_spikes.csv";
      write_text_file(path, table_csv_text({"index", "u_star", "u_hat"}, rows));
      paths.push_back(path);
    }
    {
      std::vector<std::vector<std::string>> rows;
      for (Index i = 0; i < rec.x.size(); ++i)
        rows.push_back({std::to_string(i), format_full(rec.x[i]),
                        format_full(rec.result.x_hat[i])});
      const std::string path = dir + "/" + stem + "_signal.csv";
      write_text_file(path, table_csv_text({"index", "x", "x_hat"}, rows));
      paths.push_back(path);
    }
    {
      std::vector<std::vector<std::string>> rows;
      for (Index i = 0; i < rec.y.size(); ++i)
        rows.push_back({std::to_string(i), format_full(rec.y[i])});
      const std::string path = dir + "/" + stem + "_measurements.csv";
      write_text_file(path, table_csv_text({"index", "y"}, rows));
      paths.push_back(path);
    }
  }
  if (want_svg(fmt)) {
    PlotSeries sx, sxh;
    sx.label = "x";
    sxh.label = "x_hat";
    sxh.dashed = true;
    for (Index i = 0; i < rec.x.size(); ++i) {
      sx.x.push_back(static_cast<double>(i));
      sx.y.push_back(rec.x[i]);
      sxh.x.push_back(static_cast<double>(i));
      sxh.y.push_back(rec.result.x_hat[i]);
    }
    const std::string path = dir + "/" + stem + ".svg";
    write_svg_plot(path, stem, "sample", "signal value", {sx, sxh});
    paths.push_back(path);
  }
  return paths;
}

// --- named profiles ---

inline ExperimentConfig profile_fig2() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::arma_trajectory;
  cfg.name = "fig2";
  cfg.m = 80;
  cfg.n = 200;
  cfg.a = Vector(3);
  cfg.a << -1.9, 1.06, -0.144;
  cfg.b_true = Vector(2);
  cfg.b_true << 0.7, 1.0;
  cfg.k = 5;
  cfg.min_sep = 15;
  cfg.trials = 1;
  return cfg;
}

inline ExperimentConfig profile_fig3() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::sign_pattern;
  cfg.name = "fig3";
  cfg.n = 300;
  cfg.a = Vector(2);
  cfg.a << -1.4, 0.45;
  cfg.sweep = {2, 6, 10, 14, 18, 22, 26, 30};
  cfg.min_sep = 2;
  cfg.beta_min = 2.0;
  cfg.beta_max = 3.0;
  cfg.snr_db = 28.0;
  cfg.lambda_mult = 3.0;
  cfg.trials = 40;
  return cfg;
}

inline ExperimentConfig profile_fig4() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::reconstruction_demo;
  cfg.name = "fig4";
  cfg.m = 80;
  cfg.n = 200;
  cfg.a = Vector(3);
  cfg.a << -1.6, 0.73, -0.09;
  cfg.k = 8;
  cfg.min_sep = 20;
  cfg.sigma = std::sqrt(0.1);
  cfg.trials = 1;
  return cfg;
}

inline ExperimentConfig profile_fig5() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::success_vs_sparsity;
  cfg.name = "fig5";
  cfg.m = 50;
  cfg.n = 200;
  cfg.a = Vector(2);
  cfg.a << -1.4, 0.45;
  cfg.sweep.resize(20);
  for (Index i = 0; i < 20; ++i) cfg.sweep[static_cast<std::size_t>(i)] = i + 1;
  cfg.ensembles = {Ensemble::gaussian, Ensemble::bernoulli};
  cfg.trials = 50;
  return cfg;
}

inline ExperimentConfig profile_fig6() {
  ExperimentConfig cfg = profile_fig5();
  cfg.kind = ExperimentKind::tv_stress;
  cfg.name = "fig6";
  cfg.a = Vector::Constant(1, -1.0);
  return cfg;
}

inline ExperimentConfig profile_fig7() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::success_vs_order;
  cfg.name = "fig7";
  cfg.m = 80;
  cfg.n = 200;
  cfg.k = 10;
  cfg.sweep.resize(15);
  for (Index i = 0; i < 15; ++i) cfg.sweep[static_cast<std::size_t>(i)] = i + 1;
  cfg.ensembles = {Ensemble::gaussian, Ensemble::bernoulli};
  cfg.trials = 50;
  return cfg;
}

inline ExperimentConfig make_profile(const std::string& name) {
  if (name == "fig2") return profile_fig2();
  if (name == "fig3") return profile_fig3();
  if (name == "fig4") return profile_fig4();
  if (name == "fig5") return profile_fig5();
  if (name == "fig6") return profile_fig6();
  if (name == "fig7") return profile_fig7();
  if (name == "custom") return ExperimentConfig{};
  throw Error("unknown experiment profile: " + name);
}

/// Dispatch + emission; returns the list of files written.
inline std::vector<std::string> run_experiment(const ExperimentConfig& cfg,
                                               const std::string& out_dir,
                                               OutputFormat fmt) {
  switch (cfg.kind) {
    case ExperimentKind::success_vs_sparsity:
      return emit_curves(out_dir, cfg.name, run_success_vs_sparsity(cfg), fmt);
    case ExperimentKind::tv_stress:
      return emit_curves(out_dir, cfg.name, run_tv_stress(cfg), fmt);
    case ExperimentKind::success_vs_order:
      return emit_curves(out_dir, cfg.name, run_success_vs_order(cfg), fmt);
    case ExperimentKind::sign_pattern:
      return emit_curves(out_dir, cfg.name, run_sign_experiment(cfg), fmt);
    case ExperimentKind::arma_trajectory:
      return emit_trajectory(out_dir, cfg.name, run_arma_trajectory(cfg), fmt);
    default:
      return emit_demo(out_dir, cfg.name, run_reconstruction_demo(cfg), fmt);
  }
}

}  // namespace arspike

#endif  // ARSPIKE_EXPERIMENTS_HPP
