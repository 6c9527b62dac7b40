#ifndef ARSPIKE_CLI_HPP
#define ARSPIKE_CLI_HPP

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "arspike/csv.hpp"
#include "arspike/decoder.hpp"
#include "arspike/experiments.hpp"
#include "arspike/verify.hpp"

namespace arspike {

inline constexpr const char* kToolVersion = "1.0.0";

namespace cli_detail {

using nlohmann::json;

inline Vector parse_coeff_list(const std::string& text) {
  if (text.empty()) return Vector();
  const auto toks = detail::split(text, ',');
  Vector v(static_cast<Index>(toks.size()));
  for (std::size_t i = 0; i < toks.size(); ++i)
    v[static_cast<Index>(i)] = detail::parse_double(toks[i], "coefficient list");
  return v;
}

inline std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Vector from_std(const std::vector<double>& v) {
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Index>(i)] = v[i];
  return out;
}

inline SignMode parse_sign_mode(const std::string& s) {
  if (s == "bernoulli") return SignMode::bernoulli;
  if (s == "all_positive" || s == "all-positive") return SignMode::all_positive;
  throw Error("unknown sign mode: " + s);
}

inline std::string to_string(SignMode m) {
  return m == SignMode::bernoulli ? "bernoulli" : "all_positive";
}

inline Structure parse_structure(const std::string& s) {
  if (s == "toeplitz") return Structure::toeplitz;
  if (s == "circulant") return Structure::circulant;
  if (s == "dense") return Structure::dense;
  throw Error("unknown structure: " + s);
}

inline Ensemble parse_ensemble(const std::string& s) {
  if (s == "gaussian") return Ensemble::gaussian;
  if (s == "bernoulli") return Ensemble::bernoulli;
  throw Error("unknown ensemble: " + s);
}

inline ExperimentKind parse_kind(const std::string& s) {
  if (s == "success_vs_sparsity") return ExperimentKind::success_vs_sparsity;
  if (s == "tv_stress") return ExperimentKind::tv_stress;
  if (s == "success_vs_order") return ExperimentKind::success_vs_order;
  if (s == "sign_pattern") return ExperimentKind::sign_pattern;
  if (s == "arma_trajectory") return ExperimentKind::arma_trajectory;
  if (s == "reconstruction_demo") return ExperimentKind::reconstruction_demo;
  throw Error("unknown experiment kind: " + s);
}

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "svg") return OutputFormat::svg;
  if (s == "both") return OutputFormat::both;
  throw Error("unknown format: " + s + " (expected csv, svg, or both)");
}

inline std::string to_string(OutputFormat f) {
  return f == OutputFormat::csv ? "csv" : (f == OutputFormat::svg ? "svg" : "both");
}

inline json schedule_to_json(const EpsilonSchedule& s) {
  json out = json::array();
  for (const auto& stage : s)
    out.push_back(json::array({stage.epsilon, stage.rounds}));
  return out;
}

inline EpsilonSchedule schedule_from_json(const json& j) {
  EpsilonSchedule out;
  for (const auto& stage : j)
    out.push_back({stage.at(0).get<double>(), stage.at(1).get<Index>()});
  return out;
}

inline EpsilonSchedule parse_schedule_flag(const std::string& text) {
  EpsilonSchedule out;
  for (const auto& part : detail::split(text, ',')) {
    const auto bits = detail::split(part, ':');
    if (bits.size() != 2)
      throw Error("bad schedule entry '" + part + "' (expected eps:rounds)");
    out.push_back({detail::parse_double(bits[0], "schedule"),
                   static_cast<Index>(detail::parse_int(bits[1], "schedule"))});
  }
  return out;
}

inline json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["kind"] = arspike::to_string(cfg.kind);
  j["name"] = cfg.name;
  j["m"] = cfg.m;
  j["n"] = cfg.n;
  j["a"] = to_std(cfg.a);
  j["b"] = to_std(cfg.b_true);
  j["sweep"] = cfg.sweep;
  j["k"] = cfg.k;
  j["min_sep"] = cfg.min_sep;
  j["beta_min"] = cfg.beta_min;
  j["beta_max"] = cfg.beta_max;
  j["sign_mode"] = to_string(cfg.sign_mode);
  j["structure"] = arspike::to_string(cfg.structure);
  json ens = json::array();
  for (Ensemble e : cfg.ensembles) ens.push_back(arspike::to_string(e));
  j["ensembles"] = ens;
  j["sigma"] = cfg.sigma;
  j["snr_db"] = cfg.snr_db;
  j["lambda"] = cfg.lambda;
  j["lambda_mult"] = cfg.lambda_mult;
  j["epsilon"] = cfg.epsilon;
  j["schedule"] = schedule_to_json(cfg.schedule);
  j["trials"] = cfg.trials;
  j["seed"] = cfg.base_seed;
  j["threads"] = cfg.threads;
  return j;
}

/// Overlays the keys present in j onto cfg; absent keys keep their values.
inline void config_from_json(const json& j, ExperimentConfig& cfg) {
  if (j.contains("kind")) cfg.kind = parse_kind(j["kind"].get<std::string>());
  if (j.contains("name")) cfg.name = j["name"].get<std::string>();
  if (j.contains("m")) cfg.m = j["m"].get<Index>();
  if (j.contains("n")) cfg.n = j["n"].get<Index>();
  if (j.contains("a")) cfg.a = from_std(j["a"].get<std::vector<double>>());
  if (j.contains("b")) cfg.b_true = from_std(j["b"].get<std::vector<double>>());
  if (j.contains("sweep")) cfg.sweep = j["sweep"].get<std::vector<Index>>();
  if (j.contains("k")) cfg.k = j["k"].get<Index>();
  if (j.contains("min_sep")) cfg.min_sep = j["min_sep"].get<Index>();
  if (j.contains("beta_min")) cfg.beta_min = j["beta_min"].get<double>();
  if (j.contains("beta_max")) cfg.beta_max = j["beta_max"].get<double>();
  if (j.contains("sign_mode"))
    cfg.sign_mode = parse_sign_mode(j["sign_mode"].get<std::string>());
  if (j.contains("structure"))
    cfg.structure = parse_structure(j["structure"].get<std::string>());
  if (j.contains("ensembles")) {
    cfg.ensembles.clear();
    for (const auto& e : j["ensembles"])
      cfg.ensembles.push_back(parse_ensemble(e.get<std::string>()));
  }
  if (j.contains("sigma")) cfg.sigma = j["sigma"].get<double>();
  if (j.contains("snr_db")) cfg.snr_db = j["snr_db"].get<double>();
  if (j.contains("lambda")) cfg.lambda = j["lambda"].get<double>();
  if (j.contains("lambda_mult")) cfg.lambda_mult = j["lambda_mult"].get<double>();
  if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
  if (j.contains("schedule")) cfg.schedule = schedule_from_json(j["schedule"]);
  if (j.contains("trials")) cfg.trials = j["trials"].get<Index>();
  if (j.contains("seed")) cfg.base_seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<Index>();
}

inline SensingOperator sensing_from_csv(const CsvMatrix& c) {
  SensingOperator G;
  G.entries = c.values;
  G.m = c.values.rows();
  G.n = c.values.cols();
  G.seed = c.seed;
  G.structure = Structure::dense;
  G.ensemble = Ensemble::gaussian;
  const auto toks = detail::split(c.kind, '-');
  if (!toks.empty()) {
    if (toks[0] == "toeplitz") G.structure = Structure::toeplitz;
    else if (toks[0] == "circulant") G.structure = Structure::circulant;
  }
  if (toks.size() > 1 && toks[1] == "bernoulli") G.ensemble = Ensemble::bernoulli;
  return G;
}

inline SpikeTrain spike_train_from_vector(const Vector& v) {
  SpikeTrain u;
  u.n = v.size();
  u.values = v;
  for (Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) u.support.push_back(i);
  return u;
}

struct ExecResult {
  int exit_code = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

inline void ensure_dir(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

inline ExecResult execute_synth(const json& params, const std::string& out_dir) {
  ExecResult r;
  ensure_dir(out_dir);
  const Index n = params.at("n").get<Index>();
  const Index k = params.at("k").get<Index>();
  const Index min_sep = params.at("min_sep").get<Index>();
  const double bmin = params.at("beta_min").get<double>();
  const double bmax = params.at("beta_max").get<double>();
  const SignMode mode = parse_sign_mode(params.at("sign_mode").get<std::string>());
  const std::uint64_t seed = params.at("seed").get<std::uint64_t>();
  const Vector a = from_std(params.at("a").get<std::vector<double>>());

  const SpikeTrain u = make_spike_train(n, k, min_sep, bmin, bmax, mode, seed);
  write_text_file(out_dir + "/spikes.csv", spikes_csv_text(u));
  r.outputs.push_back(out_dir + "/spikes.csv");
  write_vector_csv(out_dir + "/u.csv", u.values, "spikes", seed);
  r.outputs.push_back(out_dir + "/u.csv");
  if (a.size() > 0) {
    const ArModel model{a};
    if (!model.is_stable())
      std::cout << "note: model is unstable; forward propagation may grow\n";
    const Vector x = ar_forward(model, u.values);
    write_vector_csv(out_dir + "/x.csv", x, "signal", seed);
    r.outputs.push_back(out_dir + "/x.csv");
  }
  std::cout << "synth: n=" << n << " k=" << u.k() << " min_sep=" << min_sep
            << " -> " << out_dir << "\n";
  return r;
}

inline ExecResult execute_sense(const json& params, const std::string& out_dir) {
  ExecResult r;
  ensure_dir(out_dir);
  const std::string x_path = params.at("x_path").get<std::string>();
  const Structure structure =
      parse_structure(params.at("structure").get<std::string>());
  const Ensemble ensemble =
      parse_ensemble(params.at("ensemble").get<std::string>());
  const Index m = params.at("m").get<Index>();
  const double sigma = params.at("sigma").get<double>();
  const std::uint64_t seed = params.at("seed").get<std::uint64_t>();

  const Vector x = read_vector_csv(x_path);
  r.inputs.push_back(x_path);
  const SensingOperator G = build_sensing(structure, ensemble, m, x.size(), seed);
  Vector y = apply(G, x);
  if (sigma > 0.0) y = add_noise(y, sigma, derive_seed(seed, 1));
  write_matrix_csv(out_dir + "/G.csv", G.entries, G.kind_string(), seed);
  r.outputs.push_back(out_dir + "/G.csv");
  write_vector_csv(out_dir + "/y.csv", y, "measurements", seed);
  r.outputs.push_back(out_dir + "/y.csv");
  std::cout << "sense: " << G.kind_string() << " " << m << "x" << x.size()
            << " sigma=" << sigma << " -> " << out_dir << "\n";
  return r;
}

inline ExecResult execute_decode(const json& params, const std::string& out_dir) {
  ExecResult r;
  ensure_dir(out_dir);
  const std::string variant = params.at("variant").get<std::string>();
  const std::string y_path = params.at("y_path").get<std::string>();
  const Index p = params.at("p").get<Index>();
  const Vector y = read_vector_csv(y_path);
  r.inputs.push_back(y_path);

  std::optional<SensingOperator> G;
  if (params.contains("G_path") && !params["G_path"].get<std::string>().empty()) {
    const std::string g_path = params["G_path"].get<std::string>();
    G = sensing_from_csv(read_matrix_csv(g_path));
    r.inputs.push_back(g_path);
  }

  DecodeResult res;
  if (variant == "compressed") {
    if (!G) throw Error("decode compressed: --G is required");
    const DecodeMode mode = params.at("mode").get<std::string>() == "projected"
                                ? DecodeMode::projected
                                : DecodeMode::joint;
    res = decode_ar_compressed(y, *G, p, mode);
  } else if (variant == "blind") {
    res = decode_blind(y, p, params.at("lambda").get<double>());
  } else if (variant == "arma") {
    if (!G) throw Error("decode arma: --G is required");
    const Index q = params.at("q").get<Index>();
    const EpsilonSchedule schedule = schedule_from_json(params.at("schedule"));
    res = decode_arma_iterative(y, *G, p, q, schedule);
  } else if (variant == "noncausal") {
    if (!G) throw Error("decode noncausal: --G is required");
    const Boundary boundary =
        params.at("boundary").get<std::string>() == "circulant"
            ? Boundary::circulant
            : Boundary::open;
    std::optional<BoundaryValues> bv;
    if (params.contains("boundary_path") &&
        !params["boundary_path"].get<std::string>().empty()) {
      const std::string bpath = params["boundary_path"].get<std::string>();
      const Vector vals = read_vector_csv(bpath);
      r.inputs.push_back(bpath);
      if (vals.size() != 2 * p)
        throw MissingBoundaryError("boundary file must hold 2p values");
      bv = BoundaryValues{vals.head(p), vals.tail(p)};
    }
    res = decode_noncausal(y, *G, p, boundary, bv,
                           params.at("lambda").get<double>(),
                           params.at("exact_open").get<bool>());
  } else {
    throw Error("unknown decode variant: " + variant);
  }

  write_vector_csv(out_dir + "/u_hat.csv", res.u_hat, "u_hat", 0);
  r.outputs.push_back(out_dir + "/u_hat.csv");
  if (res.a_hat.size() > 0) {
    write_vector_csv(out_dir + "/a_hat.csv", res.a_hat, "a_hat", 0);
    r.outputs.push_back(out_dir + "/a_hat.csv");
  }
  if (res.b_hat && res.b_hat->size() > 0) {
    write_vector_csv(out_dir + "/b_hat.csv", *res.b_hat, "b_hat", 0);
    r.outputs.push_back(out_dir + "/b_hat.csv");
  }
  write_vector_csv(out_dir + "/x_hat.csv", res.x_hat, "x_hat", 0);
  r.outputs.push_back(out_dir + "/x_hat.csv");

  const char* status =
      res.report.status == SolveStatus::optimal
          ? "optimal"
          : (res.report.status == SolveStatus::infeasible ? "infeasible"
                                                          : "max_iter");
  const double uthresh =
      1e-6 * std::max(res.u_hat.lpNorm<Eigen::Infinity>(), 1e-300);
  Index nonzeros = 0;
  for (Index i = 0; i < res.u_hat.size(); ++i)
    if (std::abs(res.u_hat[i]) > uthresh) ++nonzeros;
  std::cout << "decode " << variant << ": status=" << status
            << " objective=" << format_stat(res.report.objective)
            << " residual=" << format_stat(res.report.residual_norm)
            << " nonzeros=" << nonzeros
            << (res.a_stable ? "" : " (unstable a_hat)") << "\n";
  return r;
}

inline ExecResult execute_verify_doc(const json& params,
                                     const std::string& out_dir) {
  ExecResult r;
  const std::string y_path = params.at("y_path").get<std::string>();
  const std::string g_path = params.at("G_path").get<std::string>();
  const std::string u_path = params.at("u_path").get<std::string>();
  const Index p = params.at("p").get<Index>();
  const Vector y = read_vector_csv(y_path);
  const SensingOperator G = sensing_from_csv(read_matrix_csv(g_path));
  const Vector u = read_vector_csv(u_path);
  r.inputs = {y_path, g_path, u_path};

  const RegressorSystem sys = build_regressor_compressed(y, G, p);
  const double thresh = 1e-6 * std::max(u.lpNorm<Eigen::Infinity>(), 1e-300);
  std::vector<Index> support;
  std::vector<double> signs;
  for (Index i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) > thresh) {
      support.push_back(i);
      signs.push_back(u[i] > 0 ? 1.0 : -1.0);
    }
  }
  const DocCertificate cert = check_doc(sys.Gsub, sys.Y, support, signs);

  const char* status = "solver_failure";
  switch (cert.status) {
    case DocCertificate::Status::feasible: status = "feasible"; break;
    case DocCertificate::Status::off_support_too_large:
      status = "off_support_too_large";
      break;
    case DocCertificate::Status::equality_infeasible:
      status = "equality_infeasible";
      break;
    default: break;
  }
  std::cout << "doc: status=" << status
            << " off_support_max=" << format_stat(cert.off_support_max)
            << " support_residual="
            << format_stat(cert.support_equalities_residual)
            << " null_residual=" << format_stat(cert.null_residual) << "\n";

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    json rec;
    rec["status"] = status;
    rec["feasible"] = cert.feasible;
    rec["off_support_max"] = cert.off_support_max;
    rec["support_equalities_residual"] = cert.support_equalities_residual;
    rec["null_residual"] = cert.null_residual;
    rec["support"] = support;
    rec["pi"] = to_std(cert.pi);
    write_text_file(out_dir + "/doc_certificate.json", rec.dump(2) + "\n");
    r.outputs.push_back(out_dir + "/doc_certificate.json");
  }
  r.exit_code = cert.feasible ? 0 : 1;
  return r;
}

inline ExecResult execute_verify_thm1(const json& params,
                                      const std::string& out_dir) {
  ExecResult r;
  const Vector a = from_std(params.at("a").get<std::vector<double>>());
  const std::string u_path = params.at("u_path").get<std::string>();
  const Index S = params.at("S").get<Index>();
  r.inputs = {u_path};
  const SpikeTrain u = spike_train_from_vector(read_vector_csv(u_path));
  const AssumptionReport rep = check_theorem1_assumptions(ArModel{a}, u, S);

  std::cout << "thm1: all_pass=" << (rep.all_pass ? "yes" : "no")
            << " l_required=" << format_stat(rep.l_required)
            << " l_actual=" << format_stat(rep.l_actual)
            << " M=" << format_stat(rep.M) << " rho=" << format_stat(rep.rho)
            << " k=" << rep.k << " sparsity_bound="
            << format_stat(rep.sparsity_bound) << "\n";

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    json rec;
    rec["p"] = rep.p;
    rec["M"] = rep.M;
    rec["rho"] = rep.rho;
    rec["l_required"] = rep.l_required;
    rec["l_actual"] = rep.l_actual;
    rec["separation_ok"] = rep.separation_ok;
    rec["beta_min"] = rep.beta_min;
    rec["beta_max"] = rep.beta_max;
    rec["amplitudes_ok"] = rep.amplitudes_ok;
    rec["k"] = rep.k;
    rec["sparsity_bound"] = rep.sparsity_bound;
    rec["sparsity_ok"] = rep.sparsity_ok;
    rec["r_value"] = rep.r_value;
    rec["r_bound"] = rep.r_bound;
    rec["r_check_applicable"] = rep.r_check_applicable;
    rec["r_ok"] = rep.r_ok;
    rec["envelope_ok"] = rep.envelope_ok;
    rec["all_pass"] = rep.all_pass;
    write_text_file(out_dir + "/thm1_report.json", rec.dump(2) + "\n");
    r.outputs.push_back(out_dir + "/thm1_report.json");
  }
  return r;
}

inline ExecResult execute_verify_thm2(const json& params,
                                      const std::string& out_dir) {
  ExecResult r;
  const std::string x_path = params.at("x_path").get<std::string>();
  const std::string u_path = params.at("u_path").get<std::string>();
  const double sigma = params.at("sigma").get<double>();
  const double lambda = params.at("lambda").get<double>();
  const Vector a = from_std(params.at("a").get<std::vector<double>>());
  r.inputs = {x_path, u_path};
  const Vector x = read_vector_csv(x_path);
  const Vector u = read_vector_csv(u_path);
  const Theorem2Conditions rep =
      check_theorem2_conditions(x, u, sigma, lambda, ArModel{a});

  std::cout << "thm2: all_pass=" << (rep.all_pass ? "yes" : "no")
            << " cond1=" << rep.cond1 << " cond2=" << rep.cond2
            << " cond3=" << rep.cond3 << " lambda_ok=" << rep.lambda_ok
            << " u_min_ok=" << rep.u_min_ok
            << " c_implied=" << format_stat(rep.c_implied) << "\n";

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    json rec;
    rec["lambda_min_X2"] = rep.lambda_min_X2;
    rec["x_norm_sq"] = rep.x_norm_sq;
    rec["c_implied"] = rep.c_implied;
    rec["noise_floor"] = rep.noise_floor;
    rec["cond1"] = rep.cond1;
    rec["x1_sgn_inf"] = rep.x1_sgn_inf;
    rec["cond2_bound"] = rep.cond2_bound;
    rec["cond2"] = rep.cond2;
    rec["x_max"] = rep.x_max;
    rec["cond3_snr_bound"] = rep.cond3_snr_bound;
    rec["ratio"] = rep.ratio;
    rec["ratio_bound"] = rep.ratio_bound;
    rec["cond3"] = rep.cond3;
    rec["lambda"] = rep.lambda;
    rec["lambda_bound"] = rep.lambda_bound;
    rec["lambda_ok"] = rep.lambda_ok;
    rec["u_min"] = rep.u_min;
    rec["u_min_ok"] = rep.u_min_ok;
    rec["all_pass"] = rep.all_pass;
    write_text_file(out_dir + "/thm2_report.json", rec.dump(2) + "\n");
    r.outputs.push_back(out_dir + "/thm2_report.json");
  }
  return r;
}

inline ExecResult execute_verify_rip(const json& params,
                                     const std::string& out_dir) {
  ExecResult r;
  const std::string g_path = params.at("G_path").get<std::string>();
  const Index S = params.at("S").get<Index>();
  const Index trials = params.at("trials").get<Index>();
  const std::uint64_t seed = params.at("seed").get<std::uint64_t>();
  const bool force_sampled = params.at("force_sampled").get<bool>();
  r.inputs = {g_path};
  const CsvMatrix mat = read_matrix_csv(g_path);
  const RipEstimate est =
      estimate_rip(mat.values, S, trials, seed, force_sampled);

  std::cout << "rip: S=" << est.S << " delta_lower="
            << format_stat(est.delta_lower) << " method="
            << (est.method == RipEstimate::Method::exhaustive ? "exhaustive"
                                                              : "sampled")
            << " trials=" << est.trials << "\n";

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    json rec;
    rec["S"] = est.S;
    rec["delta_lower"] = est.delta_lower;
    rec["trials"] = est.trials;
    rec["method"] = est.method == RipEstimate::Method::exhaustive
                        ? "exhaustive"
                        : "sampled";
    write_text_file(out_dir + "/rip_estimate.json", rec.dump(2) + "\n");
    r.outputs.push_back(out_dir + "/rip_estimate.json");
  }
  return r;
}

inline ExecResult execute_experiment(const json& params,
                                     const std::string& out_dir) {
  ExecResult r;
  ExperimentConfig cfg;
  config_from_json(params.at("config"), cfg);
  const OutputFormat fmt = parse_format(params.at("format").get<std::string>());
  r.outputs = run_experiment(cfg, out_dir, fmt);
  std::cout << "experiment " << cfg.name << ": " << r.outputs.size()
            << " files -> " << out_dir << "\n";
  return r;
}

inline ExecResult dispatch(const std::string& sub, const json& params,
                           const std::string& out_dir) {
  if (sub == "synth") return execute_synth(params, out_dir);
  if (sub == "sense") return execute_sense(params, out_dir);
  if (sub == "decode") return execute_decode(params, out_dir);
  if (sub == "verify doc") return execute_verify_doc(params, out_dir);
  if (sub == "verify thm1") return execute_verify_thm1(params, out_dir);
  if (sub == "verify thm2") return execute_verify_thm2(params, out_dir);
  if (sub == "verify rip") return execute_verify_rip(params, out_dir);
  if (sub == "experiment") return execute_experiment(params, out_dir);
  throw Error("cannot replay subcommand: " + sub);
}

inline void write_manifest(const std::string& out_dir, const std::string& sub,
                           const json& params, std::uint64_t seed,
                           const ExecResult& r, double total_ms) {
  if (out_dir.empty()) return;
  ensure_dir(out_dir);
  json man;
  man["tool"] = "arspike";
  man["version"] = kToolVersion;
  man["subcommand"] = sub;
  man["seed"] = seed;
  man["params"] = params;
  man["inputs"] = r.inputs;
  man["outputs"] = r.outputs;
  man["timings_ms"] = {{"total", total_ms}};
  write_text_file(out_dir + "/manifest.json", man.dump(2) + "\n");
}

/// Runs one resolved subcommand and records the manifest beside its outputs.
inline int run_and_record(const std::string& sub, const json& params,
                          const std::string& out_dir, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  ExecResult r = dispatch(sub, params, out_dir);
  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
  write_manifest(out_dir, sub, params, seed, r, ms);
  return r.exit_code;
}

inline json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  return json::parse(read_text_file(path));
}

/// Pulls a scalar default from the config file when the flag was not
/// given on the command line.
template <typename T>
inline void config_default(const json& cfg, const std::string& key,
                           const CLI::Option* opt, T& value) {
  if (opt && opt->count() > 0) return;
  if (cfg.contains(key)) value = cfg[key].get<T>();
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
  using cli_detail::json;
  CLI::App app{"sparse spike-train recovery over autoregressive models"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "show diagnostic detail on errors");

  std::string config_path, out_dir, format_str = "both";
  std::uint64_t seed = 1;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a spike train and AR signal");
  Index sy_n = 200, sy_k = 8, sy_sep = 10;
  double sy_bmin = 1.0, sy_bmax = 2.0;
  std::string sy_sign = "bernoulli", sy_a;
  auto* sy_n_o = synth->add_option("--n", sy_n, "signal length");
  auto* sy_k_o = synth->add_option("--k", sy_k, "spike count");
  auto* sy_sep_o = synth->add_option("--min-sep", sy_sep, "minimum spike gap");
  auto* sy_bmin_o = synth->add_option("--beta-min", sy_bmin, "amplitude lower bound");
  auto* sy_bmax_o = synth->add_option("--beta-max", sy_bmax, "amplitude upper bound");
  auto* sy_sign_o = synth->add_option("--sign-mode", sy_sign, "bernoulli | all_positive");
  auto* sy_a_o = synth->add_option("--a", sy_a, "AR coefficients, comma separated");
  synth->add_option("--config", config_path, "JSON config file");
  auto* sy_seed_o = synth->add_option("--seed", seed, "base seed");
  synth->add_option("--out", out_dir, "output directory");

  // sense
  auto* sense = app.add_subcommand("sense", "measure a signal with a random operator");
  std::string se_x, se_structure = "toeplitz", se_ensemble = "gaussian";
  Index se_m = 50;
  double se_sigma = 0.0;
  sense->add_option("--x", se_x, "input signal CSV")->required();
  auto* se_st_o = sense->add_option("--structure", se_structure, "toeplitz | circulant | dense");
  auto* se_en_o = sense->add_option("--ensemble", se_ensemble, "gaussian | bernoulli");
  auto* se_m_o = sense->add_option("--m", se_m, "measurement count");
  auto* se_sg_o = sense->add_option("--sigma", se_sigma, "noise level");
  sense->add_option("--config", config_path, "JSON config file");
  auto* se_seed_o = sense->add_option("--seed", seed, "base seed");
  sense->add_option("--out", out_dir, "output directory");

  // decode
  auto* decode = app.add_subcommand("decode", "recover spikes and coefficients");
  std::string de_y, de_g, de_variant = "compressed", de_mode = "joint";
  std::string de_boundary = "circulant", de_schedule = "3:50,0.3:10", de_bvals;
  Index de_p = 2, de_q = 0;
  double de_lambda = 1e-3;
  bool de_exact_open = false;
  decode->add_option("--y", de_y, "measurement CSV")->required();
  decode->add_option("--G", de_g, "sensing matrix CSV");
  decode->add_option("--p", de_p, "model order")->required();
  decode->add_option("--variant", de_variant,
                     "compressed | blind | arma | noncausal");
  decode->add_option("--mode", de_mode, "joint | projected");
  decode->add_option("--lambda", de_lambda, "penalty for blind/noncausal");
  decode->add_option("--q", de_q, "MA order for arma");
  decode->add_option("--schedule", de_schedule, "eps:rounds[,eps:rounds...]");
  decode->add_option("--boundary", de_boundary, "circulant | open");
  decode->add_flag("--exact-open", de_exact_open, "use boundary values exactly");
  decode->add_option("--boundary-values", de_bvals, "CSV with 2p boundary samples");
  decode->add_option("--config", config_path, "JSON config file");
  decode->add_option("--out", out_dir, "output directory");

  // verify
  auto* verify = app.add_subcommand("verify", "run certificates and validators");
  verify->require_subcommand(1);
  std::string vf_instance, vf_y, vf_g, vf_u, vf_x, vf_a;
  Index vf_p = 2, vf_S = 20, vf_trials = 2000, vf_horizon = 400;
  double vf_sigma = 0.0, vf_lambda = 0.0;
  bool vf_force_sampled = false;

  auto* vdoc = verify->add_subcommand("doc", "dual optimality certificate");
  vdoc->add_option("--instance", vf_instance, "decode output directory");
  vdoc->add_option("--y", vf_y, "measurement CSV");
  vdoc->add_option("--G", vf_g, "sensing matrix CSV");
  vdoc->add_option("--u", vf_u, "spike vector CSV");
  auto* vdoc_p = vdoc->add_option("--p", vf_p, "model order");
  vdoc->add_option("--out", out_dir, "output directory");

  auto* vthm1 = verify->add_subcommand("thm1", "recovery assumptions report");
  vthm1->add_option("--a", vf_a, "AR coefficients, comma separated")->required();
  vthm1->add_option("--u", vf_u, "spike vector CSV")->required();
  vthm1->add_option("--S", vf_S, "RIP sparsity level");
  vthm1->add_option("--horizon", vf_horizon, "envelope horizon");
  vthm1->add_option("--out", out_dir, "output directory");

  auto* vthm2 = verify->add_subcommand("thm2", "blind deconvolution conditions");
  vthm2->add_option("--x", vf_x, "signal CSV")->required();
  vthm2->add_option("--u", vf_u, "spike vector CSV")->required();
  vthm2->add_option("--sigma", vf_sigma, "noise level")->required();
  vthm2->add_option("--lambda", vf_lambda, "penalty")->required();
  vthm2->add_option("--a", vf_a, "AR coefficients, comma separated")->required();
  vthm2->add_option("--out", out_dir, "output directory");

  auto* vrip = verify->add_subcommand("rip", "restricted isometry estimate");
  vrip->add_option("--G", vf_g, "sensing matrix CSV")->required();
  vrip->add_option("--S", vf_S, "support size");
  vrip->add_option("--trials", vf_trials, "sampled supports");
  vrip->add_option("--seed", seed, "sampling seed");
  vrip->add_flag("--force-sampled", vf_force_sampled, "skip exhaustive mode");
  vrip->add_option("--out", out_dir, "output directory");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "run a figure profile");
  std::string ex_profile = "custom";
  Index ex_trials = -1, ex_threads = -1;
  experiment->add_option("--profile", ex_profile,
                         "fig2 | fig3 | fig4 | fig5 | fig6 | fig7 | custom");
  experiment->add_option("--config", config_path, "JSON config overrides");
  auto* ex_seed_o = experiment->add_option("--seed", seed, "base seed");
  experiment->add_option("--trials", ex_trials, "override trials per point");
  experiment->add_option("--threads", ex_threads, "worker threads (0 = auto)");
  experiment->add_option("--out", out_dir, "output root (default: out)");
  experiment->add_option("--format", format_str, "csv | svg | both");

  // replay
  auto* replay = app.add_subcommand("replay", "re-run a recorded manifest");
  std::string rp_manifest;
  replay->add_option("--manifest", rp_manifest, "manifest.json path")->required();
  replay->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const json file_cfg = cli_detail::load_config_file(config_path);

    if (synth->parsed()) {
      cli_detail::config_default(file_cfg, "n", sy_n_o, sy_n);
      cli_detail::config_default(file_cfg, "k", sy_k_o, sy_k);
      cli_detail::config_default(file_cfg, "min_sep", sy_sep_o, sy_sep);
      cli_detail::config_default(file_cfg, "beta_min", sy_bmin_o, sy_bmin);
      cli_detail::config_default(file_cfg, "beta_max", sy_bmax_o, sy_bmax);
      cli_detail::config_default(file_cfg, "sign_mode", sy_sign_o, sy_sign);
      cli_detail::config_default(file_cfg, "seed", sy_seed_o, seed);
      json params;
      params["n"] = sy_n;
      params["k"] = sy_k;
      params["min_sep"] = sy_sep;
      params["beta_min"] = sy_bmin;
      params["beta_max"] = sy_bmax;
      params["sign_mode"] = sy_sign;
      Vector a = cli_detail::parse_coeff_list(sy_a);
      if (sy_a_o->count() == 0 && file_cfg.contains("a"))
        a = cli_detail::from_std(file_cfg["a"].get<std::vector<double>>());
      params["a"] = cli_detail::to_std(a);
      params["seed"] = seed;
      const std::string dir = out_dir.empty() ? "." : out_dir;
      return cli_detail::run_and_record("synth", params, dir, seed);
    }

    if (sense->parsed()) {
      cli_detail::config_default(file_cfg, "structure", se_st_o, se_structure);
      cli_detail::config_default(file_cfg, "ensemble", se_en_o, se_ensemble);
      cli_detail::config_default(file_cfg, "m", se_m_o, se_m);
      cli_detail::config_default(file_cfg, "sigma", se_sg_o, se_sigma);
      cli_detail::config_default(file_cfg, "seed", se_seed_o, seed);
      json params;
      params["x_path"] = se_x;
      params["structure"] = se_structure;
      params["ensemble"] = se_ensemble;
      params["m"] = se_m;
      params["sigma"] = se_sigma;
      params["seed"] = seed;
      const std::string dir = out_dir.empty() ? "." : out_dir;
      return cli_detail::run_and_record("sense", params, dir, seed);
    }

    if (decode->parsed()) {
      json params;
      params["variant"] = de_variant;
      params["y_path"] = de_y;
      params["G_path"] = de_g;
      params["p"] = de_p;
      params["mode"] = de_mode;
      params["lambda"] = de_lambda;
      params["q"] = de_q;
      params["schedule"] =
          cli_detail::schedule_to_json(cli_detail::parse_schedule_flag(de_schedule));
      params["boundary"] = de_boundary;
      params["exact_open"] = de_exact_open;
      params["boundary_path"] = de_bvals;
      const std::string dir = out_dir.empty() ? "." : out_dir;
      return cli_detail::run_and_record("decode", params, dir, 0);
    }

    if (vdoc->parsed()) {
      std::string y_path = vf_y, g_path = vf_g, u_path = vf_u;
      Index p = vf_p;
      if (!vf_instance.empty()) {
        const json man = json::parse(
            read_text_file(vf_instance + "/manifest.json"));
        const json& mp = man.at("params");
        if (y_path.empty()) y_path = mp.at("y_path").get<std::string>();
        if (g_path.empty()) g_path = mp.at("G_path").get<std::string>();
        if (vdoc_p->count() == 0) p = mp.at("p").get<Index>();
        if (u_path.empty()) {
          const std::string star = vf_instance + "/u_star.csv";
          u_path = std::filesystem::exists(star) ? star
                                                 : vf_instance + "/u_hat.csv";
        }
      }
      if (y_path.empty() || g_path.empty() || u_path.empty())
        throw Error("verify doc needs --instance or --y/--G/--u");
      json params;
      params["y_path"] = y_path;
      params["G_path"] = g_path;
      params["u_path"] = u_path;
      params["p"] = p;
      return cli_detail::run_and_record("verify doc", params, out_dir, 0);
    }

    if (vthm1->parsed()) {
      json params;
      params["a"] = cli_detail::to_std(cli_detail::parse_coeff_list(vf_a));
      params["u_path"] = vf_u;
      params["S"] = vf_S;
      params["horizon"] = vf_horizon;
      return cli_detail::run_and_record("verify thm1", params, out_dir, 0);
    }

    if (vthm2->parsed()) {
      json params;
      params["x_path"] = vf_x;
      params["u_path"] = vf_u;
      params["sigma"] = vf_sigma;
      params["lambda"] = vf_lambda;
      params["a"] = cli_detail::to_std(cli_detail::parse_coeff_list(vf_a));
      return cli_detail::run_and_record("verify thm2", params, out_dir, 0);
    }

    if (vrip->parsed()) {
      json params;
      params["G_path"] = vf_g;
      params["S"] = vf_S;
      params["trials"] = vf_trials;
      params["seed"] = seed;
      params["force_sampled"] = vf_force_sampled;
      return cli_detail::run_and_record("verify rip", params, out_dir, 0);
    }

    if (experiment->parsed()) {
      ExperimentConfig cfg = make_profile(ex_profile);
      cli_detail::config_from_json(file_cfg, cfg);
      if (ex_seed_o->count() > 0) cfg.base_seed = seed;
      if (ex_trials >= 1) cfg.trials = ex_trials;
      if (ex_threads >= 0) cfg.threads = ex_threads;
      json params;
      params["config"] = cli_detail::config_to_json(cfg);
      params["format"] = format_str;
      const std::string root = out_dir.empty() ? "out" : out_dir;
      return cli_detail::run_and_record("experiment", params,
                                        root + "/" + cfg.name, cfg.base_seed);
    }

    if (replay->parsed()) {
      const json man = json::parse(read_text_file(rp_manifest));
      return cli_detail::run_and_record(
          man.at("subcommand").get<std::string>(), man.at("params"), out_dir,
          man.value("seed", std::uint64_t{0}));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (verbose) std::cerr << "type: " << typeid(e).name() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace arspike

#endif  // ARSPIKE_CLI_HPP
