#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "arspike/decoder.hpp"
#include "arspike/verify.hpp"

using namespace arspike;

TEST_CASE("dual certificate confirms a successful compressed decode") {
  Vector a(2);
  a << -1.4, 0.45;
  const SpikeTrain u =
      make_spike_train(60, 3, 10, 1.0, 2.0, SignMode::bernoulli, 5);
  const Vector x = ar_forward(ArModel{a}, u.values);
  const SensingOperator G =
      build_sensing(Structure::toeplitz, Ensemble::gaussian, 40, 60, 2);
  const Vector y = apply(G, x);
  const RegressorSystem sys = build_regressor_compressed(y, G, 2);

  std::vector<double> signs;
  for (Index i : u.support) signs.push_back(u.values[i] > 0 ? 1.0 : -1.0);
  const DocCertificate cert = check_doc(sys.Gsub, sys.Y, u.support, signs);

  REQUIRE(cert.feasible);
  REQUIRE(cert.status == DocCertificate::Status::feasible);
  REQUIRE(cert.support_equalities_residual <= 1e-6);
  REQUIRE(cert.null_residual <= 1e-6);
  REQUIRE(cert.off_support_max <= 1.0 - 1e-6);
  REQUIRE(cert.pi.size() == sys.Gsub.rows());

  // The certificate is the optimality witness for the l1 decode, so the
  // decode itself must succeed on the same instance.
  const DecodeResult res = decode_ar_compressed(sys, DecodeMode::joint);
  REQUIRE((res.u_hat - u.values).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("adjacent unit spikes through a first-order filter defeat the certificate") {
  // x(t) = -1/2 x(t-1) + u(t), direct observation, two unit spikes right
  // next to each other near the end of the window.  The optimal dual
  // multiplier needs magnitude 16/15 > 1 off support, so no certificate
  // exists.  Pulling the spikes apart restores it.
  Vector a(1);
  a << 0.5;

  auto certify = [&](const std::vector<Index>& support) {
    Vector u = Vector::Zero(40);
    for (Index i : support) u[i] = 1.0;
    const Vector x = ar_forward(ArModel{a}, u);
    const RegressorSystem sys = build_regressor_blind(x, 1);
    const std::vector<double> signs(support.size(), 1.0);
    return check_doc(sys.Gsub, sys.Y, support, signs);
  };

  const DocCertificate adjacent = certify({34, 35});
  REQUIRE_FALSE(adjacent.feasible);
  REQUIRE(adjacent.status == DocCertificate::Status::off_support_too_large);
  REQUIRE(adjacent.off_support_max ==
          Catch::Approx(16.0 / 15.0).margin(1e-6));
  REQUIRE(adjacent.support_equalities_residual <= 1e-6);
  REQUIRE(adjacent.null_residual <= 1e-6);

  const DocCertificate separated = certify({10, 30});
  REQUIRE(separated.feasible);
  REQUIRE(separated.status == DocCertificate::Status::feasible);
  REQUIRE(separated.off_support_max < 1e-4);
}

TEST_CASE("check_doc distinguishes an infeasible equality block") {
  // pi must satisfy pi'g_0 = 1 on the support and pi'Y = 0, but g_0 and Y
  // are the same direction: no pi exists regardless of off-support slack.
  Matrix Gsub = Matrix::Identity(2, 2);
  Matrix Y(2, 1);
  Y << 1.0, 0.0;
  const DocCertificate cert = check_doc(Gsub, Y, {0}, {1.0});
  REQUIRE_FALSE(cert.feasible);
  REQUIRE(cert.status == DocCertificate::Status::equality_infeasible);
}

TEST_CASE("check_doc with full support skips the off-support program") {
  Matrix Gsub(2, 2);
  Gsub << 2.0, 0.0, 0.0, 4.0;
  const DocCertificate cert = check_doc(Gsub, Matrix(2, 0), {0, 1}, {1.0, -1.0});
  REQUIRE(cert.feasible);
  REQUIRE(cert.status == DocCertificate::Status::feasible);
  REQUIRE(cert.off_support_max == 0.0);
  REQUIRE(cert.pi[0] == Catch::Approx(0.5).margin(1e-9));
  REQUIRE(cert.pi[1] == Catch::Approx(-0.25).margin(1e-9));
}

TEST_CASE("check_doc validates its inputs") {
  Matrix Gsub = Matrix::Identity(3, 3);
  REQUIRE_THROWS_AS(check_doc(Gsub, Matrix(3, 0), {}, {}), Error);
  REQUIRE_THROWS_AS(check_doc(Gsub, Matrix(3, 0), {0}, {1.0, -1.0}),
                    DimensionError);
  REQUIRE_THROWS_AS(check_doc(Gsub, Matrix(3, 0), {7}, {1.0}), DimensionError);
  REQUIRE_THROWS_AS(check_doc(Gsub, Matrix::Identity(2, 2), {0}, {1.0}),
                    DimensionError);
}

TEST_CASE("separation constant formula") {
  DecayEnvelope env;
  env.M = 2.25;
  env.rho = 0.9;
  REQUIRE(theorem1_l_required(2, env, 1.0, 1.0) ==
          Catch::Approx(79.838567828171).margin(1e-9));

  // First-order example used by the adjacent-spike counterexample.
  DecayEnvelope env1;
  env1.M = 1.0;
  env1.rho = 0.5;
  REQUIRE(theorem1_l_required(1, env1, 1.0, 1.0) ==
          Catch::Approx(5.584962500721).margin(1e-9));

  // Monotone in all the hard directions: slower decay and wider dynamic
  // range both push the constant up.
  DecayEnvelope slower;
  slower.M = 2.25;
  slower.rho = 0.95;
  REQUIRE(theorem1_l_required(2, slower, 1.0, 1.0) >
          theorem1_l_required(2, env, 1.0, 1.0));
  REQUIRE(theorem1_l_required(2, env, 1.0, 4.0) >
          theorem1_l_required(2, env, 1.0, 1.0));

  DecayEnvelope unstable;
  unstable.M = 1.0;
  unstable.rho = 1.0;
  REQUIRE(std::isinf(theorem1_l_required(1, unstable, 1.0, 1.0)));
}

TEST_CASE("assumption report on a well separated train") {
  Vector a(2);
  a << -1.4, 0.45;
  const ArModel model{a};
  const SpikeTrain u =
      make_spike_train(400, 2, 80, 1.0, 1.0, SignMode::bernoulli, 21);

  const AssumptionReport rep = check_theorem1_assumptions(model, u, 400);
  REQUIRE(rep.p == 2);
  REQUIRE(rep.k == 2);
  REQUIRE(rep.M == Catch::Approx(2.25).margin(1e-6));
  REQUIRE(rep.rho == Catch::Approx(0.9).margin(1e-9));
  REQUIRE(rep.l_required == Catch::Approx(79.838567828171).margin(1e-6));
  REQUIRE(rep.l_actual >= 81.0);
  REQUIRE(rep.separation_ok);
  REQUIRE(rep.amplitudes_ok);
  REQUIRE(rep.sparsity_ok);
  REQUIRE(rep.envelope_ok);
  REQUIRE(rep.r_ok);
  REQUIRE(rep.all_pass);
}

TEST_CASE("assumption report flags crowded spikes and unstable models") {
  Vector a(2);
  a << -1.4, 0.45;
  const SpikeTrain crowded =
      make_spike_train(400, 4, 10, 1.0, 1.0, SignMode::bernoulli, 3);
  const AssumptionReport rep = check_theorem1_assumptions(ArModel{a}, crowded, 400);
  REQUIRE_FALSE(rep.separation_ok);
  REQUIRE_FALSE(rep.all_pass);

  Vector bad(1);
  bad << -1.5;
  const AssumptionReport unstable =
      check_theorem1_assumptions(ArModel{bad}, crowded, 400);
  REQUIRE_FALSE(unstable.envelope_ok);
  REQUIRE_FALSE(unstable.all_pass);
}

TEST_CASE("closed-form oracle matches the lasso solver on the true support") {
  Vector a(2);
  a << -1.4, 0.45;
  const Index n = 120;
  const SpikeTrain u =
      make_spike_train(n, 3, 20, 2.0, 3.0, SignMode::bernoulli, 17);
  const Vector x = ar_forward(ArModel{a}, u.values);

  const double sigma = 0.005;
  const Vector y = add_noise(x, sigma, 91);
  const double lambda =
      6.0 * sigma * 2.0 * 1.4 * std::sqrt(std::log(double(n)));

  // e is the equation noise in y + Y a* = u* + e; lagging folds the
  // observation noise through the filter coefficients.
  const RegressorSystem sys = build_regressor_blind(y, 2);
  const Vector e = y + sys.Y * a - u.values;
  const auto [u_oracle, a_oracle] =
      theorem2_closed_form(y, sys.Y, u.values, e, lambda);

  const DecodeResult res = decode_blind(y, 2, lambda);
  REQUIRE((res.u_hat - u_oracle).lpNorm<Eigen::Infinity>() < 1e-6);
  REQUIRE((res.a_hat - a_oracle).lpNorm<Eigen::Infinity>() < 1e-6);

  // Stationarity in the filter block: Y'(y + Y a_hat - u_hat) = 0.
  const Vector grad_a = sys.Y.transpose() * (y + sys.Y * a_oracle - u_oracle);
  REQUIRE(grad_a.lpNorm<Eigen::Infinity>() < 1e-8);

  // Signs survive at this noise level.
  for (Index i : u.support)
    REQUIRE(res.u_hat[i] * u.values[i] > 0.0);
  REQUIRE((a_oracle - a).lpNorm<Eigen::Infinity>() < 0.05);
}

TEST_CASE("closed-form oracle rejects singular lag systems") {
  const Index n = 10;
  const Vector y = Vector::Zero(n);
  const Matrix Y = Matrix::Zero(n, 2);
  REQUIRE_THROWS_AS(
      theorem2_closed_form(y, Y, Vector::Zero(n), Vector::Zero(n), 0.1),
      SingularSystemError);
  REQUIRE_THROWS_AS(
      theorem2_closed_form(y, Matrix::Zero(8, 2), Vector::Zero(n),
                           Vector::Zero(n), 0.1),
      DimensionError);
}

TEST_CASE("blind-deconvolution condition report on a pinned instance") {
  Vector a(2);
  a << -1.4, 0.45;
  const Index n = 24;
  Vector u = Vector::Zero(n);
  u[4] = 2.0;
  u[12] = -2.2;
  u[20] = 2.5;
  const Vector x = ar_forward(ArModel{a}, u);

  const double sigma = 0.1;
  const Theorem2Conditions rep =
      check_theorem2_conditions(x, u, sigma, 0.5, ArModel{a});

  REQUIRE(rep.lambda_min_X2 == Catch::Approx(10.009614199807).margin(1e-9));
  REQUIRE(rep.x_norm_sq == Catch::Approx(95.313399144297).margin(1e-9));
  REQUIRE(rep.c_implied == Catch::Approx(9.522185095419).margin(1e-9));
  REQUIRE(rep.x1_sgn_inf == Catch::Approx(3.910783127417).margin(1e-9));
  REQUIRE(rep.cond2_bound == Catch::Approx(17.404341792611).margin(1e-9));
  REQUIRE(rep.x_max == Catch::Approx(3.02).margin(1e-12));
  REQUIRE(rep.noise_floor == Catch::Approx(11.190580079513).margin(1e-9));
  REQUIRE(rep.lambda_bound == Catch::Approx(2.994952275208).margin(1e-9));

  // At sigma = 0.1 the instance is too small for condition (1), and the
  // lambda in use sits below the theorem's floor.
  REQUIRE(rep.cond2);
  REQUIRE_FALSE(rep.cond1);
  REQUIRE_FALSE(rep.lambda_ok);
  REQUIRE(rep.u_min == Catch::Approx(2.0));
  REQUIRE(rep.u_min_ok);
  REQUIRE_FALSE(rep.all_pass);

  // Quiet enough noise turns condition (1) around.
  const Theorem2Conditions quiet =
      check_theorem2_conditions(x, u, 0.01, 0.5, ArModel{a});
  REQUIRE(quiet.cond1);
}

TEST_CASE("restricted isometry constants: exhaustive enumeration") {
  Matrix B(8, 12);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 12; ++j) B(i, j) = std::cos(0.7 + 3.0 * i + 1.3 * j);

  const RipEstimate d1 = estimate_rip(B, 1, 0);
  REQUIRE(d1.method == RipEstimate::Method::exhaustive);
  REQUIRE(d1.trials == 12);
  REQUIRE(d1.delta_lower == Catch::Approx(0.897539225268331).margin(1e-12));

  const RipEstimate d2 = estimate_rip(B, 2, 0);
  REQUIRE(d2.method == RipEstimate::Method::exhaustive);
  REQUIRE(d2.trials == 66);
  REQUIRE(d2.delta_lower == Catch::Approx(0.997573856136574).margin(1e-12));

  REQUIRE(d1.delta_lower <= d2.delta_lower);
  REQUIRE_THROWS_AS(estimate_rip(B, 0, 10), DimensionError);
  REQUIRE_THROWS_AS(estimate_rip(B, 13, 10), DimensionError);
}

TEST_CASE("sampled isometry estimates lower-bound the exhaustive answer") {
  Matrix B(8, 12);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 12; ++j) B(i, j) = std::cos(0.7 + 3.0 * i + 1.3 * j);

  const RipEstimate exact1 = estimate_rip(B, 1, 0);
  const RipEstimate exact2 = estimate_rip(B, 2, 0);

  const RipEstimate s1 = estimate_rip(B, 1, 50, 7, true);
  const RipEstimate s2 = estimate_rip(B, 2, 50, 7, true);
  REQUIRE(s1.method == RipEstimate::Method::sampled);
  REQUIRE(s1.trials == 51);
  REQUIRE(s1.delta_lower <= exact1.delta_lower + 1e-12);
  REQUIRE(s2.delta_lower <= exact2.delta_lower + 1e-12);

  // The greedy chain makes the sampled bound monotone in S.
  REQUIRE(s1.delta_lower <= s2.delta_lower + 1e-12);

  // Deterministic in the seed.
  const RipEstimate s2b = estimate_rip(B, 2, 50, 7, true);
  REQUIRE(s2.delta_lower == s2b.delta_lower);

  // The singleton chain already finds the worst column, so sampling
  // matches the exhaustive S = 1 answer exactly.
  REQUIRE(s1.delta_lower == Catch::Approx(exact1.delta_lower).margin(1e-12));
}

TEST_CASE("isometry-side condition report") {
  const RipConditionReport ok = check_rip_conditions(0.2, 0.3, 1, 4);
  REQUIRE(ok.ratio == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(ok.ratio_ok);
  REQUIRE(ok.delta_2S_ok);
  REQUIRE(ok.k_ratio == Catch::Approx(std::sqrt(0.75)).margin(1e-12));
  REQUIRE(ok.k_ratio_ok);

  const RipConditionReport sentinel = check_rip_conditions(0.4, 0.5, 8, 4);
  REQUIRE(sentinel.ratio == -1.0);
  REQUIRE_FALSE(sentinel.ratio_ok);
  REQUIRE_FALSE(sentinel.delta_2S_ok);
  REQUIRE_FALSE(sentinel.k_ratio_ok);
}
