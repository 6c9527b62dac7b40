#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "arspike/decoder.hpp"

using namespace arspike;

namespace {

struct Ar2Instance {
  Vector a;
  SpikeTrain u;
  Vector x;
  SensingOperator G;
  Vector y;
};

Ar2Instance ar2_instance(Index n, Index m, Index k, Index min_sep,
                         std::uint64_t spike_seed, std::uint64_t op_seed) {
  Ar2Instance inst;
  inst.a.resize(2);
  inst.a << -1.4, 0.45;
  inst.u = make_spike_train(n, k, min_sep, 1.0, 2.0, SignMode::bernoulli,
                            spike_seed);
  inst.x = ar_forward(ArModel{inst.a}, inst.u.values);
  inst.G = build_sensing(Structure::toeplitz, Ensemble::gaussian, m, n, op_seed);
  inst.y = apply(inst.G, inst.x);
  return inst;
}

}  // namespace

TEST_CASE("joint decode recovers spikes and filter exactly") {
  const Ar2Instance inst = ar2_instance(60, 40, 3, 8, 5, 2);
  const DecodeResult res =
      decode_ar_compressed(inst.y, inst.G, 2, DecodeMode::joint);

  REQUIRE(res.report.status == SolveStatus::optimal);
  REQUIRE((res.u_hat - inst.u.values).lpNorm<Eigen::Infinity>() < 1e-6);
  REQUIRE((res.a_hat - inst.a).lpNorm<Eigen::Infinity>() < 1e-6);
  REQUIRE(res.a_stable);
  REQUIRE_FALSE(res.a_indeterminate);
  REQUIRE(res.measurements_used == 40);
  REQUIRE(evaluate_success(res, inst.u.values, inst.a) == DecodeSuccess::exact);

  // The reconstruction replays the estimated recursion on the estimated
  // spikes and must reproduce the original signal.
  REQUIRE((res.x_hat - inst.x).lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("joint and projected modes agree on noiseless instances") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Ar2Instance inst = ar2_instance(50, 36, 3, 7, seed, seed + 100);
    const RegressorSystem sys = build_regressor_compressed(inst.y, inst.G, 2);
    if (detail::cond_yty(sys.Y) >= 1e8) continue;

    const DecodeResult joint = decode_ar_compressed(sys, DecodeMode::joint);
    const DecodeResult proj = decode_ar_compressed(sys, DecodeMode::projected);
    REQUIRE((joint.u_hat - proj.u_hat).lpNorm<Eigen::Infinity>() < 1e-6);
    REQUIRE((joint.a_hat - proj.a_hat).lpNorm<Eigen::Infinity>() < 1e-5);
    REQUIRE((proj.u_hat - inst.u.values).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("projected mode refuses ill-conditioned lag matrices") {
  // All-zero measurements make Y identically zero.
  const SensingOperator G =
      build_sensing(Structure::toeplitz, Ensemble::gaussian, 20, 30, 1);
  const Vector y = Vector::Zero(20);
  REQUIRE_THROWS_AS(decode_ar_compressed(y, G, 2, DecodeMode::projected),
                    IllConditionedError);

  // Joint mode handles the same degenerate input by flagging a as
  // indeterminate instead of guessing.
  const DecodeResult res = decode_ar_compressed(y, G, 2, DecodeMode::joint);
  REQUIRE(res.u_hat.lpNorm<Eigen::Infinity>() < 1e-9);
  REQUIRE(res.a_indeterminate);
}

TEST_CASE("blind deconvolution from direct observation") {
  Vector a(2);
  a << -1.4, 0.45;
  const SpikeTrain u =
      make_spike_train(120, 3, 15, 1.0, 2.0, SignMode::bernoulli, 5);
  const Vector x = ar_forward(ArModel{a}, u.values);

  const DecodeResult res = decode_blind(x, 2, 1e-4);
  REQUIRE(res.report.status == SolveStatus::optimal);
  REQUIRE((res.u_hat - u.values).lpNorm<Eigen::Infinity>() < 1e-3);
  REQUIRE((res.a_hat - a).lpNorm<Eigen::Infinity>() < 1e-5);
  REQUIRE(res.measurements_used == 120);
  REQUIRE(evaluate_success(res, u.values, a) == DecodeSuccess::exact);
}

TEST_CASE("known numerator coefficients reduce the problem to one solve") {
  Vector a(2), b(2);
  a << -1.4, 0.45;
  b << 0.7, 1.0;
  const SpikeTrain u =
      make_spike_train(60, 3, 9, 1.0, 2.0, SignMode::bernoulli, 13);
  const Vector x = arma_forward(ArmaModel{ArModel{a}, b}, u.values);
  const SensingOperator G =
      build_sensing(Structure::toeplitz, Ensemble::gaussian, 45, 60, 6);
  const Vector y = apply(G, x);

  const DecodeResult res = decode_arma_known_B(y, G, 2, b);
  REQUIRE(res.report.status == SolveStatus::optimal);
  REQUIRE((res.u_hat - u.values).lpNorm<Eigen::Infinity>() < 1e-6);
  REQUIRE((res.a_hat - a).lpNorm<Eigen::Infinity>() < 1e-6);
  REQUIRE(res.b_hat.has_value());
  REQUIRE((*res.b_hat - b).norm() == 0.0);
  REQUIRE((res.x_hat - x).lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("alternating estimation recovers unknown numerator zeros") {
  Vector a(1), b(1);
  a << -0.9;
  b << 0.5;
  const SpikeTrain u =
      make_spike_train(50, 3, 8, 1.0, 2.0, SignMode::bernoulli, 11);
  const Vector x = arma_forward(ArmaModel{ArModel{a}, b}, u.values);
  const SensingOperator G =
      build_sensing(Structure::toeplitz, Ensemble::gaussian, 40, 50, 2);
  const Vector y = apply(G, x);

  const EpsilonSchedule schedule{{1.0, 10}, {0.1, 6}, {0.01, 4}};
  ArmaTrace trace;
  const DecodeResult res = decode_arma_iterative(y, G, 1, 1, schedule, &trace);

  REQUIRE(res.b_hat.has_value());
  REQUIRE(std::abs((*res.b_hat)[0] - 0.5) <= 0.05);
  REQUIRE(std::abs(res.a_hat[0] + 0.9) <= 0.01);

  REQUIRE(trace.rounds.size() == 20);
  for (std::size_t i = 0; i < trace.rounds.size(); ++i) {
    REQUIRE(trace.rounds[i].round == Index(i) + 1);
    const double eps = i < 10 ? 1.0 : (i < 16 ? 0.1 : 0.01);
    REQUIRE(trace.rounds[i].epsilon == eps);
  }

  // Cold starts make the trajectory reproducible.
  ArmaTrace trace2;
  const DecodeResult res2 = decode_arma_iterative(y, G, 1, 1, schedule, &trace2);
  REQUIRE(((*res.b_hat) - (*res2.b_hat)).norm() == 0.0);
  REQUIRE((res.u_hat - res2.u_hat).norm() == 0.0);
}

TEST_CASE("alternating estimation with q = 0 is the plain compressed decode") {
  const Ar2Instance inst = ar2_instance(50, 36, 3, 7, 3, 9);
  ArmaTrace trace;
  const EpsilonSchedule schedule{{0.5, 2}};
  const DecodeResult res =
      decode_arma_iterative(inst.y, inst.G, 2, 0, schedule, &trace);
  const DecodeResult plain =
      decode_ar_compressed(inst.y, inst.G, 2, DecodeMode::joint);

  REQUIRE(res.b_hat.has_value());
  REQUIRE(res.b_hat->size() == 0);
  REQUIRE((res.u_hat - plain.u_hat).norm() == 0.0);
  REQUIRE((res.a_hat - plain.a_hat).norm() == 0.0);
  REQUIRE(trace.rounds.size() == 1);

  EpsilonSchedule bad{{0.5, 2}, {0.7, 1}};
  REQUIRE_THROWS_AS(decode_arma_iterative(inst.y, inst.G, 2, 0, bad, nullptr),
                    Error);
  REQUIRE_THROWS_AS(
      decode_arma_iterative(inst.y, inst.G, 2, 0, EpsilonSchedule{}, nullptr),
      Error);
}

TEST_CASE("noncausal decode with circulant boundary") {
  NoncausalArModel model;
  Vector f(1), g(1);
  f << -0.4;
  g << -0.3;
  model.forward = f;
  model.backward = g;
  model.boundary = Boundary::circulant;
  const SpikeTrain u =
      make_spike_train(48, 3, 8, 1.0, 2.0, SignMode::bernoulli, 8);
  const Vector x = noncausal_forward(model, u.values);
  const SensingOperator G =
      build_sensing(Structure::circulant, Ensemble::gaussian, 36, 48, 4);
  const Vector y = apply(G, x);

  const DecodeResult res = decode_noncausal(y, G, 1, Boundary::circulant);
  REQUIRE((res.u_hat - u.values).lpNorm<Eigen::Infinity>() < 1e-6);
  REQUIRE(res.a_hat[0] == Catch::Approx(-0.4).margin(1e-6));
  REQUIRE(res.a_hat[1] == Catch::Approx(-0.3).margin(1e-6));
  REQUIRE((res.x_hat - x).lpNorm<Eigen::Infinity>() < 1e-5);

  const SensingOperator T =
      build_sensing(Structure::toeplitz, Ensemble::gaussian, 36, 48, 4);
  REQUIRE_THROWS_AS(decode_noncausal(apply(T, x), T, 1, Boundary::circulant),
                    Error);
}

TEST_CASE("noncausal decode with open boundary") {
  NoncausalArModel model;
  Vector f(1), g(1);
  f << -0.4;
  g << -0.3;
  model.forward = f;
  model.backward = g;
  model.boundary = Boundary::open;
  const SpikeTrain u =
      make_spike_train(60, 3, 10, 1.0, 2.0, SignMode::bernoulli, 8);
  const Vector x = noncausal_forward(model, u.values);
  const SensingOperator G =
      build_sensing(Structure::toeplitz, Ensemble::gaussian, 45, 60, 4);
  const Vector y = apply(G, x);

  BoundaryValues bv;
  bv.left = x.head(1);
  bv.right = x.tail(1);
  const DecodeResult exact = decode_noncausal(y, G, 1, Boundary::open, bv);
  REQUIRE((exact.u_hat - u.values).lpNorm<Eigen::Infinity>() < 1e-6);
  REQUIRE(exact.a_hat[0] == Catch::Approx(-0.4).margin(1e-6));
  REQUIRE(exact.a_hat[1] == Catch::Approx(-0.3).margin(1e-6));
  REQUIRE((exact.x_hat - x).lpNorm<Eigen::Infinity>() < 1e-5);
  REQUIRE(exact.measurements_used == 45 + 2);

  // Without boundary samples the biased path still gets close.
  const DecodeResult biased =
      decode_noncausal(y, G, 1, Boundary::open, std::nullopt, 1e-3);
  REQUIRE((biased.u_hat - u.values).lpNorm<Eigen::Infinity>() < 1e-2);
  REQUIRE(biased.a_hat[0] == Catch::Approx(-0.4).margin(1e-3));
  REQUIRE(biased.measurements_used == 45);

  REQUIRE_THROWS_AS(
      decode_noncausal(y, G, 1, Boundary::open, std::nullopt, 1e-3, true),
      MissingBoundaryError);
}

TEST_CASE("noncausal decode with p = 0 is plain sparse recovery") {
  const SpikeTrain u =
      make_spike_train(40, 3, 6, 1.0, 2.0, SignMode::bernoulli, 2);
  const SensingOperator G =
      build_sensing(Structure::toeplitz, Ensemble::gaussian, 30, 40, 9);
  const Vector y = apply(G, u.values);

  const DecodeResult res = decode_noncausal(y, G, 0, Boundary::open);
  REQUIRE((res.u_hat - u.values).lpNorm<Eigen::Infinity>() < 1e-6);
  REQUIRE(res.a_hat.size() == 0);
  REQUIRE((res.x_hat - res.u_hat).norm() == 0.0);
}

TEST_CASE("evaluate_success distinguishes exact, approximate, and failed") {
  Vector u_star = Vector::Zero(10);
  u_star[3] = 2.0;
  u_star[7] = -1.0;
  Vector a_star(1);
  a_star << -0.5;

  DecodeResult res;
  res.u_hat = u_star;
  res.a_hat = a_star;
  REQUIRE(evaluate_success(res, u_star, a_star) == DecodeSuccess::exact);

  // Support intact but the values off at the percent level.
  res.u_hat = u_star * 1.02;
  REQUIRE(evaluate_success(res, u_star, a_star) == DecodeSuccess::approx);

  // Tight values but an indeterminate filter cannot count as exact.
  res.u_hat = u_star;
  res.a_indeterminate = true;
  REQUIRE(evaluate_success(res, u_star, a_star) == DecodeSuccess::approx);
  res.a_indeterminate = false;

  // Missing spike.
  res.u_hat = u_star;
  res.u_hat[7] = 0.0;
  REQUIRE(evaluate_success(res, u_star, a_star) == DecodeSuccess::failed);

  // Spurious spike.
  res.u_hat = u_star;
  res.u_hat[0] = 0.1;
  REQUIRE(evaluate_success(res, u_star, a_star) == DecodeSuccess::failed);

  // Zero truth: silence is exact, anything else failed.
  const Vector zero = Vector::Zero(10);
  res.u_hat = zero;
  REQUIRE(evaluate_success(res, zero, a_star) == DecodeSuccess::exact);
  res.u_hat[4] = 0.5;
  REQUIRE(evaluate_success(res, zero, a_star) == DecodeSuccess::failed);
}

TEST_CASE("reconstruct_x dispatches on the numerator") {
  Vector a(2);
  a << -1.4, 0.45;
  Vector u = Vector::Zero(20);
  u[2] = 1.0;
  u[11] = -2.0;

  REQUIRE((reconstruct_x(a, u) - ar_forward(ArModel{a}, u)).norm() == 0.0);

  Vector b(2);
  b << 0.7, 1.0;
  const Vector via_arma = reconstruct_x(a, u, b);
  REQUIRE((via_arma - arma_forward(ArmaModel{ArModel{a}, b}, u)).norm() == 0.0);
  REQUIRE((reconstruct_x(a, u, Vector()) - ar_forward(ArModel{a}, u)).norm() ==
          0.0);
}
