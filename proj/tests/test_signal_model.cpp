#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "arspike/signal_model.hpp"

using namespace arspike;

TEST_CASE("make_spike_train respects count, gaps, and amplitude bounds") {
  const SpikeTrain u = make_spike_train(200, 8, 10, 1.0, 2.0,
                                        SignMode::bernoulli, 42);
  REQUIRE(u.n == 200);
  REQUIRE(u.k() == 8);
  REQUIRE(u.values.size() == 200);

  for (std::size_t i = 1; i < u.support.size(); ++i) {
    REQUIRE(u.support[i] - u.support[i - 1] >= 11);  // min_sep + 1 apart
  }
  std::set<Index> sup(u.support.begin(), u.support.end());
  for (Index t = 0; t < u.n; ++t) {
    if (sup.count(t)) {
      const double mag = std::abs(u.values[t]);
      REQUIRE(mag >= 1.0);
      REQUIRE(mag <= 2.0);
    } else {
      REQUIRE(u.values[t] == 0.0);
    }
  }
}

TEST_CASE("make_spike_train is deterministic in the seed") {
  const SpikeTrain u1 = make_spike_train(150, 5, 7, 0.5, 3.0,
                                         SignMode::bernoulli, 9);
  const SpikeTrain u2 = make_spike_train(150, 5, 7, 0.5, 3.0,
                                         SignMode::bernoulli, 9);
  const SpikeTrain u3 = make_spike_train(150, 5, 7, 0.5, 3.0,
                                         SignMode::bernoulli, 10);
  REQUIRE((u1.values - u2.values).norm() == 0.0);
  REQUIRE(u1.support == u2.support);
  REQUIRE((u1.values - u3.values).norm() > 0.0);
}

TEST_CASE("all_positive sign mode yields positive amplitudes") {
  const SpikeTrain u = make_spike_train(100, 6, 4, 1.0, 2.0,
                                        SignMode::all_positive, 3);
  for (Index i : u.support) REQUIRE(u.values[i] > 0.0);

  bool saw_negative = false;
  for (int seed = 0; seed < 20 && !saw_negative; ++seed) {
    const SpikeTrain v = make_spike_train(100, 6, 4, 1.0, 2.0,
                                          SignMode::bernoulli, seed);
    for (Index i : v.support) saw_negative = saw_negative || v.values[i] < 0.0;
  }
  REQUIRE(saw_negative);
}

TEST_CASE("make_spike_train rejects infeasible packing") {
  REQUIRE_THROWS_AS(make_spike_train(200, 3, 80, 1.0, 1.0,
                                     SignMode::bernoulli, 1),
                    SeparationError);
  REQUIRE_NOTHROW(make_spike_train(200, 2, 80, 1.0, 1.0,
                                   SignMode::bernoulli, 1));
  REQUIRE(make_spike_train(50, 0, 3, 1.0, 2.0, SignMode::bernoulli, 1).k() == 0);
}

TEST_CASE("ar_forward matches the hand recursion") {
  Vector a(2);
  a << -1.4, 0.45;
  Vector impulse = Vector::Zero(8);
  impulse[0] = 1.0;
  const Vector x = ar_forward(ArModel{a}, impulse);
  const double expected[8] = {1.0,     1.4,      1.51,     1.484,
                              1.3981,  1.28954,  1.176211, 1.0664024};
  for (Index t = 0; t < 8; ++t)
    REQUIRE(x[t] == Catch::Approx(expected[t]).margin(1e-12));

  // AR(1) with a = [-0.5] is the geometric sequence 0.5^t.
  Vector a1(1);
  a1 << -0.5;
  const Vector h = impulse_response(ArModel{a1}, 10);
  for (Index t = 0; t < 10; ++t)
    REQUIRE(h[t] == Catch::Approx(std::pow(0.5, double(t))).margin(1e-15));
}

TEST_CASE("ar_forward is linear and matches impulse convolution") {
  Vector a(2);
  a << -1.4, 0.45;
  const ArModel model{a};
  Vector u = Vector::Zero(30);
  u[3] = 2.0;
  u[17] = -1.5;
  const Vector x = ar_forward(model, u);
  const Vector h = impulse_response(model, 30);
  Vector conv = Vector::Zero(30);
  for (Index t = 0; t < 30; ++t) {
    if (t >= 3) conv[t] += 2.0 * h[t - 3];
    if (t >= 17) conv[t] += -1.5 * h[t - 17];
  }
  REQUIRE((x - conv).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("poles and stability of quadratic models") {
  Vector a(2);
  a << -1.4, 0.45;
  const ArModel model{a};
  auto poles = model.poles();
  REQUIRE(poles.size() == 2);
  std::vector<double> mods = {std::abs(poles[0]), std::abs(poles[1])};
  std::sort(mods.begin(), mods.end());
  REQUIRE(mods[0] == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(mods[1] == Catch::Approx(0.9).margin(1e-12));
  REQUIRE(model.is_stable());
  REQUIRE(model.max_pole_modulus() == Catch::Approx(0.9).margin(1e-12));

  Vector bad(2);
  bad << -2.0, 1.0;  // double pole at z = 1
  REQUIRE_FALSE(ArModel{bad}.is_stable());

  // Fig-2-style cubic: z^3 - 1.9 z^2 + 1.06 z - 0.144 = (z-.9)(z-.8)(z-.2).
  Vector a3(3);
  a3 << -1.9, 1.06, -0.144;
  const ArModel cubic{a3};
  REQUIRE(cubic.is_stable());
  REQUIRE(cubic.max_pole_modulus() == Catch::Approx(0.9).margin(1e-9));
}

TEST_CASE("decay envelope dominates the impulse response") {
  Vector a(2);
  a << -1.4, 0.45;
  const ArModel model{a};
  const DecayEnvelope env = fit_decay_envelope(model);
  REQUIRE(env.rho == Catch::Approx(0.9).margin(1e-9));
  REQUIRE(env.M == Catch::Approx(2.25).margin(1e-6));  // (0.9/0.4) in the limit

  const Vector h = impulse_response(model, 400);
  for (Index t = 0; t < h.size(); ++t)
    REQUIRE(std::abs(h[t]) <= env.M * std::pow(env.rho, double(t)) + 1e-12);

  Vector unstable(1);
  unstable << -1.01;
  REQUIRE_THROWS_AS(fit_decay_envelope(ArModel{unstable}), InstabilityError);
}

TEST_CASE("clustered poles inflate rho to keep the envelope finite") {
  Vector a(2);  // double pole at 0.9: (z-0.9)^2 = z^2 - 1.8z + 0.81
  a << -1.8, 0.81;
  const ArModel model{a};
  const DecayEnvelope env = fit_decay_envelope(model);
  REQUIRE(env.rho > 0.9);
  REQUIRE(env.rho < 1.0);
  const Vector h = impulse_response(model, 400);
  for (Index t = 0; t < h.size(); ++t)
    REQUIRE(std::abs(h[t]) <= env.M * std::pow(env.rho, double(t)) + 1e-12);
}

TEST_CASE("arma_forward with empty numerator equals ar_forward") {
  Vector a(2);
  a << -1.1, 0.3;
  Vector u = Vector::Zero(25);
  u[2] = 1.0;
  u[11] = -2.0;
  const ArmaModel arma{ArModel{a}, Vector()};
  REQUIRE((arma_forward(arma, u) - ar_forward(ArModel{a}, u)).norm() == 0.0);
}

TEST_CASE("arma_forward agrees with the lagged input matrix") {
  Vector a(2), b(2);
  a << -1.4, 0.45;
  b << 0.7, 1.0;
  const ArmaModel arma{ArModel{a}, b};
  Vector u = Vector::Zero(30);
  u[0] = 1.0;
  u[9] = -1.3;
  u[21] = 0.8;
  const Vector direct = arma_forward(arma, u);
  const Vector staged = ar_forward(arma.ar, Vector(arma.input_matrix(30) * u));
  REQUIRE((direct - staged).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("noncausal_forward inverts the two-sided system matrix") {
  NoncausalArModel model;
  Vector f(1), g(1);
  f << -0.4;
  g << -0.3;
  model.forward = f;
  model.backward = g;
  model.boundary = Boundary::circulant;

  Vector u = Vector::Zero(16);
  u[5] = 1.0;
  u[12] = -2.0;
  const Vector x = noncausal_forward(model, u);
  const Vector back = model.system_matrix(16) * x;
  REQUIRE((back - u).lpNorm<Eigen::Infinity>() < 1e-10);

  // The spike influence spreads in both directions.
  REQUIRE(std::abs(x[4]) > 1e-4);
  REQUIRE(std::abs(x[6]) > 1e-4);
}

TEST_CASE("min_support_gap") {
  SpikeTrain u;
  u.n = 50;
  u.values = Vector::Zero(50);
  u.support = {3, 10, 30};
  u.values[3] = u.values[10] = u.values[30] = 1.0;
  REQUIRE(min_support_gap(u) == 7.0);

  SpikeTrain single;
  single.n = 10;
  single.values = Vector::Zero(10);
  single.support = {4};
  single.values[4] = 1.0;
  REQUIRE(std::isinf(min_support_gap(single)));
}
