#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "arspike/rng.hpp"
#include "arspike/solvers.hpp"

using namespace arspike;

namespace {

// 5 x 10 deterministic wide matrix with a 2-sparse planted solution.
Matrix planted_matrix() {
  Matrix A(5, 10);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 10; ++j) A(i, j) = std::sin(1.0 + i + 7.0 * j);
  return A;
}

Vector planted_truth() {
  Vector u = Vector::Zero(10);
  u[2] = 1.5;
  u[7] = -2.0;
  return u;
}

}  // namespace

TEST_CASE("least_squares solves and rejects rank deficiency") {
  Matrix A(4, 2);
  A << 1, 0, 0, 1, 1, 1, 2, 1;
  Vector t(2);
  t << 3.0, -1.0;
  const Vector b = A * t;
  REQUIRE((least_squares(A, b) - t).norm() < 1e-12);

  Matrix R(3, 2);
  R << 1, 2, 2, 4, 3, 6;  // rank 1
  REQUIRE_THROWS_AS(least_squares(R, Vector::Zero(3)), RankDeficientError);
  REQUIRE(least_squares(Matrix(3, 0), Vector::Zero(3)).size() == 0);
}

TEST_CASE("basis pursuit recovers the planted sparse vector") {
  L1Problem prob;
  prob.A_u = planted_matrix();
  prob.A_free = Matrix(5, 0);
  prob.b = prob.A_u * planted_truth();
  prob.mode = L1Problem::Mode::equality;

  const SolveReport rep = solve_l1_equality(prob);
  REQUIRE(rep.status == SolveStatus::optimal);
  REQUIRE(rep.objective == Catch::Approx(3.5).margin(1e-7));
  REQUIRE((rep.u - planted_truth()).lpNorm<Eigen::Infinity>() < 1e-6);
  REQUIRE(rep.residual_norm < 1e-8);

  REQUIRE(rep.certificate.has_value());
  REQUIRE(rep.certificate->max_abs_penalized <= 1.0 + 1e-6);
  REQUIRE(rep.certificate->gap < 1e-6);
}

TEST_CASE("basis pursuit agrees with exhaustive search on small instances") {
  Rng rng(314);
  for (int trial = 0; trial < 12; ++trial) {
    const Index m = 5 + (trial % 3);
    const Index n = 9 + (trial % 4);
    Matrix A(m, n);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < n; ++j) A(i, j) = rng.normal();
    Vector u = Vector::Zero(n);
    u[trial % n] = 1.0 + 0.1 * trial;
    u[(trial + 5) % n] -= 2.0;

    L1Problem prob;
    prob.A_u = A;
    prob.A_free = Matrix(m, 0);
    prob.b = A * u;

    const SolveReport lp = solve_l1_equality(prob);
    const SolveReport bf = brute_force_l1(prob, 2);
    REQUIRE(lp.status == SolveStatus::optimal);
    REQUIRE(bf.status == SolveStatus::optimal);
    // Exhaustive search only sees supports up to size 2, so it upper-bounds
    // the unrestricted optimum; equality means the LP found a sparse optimum.
    REQUIRE(lp.objective <= bf.objective + 1e-6);
    if (std::abs(lp.objective - bf.objective) < 1e-6)
      REQUIRE((lp.u - bf.u).lpNorm<Eigen::Infinity>() < 1e-5);
  }
}

TEST_CASE("basis pursuit reports infeasible systems") {
  L1Problem prob;
  prob.A_u = Matrix::Zero(2, 3);
  prob.A_free = Matrix(2, 0);
  prob.b = Vector::Ones(2);
  const SolveReport rep = solve_l1_equality(prob);
  REQUIRE(rep.status == SolveStatus::infeasible);
}

TEST_CASE("basis pursuit with a free block pins only the penalized part") {
  // b = A_u u* + A_free f*: the free component carries no l1 cost, so the
  // solver should place as much as possible on it.
  Matrix A_u(4, 6);
  Rng rng(99);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 6; ++j) A_u(i, j) = rng.normal();
  Matrix A_free(4, 1);
  A_free << 1.0, 2.0, -1.0, 0.5;

  Vector u_star = Vector::Zero(6);
  u_star[1] = 2.0;
  Vector f_star(1);
  f_star << -3.0;

  L1Problem prob;
  prob.A_u = A_u;
  prob.A_free = A_free;
  prob.b = A_u * u_star - A_free * f_star;

  const SolveReport rep = solve_l1_equality(prob);
  REQUIRE(rep.status == SolveStatus::optimal);
  REQUIRE(rep.free.size() == 1);
  const Vector resid = A_u * rep.u - A_free * rep.free - prob.b;
  REQUIRE(resid.lpNorm<Eigen::Infinity>() < 1e-7);
  REQUIRE(rep.objective <= u_star.lpNorm<1>() + 1e-7);
  REQUIRE(rep.certificate->free_residual < 1e-6);
}

TEST_CASE("lasso matches the pinned optimum on the planted instance") {
  L1Problem prob;
  prob.A_u = planted_matrix();
  prob.A_free = Matrix(5, 0);
  prob.b = prob.A_u * planted_truth();
  prob.mode = L1Problem::Mode::penalized;
  prob.lambda = 0.4;

  const SolveReport rep = solve_lasso(prob);
  REQUIRE(rep.status == SolveStatus::optimal);
  REQUIRE(rep.objective == Catch::Approx(1.356510375104272).epsilon(1e-9));
  REQUIRE(rep.u[2] == Catch::Approx(1.40158733033).margin(1e-7));
  REQUIRE(rep.u[7] == Catch::Approx(-1.880964545191).margin(1e-7));
  for (Index j = 0; j < 10; ++j)
    if (j != 2 && j != 7) REQUIRE(std::abs(rep.u[j]) < 1e-9);
}

TEST_CASE("lasso satisfies its stationarity conditions") {
  Rng rng(2718);
  Matrix A(8, 14);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 14; ++j) A(i, j) = rng.normal();
  Vector b(8);
  for (Index i = 0; i < 8; ++i) b[i] = rng.normal();

  L1Problem prob;
  prob.A_u = A;
  prob.A_free = Matrix(8, 0);
  prob.b = b;
  prob.mode = L1Problem::Mode::penalized;
  prob.lambda = 0.7;

  const SolveReport rep = solve_lasso(prob);
  REQUIRE(rep.status == SolveStatus::optimal);
  const Vector grad = A.transpose() * (A * rep.u - b);
  for (Index j = 0; j < 14; ++j) {
    if (std::abs(rep.u[j]) > 1e-12) {
      REQUIRE(grad[j] + prob.lambda * (rep.u[j] > 0 ? 1.0 : -1.0) ==
              Catch::Approx(0.0).margin(1e-7));
    } else {
      REQUIRE(std::abs(grad[j]) <= prob.lambda + 1e-7);
    }
  }
  REQUIRE_THROWS_AS([&] {
    L1Problem bad = prob;
    bad.lambda = 0.0;
    return solve_lasso(bad);
  }(), Error);
}

TEST_CASE("ball-constrained solve meets the pinned objective") {
  L1Problem prob;
  prob.A_u = planted_matrix();
  prob.A_free = Matrix(5, 0);
  prob.b = prob.A_u * planted_truth();
  prob.mode = L1Problem::Mode::ball;
  prob.epsilon = 1.424234958662407;  // 0.3 * ||b||

  const SolveReport rep = solve_l1_ball(prob);
  REQUIRE(rep.status == SolveStatus::optimal);
  REQUIRE(rep.residual_norm <= prob.epsilon * (1.0 + 1e-9));
  const double pinned = 2.449902856975232;
  REQUIRE(rep.objective >= pinned - 1e-7);
  REQUIRE(rep.objective <= pinned * (1.0 + 5e-3));
}

TEST_CASE("ball solve tightens toward basis pursuit as epsilon shrinks") {
  L1Problem prob;
  prob.A_u = planted_matrix();
  prob.A_free = Matrix(5, 0);
  prob.b = prob.A_u * planted_truth();
  prob.mode = L1Problem::Mode::ball;

  prob.epsilon = 1e-6;
  const SolveReport tight = solve_l1_ball(prob);
  REQUIRE(tight.status == SolveStatus::optimal);
  REQUIRE(tight.objective == Catch::Approx(3.5).margin(1e-3));

  prob.epsilon = 100.0;  // ball contains the origin
  const SolveReport loose = solve_l1_ball(prob);
  REQUIRE(loose.status == SolveStatus::optimal);
  REQUIRE(loose.objective < 1e-12);
}

TEST_CASE("ball solve flags unreachable radii as infeasible") {
  // Overdetermined inconsistent system: least-squares floor is positive.
  Matrix A(3, 1);
  A << 1.0, 1.0, 1.0;
  Vector b(3);
  b << 0.0, 1.0, 2.0;  // best fit leaves residual sqrt(2)

  L1Problem prob;
  prob.A_u = A;
  prob.A_free = Matrix(3, 0);
  prob.b = b;
  prob.mode = L1Problem::Mode::ball;
  prob.epsilon = 0.5;  // below the floor

  const SolveReport rep = solve_l1_ball(prob);
  REQUIRE(rep.status == SolveStatus::infeasible);
  REQUIRE(rep.residual_norm == Catch::Approx(std::sqrt(2.0)).margin(1e-6));

  L1Problem bad = prob;
  bad.epsilon = 0.0;
  REQUIRE_THROWS_AS(solve_l1_ball(bad), Error);
}

TEST_CASE("brute force enumerator honors its size guard and tie rule") {
  L1Problem prob;
  prob.A_u = Matrix::Identity(4, 4);
  prob.A_free = Matrix(4, 0);
  prob.b = Vector::Zero(4);
  REQUIRE_THROWS_AS(brute_force_l1(prob, 4), SizeLimitError);

  L1Problem big;
  big.A_u = Matrix::Random(5, 21);
  big.A_free = Matrix(5, 0);
  big.b = Vector::Zero(5);
  REQUIRE_THROWS_AS(brute_force_l1(big, 2), SizeLimitError);

  // Two columns can each explain b alone at equal cost; lexicographically
  // smallest support wins.
  Matrix A(2, 3);
  A << 1, 0, 1, 0, 1, 0;
  Vector b(2);
  b << 1.0, 0.0;
  L1Problem tie;
  tie.A_u = A;
  tie.A_free = Matrix(2, 0);
  tie.b = b;
  const SolveReport rep = brute_force_l1(tie, 1);
  REQUIRE(rep.status == SolveStatus::optimal);
  REQUIRE(rep.u[0] == Catch::Approx(1.0));
  REQUIRE(rep.u[2] == 0.0);
}

TEST_CASE("brute force handles free columns and infeasibility") {
  Matrix A_u(3, 4);
  A_u << 1, 0, 0, 2,
         0, 1, 0, 0,
         0, 0, 1, 0;
  Matrix A_free(3, 1);
  A_free << 0.0, 0.0, 1.0;

  L1Problem prob;
  prob.A_u = A_u;
  prob.A_free = A_free;
  Vector b(3);
  b << 2.0, 0.0, -5.0;
  prob.b = b;

  // Column 3 explains b[0] at cost 1; the free column absorbs b[2]
  // through the residual convention A_u u - A_free f = b, so f = +5.
  const SolveReport rep = brute_force_l1(prob, 1);
  REQUIRE(rep.status == SolveStatus::optimal);
  REQUIRE(rep.objective == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(rep.u[3] == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(rep.free[0] == Catch::Approx(5.0).margin(1e-9));

  L1Problem inf;
  inf.A_u = Matrix::Zero(2, 2);
  inf.A_free = Matrix(2, 0);
  inf.b = Vector::Ones(2);
  REQUIRE(brute_force_l1(inf, 2).status == SolveStatus::infeasible);
}
