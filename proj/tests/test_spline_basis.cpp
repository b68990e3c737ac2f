#include <catch2/catch_amalgamated.hpp>

#include <bsquad/quadrature.hpp>
#include <bsquad/spline_basis.hpp>

#include <cmath>
#include <random>

using namespace bsq;

namespace {
constexpr double kTight = 1e-13;
}

TEST_CASE("Bernstein values and derivatives at reference points", "[spline]") {
  const Eigen::MatrixXd b = bernstein_eval(5, 0.5, 2);
  const double expected[6] = {1.0 / 32, 5.0 / 32, 10.0 / 32, 10.0 / 32, 5.0 / 32, 1.0 / 32};
  for (int j = 0; j < 6; ++j) REQUIRE(std::abs(b(j, 0) - expected[j]) < kTight);

  const Eigen::MatrixXd b0 = bernstein_eval(5, 0.0, 2);
  const double d1[6] = {-5, 5, 0, 0, 0, 0};
  const double d2[6] = {20, -40, 20, 0, 0, 0};
  for (int j = 0; j < 6; ++j) {
    REQUIRE(std::abs(b0(j, 1) - d1[j]) < kTight);
    REQUIRE(std::abs(b0(j, 2) - d2[j]) < kTight);
  }
}

TEST_CASE("Bernstein partition of unity and derivative sums", "[spline]") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int p = 1; p <= 6; ++p) {
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::MatrixXd b = bernstein_eval(p, unif(rng), 2);
      REQUIRE(std::abs(b.col(0).sum() - 1.0) < kTight);
      REQUIRE(std::abs(b.col(1).sum()) < 1e-11);
      REQUIRE(std::abs(b.col(2).sum()) < 1e-10);
    }
  }
}

TEST_CASE("Bernstein basis matches B-splines without interior knots", "[spline]") {
  const KnotVector kv = uniform_open_knots(4, 1, 1);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double xi = unif(rng);
    const Eigen::MatrixXd a = bernstein_eval(4, xi, 2);
    const Eigen::MatrixXd b = bspline_eval(kv, xi, 2);
    REQUIRE((a - b).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("Knot vectors for the reduced-smoothness segment spaces", "[spline]") {
  const KnotVector kv3 = make_knots(3, 3, 1);
  const std::vector<double> want3 = {0, 0, 0, 0, 1.0 / 3, 1.0 / 3, 2.0 / 3, 2.0 / 3, 1, 1, 1, 1};
  REQUIRE(kv3.knots.size() == want3.size());
  for (size_t i = 0; i < want3.size(); ++i) REQUIRE(std::abs(kv3.knots[i] - want3[i]) < kTight);
  REQUIRE(kv3.num_basis() == 8);

  const KnotVector kv4 = make_knots(4, 2, 2);
  const std::vector<double> want4 = {0, 0, 0, 0, 0, 0.5, 0.5, 1, 1, 1, 1, 1};
  REQUIRE(kv4.knots.size() == want4.size());
  for (size_t i = 0; i < want4.size(); ++i) REQUIRE(std::abs(kv4.knots[i] - want4[i]) < kTight);
  REQUIRE(kv4.num_basis() == 7);

  const KnotVector kv5 = make_knots(5, 1, 3);
  REQUIRE(kv5.num_basis() == 6);
  REQUIRE(kv5.knots == std::vector<double>({0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1}));

  // dim S^{p,p-2}_k = 2k + p - 1 across a sweep.
  for (int p = 3; p <= 6; ++p)
    for (int k = 1; k <= 5; ++k) REQUIRE(make_knots(p, k, p - 2).num_basis() == 2 * k + p - 1);

  REQUIRE_THROWS_AS(make_knots(4, 2, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(make_knots(1, 2, -1), std::invalid_argument);
  REQUIRE_THROWS_AS(uniform_open_knots(3, 0, 1), std::invalid_argument);
}

TEST_CASE("Greville abscissae of the default trace and edge spaces", "[spline]") {
  const std::vector<double> g4 = greville(make_knots(4, 2, 2));
  const std::vector<double> want4 = {0, 1.0 / 8, 1.0 / 4, 1.0 / 2, 3.0 / 4, 7.0 / 8, 1};
  REQUIRE(g4.size() == want4.size());
  for (size_t i = 0; i < g4.size(); ++i) REQUIRE(std::abs(g4[i] - want4[i]) < kTight);

  const std::vector<double> g3 = greville(make_knots(3, 3, 1));
  const std::vector<double> want3 = {0, 1.0 / 9, 2.0 / 9, 4.0 / 9, 5.0 / 9, 7.0 / 9, 8.0 / 9, 1};
  REQUIRE(g3.size() == want3.size());
  for (size_t i = 0; i < g3.size(); ++i) REQUIRE(std::abs(g3[i] - want3[i]) < kTight);
}

TEST_CASE("Partition of unity and linear reproduction with Greville weights", "[spline]") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int p = 3; p <= 5; ++p) {
    for (int k : {1, 2, 3, 4}) {
      const KnotVector kv = make_knots(p, k, p - 2);
      const std::vector<double> g = greville(kv);
      for (int trial = 0; trial < 10; ++trial) {
        const double xi = unif(rng);
        for (Side side : {Side::Left, Side::Right}) {
          const Eigen::MatrixXd b = bspline_eval(kv, xi, 0, side);
          REQUIRE(std::abs(b.col(0).sum() - 1.0) < 1e-12);
          double lin = 0.0;
          for (int j = 0; j < kv.num_basis(); ++j) lin += g[j] * b(j, 0);
          REQUIRE(std::abs(lin - xi) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("One continuous derivative across a double knot, jump in the second", "[spline]") {
  const KnotVector kv = make_knots(3, 3, 1);
  const double brk = kv.knots[4];
  const Eigen::MatrixXd left = bspline_eval(kv, brk, 2, Side::Left);
  const Eigen::MatrixXd right = bspline_eval(kv, brk, 2, Side::Right);
  REQUIRE((left.col(0) - right.col(0)).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((left.col(1) - right.col(1)).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE((left.col(2) - right.col(2)).cwiseAbs().maxCoeff() > 1.0);
}

TEST_CASE("Endpoint first derivatives involve only the two extreme functions", "[spline]") {
  struct Case {
    int p, k;
    double dN0;
  };
  // N_0'(0) = -p / knots[p+1] for an open knot vector.
  for (const Case& c : {Case{3, 3, -9.0}, Case{4, 2, -8.0}, Case{5, 1, -5.0}}) {
    const KnotVector kv = make_knots(c.p, c.k, c.p - 2);
    const Eigen::MatrixXd b = bspline_eval(kv, 0.0, 1);
    REQUIRE(std::abs(b(0, 1) - c.dN0) < kTight);
    REQUIRE(std::abs(b(1, 1) + c.dN0) < kTight);
    for (int j = 2; j < kv.num_basis(); ++j) REQUIRE(b(j, 1) == 0.0);
  }
}

TEST_CASE("Greville dual functionals reproduce coefficients", "[spline]") {
  for (int p : {3, 4, 5}) {
    const int k = 6 - p + 1;
    const KnotVector kv = make_knots(p, k, p - 2);
    const int nb = kv.num_basis();
    for (int j = 0; j < nb; ++j) {
      const Eigen::VectorXd c =
          dual_functionals(kv, [&](double x) { return bspline_eval(kv, x, 0)(j, 0); });
      for (int i = 0; i < nb; ++i) REQUIRE(std::abs(c[i] - (i == j ? 1.0 : 0.0)) < 1e-11);
    }
    const Eigen::VectorXd lin = dual_functionals(kv, [](double x) { return x; });
    const std::vector<double> g = greville(kv);
    for (int i = 0; i < nb; ++i) REQUIRE(std::abs(lin[i] - g[i]) < 1e-12);
  }
}

TEST_CASE("Embedding of the smoother space is exact", "[spline]") {
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int p : {3, 4, 5}) {
    for (int k : {2, 3}) {
      const KnotVector sub = make_knots(p, k, p - 1);
      const KnotVector super = make_knots(p, k, p - 2);
      const Eigen::MatrixXd E = subspace_embedding(sub, super);
      REQUIRE(E.rows() == super.num_basis());
      REQUIRE(E.cols() == sub.num_basis());
      for (int trial = 0; trial < 10; ++trial) {
        const double xi = unif(rng);
        const Eigen::VectorXd vs = bspline_eval(sub, xi, 0).col(0);
        const Eigen::VectorXd vt = bspline_eval(super, xi, 0).col(0);
        REQUIRE((E.transpose() * vt - vs).cwiseAbs().maxCoeff() < 1e-11);
      }
    }
  }
}

TEST_CASE("Evaluation outside the knot domain is rejected", "[spline]") {
  const KnotVector kv = make_knots(3, 2, 1);
  REQUIRE_THROWS_AS(bspline_eval(kv, -0.5, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(bspline_eval(kv, 1.5, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(bspline_eval(kv, 0.5, 3), std::invalid_argument);
}

TEST_CASE("Gauss-Legendre nodes, weights, and exactness", "[quadrature]") {
  const QuadratureRule r3 = gauss_legendre(3);
  const double s = std::sqrt(15.0) / 10.0;
  REQUIRE(std::abs(r3.points[0] - (0.5 - s)) < kTight);
  REQUIRE(std::abs(r3.points[1] - 0.5) < kTight);
  REQUIRE(std::abs(r3.points[2] - (0.5 + s)) < kTight);
  REQUIRE(std::abs(r3.weights[0] - 5.0 / 18) < kTight);
  REQUIRE(std::abs(r3.weights[1] - 4.0 / 9) < kTight);
  REQUIRE(std::abs(r3.weights[2] - 5.0 / 18) < kTight);

  for (int n = 1; n <= 8; ++n) {
    const QuadratureRule r = gauss_legendre(n);
    for (int d = 0; d <= 2 * n - 1; ++d) {
      double integral = 0.0;
      for (int i = 0; i < n; ++i) integral += r.weights[i] * std::pow(r.points[i], d);
      REQUIRE(std::abs(integral - 1.0 / (d + 1)) < 1e-14);
    }
  }
}
