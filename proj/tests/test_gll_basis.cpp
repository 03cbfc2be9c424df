#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "scm/gll_basis.hpp"

using scm::gll_rule;

namespace {

// Roots of (1 - x^2) P'_p on (-1, 1) by a fine sign scan and bisection.
std::vector<double> bisection_interior_nodes(int p) {
  auto f = [p](double x) { return (1.0 - x * x) * scm::legendre(p, x).derivative; };
  std::vector<double> roots;
  // Odd count keeps the symmetric root x = 0 inside a cell.
  const int n = 3999;
  for (int k = 1; k < n - 1; ++k) {
    double a = -1.0 + 2.0 * k / n, b = -1.0 + 2.0 * (k + 1) / n;
    double fa = f(a);
    if (fa * f(b) > 0.0) continue;
    for (int it = 0; it < 200 && b - a > 1e-16; ++it) {
      const double m = 0.5 * (a + b);
      const double fm = f(m);
      if ((fm < 0.0) == (fa < 0.0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    roots.push_back(0.5 * (a + b));
  }
  return roots;
}

}  // namespace

TEST_CASE("gll rule matches the closed forms for p = 1, 2, 4") {
  const auto r1 = gll_rule(1);
  CHECK(r1.nodes()[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(r1.nodes()[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(r1.weights()[0] - 1.0) < 1e-14);
  CHECK(std::abs(r1.weights()[1] - 1.0) < 1e-14);

  const auto r2 = gll_rule(2);
  const double n2[] = {-1.0, 0.0, 1.0}, w2[] = {1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0};
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(r2.nodes()[i] - n2[i]) <= 1e-13);
    CHECK(std::abs(r2.weights()[i] - w2[i]) <= 1e-13);
  }

  const auto r4 = gll_rule(4);
  const double s = std::sqrt(3.0 / 7.0);
  const double n4[] = {-1.0, -s, 0.0, s, 1.0};
  const double w4[] = {0.1, 49.0 / 90.0, 32.0 / 45.0, 49.0 / 90.0, 0.1};
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(r4.nodes()[i] - n4[i]) <= 1e-13);
    CHECK(std::abs(r4.weights()[i] - w4[i]) <= 1e-13);
  }
}

TEST_CASE("gll quadrature is exact up to degree 2p - 1") {
  for (int p = 1; p <= 10; ++p) {
    const auto r = gll_rule(p);
    for (int k = 0; k <= 2 * p - 1; ++k) {
      double sum = 0.0;
      for (int i = 0; i <= p; ++i) sum += r.weights()[i] * std::pow(r.nodes()[i], k);
      const double exact = (k % 2) ? 0.0 : 2.0 / (k + 1);
      CHECK_MESSAGE(std::abs(sum - exact) <= 1e-12, "p=" << p << " k=" << k);
    }
  }
}

TEST_CASE("gll nodes agree with an independent bisection root finder") {
  for (int p = 2; p <= scm::kMaxOrder; ++p) {
    const auto r = gll_rule(p);
    const auto roots = bisection_interior_nodes(p);
    REQUIRE(static_cast<int>(roots.size()) == p - 1);
    for (int i = 1; i < p; ++i) CHECK(std::abs(r.nodes()[i] - roots[i - 1]) <= 1e-13);
  }
}

TEST_CASE("gll weights are positive, symmetric and sum to two") {
  for (int p = 1; p <= scm::kMaxOrder; ++p) {
    const auto r = gll_rule(p);
    double sum = 0.0;
    for (int i = 0; i <= p; ++i) {
      CHECK(r.weights()[i] > 0.0);
      CHECK(std::abs(r.weights()[i] - r.weights()[p - i]) < 1e-14);
      CHECK(std::abs(r.nodes()[i] + r.nodes()[p - i]) < 1e-14);
      sum += r.weights()[i];
    }
    CHECK(std::abs(sum - 2.0) < 1e-13);
    CHECK(r.min_weight() == doctest::Approx(2.0 / (p * (p + 1))).epsilon(1e-13));
  }
}

TEST_CASE("unsupported orders are rejected") {
  CHECK_THROWS_AS(gll_rule(0), scm::ConfigError);
  CHECK_THROWS_AS(gll_rule(scm::kMaxOrder + 1), scm::ConfigError);
}

TEST_CASE("1d shape functions interpolate and partition unity") {
  for (int p = 1; p <= 8; ++p) {
    const auto b = gll_rule(p);
    for (int i = 0; i <= p; ++i)
      for (int j = 0; j <= p; ++j)
        CHECK(std::abs(b.shape(i, b.nodes()[j]) - (i == j ? 1.0 : 0.0)) < 1e-13);
    for (double x : {-0.93, -0.31, 0.07, 0.5, 0.88}) {
      double s = 0.0, ds = 0.0;
      for (int i = 0; i <= p; ++i) {
        s += b.shape(i, x);
        ds += b.shape_derivative(i, x);
      }
      CHECK(std::abs(s - 1.0) < 1e-13);
      CHECK(std::abs(ds) < 1e-11);
    }
  }
  CHECK(std::abs(gll_rule(2).shape(1, 0.5) - 0.75) < 1e-15);
}

TEST_CASE("1d shape derivatives match finite differences and the nodal matrix") {
  const int p = 6;
  const auto b = gll_rule(p);
  const double h = 1e-6;
  for (int i = 0; i <= p; ++i)
    for (double x : {-0.7, 0.1, 0.45}) {
      const double fd = (b.shape(i, x + h) - b.shape(i, x - h)) / (2 * h);
      CHECK(std::abs(b.shape_derivative(i, x) - fd) < 1e-7);
    }
  // Closed-form GLL differentiation matrix D(i, j) = N_j'(x_i).
  const auto& x = b.nodes();
  auto pp = [&](double t) { return scm::legendre(p, t).value; };
  for (int i = 0; i <= p; ++i)
    for (int j = 0; j <= p; ++j) {
      double d = 0.0;
      if (i != j)
        d = pp(x[i]) / (pp(x[j]) * (x[i] - x[j]));
      else if (i == 0)
        d = -p * (p + 1) / 4.0;
      else if (i == p)
        d = p * (p + 1) / 4.0;
      CHECK(std::abs(b.shape_derivative(j, x[i]) - d) < 1e-11);
    }
}

TEST_CASE("gauss legendre rule exactness") {
  for (int n = 1; n <= 12; ++n) {
    const auto r = scm::gauss_legendre_rule(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += r.weights[i] * std::pow(r.points[i], k);
      const double exact = (k % 2) ? 0.0 : 2.0 / (k + 1);
      CHECK(std::abs(sum - exact) < 1e-13);
    }
  }
  const auto m = scm::gauss_legendre_rule(3, 1.0, 3.0);
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) sum += m.weights[i] * m.points[i] * m.points[i];
  CHECK(std::abs(sum - 26.0 / 3.0) < 1e-13);
}

TEST_CASE("tensor basis: partition of unity, nodal delta, bilinear centre") {
  const scm::TensorBasis2d b(4, 3);
  CHECK(b.node_count() == 20);
  CHECK(b.node_index(2, 1) == 7);
  for (scm::Point2 x : {scm::Point2{0.3, -0.2}, scm::Point2{-0.9, 0.77}, scm::Point2{1.0, 1.0}}) {
    const auto ev = b.eval(x);
    double s = 0.0, gx = 0.0, gy = 0.0;
    for (int k = 0; k < b.node_count(); ++k) {
      s += ev.values[k];
      gx += ev.d_xi[k];
      gy += ev.d_eta[k];
    }
    CHECK(std::abs(s - 1.0) < 1e-13);
    CHECK(std::abs(gx) < 1e-11);
    CHECK(std::abs(gy) < 1e-11);
  }
  for (int k = 0; k < b.node_count(); ++k) {
    const auto ev = b.eval(b.node(k));
    for (int l = 0; l < b.node_count(); ++l)
      CHECK(std::abs(ev.values[l] - (k == l ? 1.0 : 0.0)) < 1e-13);
  }
  const auto c = scm::TensorBasis2d(1).eval({0.0, 0.0});
  for (double v : c.values) CHECK(std::abs(v - 0.25) < 1e-15);
}

TEST_CASE("tensor basis reproduces monomials up to its orders") {
  const int p = 5, q = 3;
  const scm::TensorBasis2d b(p, q);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int a = 0; a <= p; ++a)
    for (int c = 0; c <= q; ++c)
      for (int t = 0; t < 100; ++t) {
        const scm::Point2 x{u(rng), u(rng)};
        const auto ev = b.eval(x);
        double interp = 0.0;
        for (int k = 0; k < b.node_count(); ++k) {
          const auto n = b.node(k);
          interp += ev.values[k] * std::pow(n.x, a) * std::pow(n.y, c);
        }
        CHECK(std::abs(interp - std::pow(x.x, a) * std::pow(x.y, c)) < 1e-12);
      }
}

TEST_CASE("tensor weights are products of the 1d weights") {
  const scm::TensorBasis2d b(3, 2);
  const auto w = b.weights();
  double sum = 0.0;
  for (int k = 0; k < b.node_count(); ++k) {
    const int i = k % 4, j = k / 4;
    CHECK(w[k] == doctest::Approx(b.xi_basis().weights()[i] * b.eta_basis().weights()[j]));
    sum += w[k];
  }
  CHECK(std::abs(sum - 4.0) < 1e-13);
  CHECK(b.min_weight() == doctest::Approx(w[0]));
}
