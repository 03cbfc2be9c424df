#include "scm/gll_basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace scm {

LegendreValue legendre(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0, p_curr = x;
  double d_prev = 0.0, d_curr = 1.0;
  for (int k = 1; k < n; ++k) {
    const double p_next = ((2.0 * k + 1.0) * x * p_curr - k * p_prev) / (k + 1.0);
    const double d_next = d_prev + (2.0 * k + 1.0) * p_curr;
    p_prev = p_curr;
    p_curr = p_next;
    d_prev = d_curr;
    d_curr = d_next;
  }
  return {p_curr, d_curr};
}

QuadratureRule1d gauss_legendre_rule(int n) {
  if (n < 1) throw ConfigError("Gauss-Legendre rule needs at least one point");
  QuadratureRule1d rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).derivative;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = -x;
    rule.points[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.0;
  return rule;
}

QuadratureRule1d gauss_legendre_rule(int n, double a, double b) {
  QuadratureRule1d rule = gauss_legendre_rule(n);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    rule.points[i] = a + half * (rule.points[i] + 1.0);
    rule.weights[i] *= half;
  }
  return rule;
}

namespace {

// (1 - x^2) P'_p(x), whose roots are the GLL nodes. Its derivative is
// -p(p+1) P_p(x) by the Legendre differential equation.
double lobatto_function(int p, double x) { return (1.0 - x * x) * legendre(p, x).derivative; }

double bisect_lobatto_root(int p, double lo, double hi) {
  double f_lo = lobatto_function(p, lo);
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = lobatto_function(p, mid);
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Fallback: bracket the k-th interior root (k = 1..p-1, ascending) by a sign scan.
double scan_lobatto_root(int p, int k) {
  const int samples = 400 * p;
  int found = 0;
  double prev_x = -1.0 + 1e-12;
  double prev_f = lobatto_function(p, prev_x);
  for (int s = 1; s <= samples; ++s) {
    const double x = -1.0 + 2.0 * s / samples - (s == samples ? 1e-12 : 0.0);
    const double f = lobatto_function(p, x);
    if ((f < 0.0) != (prev_f < 0.0)) {
      if (++found == k) return bisect_lobatto_root(p, prev_x, x);
    }
    prev_x = x;
    prev_f = f;
  }
  throw NumericalError("GLL node scan failed for order " + std::to_string(p));
}

}  // namespace

GllBasis1d gll_rule(int p) {
  if (p < 1) throw ConfigError("GLL order must be >= 1 (got " + std::to_string(p) + ")");
  if (p > kMaxOrder)
    throw ConfigError("GLL order " + std::to_string(p) + " exceeds maximum " +
                      std::to_string(kMaxOrder));

  std::vector<double> nodes(p + 1);
  nodes.front() = -1.0;
  nodes.back() = 1.0;
  const double scale = -p * (p + 1.0);
  for (int i = 1; i < p; ++i) {
    double x = -std::cos(std::numbers::pi * i / p);
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      const double f = lobatto_function(p, x);
      const double df = scale * legendre(p, x).value;
      const double dx = f / df;
      x -= dx;
      if (!(x > -1.0 && x < 1.0)) break;
      if (std::abs(dx) < 1e-14) {
        converged = true;
        break;
      }
    }
    nodes[i] = converged ? x : scan_lobatto_root(p, i);
  }
  for (int i = 0; i < (p + 1) / 2; ++i) {
    const double sym = 0.5 * (nodes[p - i] - nodes[i]);
    nodes[i] = -sym;
    nodes[p - i] = sym;
  }
  if (p % 2 == 0) nodes[p / 2] = 0.0;

  std::vector<double> weights(p + 1);
  for (int i = 0; i <= p; ++i) {
    const double pv = legendre(p, nodes[i]).value;
    weights[i] = 2.0 / (p * (p + 1.0) * pv * pv);
  }
  return GllBasis1d(p, std::move(nodes), std::move(weights));
}

GllBasis1d::GllBasis1d(int order, std::vector<double> nodes, std::vector<double> weights)
    : order_(order), nodes_(std::move(nodes)), weights_(std::move(weights)) {
  denominators_.assign(order_ + 1, 1.0);
  for (int i = 0; i <= order_; ++i)
    for (int j = 0; j <= order_; ++j)
      if (j != i) denominators_[i] *= nodes_[i] - nodes_[j];
}

double GllBasis1d::shape(int i, double xi) const {
  double num = 1.0;
  for (int j = 0; j <= order_; ++j)
    if (j != i) num *= xi - nodes_[j];
  return num / denominators_[i];
}

double GllBasis1d::shape_derivative(int i, double xi) const {
  double sum = 0.0;
  for (int m = 0; m <= order_; ++m) {
    if (m == i) continue;
    double prod = 1.0;
    for (int j = 0; j <= order_; ++j)
      if (j != i && j != m) prod *= xi - nodes_[j];
    sum += prod;
  }
  return sum / denominators_[i];
}

void GllBasis1d::eval_all(double xi, std::span<double> values,
                          std::span<double> derivatives) const {
  const int n = order_ + 1;
  double diffs[kMaxOrder + 1];
  for (int j = 0; j < n; ++j) diffs[j] = xi - nodes_[j];
  // prefix/suffix products give prod_{j != i} in O(n) per i
  double prefix[kMaxOrder + 2];
  double suffix[kMaxOrder + 2];
  prefix[0] = 1.0;
  for (int j = 0; j < n; ++j) prefix[j + 1] = prefix[j] * diffs[j];
  suffix[n] = 1.0;
  for (int j = n - 1; j >= 0; --j) suffix[j] = suffix[j + 1] * diffs[j];
  for (int i = 0; i < n; ++i) {
    values[i] = prefix[i] * suffix[i + 1] / denominators_[i];
    derivatives[i] = shape_derivative(i, xi);
  }
}

TensorBasis2d::TensorBasis2d(int p, int q) : xi_(gll_rule(p)), eta_(gll_rule(q)) {}

Point2 TensorBasis2d::node(int k) const {
  const int nx = xi_.size();
  return {xi_.nodes()[k % nx], eta_.nodes()[k / nx]};
}

double TensorBasis2d::weight(int k) const {
  const int nx = xi_.size();
  return xi_.weights()[k % nx] * eta_.weights()[k / nx];
}

std::vector<double> TensorBasis2d::weights() const {
  std::vector<double> w(node_count());
  for (int k = 0; k < node_count(); ++k) w[k] = weight(k);
  return w;
}

ShapeEval2d TensorBasis2d::eval(Point2 xi) const {
  ShapeEval2d out;
  eval(xi, out);
  return out;
}

void TensorBasis2d::eval(Point2 point, ShapeEval2d& out) const {
  const int nx = xi_.size();
  const int ny = eta_.size();
  double vx[kMaxOrder + 1], dx[kMaxOrder + 1], vy[kMaxOrder + 1], dy[kMaxOrder + 1];
  xi_.eval_all(point.x, std::span(vx, nx), std::span(dx, nx));
  eta_.eval_all(point.y, std::span(vy, ny), std::span(dy, ny));
  const int n = nx * ny;
  out.values.resize(n);
  out.d_xi.resize(n);
  out.d_eta.resize(n);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int k = j * nx + i;
      out.values[k] = vx[i] * vy[j];
      out.d_xi[k] = dx[i] * vy[j];
      out.d_eta[k] = vx[i] * dy[j];
    }
  }
}

}  // namespace scm
