#pragma once

#include <span>
#include <vector>

#include "scm/common.hpp"

namespace scm {

inline constexpr int kMaxOrder = 12;

/// Value and first derivative of the Legendre polynomial P_n at x.
struct LegendreValue {
  double value;
  double derivative;
};
LegendreValue legendre(int n, double x);

/// One-dimensional quadrature rule on [-1, 1].
struct QuadratureRule1d {
  std::vector<double> points;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, exact for polynomials of degree 2n-1.
QuadratureRule1d gauss_legendre_rule(int n);

/// Gauss-Legendre rule mapped onto [a, b].
QuadratureRule1d gauss_legendre_rule(int n, double a, double b);

/// Gauss-Lobatto-Legendre nodes, weights and the Lagrange basis they support.
class GllBasis1d {
 public:
  GllBasis1d() = default;
  GllBasis1d(int order, std::vector<double> nodes, std::vector<double> weights);

  int order() const { return order_; }
  int size() const { return order_ + 1; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  double min_weight() const { return weights_.front(); }

  /// Lagrange shape function N_i at xi.
  double shape(int i, double xi) const;
  /// dN_i/dxi at xi.
  double shape_derivative(int i, double xi) const;

  /// All shape values and derivatives at xi in one pass.
  void eval_all(double xi, std::span<double> values, std::span<double> derivatives) const;

 private:
  int order_ = 0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> denominators_;  // prod_{j != i} (x_i - x_j)
};

/// GLL rule of order p (p+1 nodes). Throws ConfigError for p < 1 or p > kMaxOrder.
GllBasis1d gll_rule(int p);

/// Shape-function values and reference gradients at one point.
struct ShapeEval2d {
  std::vector<double> values;
  std::vector<double> d_xi;
  std::vector<double> d_eta;
};

/// Tensor-product GLL basis on [-1,1]^2. Node k = j*(p+1) + i couples the
/// i-th xi node with the j-th eta node.
class TensorBasis2d {
 public:
  TensorBasis2d() = default;
  TensorBasis2d(int p, int q);
  explicit TensorBasis2d(int p) : TensorBasis2d(p, p) {}

  const GllBasis1d& xi_basis() const { return xi_; }
  const GllBasis1d& eta_basis() const { return eta_; }
  int order_xi() const { return xi_.order(); }
  int order_eta() const { return eta_.order(); }
  int node_count() const { return xi_.size() * eta_.size(); }

  int node_index(int i, int j) const { return j * xi_.size() + i; }
  Point2 node(int k) const;
  /// Tensor GLL weight of node k.
  double weight(int k) const;
  std::vector<double> weights() const;
  double min_weight() const { return xi_.min_weight() * eta_.min_weight(); }

  ShapeEval2d eval(Point2 xi) const;
  void eval(Point2 xi, ShapeEval2d& out) const;

 private:
  GllBasis1d xi_;
  GllBasis1d eta_;
};

}  // namespace scm
