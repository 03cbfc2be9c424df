#include "scm/moment_fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scm {

const char* to_string(LumpingScheme scheme) {
  switch (scheme) {
    case LumpingScheme::NodalGll: return "nodal_gll";
    case LumpingScheme::Fitted: return "fitted";
    case LumpingScheme::Scaled: return "scaled";
    case LumpingScheme::Hrz: return "hrz";
  }
  return "?";
}

LumpingScheme parse_lumping_scheme(const std::string& name) {
  if (name == "nodal_gll" || name == "gll") return LumpingScheme::NodalGll;
  if (name == "fitted") return LumpingScheme::Fitted;
  if (name == "scaled") return LumpingScheme::Scaled;
  if (name == "hrz") return LumpingScheme::Hrz;
  throw ConfigError("unknown lumping scheme '" + name + "'");
}

double MomentFitSystem::min_singular_value() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(monomial_matrix);
  return svd.singularValues().minCoeff();
}

double MomentFitSystem::residual_norm(const Eigen::VectorXd& weights) const {
  return (monomial_matrix * weights - rhs).norm();
}

std::vector<std::pair<int, int>> tensor_monomials(int p, int q) {
  std::vector<std::pair<int, int>> out;
  for (int deg = 0; deg <= p + q; ++deg)
    for (int a = std::min(deg, p); a >= 0 && deg - a <= q; --a) out.emplace_back(a, deg - a);
  return out;
}

MomentFitSystem build_moment_system(const TensorBasis2d& basis, const CutQuadrature& cutq) {
  if (cutq.kind == ElementKind::Void || cutq.points.empty())
    throw VoidElement("moment fitting requested for an element without material");
  MomentFitSystem sys;
  sys.exponents = tensor_monomials(basis.order_xi(), basis.order_eta());
  const int m = static_cast<int>(sys.exponents.size());
  const int n = basis.node_count();
  const int pmax = std::max(basis.order_xi(), basis.order_eta());

  auto powers = [pmax](double x) {
    std::vector<double> pw(pmax + 1, 1.0);
    for (int k = 1; k <= pmax; ++k) pw[k] = pw[k - 1] * x;
    return pw;
  };

  sys.monomial_matrix.resize(m, n);
  for (int k = 0; k < n; ++k) {
    const Point2 x = basis.node(k);
    const auto px = powers(x.x), py = powers(x.y);
    for (int i = 0; i < m; ++i)
      sys.monomial_matrix(i, k) = px[sys.exponents[i].first] * py[sys.exponents[i].second];
  }

  sys.rhs = Eigen::VectorXd::Zero(m);
  for (std::size_t g = 0; g < cutq.points.size(); ++g) {
    const auto px = powers(cutq.points[g].x), py = powers(cutq.points[g].y);
    const double w = cutq.weights[g];
    for (int i = 0; i < m; ++i)
      sys.rhs(i) += w * px[sys.exponents[i].first] * py[sys.exponents[i].second];
  }
  return sys;
}

double minimum_weight(const TensorBasis2d& basis, double volume_ratio,
                      const MomentFitConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0))
    throw ConfigError("moment fitting epsilon must lie in (0, 1]");
  const double eps = volume_ratio < cfg.low_volume_threshold ? 1.0 : cfg.epsilon;
  return eps * volume_ratio * basis.min_weight();
}

namespace {

// Orthonormal basis of the complement of the all-ones direction in R^m.
Eigen::MatrixXd sum_null_space(int m) {
  if (m == 1) return Eigen::MatrixXd(1, 0);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m);
  v(0) += std::sqrt(static_cast<double>(m));
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(m, m) - (2.0 / v.squaredNorm()) * v * v.transpose();
  return h.rightCols(m - 1);
}

}  // namespace

BoundedLeastSquaresResult solve_sum_constrained_lsq(const Eigen::MatrixXd& a,
                                                    const Eigen::VectorXd& b, double lower,
                                                    double total,
                                                    const Eigen::VectorXd& start) {
  const int n = static_cast<int>(a.cols());
  const double slack = total - n * lower;
  const double feas_tol = 1e-12 * std::max(1.0, std::abs(total));
  if (slack < -feas_tol)
    throw NumericalError("moment fitting bounds are infeasible (n * w_min exceeds the target)");

  Eigen::VectorXd x = start;
  std::vector<bool> active(n, false);
  for (int i = 0; i < n; ++i) {
    if (x(i) <= lower) {
      x(i) = lower;
      active[i] = true;
    }
  }

  const double scale = a.norm() * (a.norm() * std::max(1.0, x.norm()) + b.norm());
  const double mult_tol = 1e-13 * scale;

  BoundedLeastSquaresResult res;
  const int max_iter = 50 * n + 100;
  bool optimal = false;
  double lambda = 0.0;
  Eigen::VectorXd grad;

  int it = 0;
  for (; it < max_iter; ++it) {
    std::vector<int> free_idx;
    for (int i = 0; i < n; ++i)
      if (!active[i]) free_idx.push_back(i);
    const int m = static_cast<int>(free_idx.size());

    Eigen::VectorXd target = x;
    if (m > 0) {
      const double free_total = total - (n - m) * lower;
      Eigen::MatrixXd af(a.rows(), m);
      for (int j = 0; j < m; ++j) af.col(j) = a.col(free_idx[j]);
      Eigen::VectorXd fixed = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i)
        if (active[i]) fixed(i) = lower;
      const Eigen::VectorXd xp = Eigen::VectorXd::Constant(m, free_total / m);
      const Eigen::VectorXd r0 = b - a * fixed - af * xp;
      Eigen::VectorXd xf = xp;
      if (m > 1) {
        const Eigen::MatrixXd z = sum_null_space(m);
        const Eigen::MatrixXd az = af * z;
        const Eigen::VectorXd y = az.colPivHouseholderQr().solve(r0);
        xf += z * y;
      }
      for (int j = 0; j < m; ++j) target(free_idx[j]) = xf(j);
      for (int i = 0; i < n; ++i)
        if (active[i]) target(i) = lower;
    }

    // Step towards the subspace minimizer, stopping at the first bound hit.
    const Eigen::VectorXd d = target - x;
    double alpha = 1.0;
    int blocking = -1;
    for (int i : free_idx) {
      if (d(i) < 0.0) {
        const double ai = (lower - x(i)) / d(i);
        if (ai < alpha) {
          alpha = ai;
          blocking = i;
        }
      }
    }
    if (blocking >= 0) {
      x += alpha * d;
      x(blocking) = lower;
      active[blocking] = true;
      continue;
    }
    x = target;

    // Multipliers: grad_i = lambda + mu_i, mu_i >= 0 on the active bounds.
    grad = a.transpose() * (a * x - b);
    if (m > 0) {
      lambda = 0.0;
      for (int i : free_idx) lambda += grad(i);
      lambda /= m;
    } else {
      lambda = grad.minCoeff();
    }
    int drop = -1;
    double most_negative = -mult_tol;
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      const double mu = grad(i) - lambda;
      if (mu < most_negative) {
        most_negative = mu;
        drop = i;
      }
    }
    if (drop < 0) {
      optimal = true;
      break;
    }
    active[drop] = false;
  }

  grad = a.transpose() * (a * x - b);
  double kkt2 = 0.0;
  {
    int m = 0;
    double lam = 0.0;
    for (int i = 0; i < n; ++i)
      if (!active[i]) {
        lam += grad(i);
        ++m;
      }
    lam = m > 0 ? lam / m : grad.minCoeff();
    for (int i = 0; i < n; ++i) {
      const double gi = grad(i) - lam;
      const double v = active[i] ? std::min(0.0, gi) : gi;
      kkt2 += v * v;
    }
  }
  res.x = x;
  res.at_bound = active;
  res.residual_norm = (a * x - b).norm();
  res.kkt_residual = std::sqrt(kkt2) / scale;
  res.iterations = it;
  if (!optimal || res.kkt_residual > 1e-10)
    throw SolverStall("moment fitting QP did not reach a KKT point (relative residual " +
                      std::to_string(res.kkt_residual) + ")");
  return res;
}

LumpedElementMass solve_fitted_weights(const MomentFitSystem& sys, const TensorBasis2d& basis,
                                       const CutQuadrature& cutq, const MomentFitConfig& cfg) {
  const double area = cutq.reference_area();
  const double ve = area / 4.0;
  if (!(ve > 0.0)) throw VoidElement("fitted weights need a positive volume ratio");
  const double wmin = minimum_weight(basis, ve, cfg);

  // Feasible start: bound plus the remaining area distributed like the GLL weights.
  const auto gll = basis.weights();
  const Eigen::VectorXd wg = Eigen::Map<const Eigen::VectorXd>(gll.data(), basis.node_count());
  const double slack = std::max(0.0, area - basis.node_count() * wmin);
  const Eigen::VectorXd start =
      Eigen::VectorXd::Constant(basis.node_count(), wmin) + (slack / wg.sum()) * wg;

  const auto qp = solve_sum_constrained_lsq(sys.monomial_matrix, sys.rhs, wmin, area, start);
  LumpedElementMass out;
  out.scheme = LumpingScheme::Fitted;
  out.weights = qp.x;
  out.residual_norm = qp.residual_norm;
  out.min_weight_bound = wmin;
  return out;
}

LumpedElementMass scaled_weights(const TensorBasis2d& basis, double volume_ratio) {
  LumpedElementMass out;
  out.scheme = LumpingScheme::Scaled;
  const auto w = basis.weights();
  out.weights = volume_ratio * Eigen::Map<const Eigen::VectorXd>(w.data(), basis.node_count());
  return out;
}

LumpedElementMass hrz_weights(const TensorBasis2d& basis, const CutQuadrature& cutq) {
  const int n = basis.node_count();
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  ShapeEval2d ev;
  for (std::size_t g = 0; g < cutq.points.size(); ++g) {
    basis.eval(cutq.points[g], ev);
    for (int i = 0; i < n; ++i) diag(i) += cutq.weights[g] * ev.values[i] * ev.values[i];
  }
  const double sum = diag.sum();
  if (!(sum > 0.0)) throw NumericalError("HRZ lumping: consistent-mass diagonal sums to zero");
  LumpedElementMass out;
  out.scheme = LumpingScheme::Hrz;
  out.weights = (cutq.reference_area() / sum) * diag;
  return out;
}

LumpedElementMass lump_element(LumpingScheme scheme, const TensorBasis2d& basis,
                               const CutQuadrature& cutq, const MomentFitConfig& cfg) {
  if (cutq.kind == ElementKind::Void) throw VoidElement("cannot lump a void element");
  if (cutq.kind == ElementKind::Full) {
    LumpedElementMass out = scaled_weights(basis, 1.0);
    out.scheme = scheme;
    return out;
  }
  switch (scheme) {
    case LumpingScheme::Fitted: {
      const auto sys = build_moment_system(basis, cutq);
      return solve_fitted_weights(sys, basis, cutq, cfg);
    }
    case LumpingScheme::Hrz: return hrz_weights(basis, cutq);
    case LumpingScheme::NodalGll:
    case LumpingScheme::Scaled: {
      LumpedElementMass out = scaled_weights(basis, cutq.reference_area() / 4.0);
      out.scheme = scheme;
      return out;
    }
  }
  throw ConfigError("unknown lumping scheme");
}

}  // namespace scm
