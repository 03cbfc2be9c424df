#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scm/geometry.hpp"
#include "scm/gll_basis.hpp"

namespace scm {

/// Diagonal lumping schemes for the element mass matrix.
///  - NodalGll: standard GLL nodal quadrature (optimal lumping) on uncut elements;
///    on cut elements it reduces to volume scaling.
///  - Fitted:   moment-fitted weights from the bound/equality constrained QP.
///  - Scaled:   GLL weights scaled by the element volume ratio.
///  - Hrz:      consistent-mass diagonal over the cut rule, rescaled to the cut area.
enum class LumpingScheme { NodalGll, Fitted, Scaled, Hrz };

const char* to_string(LumpingScheme scheme);
LumpingScheme parse_lumping_scheme(const std::string& name);

/// Moment-fitting equations A w = b at the tensor GLL nodes.
struct MomentFitSystem {
  Eigen::MatrixXd monomial_matrix;  ///< A(i, k) = g_i(xi_k)
  Eigen::VectorXd rhs;              ///< b(i) = integral of g_i over the cut domain
  std::vector<std::pair<int, int>> exponents;  ///< g_i = xi^a eta^b

  /// Smallest singular value of A (system health).
  double min_singular_value() const;
  double residual_norm(const Eigen::VectorXd& weights) const;
};

struct MomentFitConfig {
  double epsilon = 0.01;
  /// Below this volume ratio epsilon is replaced by one. Zero disables the switch.
  double low_volume_threshold = 0.1;
};

struct LumpedElementMass {
  LumpingScheme scheme = LumpingScheme::NodalGll;
  Eigen::VectorXd weights;   ///< reference-frame weight per node
  double residual_norm = 0.0;  ///< ||A w - b|| (fitted scheme)
  double min_weight_bound = 0.0;  ///< w_min used by the fitted scheme
};

/// Monomials xi^a eta^b, a <= p, b <= q, ordered by total degree.
std::vector<std::pair<int, int>> tensor_monomials(int p, int q);

MomentFitSystem build_moment_system(const TensorBasis2d& basis, const CutQuadrature& cutq);

/// Lower weight bound: eps v_e w_std, with eps -> 1 below the volume threshold.
double minimum_weight(const TensorBasis2d& basis, double volume_ratio, const MomentFitConfig& cfg);

LumpedElementMass solve_fitted_weights(const MomentFitSystem& sys, const TensorBasis2d& basis,
                                       const CutQuadrature& cutq, const MomentFitConfig& cfg);

LumpedElementMass scaled_weights(const TensorBasis2d& basis, double volume_ratio);

LumpedElementMass hrz_weights(const TensorBasis2d& basis, const CutQuadrature& cutq);

/// Dispatch on the scheme. Full elements always receive the GLL weights.
LumpedElementMass lump_element(LumpingScheme scheme, const TensorBasis2d& basis,
                               const CutQuadrature& cutq, const MomentFitConfig& cfg);

// ---------------------------------------------------------------------------
// Dense QP: minimize 0.5 |A w - b|^2  s.t.  w_i >= lower,  sum_i w_i = total.

struct BoundedLeastSquaresResult {
  Eigen::VectorXd x;
  std::vector<bool> at_bound;
  double residual_norm = 0.0;
  double kkt_residual = 0.0;  ///< norm of the projected gradient plus multiplier sign violations
  int iterations = 0;
};

/// Primal active-set method. The equality constraint is eliminated through a
/// null-space basis of the free variables; each subproblem is a least-squares
/// solve by Householder QR. Throws SolverStall if the KKT conditions are not met.
BoundedLeastSquaresResult solve_sum_constrained_lsq(const Eigen::MatrixXd& a,
                                                    const Eigen::VectorXd& b, double lower,
                                                    double total,
                                                    const Eigen::VectorXd& start);

}  // namespace scm
