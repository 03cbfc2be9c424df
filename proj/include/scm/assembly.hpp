#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "scm/geometry.hpp"
#include "scm/gll_basis.hpp"
#include "scm/moment_fitting.hpp"
#include "scm/parallel.hpp"

namespace scm {

struct Material {
  double youngs_modulus = 1.0;
  double poisson_ratio = 0.0;
  double density = 1.0;

  void validate() const;
  /// Plane-strain Hooke matrix in Voigt order (xx, yy, xy).
  Eigen::Matrix3d plane_strain() const;
  double wave_speed() const;
};

/// Reference-to-physical map of an axis-aligned element of size hx by hy.
struct AffineMap {
  double hx = 2.0;
  double hy = 2.0;

  double det() const { return 0.25 * hx * hy; }
  double dxi_dx() const { return 2.0 / hx; }
  double deta_dy() const { return 2.0 / hy; }
};

/// GLL nodal quadrature over the full reference element.
CutQuadrature gll_nodal_quadrature(const TensorBasis2d& basis);

/// K_e = int B^T D B over the quadrature's domain. DOFs are interleaved (ux, uy) per node.
Eigen::MatrixXd element_stiffness(const TensorBasis2d& basis, const Material& mat,
                                  const CutQuadrature& quad, const AffineMap& map);

/// Diagonal element mass: rho w_k |det J| repeated for both displacement components.
Eigen::VectorXd element_lumped_mass(const LumpedElementMass& lumped, const Material& mat,
                                    const AffineMap& map);

struct MeshSpec {
  Point2 origin{0.0, 0.0};
  int nx = 1;
  int ny = 1;
  double hx = 1.0;
  double hy = 1.0;
  int order = 1;
  std::optional<LevelSet> level_set;  ///< absent: every element is full
  int quadtree_depth = 3;
  int gauss_degree = 0;    ///< 0 selects 4 * order
  bool fix_left_edge = false;  ///< clamp both components on x = origin.x
  int threads = 1;
};

/// Structured grid of spectral elements over an embedding rectangle.
class CartesianMesh {
 public:
  explicit CartesianMesh(const MeshSpec& spec);

  const MeshSpec& spec() const { return spec_; }
  const TensorBasis2d& basis() const { return basis_; }
  AffineMap element_map() const { return {spec_.hx, spec_.hy}; }

  int element_count() const { return spec_.nx * spec_.ny; }
  Box element_box(int e) const;
  ElementKind kind(int e) const { return partitions_[e].volume.kind; }
  const CutQuadrature& quadrature(int e) const { return partitions_[e].volume; }
  const InterfaceQuadrature& interface(int e) const { return partitions_[e].interface; }
  double volume_ratio(int e) const { return partitions_[e].volume.volume_ratio; }

  /// Free-DOF index per element DOF (2 per node, interleaved); -1 marks a clamped DOF.
  std::span<const int> element_dofs(int e) const;
  int dof_count() const { return dof_count_; }
  int active_node_count() const { return static_cast<int>(node_coords_.size()); }
  int clamped_dof_count() const { return clamped_dofs_; }
  Point2 node_coordinate(int node) const { return node_coords_[node]; }
  /// Physical area of the material: sum of v_e times the element area.
  double material_area() const;

 private:
  MeshSpec spec_;
  TensorBasis2d basis_;
  std::vector<ElementPartition> partitions_;
  std::vector<int> element_dofs_;
  std::vector<Point2> node_coords_;
  int dof_count_ = 0;
  int clamped_dofs_ = 0;
};

enum class StiffnessRule { Cut, Fitted };

StiffnessRule parse_stiffness_rule(const std::string& name);

struct AssemblyOptions {
  LumpingScheme scheme = LumpingScheme::Fitted;
  MomentFitConfig fit;
  StiffnessRule stiffness_rule = StiffnessRule::Cut;
  int threads = 1;
};

struct ElementOperators {
  Eigen::MatrixXd stiffness;
  Eigen::VectorXd mass;
  LumpedElementMass lumped;
};

struct GlobalSystem {
  Eigen::SparseMatrix<double, Eigen::RowMajor> stiffness;
  Eigen::VectorXd lumped_mass;
  /// Per-element operators (empty for void elements) for the CFL estimate.
  std::vector<ElementOperators> elements;
  std::vector<ElementKind> element_kinds;
  /// 1 for DOFs that belong to a cut element.
  std::vector<char> cut_dof_mask;

  int dof_count() const { return static_cast<int>(lumped_mass.size()); }
};

GlobalSystem assemble_global(const CartesianMesh& mesh, const Material& mat,
                             const AssemblyOptions& options);

/// Spatial load f_shape * amplitude(t).
struct TractionLoad {
  Eigen::VectorXd shape;
  std::function<double(double)> amplitude;

  double amplitude_at(double t) const { return amplitude ? amplitude(t) : 0.0; }
  Eigen::VectorXd at(double t) const { return amplitude_at(t) * shape; }
};

/// Line integral of N^T along the zero iso-line for a uniform unit traction
/// in the given direction.
Eigen::VectorXd interface_traction_shape(const CartesianMesh& mesh, Point2 direction);

TractionLoad assemble_interface_traction(const CartesianMesh& mesh,
                                         std::function<double(double)> amplitude,
                                         Point2 direction);

}  // namespace scm
