#include "scm/assembly.hpp"

#include <cmath>
#include <string>

namespace scm {

void Material::validate() const {
  if (!(youngs_modulus > 0.0)) throw ConfigError("Young's modulus must be positive");
  if (!(density > 0.0)) throw ConfigError("density must be positive");
  if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5))
    throw ConfigError("Poisson ratio must lie in [0, 0.5)");
}

Eigen::Matrix3d Material::plane_strain() const {
  const double nu = poisson_ratio;
  const double c = youngs_modulus / ((1.0 + nu) * (1.0 - 2.0 * nu));
  Eigen::Matrix3d d;
  d << c * (1.0 - nu), c * nu, 0.0,
       c * nu, c * (1.0 - nu), 0.0,
       0.0, 0.0, c * (1.0 - 2.0 * nu) / 2.0;
  return d;
}

double Material::wave_speed() const { return std::sqrt(youngs_modulus / density); }

CutQuadrature gll_nodal_quadrature(const TensorBasis2d& basis) {
  CutQuadrature q;
  q.kind = ElementKind::Full;
  q.volume_ratio = 1.0;
  for (int k = 0; k < basis.node_count(); ++k) {
    q.points.push_back(basis.node(k));
    q.weights.push_back(basis.weight(k));
  }
  return q;
}

Eigen::MatrixXd element_stiffness(const TensorBasis2d& basis, const Material& mat,
                                  const CutQuadrature& quad, const AffineMap& map) {
  const int n = basis.node_count();
  const int npts = static_cast<int>(quad.points.size());
  // Physical gradients at the points, pre-scaled by sqrt(w |J|).
  Eigen::MatrixXd gx(npts, n), gy(npts, n);
  ShapeEval2d ev;
  for (int g = 0; g < npts; ++g) {
    basis.eval(quad.points[g], ev);
    const double s = std::sqrt(quad.weights[g] * map.det());
    for (int k = 0; k < n; ++k) {
      gx(g, k) = s * ev.d_xi[k] * map.dxi_dx();
      gy(g, k) = s * ev.d_eta[k] * map.deta_dy();
    }
  }
  const Eigen::MatrixXd sxx = gx.transpose() * gx;
  const Eigen::MatrixXd syy = gy.transpose() * gy;
  const Eigen::MatrixXd sxy = gx.transpose() * gy;

  const Eigen::Matrix3d d = mat.plane_strain();
  const double d11 = d(0, 0), d12 = d(0, 1), d22 = d(1, 1), d33 = d(2, 2);
  Eigen::MatrixXd k(2 * n, 2 * n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      k(2 * a, 2 * b) = d11 * sxx(a, b) + d33 * syy(a, b);
      k(2 * a, 2 * b + 1) = d12 * sxy(a, b) + d33 * sxy(b, a);
      k(2 * a + 1, 2 * b) = d12 * sxy(b, a) + d33 * sxy(a, b);
      k(2 * a + 1, 2 * b + 1) = d22 * syy(a, b) + d33 * sxx(a, b);
    }
  }
  return 0.5 * (k + k.transpose());
}

Eigen::VectorXd element_lumped_mass(const LumpedElementMass& lumped, const Material& mat,
                                    const AffineMap& map) {
  const auto n = lumped.weights.size();
  Eigen::VectorXd m(2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double v = mat.density * lumped.weights(k) * map.det();
    m(2 * k) = v;
    m(2 * k + 1) = v;
  }
  return m;
}

CartesianMesh::CartesianMesh(const MeshSpec& spec) : spec_(spec), basis_(spec.order) {
  if (spec.nx < 1 || spec.ny < 1) throw ConfigError("mesh needs at least one element per direction");
  if (!(spec.hx > 0.0 && spec.hy > 0.0)) throw ConfigError("element size must be positive");
  if (spec_.gauss_degree <= 0) spec_.gauss_degree = 4 * spec.order;

  const int ne = element_count();
  partitions_.resize(ne);
  const PartitionOptions popt{spec_.quadtree_depth, spec_.gauss_degree, PartitionOptions{}.curve_order};
  parallel_for(ne, spec_.threads, [&](int e) {
    if (!spec_.level_set) {
      partitions_[e].volume = full_element_quadrature(spec_.gauss_degree);
      return;
    }
    partitions_[e] = partition_element(*spec_.level_set, element_box(e), popt);
    auto& vol = partitions_[e].volume;
    // slivers below this ratio carry no usable material
    if (vol.kind == ElementKind::Cut && vol.volume_ratio < 1e-10) {
      partitions_[e] = ElementPartition{};
      partitions_[e].volume.kind = ElementKind::Void;
    }
  });

  const int p = spec.order;
  const int gx = spec.nx * p + 1, gy = spec.ny * p + 1;
  std::vector<int> node_id(static_cast<std::size_t>(gx) * gy, -1);
  auto grid = [&](int e, int i, int j) {
    const int ex = e % spec.nx, ey = e / spec.nx;
    return (ey * p + j) * gx + (ex * p + i);
  };
  for (int e = 0; e < ne; ++e) {
    if (kind(e) == ElementKind::Void) continue;
    for (int j = 0; j <= p; ++j)
      for (int i = 0; i <= p; ++i) node_id[grid(e, i, j)] = 0;
  }
  const auto& xi = basis_.xi_basis().nodes();
  std::vector<char> clamped;
  for (int g = 0; g < gx * gy; ++g) {
    if (node_id[g] < 0) continue;
    node_id[g] = static_cast<int>(node_coords_.size());
    const int ix = g % gx, iy = g / gx;
    const double x = spec.origin.x + (ix / p) * spec.hx + 0.5 * (xi[ix % p] + 1.0) * spec.hx;
    const double y = spec.origin.y + (iy / p) * spec.hy + 0.5 * (xi[iy % p] + 1.0) * spec.hy;
    node_coords_.push_back({x, y});
    clamped.push_back(spec.fix_left_edge && ix == 0);
  }

  std::vector<int> node_dof(2 * node_coords_.size(), -1);
  for (std::size_t k = 0; k < node_coords_.size(); ++k) {
    for (int c = 0; c < 2; ++c) {
      if (clamped[k])
        ++clamped_dofs_;
      else
        node_dof[2 * k + c] = dof_count_++;
    }
  }

  const int n = basis_.node_count();
  element_dofs_.assign(static_cast<std::size_t>(ne) * 2 * n, -1);
  for (int e = 0; e < ne; ++e) {
    if (kind(e) == ElementKind::Void) continue;
    for (int j = 0; j <= p; ++j)
      for (int i = 0; i <= p; ++i) {
        const int local = basis_.node_index(i, j);
        const int node = node_id[grid(e, i, j)];
        element_dofs_[(static_cast<std::size_t>(e) * n + local) * 2] = node_dof[2 * node];
        element_dofs_[(static_cast<std::size_t>(e) * n + local) * 2 + 1] = node_dof[2 * node + 1];
      }
  }
}

Box CartesianMesh::element_box(int e) const {
  const int ex = e % spec_.nx, ey = e / spec_.nx;
  const Point2 lo{spec_.origin.x + ex * spec_.hx, spec_.origin.y + ey * spec_.hy};
  return {lo, {lo.x + spec_.hx, lo.y + spec_.hy}};
}

std::span<const int> CartesianMesh::element_dofs(int e) const {
  const std::size_t n = 2 * basis_.node_count();
  return {element_dofs_.data() + e * n, n};
}

double CartesianMesh::material_area() const {
  double area = 0.0;
  for (int e = 0; e < element_count(); ++e) area += volume_ratio(e) * spec_.hx * spec_.hy;
  return area;
}

StiffnessRule parse_stiffness_rule(const std::string& name) {
  if (name == "cut") return StiffnessRule::Cut;
  if (name == "fitted") return StiffnessRule::Fitted;
  throw ConfigError("unknown stiffness rule '" + name + "'");
}

GlobalSystem assemble_global(const CartesianMesh& mesh, const Material& mat,
                             const AssemblyOptions& options) {
  mat.validate();
  const int ne = mesh.element_count();
  const auto& basis = mesh.basis();
  const AffineMap map = mesh.element_map();
  const CutQuadrature nodal = gll_nodal_quadrature(basis);

  GlobalSystem sys;
  sys.elements.resize(ne);
  sys.element_kinds.resize(ne);
  parallel_for(ne, options.threads, [&](int e) {
    const ElementKind kind = mesh.kind(e);
    sys.element_kinds[e] = kind;
    if (kind == ElementKind::Void) return;
    auto& ops = sys.elements[e];
    ops.lumped = lump_element(options.scheme, basis, mesh.quadrature(e), options.fit);
    ops.mass = element_lumped_mass(ops.lumped, mat, map);
    if (kind == ElementKind::Full) {
      ops.stiffness = element_stiffness(basis, mat, nodal, map);
    } else if (options.stiffness_rule == StiffnessRule::Fitted) {
      CutQuadrature fitted = nodal;
      fitted.kind = ElementKind::Cut;
      for (int k = 0; k < basis.node_count(); ++k) fitted.weights[k] = ops.lumped.weights(k);
      ops.stiffness = element_stiffness(basis, mat, fitted, map);
    } else {
      ops.stiffness = element_stiffness(basis, mat, mesh.quadrature(e), map);
    }
  });

  const int ndof = mesh.dof_count();
  sys.lumped_mass = Eigen::VectorXd::Zero(ndof);
  sys.cut_dof_mask.assign(ndof, 0);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int e = 0; e < ne; ++e) {
    if (sys.element_kinds[e] == ElementKind::Void) continue;
    const auto dofs = mesh.element_dofs(e);
    const auto& ops = sys.elements[e];
    const int nd = static_cast<int>(dofs.size());
    for (int a = 0; a < nd; ++a) {
      if (dofs[a] < 0) continue;
      sys.lumped_mass(dofs[a]) += ops.mass(a);
      if (sys.element_kinds[e] == ElementKind::Cut) sys.cut_dof_mask[dofs[a]] = 1;
      for (int b = 0; b < nd; ++b) {
        if (dofs[b] < 0) continue;
        triplets.emplace_back(dofs[a], dofs[b], ops.stiffness(a, b));
      }
    }
  }
  sys.stiffness.resize(ndof, ndof);
  sys.stiffness.setFromTriplets(triplets.begin(), triplets.end());
  sys.stiffness.makeCompressed();

  for (int i = 0; i < ndof; ++i)
    if (!(sys.lumped_mass(i) > 0.0))
      throw SingularMass("free DOF " + std::to_string(i) + " received no mass");
  return sys;
}

Eigen::VectorXd interface_traction_shape(const CartesianMesh& mesh, Point2 direction) {
  const auto& basis = mesh.basis();
  const AffineMap map = mesh.element_map();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.dof_count());
  ShapeEval2d ev;
  for (int e = 0; e < mesh.element_count(); ++e) {
    if (mesh.kind(e) == ElementKind::Void) continue;
    const auto& iq = mesh.interface(e);
    if (iq.empty()) continue;
    const auto dofs = mesh.element_dofs(e);
    for (std::size_t g = 0; g < iq.points.size(); ++g) {
      basis.eval(iq.points[g], ev);
      const Point2 t{-iq.normals[g].y, iq.normals[g].x};
      const double ds = iq.weights[g] * std::hypot(0.5 * map.hx * t.x, 0.5 * map.hy * t.y);
      for (int k = 0; k < basis.node_count(); ++k) {
        const double v = ev.values[k] * ds;
        if (dofs[2 * k] >= 0) f(dofs[2 * k]) += v * direction.x;
        if (dofs[2 * k + 1] >= 0) f(dofs[2 * k + 1]) += v * direction.y;
      }
    }
  }
  return f;
}

TractionLoad assemble_interface_traction(const CartesianMesh& mesh,
                                         std::function<double(double)> amplitude,
                                         Point2 direction) {
  return {interface_traction_shape(mesh, direction), std::move(amplitude)};
}

}  // namespace scm
