#pragma once

#include <functional>
#include <vector>

#include "scm/common.hpp"

namespace scm {

/// Signed distance description of the physical domain: phi > 0 inside the
/// material, phi < 0 in the void, phi = 0 on the cut boundary.
class LevelSet {
 public:
  using Function = std::function<double(Point2)>;

  explicit LevelSet(Function phi) : phi_(std::move(phi)) {}

  double operator()(Point2 x) const { return phi_(x); }

 private:
  Function phi_;
};

/// phi = value everywhere.
LevelSet constant_level_set(double value);
/// phi = offset - n.x with n = (nx, ny) normalized; the void lies on the side n points to.
LevelSet half_plane(double nx, double ny, double offset);
/// Circular hole of radius r centred at (cx, cy): phi = |x - c| - r.
LevelSet circle(double cx, double cy, double r);
/// Material where every hole's level set is non-negative (pointwise minimum).
LevelSet union_of_voids(std::vector<LevelSet> holes);

enum class ElementKind { Full, Cut, Void };

const char* to_string(ElementKind kind);

/// Integration rule over the physical part of an element, in reference
/// coordinates. Weights measure reference area (the full square has area 4).
struct CutQuadrature {
  std::vector<Point2> points;
  std::vector<double> weights;
  double volume_ratio = 0.0;
  ElementKind kind = ElementKind::Void;

  double reference_area() const;
};

/// Line rule along the zero iso-line inside an element, in reference
/// coordinates. Normals are reference-space unit vectors pointing into the void.
struct InterfaceQuadrature {
  std::vector<Point2> points;
  std::vector<double> weights;
  std::vector<Point2> normals;
  /// Interface vertices located by root finding (end points of each segment).
  std::vector<Point2> vertices;

  bool empty() const { return points.empty(); }
  double reference_length() const;
};

struct PartitionOptions {
  int depth = 3;          ///< quadtree levels below the element
  int gauss_degree = 10;  ///< total polynomial degree integrated exactly per sub-cell
  int curve_order = 3;    ///< Lagrange order of the interface segments in cut leaves
};

struct ElementPartition {
  CutQuadrature volume;
  InterfaceQuadrature interface;
};

/// Samples phi on a (2^d+1)^2 corner-inclusive grid over the box.
ElementKind classify_element(const LevelSet& ls, const Box& box, int sample_depth);

/// Point on [a, b] where phi vanishes. Safeguarded secant iteration with
/// bisection fallback; |phi| <= 1e-12 |b - a| on return. Throws NonBracketing.
Point2 find_interface_root(const LevelSet& ls, Point2 a, Point2 b);
Point2 find_interface_root(const LevelSet& ls, Point2 a, Point2 b, double phi_tolerance);

/// Quadtree partition of one element into volume and interface rules.
ElementPartition partition_element(const LevelSet& ls, const Box& box,
                                   const PartitionOptions& options);

CutQuadrature build_cut_quadrature(const LevelSet& ls, const Box& box, int depth,
                                   int gauss_degree);
InterfaceQuadrature build_interface_quadrature(const LevelSet& ls, const Box& box, int depth,
                                               int gauss_degree);

/// Tensor Gauss-Legendre rule on the full reference square, exact to the given degree.
CutQuadrature full_element_quadrature(int gauss_degree);

}  // namespace scm
