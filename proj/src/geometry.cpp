#include "scm/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "scm/gll_basis.hpp"

namespace scm {

LevelSet constant_level_set(double value) {
  return LevelSet([value](Point2) { return value; });
}

LevelSet half_plane(double nx, double ny, double offset) {
  const double len = std::hypot(nx, ny);
  if (!(len > 0.0)) throw ConfigError("half_plane normal must be nonzero");
  const Point2 n{nx / len, ny / len};
  return LevelSet([n, offset](Point2 x) { return offset - dot(n, x); });
}

LevelSet circle(double cx, double cy, double r) {
  if (!(r > 0.0)) throw ConfigError("circle radius must be positive");
  return LevelSet([c = Point2{cx, cy}, r](Point2 x) { return norm(x - c) - r; });
}

LevelSet union_of_voids(std::vector<LevelSet> holes) {
  if (holes.empty()) throw ConfigError("union_of_voids needs at least one hole");
  return LevelSet([holes = std::move(holes)](Point2 x) {
    double phi = holes.front()(x);
    for (std::size_t i = 1; i < holes.size(); ++i) phi = std::min(phi, holes[i](x));
    return phi;
  });
}

const char* to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::Full: return "full";
    case ElementKind::Cut: return "cut";
    case ElementKind::Void: return "void";
  }
  return "?";
}

double CutQuadrature::reference_area() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

double InterfaceQuadrature::reference_length() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

namespace {

double zero_tolerance(const Box& box) { return 1e-12 * std::hypot(box.width(), box.height()); }

template <class Phi>
ElementKind classify_samples(const Phi& phi, Point2 lo, Point2 hi, int sample_depth,
                             double tol) {
  const int n = (1 << sample_depth) + 1;
  bool has_material = false, has_void = false;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Point2 x{lo.x + (hi.x - lo.x) * i / (n - 1), lo.y + (hi.y - lo.y) * j / (n - 1)};
      const double v = phi(x);
      has_material |= v > tol;
      has_void |= v < -tol;
      if (has_material && has_void) return ElementKind::Cut;
    }
  }
  if (!has_void) return ElementKind::Full;
  return has_material ? ElementKind::Cut : ElementKind::Void;
}

template <class Phi>
Point2 root_on_segment(const Phi& phi, Point2 a, Point2 b, double ftol) {
  double fa = phi(a);
  double fb = phi(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa < 0.0) == (fb < 0.0))
    throw NonBracketing("level set does not change sign on the segment");

  const Point2 d = b - a;
  // Work in the segment parameter s in [0, 1].
  double lo = 0.0, hi = 1.0, f_lo = fa, f_hi = fb;
  double s_prev = 0.0, f_prev = fa;
  double s = 1.0, f = fb;
  double width_before = 1.0;
  for (int it = 0; it < 60; ++it) {
    double cand = (f != f_prev) ? s - f * (s - s_prev) / (f - f_prev) : 0.5 * (lo + hi);
    if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
    if (it % 3 == 2 && hi - lo > 0.5 * width_before) cand = 0.5 * (lo + hi);
    if (it % 3 == 2) width_before = hi - lo;
    const double f_cand = phi(a + cand * d);
    s_prev = s;
    f_prev = f;
    s = cand;
    f = f_cand;
    if (std::abs(f) <= ftol) break;
    if ((f < 0.0) == (f_lo < 0.0)) {
      lo = s;
      f_lo = f;
    } else {
      hi = s;
      f_hi = f;
    }
    if (hi - lo < 1e-16) break;
  }
  (void)f_hi;
  return a + s * d;
}

struct PolyVertex {
  Point2 x;
  bool exit = false;  // the edge to the next vertex runs along the interface
};

class Partitioner {
 public:
  Partitioner(const LevelSet& ls, const Box& box, const PartitionOptions& opt)
      : ls_(ls), box_(box), opt_(opt), tol_(zero_tolerance(box)) {
    tensor_ = gauss_legendre_rule((opt.gauss_degree + 2) / 2);
  }

  double phi(Point2 xi) const { return ls_(box_.from_reference(xi)); }

  ElementPartition run(int sample_depth) {
    const auto phi_ref = [this](Point2 xi) { return phi(xi); };
    const ElementKind kind = classify_samples(phi_ref, {-1, -1}, {1, 1}, sample_depth, tol_);
    sample_depth_ = sample_depth;
    ElementPartition out;
    out.volume.kind = kind;
    if (kind == ElementKind::Void) {
      out.volume.volume_ratio = 0.0;
      return out;
    }
    if (kind == ElementKind::Full)
      full_leaf({-1, -1}, {1, 1}, out);
    else
      cell({-1, -1}, {1, 1}, 0, out);
    out.volume.volume_ratio = out.volume.reference_area() / 4.0;
    return out;
  }

 private:
  void cell(Point2 lo, Point2 hi, int level, ElementPartition& out) {
    const auto phi_ref = [this](Point2 xi) { return phi(xi); };
    const int sdepth = std::max(1, sample_depth_ - level);
    const ElementKind kind = classify_samples(phi_ref, lo, hi, sdepth, tol_);
    if (kind == ElementKind::Void) return;
    if (kind == ElementKind::Full) {
      full_leaf(lo, hi, out);
      return;
    }
    if (level < opt_.depth) {
      const Point2 mid = 0.5 * (lo + hi);
      cell(lo, mid, level + 1, out);
      cell({mid.x, lo.y}, {hi.x, mid.y}, level + 1, out);
      cell({lo.x, mid.y}, {mid.x, hi.y}, level + 1, out);
      cell(mid, hi, level + 1, out);
      return;
    }
    cut_leaf(lo, hi, out);
  }

  void full_leaf(Point2 lo, Point2 hi, ElementPartition& out) {
    const double hx = 0.5 * (hi.x - lo.x), hy = 0.5 * (hi.y - lo.y);
    const Point2 c = 0.5 * (lo + hi);
    const auto& r = tensor_;
    for (std::size_t j = 0; j < r.points.size(); ++j) {
      for (std::size_t i = 0; i < r.points.size(); ++i) {
        out.volume.points.push_back({c.x + hx * r.points[i], c.y + hy * r.points[j]});
        out.volume.weights.push_back(hx * hy * r.weights[i] * r.weights[j]);
      }
    }
    // A leaf edge lying on the zero iso-line with void beyond it is part of
    // the cut boundary (e.g. a cut that coincides with leaf or element edges).
    const std::array<Point2, 4> corners{lo, Point2{hi.x, lo.y}, hi, Point2{lo.x, hi.y}};
    const double probe = 1e-3 * std::max(hi.x - lo.x, hi.y - lo.y);
    for (int e = 0; e < 4; ++e) {
      const Point2 a = corners[e], b = corners[(e + 1) % 4];
      const Point2 m = 0.5 * (a + b);
      if (std::abs(phi(a)) > tol_ || std::abs(phi(b)) > tol_ || std::abs(phi(m)) > tol_) continue;
      const Point2 t = b - a;
      const Point2 n = (1.0 / norm(t)) * Point2{t.y, -t.x};  // outward for CCW corners
      if (phi(m + probe * n) >= -tol_) continue;
      add_interface_curve(c, {a, b}, out.interface);
    }
  }

  Point2 edge_root(Point2 a, double fa, Point2 b, double fb) const {
    if (std::abs(fa) <= tol_) return a;
    if (std::abs(fb) <= tol_) return b;
    return root_on_segment([this](Point2 xi) { return phi(xi); }, a, b, 1e-2 * tol_);
  }

  void cut_leaf(Point2 lo, Point2 hi, ElementPartition& out) {
    const std::array<Point2, 4> c{lo, Point2{hi.x, lo.y}, hi, Point2{lo.x, hi.y}};
    std::array<double, 4> f;
    std::array<bool, 4> in;
    for (int k = 0; k < 4; ++k) {
      f[k] = phi(c[k]);
      in[k] = f[k] >= -tol_;
    }
    // Edges whose end points agree in sign must not hide a sign change.
    for (int k = 0; k < 4; ++k) {
      const int n = (k + 1) % 4;
      const double fm = phi(0.5 * (c[k] + c[n]));
      const bool strict_same = (f[k] > tol_ && f[n] > tol_) || (f[k] < -tol_ && f[n] < -tol_);
      if (strict_same && ((fm > tol_) != (f[k] > tol_)))
        throw AmbiguousTopology("leaf edge crosses the interface twice");
    }
    const int in_count = static_cast<int>(std::count(in.begin(), in.end(), true));
    const double fc = phi(0.5 * (lo + hi));
    if (in_count == 4 || in_count == 0) {
      // corners agree but interior samples disagree: an island inside the leaf
      if ((in_count == 4 && fc < -tol_) || (in_count == 0 && fc > tol_))
        throw AmbiguousTopology("interface encloses a region inside a single leaf");
      if (in_count == 4) full_leaf(lo, hi, out);
      return;
    }

    std::array<Point2, 4> cross;  // crossing on edge k (corner k -> k+1)
    for (int k = 0; k < 4; ++k) {
      const int n = (k + 1) % 4;
      if (in[k] != in[n]) cross[k] = edge_root(c[k], f[k], c[n], f[n]);
    }

    const bool diagonal = in_count == 2 && in[0] == in[2];
    if (diagonal) {
      if (std::abs(fc) <= tol_)
        throw AmbiguousTopology("saddle point of the level set at a leaf centre");
      if (fc < 0.0) {
        // two separate material corners
        for (int k = 0; k < 4; ++k) {
          if (!in[k]) continue;
          const int prev = (k + 3) % 4;
          std::vector<PolyVertex> tri{{cross[prev], false}, {c[k], false}, {cross[k], true}};
          polygon(tri, out);
        }
        return;
      }
    }

    std::vector<PolyVertex> poly;
    for (int k = 0; k < 4; ++k) {
      const int n = (k + 1) % 4;
      if (in[k]) poly.push_back({c[k], false});
      if (in[k] && !in[n]) poly.push_back({cross[k], true});
      if (!in[k] && in[n]) poly.push_back({cross[k], false});
    }
    polygon(poly, out);
  }

  // Fan of sectors from one apex. Curved interface edges can bend around a
  // corner apex, so every candidate is scored by the smallest sine between the
  // ray from the apex and the edge tangent; the best unfolded fan wins.
  void polygon(std::vector<PolyVertex> poly, ElementPartition& out) {
    // collapse coincident neighbours (crossings that landed on a corner)
    std::vector<PolyVertex> clean;
    const double merge = 1e-14;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      if (!clean.empty() && norm(poly[i].x - clean.back().x) <= merge) {
        clean.back().exit = clean.back().exit || poly[i].exit;
        continue;
      }
      clean.push_back(poly[i]);
    }
    while (clean.size() > 1 && norm(clean.front().x - clean.back().x) <= merge) {
      clean.front().exit = clean.front().exit || clean.back().exit;
      clean.pop_back();
    }
    const std::size_t n = clean.size();
    if (n < 3) return;

    std::vector<std::vector<Point2>> edges(n);
    Point2 centroid{0, 0};
    int count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 b = clean[(i + 1) % n].x;
      edges[i] = clean[i].exit ? interface_curve(clean[i].x, b) : std::vector<Point2>{clean[i].x, b};
      for (std::size_t j = 0; j + 1 < edges[i].size(); ++j) {
        centroid = centroid + edges[i][j];
        ++count;
      }
    }
    centroid = (1.0 / count) * centroid;

    // candidate apexes: vertices off the interface, then the centroid (n means centroid)
    std::size_t best = n + 1;
    double best_quality = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c <= n; ++c) {
      if (c < n && (clean[c].exit || clean[(c + n - 1) % n].exit)) continue;
      const Point2 v = c < n ? clean[c].x : centroid;
      double quality = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (c < n && (i == c || (i + 1) % n == c)) continue;
        quality = std::min(quality, fan_quality(v, edges[i]));
      }
      if (quality > best_quality) {
        best_quality = quality;
        best = c;
      }
      if (c < n && quality > 0.2) break;  // good enough, keep the corner fan
    }
    if (best > n) throw AmbiguousTopology("cut leaf has no interior fan apex");
    const Point2 v = best < n ? clean[best].x : centroid;
    for (std::size_t i = 0; i < n; ++i) {
      if (best < n && (i == best || (i + 1) % n == best)) continue;
      if (clean[i].exit) {
        add_sector(v, edges[i], out.volume);
        add_interface_curve(v, edges[i], out.interface);
      } else {
        add_sector(v, edges[i], out.volume);
      }
    }
  }

  // Smallest sine of the angle between (C(s) - v) and C'(s); negative when the
  // collapsed map folds over.
  static double fan_quality(Point2 v, const std::vector<Point2>& curve) {
    const int samples = curve.size() > 2 ? 16 : 1;
    double q = std::numeric_limits<double>::infinity();
    for (int a = 0; a < samples; ++a) {
      Point2 pos, tan;
      curve_eval(curve, (a + 0.5) / samples, pos, tan);
      const Point2 r = pos - v;
      const double denom = norm(r) * norm(tan);
      if (denom == 0.0) return -1.0;
      q = std::min(q, cross(r, tan) / denom);
    }
    return q;
  }

  // Interface nodes between two crossings, located by root finding normal to the chord.
  std::vector<Point2> interface_curve(Point2 p0, Point2 p1) const {
    const int k = std::max(1, opt_.curve_order);
    std::vector<Point2> nodes{p0};
    const Point2 chord = p1 - p0;
    const double len = norm(chord);
    if (len <= 1e-14) return {p0, p1};
    const Point2 dir = (1.0 / len) * Point2{-chord.y, chord.x};
    bool straight = true;
    for (int j = 1; j < k; ++j) {
      const Point2 x = p0 + (static_cast<double>(j) / k) * chord;
      const Point2 y = project_to_interface(x, dir, 0.5 * len);
      straight = straight && norm(y - x) <= 1e-13 * len;
      nodes.push_back(y);
    }
    nodes.push_back(p1);
    if (straight) return {p0, p1};
    return nodes;
  }

  Point2 project_to_interface(Point2 x, Point2 dir, double max_dist) const {
    const double f0 = phi(x);
    if (std::abs(f0) <= tol_) return x;
    for (double t = max_dist / 64.0; t <= max_dist * (1.0 + 1e-12); t *= 2.0) {
      for (const double sgn : {1.0, -1.0}) {
        const Point2 y = x + (sgn * t) * dir;
        const double fy = phi(y);
        if ((fy < 0.0) != (f0 < 0.0))
          return root_on_segment([this](Point2 xi) { return phi(xi); }, x, y, 1e-2 * tol_);
      }
    }
    return x;  // no bracket nearby: keep the straight segment
  }

  // Curve through equispaced parameters s_j = j/k, j = 0..k.
  static void curve_eval(const std::vector<Point2>& nodes, double s, Point2& pos, Point2& tan) {
    const int k = static_cast<int>(nodes.size()) - 1;
    pos = {0, 0};
    tan = {0, 0};
    for (int i = 0; i <= k; ++i) {
      const double si = static_cast<double>(i) / k;
      double li = 1.0, dli = 0.0;
      for (int m = 0; m <= k; ++m) {
        if (m == i) continue;
        const double sm = static_cast<double>(m) / k;
        double prod = 1.0 / (si - sm);
        for (int j = 0; j <= k; ++j)
          if (j != i && j != m) prod *= (s - static_cast<double>(j) / k) / (si - static_cast<double>(j) / k);
        dli += prod;
        li *= (s - sm) / (si - sm);
      }
      pos = pos + li * nodes[i];
      tan = tan + dli * nodes[i];
    }
  }

  // Collapsed map x(s,t) = v + t (C(s) - v) over the region between apex v and curve C.
  void add_sector(Point2 v, const std::vector<Point2>& curve, CutQuadrature& q) const {
    const int k = static_cast<int>(curve.size()) - 1;
    const int d = opt_.gauss_degree;
    const auto rs = gauss_legendre_rule((d * k + 2 * k + 1) / 2, 0.0, 1.0);
    const auto rt = gauss_legendre_rule((d + 3) / 2, 0.0, 1.0);
    const double area_scale = std::abs(cross(curve.front() - v, curve.back() - v));
    if (k == 1 && area_scale <= 1e-14) return;
    for (std::size_t a = 0; a < rs.points.size(); ++a) {
      Point2 pos, tan;
      curve_eval(curve, rs.points[a], pos, tan);
      const double jac = std::abs(cross(tan, pos - v));
      if (jac == 0.0) continue;
      for (std::size_t b = 0; b < rt.points.size(); ++b) {
        const double t = rt.points[b];
        q.points.push_back(v + t * (pos - v));
        q.weights.push_back(rs.weights[a] * rt.weights[b] * t * jac);
      }
    }
  }

  void add_interface_curve(Point2 inside, const std::vector<Point2>& curve,
                           InterfaceQuadrature& iq) const {
    const int k = static_cast<int>(curve.size()) - 1;
    if (norm(curve.back() - curve.front()) <= 1e-14) return;
    const auto rule = gauss_legendre_rule((opt_.gauss_degree * k + k + 2) / 2, 0.0, 1.0);
    const double probe = 1e-6 * norm(curve.back() - curve.front());
    for (std::size_t a = 0; a < rule.points.size(); ++a) {
      Point2 pos, tan;
      curve_eval(curve, rule.points[a], pos, tan);
      const double speed = norm(tan);
      Point2 n = (1.0 / speed) * Point2{tan.y, -tan.x};
      // Point into the void: phi decreases along n. The material side of the
      // chord decides when the level set is flat at this resolution.
      const double dphi = phi(pos + probe * n) - phi(pos - probe * n);
      if (dphi > 0.0 || (dphi == 0.0 && dot(n, pos - inside) < 0.0)) n = -1.0 * n;
      iq.points.push_back(pos);
      iq.weights.push_back(rule.weights[a] * speed);
      iq.normals.push_back(n);
    }
    iq.vertices.push_back(curve.front());
    iq.vertices.push_back(curve.back());
  }

  const LevelSet& ls_;
  Box box_;
  PartitionOptions opt_;
  double tol_;
  int sample_depth_ = 3;
  QuadratureRule1d tensor_;
};

int element_sample_depth(int depth) { return std::max(3, depth); }

}  // namespace

ElementKind classify_element(const LevelSet& ls, const Box& box, int sample_depth) {
  if (sample_depth < 1) throw ConfigError("sample depth must be >= 1");
  return classify_samples(ls, box.lo, box.hi, sample_depth, zero_tolerance(box));
}

Point2 find_interface_root(const LevelSet& ls, Point2 a, Point2 b) {
  return find_interface_root(ls, a, b, 1e-12 * norm(b - a));
}

Point2 find_interface_root(const LevelSet& ls, Point2 a, Point2 b, double phi_tolerance) {
  return root_on_segment(ls, a, b, phi_tolerance);
}

ElementPartition partition_element(const LevelSet& ls, const Box& box,
                                   const PartitionOptions& options) {
  if (options.depth < 0) throw ConfigError("quadtree depth must be >= 0");
  if (options.gauss_degree < 1) throw ConfigError("gauss degree must be >= 1");
  Partitioner part(ls, box, options);
  return part.run(element_sample_depth(options.depth));
}

CutQuadrature build_cut_quadrature(const LevelSet& ls, const Box& box, int depth,
                                   int gauss_degree) {
  return partition_element(ls, box, {depth, gauss_degree, PartitionOptions{}.curve_order}).volume;
}

InterfaceQuadrature build_interface_quadrature(const LevelSet& ls, const Box& box, int depth,
                                               int gauss_degree) {
  return partition_element(ls, box, {depth, gauss_degree, PartitionOptions{}.curve_order})
      .interface;
}

CutQuadrature full_element_quadrature(int gauss_degree) {
  const auto r = gauss_legendre_rule((gauss_degree + 2) / 2);
  CutQuadrature q;
  q.kind = ElementKind::Full;
  for (std::size_t j = 0; j < r.points.size(); ++j)
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      q.points.push_back({r.points[i], r.points[j]});
      q.weights.push_back(r.weights[i] * r.weights[j]);
    }
  q.volume_ratio = 1.0;
  return q;
}

}  // namespace scm
