#include "scm/bar_benchmark.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace scm {

double HannPulse::operator()(double t) const {
  if (t < 0.0 || t >= duration()) return 0.0;
  const double w = 2.0 * std::numbers::pi * frequency;
  const double s = std::sin(w * t / (2.0 * cycles));
  return amplitude * std::sin(w * t) * s * s;
}

double hann_load(const HannPulse& pulse, double t) { return pulse(t); }

void BarBenchmarkConfig::validate() const {
  if (!(lx > 0.0 && ly > 0.0)) throw ConfigError("bar dimensions must be positive");
  if (!(cut_fraction > 0.0 && cut_fraction <= 1.0))
    throw ConfigError("cut fraction must lie in (0, 1]");
  if (order < 1 || order > kMaxOrder) throw ConfigError("order out of range");
  if (elements < 1) throw ConfigError("need at least one element");
  if (!(dt > 0.0) || !(t_end > 0.0)) throw ConfigError("dt and t_end must be positive");
  if (pulse.cycles < 1 || !(pulse.frequency > 0.0)) throw ConfigError("invalid pulse");
  if (std::abs(load_direction) != 1.0) throw ConfigError("load direction must be +1 or -1");
  material.validate();
  const double c = material.wave_speed();
  if (c * t_end > lx) throw ReflectionRegime("the pulse front reflects off the clamped end before t_end");
}

int elements_for_size(double lx, double h, double cut_fraction) {
  if (!(h > 0.0)) throw ConfigError("element size must be positive");
  return std::max(1, static_cast<int>(std::lround(lx / h + 1.0 - cut_fraction)));
}

double analytic_rod_velocity(double x, double t, const BarBenchmarkConfig& cfg) {
  const double c = cfg.material.wave_speed();
  if (x < c * t - cfg.lx)
    throw ReflectionRegime("reference solution queried after the reflected front passed");
  const double ell = x + c * t - cfg.lx;
  const double window = c * cfg.pulse.duration();
  if (ell < 0.0 || ell > window) return 0.0;
  return c / cfg.material.youngs_modulus * cfg.pulse(ell / c);
}

CartesianMesh make_bar_mesh(const BarBenchmarkConfig& cfg) {
  MeshSpec spec;
  spec.nx = cfg.elements;
  spec.ny = 1;
  spec.hx = cfg.element_size();
  spec.hy = cfg.ly;
  spec.order = cfg.order;
  spec.level_set = half_plane(1.0, 0.0, cfg.lx);
  spec.quadtree_depth = cfg.quadtree_depth;
  spec.fix_left_edge = true;
  spec.threads = cfg.threads;
  return CartesianMesh(spec);
}

double l2_velocity_error(const CartesianMesh& mesh, const Eigen::VectorXd& velocity,
                         const std::function<Point2(Point2)>& reference) {
  const auto& basis = mesh.basis();
  const AffineMap map = mesh.element_map();
  const CutQuadrature full = full_element_quadrature(4 * basis.order_xi() + 8);
  double num = 0.0, den = 0.0;
  ShapeEval2d ev;
  for (int e = 0; e < mesh.element_count(); ++e) {
    if (mesh.kind(e) == ElementKind::Void) continue;
    const CutQuadrature& q = mesh.kind(e) == ElementKind::Full ? full : mesh.quadrature(e);
    const auto dofs = mesh.element_dofs(e);
    const Box box = mesh.element_box(e);
    for (std::size_t g = 0; g < q.points.size(); ++g) {
      basis.eval(q.points[g], ev);
      Point2 vh{0.0, 0.0};
      for (int k = 0; k < basis.node_count(); ++k) {
        if (dofs[2 * k] >= 0) vh.x += ev.values[k] * velocity(dofs[2 * k]);
        if (dofs[2 * k + 1] >= 0) vh.y += ev.values[k] * velocity(dofs[2 * k + 1]);
      }
      const Point2 vr = reference(box.from_reference(q.points[g]));
      const double w = q.weights[g] * map.det();
      const Point2 d = vh - vr;
      num += w * dot(d, d);
      den += w * dot(vr, vr);
    }
  }
  if (den < 1e-30) throw ZeroReference("reference velocity field has zero norm");
  return std::sqrt(num / den);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct BarSetup {
  CartesianMesh mesh;
  GlobalSystem system;
  TractionLoad load;
  CriticalTimeStep cfl;
};

BarSetup setup_bar(const BarBenchmarkConfig& cfg) {
  cfg.validate();
  CartesianMesh mesh = make_bar_mesh(cfg);
  AssemblyOptions opt;
  opt.scheme = cfg.scheme;
  opt.fit.epsilon = cfg.epsilon;
  opt.fit.low_volume_threshold = cfg.low_volume_threshold;
  opt.stiffness_rule = cfg.stiffness_rule;
  opt.threads = cfg.threads;
  GlobalSystem system = assemble_global(mesh, cfg.material, opt);
  const HannPulse pulse = cfg.pulse;
  TractionLoad load = assemble_interface_traction(
      mesh, [pulse](double t) { return pulse(t); }, {cfg.load_direction, 0.0});
  CriticalTimeStep cfl = critical_time_steps(system, cfg.threads);
  return {std::move(mesh), std::move(system), std::move(load), std::move(cfl)};
}

// Largest step not above dt_max that divides t_end evenly.
std::pair<double, long> fit_step(double t_end, double dt_max) {
  const long n = static_cast<long>(std::ceil(t_end / dt_max * (1.0 - 1e-12)));
  return {t_end / n, n};
}

double bar_error(const BarSetup& s, const BarBenchmarkConfig& cfg, const Eigen::VectorXd& v) {
  return l2_velocity_error(s.mesh, v, [&](Point2 x) {
    // The rod response is linear in the traction, so the sign carries over.
    return Point2{cfg.load_direction * analytic_rod_velocity(x.x, cfg.t_end, cfg), 0.0};
  });
}

}  // namespace

BarResult run_bar(const BarBenchmarkConfig& cfg) {
  const auto t0 = Clock::now();
  const BarSetup s = setup_bar(cfg);
  const auto [dt, steps] = fit_step(cfg.t_end, std::min(cfg.dt, kTimeStepSafety * s.cfl.global_dt));
  const int n = s.system.dof_count();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  CdmState state = cdm_initialize(s.system, s.load, zero, zero, dt);
  for (long k = 0; k < steps; ++k) {
    cdm_step(s.system, s.load, state, dt);
    state.time = (k + 1) * dt;
  }
  const Eigen::VectorXd before = state.previous;
  cdm_step(s.system, s.load, state, dt);

  BarResult r;
  r.h = cfg.element_size();
  r.dofs = n;
  r.dt = dt;
  r.steps = steps;
  r.velocity = (state.current - before) / (2.0 * dt);
  r.error = bar_error(s, cfg, r.velocity);
  r.wall_time = seconds_since(t0);
  return r;
}

BarResult run_bar_lts(const BarBenchmarkConfig& cfg, int* refinement_out) {
  const auto t0 = Clock::now();
  const BarSetup s = setup_bar(cfg);
  const double coarse_cfl = std::isinf(s.cfl.uncut_dt) ? s.cfl.global_dt : s.cfl.uncut_dt;
  const auto [dt, steps] = fit_step(cfg.t_end, std::min(cfg.dt, kTimeStepSafety * coarse_cfl));
  LtsConfig lts;
  lts.dt = dt;
  lts.refinement = choose_pt(dt, s.cfl.cut_dt);
  lts.fine_mask = s.system.cut_dof_mask;
  if (refinement_out) *refinement_out = lts.refinement;

  const LeapfrogLts solver(s.system, s.load, lts);
  const int n = s.system.dof_count();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  LtsState state = solver.initialize(zero, zero);
  for (long k = 0; k < steps; ++k) {
    solver.step(state);
    state.time = (k + 1) * dt;
  }
  const Eigen::VectorXd before = state.z_previous;
  solver.step(state);

  BarResult r;
  r.h = cfg.element_size();
  r.dofs = n;
  r.dt = dt;
  r.steps = steps;
  r.velocity = solver.displacement(state.z_current - before) / (2.0 * dt);
  r.error = bar_error(s, cfg, r.velocity);
  r.wall_time = seconds_since(t0);
  return r;
}

std::vector<ConvergenceRow> run_bar_convergence(const ConvergenceGrid& grid, int threads) {
  struct Cell {
    BarBenchmarkConfig cfg;
    bool uses_epsilon;
  };
  std::vector<Cell> cells;
  const std::size_t nsize = grid.elements.empty() ? grid.sizes.size() : grid.elements.size();
  if (nsize == 0) throw ConfigError("convergence grid needs element counts or sizes");
  for (int p : grid.orders)
    for (double f : grid.cut_fractions)
      for (LumpingScheme scheme : grid.schemes) {
        const bool fitted = scheme == LumpingScheme::Fitted;
        const std::vector<double> eps = fitted ? grid.epsilons : std::vector<double>{grid.base.epsilon};
        for (double e : eps)
          for (std::size_t i = 0; i < nsize; ++i) {
            BarBenchmarkConfig c = grid.base;
            c.order = p;
            c.cut_fraction = f;
            c.scheme = scheme;
            c.epsilon = e;
            c.threads = 1;
            c.elements = grid.elements.empty() ? elements_for_size(c.lx, grid.sizes[i], f)
                                               : grid.elements[i];
            c.validate();
            cells.push_back({c, fitted});
          }
      }

  std::vector<ConvergenceRow> rows(cells.size());
  parallel_for(static_cast<int>(cells.size()), threads, [&](int i) {
    const auto& c = cells[i].cfg;
    const BarResult r = run_bar(c);
    rows[i] = {r.h, c.order, c.cut_fraction, c.scheme,
               cells[i].uses_epsilon ? c.epsilon : std::numeric_limits<double>::quiet_NaN(),
               r.dofs, r.dt, r.error, r.wall_time};
  });
  return rows;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << "h,p,cut_fraction,scheme,epsilon,dofs,dt,error,wall_time\n";
  for (const auto& r : rows)
    os << format_double(r.h) << ',' << r.order << ',' << format_double(r.cut_fraction) << ','
       << to_string(r.scheme) << ',' << format_double(r.epsilon) << ',' << r.dofs << ','
       << format_double(r.dt) << ',' << format_double(r.error) << ','
       << format_double(r.wall_time) << '\n';
}

std::vector<DtCritRow> run_dtcrit_sweep(const std::vector<int>& orders,
                                        const std::vector<double>& fractions,
                                        const std::vector<LumpingScheme>& schemes,
                                        const std::vector<double>& epsilons,
                                        double low_volume_threshold, int threads) {
  std::vector<DtCritRow> rows;
  for (int p : orders) {
    if (p < 1 || p > kMaxOrder) throw ConfigError("order out of range");
    for (double f : fractions) {
      if (!(f > 0.0 && f < 1.0)) throw ConfigError("fractions must lie in (0, 1)");
      for (LumpingScheme s : schemes) {
        if (s == LumpingScheme::Fitted) {
          for (double e : epsilons) rows.push_back({p, f, s, e, 0.0});
        } else {
          rows.push_back({p, f, s, std::numeric_limits<double>::quiet_NaN(), 0.0});
        }
      }
    }
  }
  parallel_for(static_cast<int>(rows.size()), threads, [&](int i) {
    auto& r = rows[i];
    MomentFitConfig fit;
    fit.epsilon = std::isnan(r.epsilon) ? fit.epsilon : r.epsilon;
    fit.low_volume_threshold = low_volume_threshold;
    r.dt_ratio = critical_dt_ratio(r.order, r.fraction, r.scheme, fit);
  });
  return rows;
}

void write_dtcrit_csv(std::ostream& os, const std::vector<DtCritRow>& rows) {
  os << "p,fraction,scheme,epsilon,dt_ratio\n";
  for (const auto& r : rows)
    os << r.order << ',' << format_double(r.fraction) << ',' << to_string(r.scheme) << ','
       << format_double(r.epsilon) << ',' << format_double(r.dt_ratio) << '\n';
}

}  // namespace scm
