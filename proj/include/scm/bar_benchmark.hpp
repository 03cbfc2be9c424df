#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scm/assembly.hpp"
#include "scm/integrators.hpp"

namespace scm {

/// p(t) = p sin(wt) sin^2(wt / 2n) on [0, n/f], zero afterwards.
struct HannPulse {
  double amplitude = 1e6;
  double frequency = 20.0;
  int cycles = 5;

  double duration() const { return cycles / frequency; }
  double operator()(double t) const;
};

double hann_load(const HannPulse& pulse, double t);

/// Clamped bar under a uniform traction on its embedded right end x = lx.
/// The mesh has N elements of size h = lx / (N - 1 + cut_fraction), so the
/// last element holds material over cut_fraction of its width.
struct BarBenchmarkConfig {
  double lx = 1.0;
  double ly = 0.1;
  double cut_fraction = 1.0;  ///< material fraction of the last element, (0, 1]
  int order = 5;
  int elements = 10;
  Material material{};
  HannPulse pulse{};
  /// x-component of the traction direction on the end face; -1 pushes on the bar.
  double load_direction = -1.0;
  double dt = 1e-5;
  double t_end = 0.4;
  LumpingScheme scheme = LumpingScheme::Fitted;
  double epsilon = 0.01;
  double low_volume_threshold = 0.1;
  StiffnessRule stiffness_rule = StiffnessRule::Cut;
  int quadtree_depth = 3;
  int threads = 1;

  double element_size() const { return lx / (elements - 1 + cut_fraction); }
  void validate() const;
};

/// Number of elements whose size is closest to h for the given cut fraction.
int elements_for_size(double lx, double h, double cut_fraction);

/// Longitudinal rod velocity (c/E) p(l/c), l = x + ct - lx, for a unit tensile
/// end traction scaled by the pulse, before the reflected front reaches x.
/// Throws ReflectionRegime otherwise.
double analytic_rod_velocity(double x, double t, const BarBenchmarkConfig& cfg);

CartesianMesh make_bar_mesh(const BarBenchmarkConfig& cfg);

/// Relative L2 norm of (v_h - v_ref) over the material, using each element's
/// Gauss or cut rule. v_h holds interleaved nodal velocities on the free DOFs.
/// Throws ZeroReference when the reference norm vanishes.
double l2_velocity_error(const CartesianMesh& mesh, const Eigen::VectorXd& velocity,
                         const std::function<Point2(Point2)>& reference);

struct BarResult {
  double h = 0.0;
  int dofs = 0;
  double dt = 0.0;
  long steps = 0;
  double error = 0.0;
  double wall_time = 0.0;
  Eigen::VectorXd velocity;  ///< free-DOF velocities at t_end
};

/// Central difference run with dt = min(cfg.dt, 0.95 dt_c), shortened so it divides t_end.
BarResult run_bar(const BarBenchmarkConfig& cfg);

/// Leap-frog LTS run: coarse step from the uncut elements, p_t from the cut ones.
BarResult run_bar_lts(const BarBenchmarkConfig& cfg, int* refinement_out = nullptr);

struct ConvergenceGrid {
  std::vector<int> elements;
  std::vector<double> sizes;  ///< alternative to elements
  std::vector<int> orders{5};
  std::vector<double> cut_fractions{1.0};
  std::vector<LumpingScheme> schemes{LumpingScheme::Fitted};
  std::vector<double> epsilons{0.01};
  BarBenchmarkConfig base{};
};

struct ConvergenceRow {
  double h = 0.0;
  int order = 0;
  double cut_fraction = 0.0;
  LumpingScheme scheme = LumpingScheme::Fitted;
  double epsilon = 0.0;
  int dofs = 0;
  double dt = 0.0;
  double error = 0.0;
  double wall_time = 0.0;
};

std::vector<ConvergenceRow> run_bar_convergence(const ConvergenceGrid& grid, int threads);
void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows);

struct DtCritRow {
  int order = 0;
  double fraction = 0.0;
  LumpingScheme scheme = LumpingScheme::Fitted;
  double epsilon = 0.0;  ///< NaN for schemes without epsilon
  double dt_ratio = 0.0;
};

/// Epsilon applies to the fitted scheme only; the other schemes get one row per cell.
std::vector<DtCritRow> run_dtcrit_sweep(const std::vector<int>& orders,
                                        const std::vector<double>& fractions,
                                        const std::vector<LumpingScheme>& schemes,
                                        const std::vector<double>& epsilons,
                                        double low_volume_threshold, int threads);
void write_dtcrit_csv(std::ostream& os, const std::vector<DtCritRow>& rows);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

}  // namespace scm
