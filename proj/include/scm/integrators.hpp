#pragma once

#include <vector>

#include <Eigen/Dense>

#include "scm/assembly.hpp"

namespace scm {

struct PowerIterationOptions {
  double relative_tolerance = 1e-10;
  int max_iterations = 100000;
};

/// Largest omega^2 of det(K - omega^2 M) = 0 for a diagonal positive M, by
/// power iteration on M^{-1/2} K M^{-1/2}. Convergence is judged on the
/// Rayleigh quotient with a geometric extrapolation of the remaining change.
double element_max_eigenvalue(const Eigen::MatrixXd& stiffness, const Eigen::VectorXd& mass,
                              const PowerIterationOptions& options = {});

/// 2 / omega_max.
double critical_time_step(const Eigen::MatrixXd& stiffness, const Eigen::VectorXd& mass);

struct CriticalTimeStep {
  std::vector<double> element_dt;  ///< +inf for void elements
  double global_dt = 0.0;          ///< min over all material elements
  double uncut_dt = 0.0;           ///< min over full elements (+inf if none)
  double cut_dt = 0.0;             ///< min over cut elements (+inf if none)
};

CriticalTimeStep critical_time_steps(const GlobalSystem& system, int threads = 1);

/// Critical time step of a unit-square element of order p cut by the vertical
/// line x = fraction (material on the left), relative to the uncut element.
/// The fraction must lie in (0, 1).
double critical_dt_ratio(int order, double fraction, LumpingScheme scheme,
                         const MomentFitConfig& fit);

/// Smallest p_t with dt_coarse / p_t <= 0.95 cut_dt_min.
int choose_pt(double dt_coarse, double cut_dt_min);

inline constexpr double kTimeStepSafety = 0.95;

// ---------------------------------------------------------------------------
// Central difference method on M u'' + K u = f.

struct CdmState {
  Eigen::VectorXd previous;  ///< u_{n-1}
  Eigen::VectorXd current;   ///< u_n
  double time = 0.0;
  long step = 0;
  double scale = 1.0;        ///< reference magnitude for divergence detection
};

/// Sets u_0 and the Taylor start value u_{-1}.
CdmState cdm_initialize(const GlobalSystem& system, const TractionLoad& load,
                        const Eigen::VectorXd& u0, const Eigen::VectorXd& v0, double dt);

/// u_{n+1} = 2 u_n - u_{n-1} + dt^2 M^{-1} (f(t_n) - K u_n). Throws Diverged.
void cdm_step(const GlobalSystem& system, const TractionLoad& load, CdmState& state, double dt);

// ---------------------------------------------------------------------------
// Leap-frog with local time stepping in z = M^{1/2} u.

struct LtsConfig {
  double dt = 0.0;            ///< coarse step
  int refinement = 1;         ///< p_t, fine steps per coarse step
  std::vector<char> fine_mask;  ///< diagonal of P over the free DOFs
};

struct LtsState {
  Eigen::VectorXd z_previous;
  Eigen::VectorXd z_current;
  double time = 0.0;
  long step = 0;
  double scale = 1.0;
};

class LeapfrogLts {
 public:
  LeapfrogLts(const GlobalSystem& system, const TractionLoad& load, LtsConfig config);

  const LtsConfig& config() const { return config_; }

  LtsState initialize(const Eigen::VectorXd& u0, const Eigen::VectorXd& v0) const;
  void step(LtsState& state) const;

  Eigen::VectorXd displacement(const Eigen::VectorXd& z) const {
    return inv_sqrt_mass_.cwiseProduct(z);
  }

  /// A z with A = M^{-1/2} K M^{-1/2}.
  Eigen::VectorXd apply_a(const Eigen::VectorXd& z) const;

 private:
  Eigen::VectorXd apply_a_fine(const Eigen::VectorXd& z) const;
  Eigen::VectorXd source(double t) const { return load_.amplitude_at(t) * r_shape_; }

  const GlobalSystem& system_;
  const TractionLoad& load_;
  LtsConfig config_;
  Eigen::VectorXd inv_sqrt_mass_;
  Eigen::VectorXd fine_;    ///< P as a 0/1 vector
  Eigen::VectorXd coarse_;  ///< I - P
  Eigen::VectorXd r_shape_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> fine_columns_;  ///< K P
};

/// 0.5 (v^T M v + u^T K u).
double discrete_energy(const GlobalSystem& system, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& v);

}  // namespace scm
