#include "scm/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace scm {

double element_max_eigenvalue(const Eigen::MatrixXd& stiffness, const Eigen::VectorXd& mass,
                              const PowerIterationOptions& options) {
  const auto n = mass.size();
  if (stiffness.rows() != n || stiffness.cols() != n)
    throw ConfigError("element stiffness and mass sizes differ");
  if (n == 0) throw ConfigError("empty element operators");
  if (!(mass.minCoeff() > 0.0)) throw SingularMass("element mass has a non-positive entry");

  const Eigen::VectorXd d = mass.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd s = d.asDiagonal() * stiffness * d.asDiagonal();
  const Eigen::Index b = std::min<Eigen::Index>(n, 8);
  if (b == n) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (s + s.transpose()),
                                                          Eigen::EigenvaluesOnly)
        .eigenvalues()(n - 1);
  }

  // Block power iteration with a Rayleigh-Ritz projection each sweep; the
  // block absorbs the near-degenerate top clusters of symmetric elements.
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd x(n, b);
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = dist(rng);
  x = Eigen::HouseholderQR<Eigen::MatrixXd>(x).householderQ() * Eigen::MatrixXd::Identity(n, b);

  double rho = 0.0, prev_delta = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd y = s * x;
    const Eigen::MatrixXd h = x.transpose() * y;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(0.5 * (h + h.transpose()));
    const double next = ritz.eigenvalues()(b - 1);
    if (!(std::abs(next) > 0.0) && y.norm() == 0.0) return 0.0;
    const double delta = std::abs(next - rho);
    rho = next;
    // Reversed Ritz vectors keep the leading column on the top value.
    const Eigen::MatrixXd yv = y * ritz.eigenvectors().rowwise().reverse();
    x = Eigen::HouseholderQR<Eigen::MatrixXd>(yv).householderQ() * Eigen::MatrixXd::Identity(n, b);
    if (it < 2) {
      prev_delta = delta;
      continue;
    }
    const double tol = options.relative_tolerance * std::abs(rho);
    // Remaining change of a geometric sequence with ratio delta / prev_delta.
    const double r = prev_delta > 0.0 ? delta / prev_delta : 0.0;
    const double tail = r < 1.0 ? delta * r / (1.0 - r) : std::numeric_limits<double>::infinity();
    if (delta <= tol && tail <= tol) return rho;
    // Changes at roundoff level carry no convergence-rate information.
    if (delta <= 64.0 * std::numeric_limits<double>::epsilon() * std::abs(rho)) return rho;
    prev_delta = delta;
  }
  throw NoConvergence("power iteration did not converge", rho, prev_delta);
}

double critical_time_step(const Eigen::MatrixXd& stiffness, const Eigen::VectorXd& mass) {
  const double lambda = element_max_eigenvalue(stiffness, mass);
  if (!(lambda > 0.0)) return std::numeric_limits<double>::infinity();
  return 2.0 / std::sqrt(lambda);
}

CriticalTimeStep critical_time_steps(const GlobalSystem& system, int threads) {
  const int ne = static_cast<int>(system.elements.size());
  const double inf = std::numeric_limits<double>::infinity();
  CriticalTimeStep out;
  out.element_dt.assign(ne, inf);
  parallel_for(ne, threads, [&](int e) {
    if (system.element_kinds[e] == ElementKind::Void) return;
    const auto& ops = system.elements[e];
    out.element_dt[e] = critical_time_step(ops.stiffness, ops.mass);
  });
  out.global_dt = out.uncut_dt = out.cut_dt = inf;
  for (int e = 0; e < ne; ++e) {
    const double dt = out.element_dt[e];
    out.global_dt = std::min(out.global_dt, dt);
    if (system.element_kinds[e] == ElementKind::Full) out.uncut_dt = std::min(out.uncut_dt, dt);
    if (system.element_kinds[e] == ElementKind::Cut) out.cut_dt = std::min(out.cut_dt, dt);
  }
  return out;
}

double critical_dt_ratio(int order, double fraction, LumpingScheme scheme,
                         const MomentFitConfig& fit) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("cut fraction must lie in (0, 1)");
  const TensorBasis2d basis(order);
  const Material mat;
  const AffineMap map{1.0, 1.0};
  const int degree = 4 * order;

  // Reference: uncut element, stiffness by Gauss quadrature, GLL mass.
  const CutQuadrature full = full_element_quadrature(degree);
  const auto k_ref = element_stiffness(basis, mat, full, map);
  const auto m_ref = element_lumped_mass(scaled_weights(basis, 1.0), mat, map);
  const double dt_ref = critical_time_step(k_ref, m_ref);

  const Box box{{0.0, 0.0}, {1.0, 1.0}};
  CutQuadrature cutq = partition_element(half_plane(1.0, 0.0, fraction), box, {3, degree, 3}).volume;
  // A fraction within roundoff of 1 classifies as full; lump it as a cut element anyway.
  if (cutq.kind == ElementKind::Full) cutq.kind = ElementKind::Cut;
  const auto lumped = lump_element(scheme, basis, cutq, fit);
  const auto k = element_stiffness(basis, mat, cutq, map);
  const auto m = element_lumped_mass(lumped, mat, map);
  return critical_time_step(k, m) / dt_ref;
}

int choose_pt(double dt_coarse, double cut_dt_min) {
  if (!(dt_coarse > 0.0) || !(cut_dt_min > 0.0)) throw ConfigError("time steps must be positive");
  if (std::isinf(cut_dt_min)) return 1;
  const double ratio = dt_coarse / (kTimeStepSafety * cut_dt_min);
  return std::max(1, static_cast<int>(std::ceil(ratio * (1.0 - 1e-14))));
}

namespace {

double start_scale(const Eigen::VectorXd& u0, const Eigen::VectorXd& v0, double dt) {
  double s = 0.0;
  if (u0.size()) s = std::max(s, u0.lpNorm<Eigen::Infinity>());
  if (v0.size()) s = std::max(s, dt * v0.lpNorm<Eigen::Infinity>());
  return s > 0.0 ? s : 1.0;
}

void check_divergence(const Eigen::VectorXd& u, double scale, long step) {
  const double m = u.lpNorm<Eigen::Infinity>();
  if (!std::isfinite(m) || m > 1e12 * scale)
    throw Diverged("solution exceeded 1e12 times its initial scale at step " +
                       std::to_string(step),
                   step);
}

}  // namespace

CdmState cdm_initialize(const GlobalSystem& system, const TractionLoad& load,
                        const Eigen::VectorXd& u0, const Eigen::VectorXd& v0, double dt) {
  const int n = system.dof_count();
  if (u0.size() != n || v0.size() != n) throw ConfigError("initial data size does not match the DOFs");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  Eigen::VectorXd rhs = -(system.stiffness * u0);
  if (load.shape.size() == n) rhs += load.at(0.0);
  const Eigen::VectorXd acc = rhs.cwiseQuotient(system.lumped_mass);
  CdmState s;
  s.current = u0;
  s.previous = u0 - dt * v0 + 0.5 * dt * dt * acc;
  s.scale = start_scale(u0, v0, dt);
  return s;
}

void cdm_step(const GlobalSystem& system, const TractionLoad& load, CdmState& state, double dt) {
  Eigen::VectorXd rhs = -(system.stiffness * state.current);
  if (load.shape.size() == rhs.size()) rhs += load.at(state.time);
  Eigen::VectorXd next = 2.0 * state.current - state.previous +
                         (dt * dt) * rhs.cwiseQuotient(system.lumped_mass);
  state.previous.swap(state.current);
  state.current.swap(next);
  state.time += dt;
  ++state.step;
  check_divergence(state.current, state.scale, state.step);
}

LeapfrogLts::LeapfrogLts(const GlobalSystem& system, const TractionLoad& load, LtsConfig config)
    : system_(system), load_(load), config_(std::move(config)) {
  const int n = system.dof_count();
  if (!(config_.dt > 0.0)) throw ConfigError("coarse time step must be positive");
  if (config_.refinement < 1) throw ConfigError("p_t must be at least 1");
  if (config_.fine_mask.empty()) config_.fine_mask.assign(n, 0);
  if (static_cast<int>(config_.fine_mask.size()) != n)
    throw ConfigError("fine DOF mask must cover exactly the free DOFs");

  inv_sqrt_mass_ = system.lumped_mass.cwiseSqrt().cwiseInverse();
  fine_.resize(n);
  for (int i = 0; i < n; ++i) fine_(i) = config_.fine_mask[i] ? 1.0 : 0.0;
  coarse_ = Eigen::VectorXd::Ones(n) - fine_;
  r_shape_ = load.shape.size() == n ? Eigen::VectorXd(inv_sqrt_mass_.cwiseProduct(load.shape))
                                    : Eigen::VectorXd::Zero(n);

  // K restricted to the fine columns; the fine sub-steps only touch these.
  std::vector<Eigen::Triplet<double>> trip;
  const auto& k = system.stiffness;
  for (int r = 0; r < k.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(k, r); it; ++it)
      if (config_.fine_mask[it.col()]) trip.emplace_back(r, static_cast<int>(it.col()), it.value());
  fine_columns_.resize(n, n);
  fine_columns_.setFromTriplets(trip.begin(), trip.end());
}

Eigen::VectorXd LeapfrogLts::apply_a(const Eigen::VectorXd& z) const {
  return inv_sqrt_mass_.cwiseProduct(system_.stiffness * inv_sqrt_mass_.cwiseProduct(z));
}

Eigen::VectorXd LeapfrogLts::apply_a_fine(const Eigen::VectorXd& z) const {
  // A P z; the fine mask is folded into the column selection.
  return inv_sqrt_mass_.cwiseProduct(fine_columns_ * inv_sqrt_mass_.cwiseProduct(z));
}

LtsState LeapfrogLts::initialize(const Eigen::VectorXd& u0, const Eigen::VectorXd& v0) const {
  const int n = system_.dof_count();
  if (u0.size() != n || v0.size() != n) throw ConfigError("initial data size does not match the DOFs");
  const double dt = config_.dt;
  const Eigen::VectorXd sqrt_m = system_.lumped_mass.cwiseSqrt();
  LtsState s;
  s.z_current = sqrt_m.cwiseProduct(u0);
  const Eigen::VectorXd vz = sqrt_m.cwiseProduct(v0);
  s.z_previous = s.z_current - dt * vz + 0.5 * dt * dt * (source(0.0) - apply_a(s.z_current));
  s.scale = start_scale(s.z_current, vz, dt);
  return s;
}

void LeapfrogLts::step(LtsState& state) const {
  const int p = config_.refinement;
  const double h = config_.dt / p;
  const double h2 = h * h;
  const double t = state.time;
  const Eigen::VectorXd& z = state.z_current;

  const Eigen::VectorXd r0 = source(t);
  const Eigen::VectorXd zc = coarse_.cwiseProduct(z);
  const Eigen::VectorXd w = coarse_.cwiseProduct(r0) - apply_a(zc);

  Eigen::VectorXd q_prev = 2.0 * z;
  Eigen::VectorXd q = q_prev + (0.5 * h2) * (2.0 * w + 2.0 * fine_.cwiseProduct(r0) -
                                             apply_a_fine(q_prev));
  for (int m = 1; m < p; ++m) {
    const Eigen::VectorXd rs = source(t + m * h) + source(t - m * h);
    Eigen::VectorXd q_next =
        2.0 * q - q_prev + h2 * (2.0 * w + fine_.cwiseProduct(rs) - apply_a_fine(q));
    q_prev.swap(q);
    q.swap(q_next);
  }
  Eigen::VectorXd next = q - state.z_previous;
  state.z_previous.swap(state.z_current);
  state.z_current.swap(next);
  state.time += config_.dt;
  ++state.step;
  check_divergence(state.z_current, state.scale, state.step);
}

double discrete_energy(const GlobalSystem& system, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& v) {
  return 0.5 * (v.dot(system.lumped_mass.cwiseProduct(v)) + u.dot(system.stiffness * u));
}

}  // namespace scm
