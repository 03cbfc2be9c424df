#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "scm/integrators.hpp"

using namespace scm;

namespace {

GlobalSystem dense_system(const Eigen::MatrixXd& k, const Eigen::VectorXd& m) {
  GlobalSystem s;
  s.stiffness = k.sparseView();
  s.lumped_mass = m;
  s.cut_dof_mask.assign(m.size(), 0);
  return s;
}

// Cyclic Jacobi rotations; returns the largest eigenvalue of a symmetric matrix.
double jacobi_max_eigenvalue(Eigen::MatrixXd a) {
  const int n = static_cast<int>(a.rows());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= 1e-30 * a.squaredNorm()) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  return a.diagonal().maxCoeff();
}

// Exact response of u'' + K u = f sin(W t) with unit mass, by modes.
struct ModalSolution {
  Eigen::MatrixXd phi;
  Eigen::VectorXd omega;
  Eigen::VectorXd u0, v0, f;
  double big_omega = 0.0;

  ModalSolution(const Eigen::MatrixXd& k, Eigen::VectorXd u0_, Eigen::VectorXd v0_,
                Eigen::VectorXd f_, double w)
      : u0(std::move(u0_)), v0(std::move(v0_)), f(std::move(f_)), big_omega(w) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    phi = es.eigenvectors();
    omega = es.eigenvalues().cwiseSqrt();
  }

  Eigen::VectorXd operator()(double t) const {
    const Eigen::VectorXd a = phi.transpose() * u0, b = phi.transpose() * v0, fm = phi.transpose() * f;
    Eigen::VectorXd q(a.size());
    for (int i = 0; i < a.size(); ++i) {
      const double w = omega(i);
      q(i) = a(i) * std::cos(w * t) + b(i) / w * std::sin(w * t) +
             fm(i) / (w * w - big_omega * big_omega) *
                 (std::sin(big_omega * t) - big_omega / w * std::sin(w * t));
    }
    return phi * q;
  }
};

double cdm_error(const GlobalSystem& sys, const TractionLoad& load, const ModalSolution& exact,
                 double dt, double t_end) {
  auto st = cdm_initialize(sys, load, exact.u0, exact.v0, dt);
  const long n = std::lround(t_end / dt);
  for (long i = 0; i < n; ++i) cdm_step(sys, load, st, dt);
  return (st.current - exact(n * dt)).norm();
}

double lts_error(const GlobalSystem& sys, const TractionLoad& load, const ModalSolution& exact,
                 double dt, int pt, std::vector<char> mask, double t_end) {
  LeapfrogLts lts(sys, load, {dt, pt, std::move(mask)});
  auto st = lts.initialize(exact.u0, exact.v0);
  const long n = std::lround(t_end / dt);
  for (long i = 0; i < n; ++i) lts.step(st);
  return (lts.displacement(st.z_current) - exact(n * dt)).norm();
}

// Linear chain with one stiff spring at the end.
Eigen::MatrixXd chain(int n, double stiff) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double kl = 1.0, kr = i == n - 1 ? stiff : 1.0;
    k(i, i) = kl + kr;
    if (i > 0) k(i, i - 1) = k(i - 1, i) = -1.0;
  }
  return k;
}

}  // namespace

TEST_CASE("maximum eigenvalue of simple pencils") {
  Eigen::MatrixXd k = Eigen::Vector2d(4.0, 1.0).asDiagonal();
  CHECK(element_max_eigenvalue(k, Eigen::Vector2d::Ones()) == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(element_max_eigenvalue(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d::Constant(4.0)) ==
        doctest::Approx(0.25).epsilon(1e-10));
  CHECK(critical_time_step(k, Eigen::Vector2d::Ones()) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(element_max_eigenvalue(Eigen::MatrixXd::Zero(2, 2), Eigen::Vector2d::Ones()) == 0.0);
}

TEST_CASE("element eigenvalue agrees with a Jacobi oracle") {
  for (int p : {2, 5}) {
    const TensorBasis2d b(p);
    const Material mat{1.0, 0.3, 1.0};
    const AffineMap map{1.0, 1.0};
    for (const auto& q : {full_element_quadrature(4 * p),
                          build_cut_quadrature(half_plane(1.0, 0.0, 0.3), Box{{-0.5, -0.5}, {0.5, 0.5}}, 3, 4 * p)}) {
      const auto k = element_stiffness(b, mat, q, map);
      const auto lw = scaled_weights(b, q.volume_ratio);
      const auto m = element_lumped_mass(lw, mat, map);
      const Eigen::VectorXd d = m.cwiseSqrt().cwiseInverse();
      const double oracle = jacobi_max_eigenvalue(d.asDiagonal() * k * d.asDiagonal());
      CHECK(std::abs(element_max_eigenvalue(k, m) - oracle) <= 1e-8 * oracle);
    }
  }
}

TEST_CASE("eigenvalue iteration reports non-convergence") {
  std::mt19937 rng(1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(20, 20);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) a(i, j) = g(rng);
  const Eigen::MatrixXd k = a * a.transpose();
  CHECK_THROWS_AS(element_max_eigenvalue(k, Eigen::VectorXd::Ones(20), {1e-16, 1}), NoConvergence);
}

TEST_CASE("choose_pt examples") {
  CHECK(choose_pt(1e-3, 1e-3) == 2);
  CHECK(choose_pt(4e-8, 2.5e-9) == 17);
  CHECK(choose_pt(1.0, 1.0 / (16.5 * kTimeStepSafety)) == 17);
  CHECK(choose_pt(kTimeStepSafety, 1.0) == 1);
  CHECK(choose_pt(0.5, 1.0) == 1);
  CHECK(choose_pt(1.0, std::numeric_limits<double>::infinity()) == 1);
  for (double ratio : {1.3, 2.0, 7.77}) {
    const double cut = 1.0 / ratio;
    const int pt = choose_pt(1.0, cut);
    CHECK(1.0 / pt <= kTimeStepSafety * cut * (1 + 1e-12));
    CHECK(1.0 / (pt - 1) > kTimeStepSafety * cut);
  }
}

TEST_CASE("zero data stays zero") {
  const auto sys = dense_system(chain(4, 5.0), Eigen::VectorXd::Ones(4));
  const TractionLoad none;
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
  auto st = cdm_initialize(sys, none, z, z, 0.1);
  for (int i = 0; i < 100; ++i) cdm_step(sys, none, st, 0.1);
  CHECK(st.current.norm() == 0.0);
  LeapfrogLts lts(sys, none, {0.1, 3, {0, 0, 1, 1}});
  auto ls = lts.initialize(z, z);
  for (int i = 0; i < 100; ++i) lts.step(ls);
  CHECK(ls.z_current.norm() == 0.0);
}

TEST_CASE("central differences on a harmonic oscillator") {
  const double w = 2.0 * std::numbers::pi;
  Eigen::MatrixXd k(1, 1);
  k(0, 0) = w * w;
  const auto sys = dense_system(k, Eigen::VectorXd::Ones(1));
  const TractionLoad none;
  const double dt = 1.0 / 400.0;
  auto st = cdm_initialize(sys, none, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), dt);
  // Upward zero crossings of u, located by linear interpolation.
  std::vector<double> crossings;
  double t = 0.0;
  for (int i = 0; i < 400 * 20; ++i) {
    const double u_prev = st.current(0);
    cdm_step(sys, none, st, dt);
    t += dt;
    if (u_prev < 0.0 && st.current(0) >= 0.0)
      crossings.push_back(t - dt + dt * (-u_prev) / (st.current(0) - u_prev));
  }
  REQUIRE(crossings.size() >= 10);
  const double period = (crossings.back() - crossings.front()) / (crossings.size() - 1);
  CHECK(std::abs(period - 1.0) < 1e-4);
}

TEST_CASE("second-order convergence of central differences and LTS") {
  const int n = 4;
  const Eigen::MatrixXd k = chain(n, 30.0);
  const auto sys = dense_system(k, Eigen::VectorXd::Ones(n));
  Eigen::VectorXd u0(n), v0(n), f = Eigen::VectorXd::Zero(n);
  u0 << 0.1, -0.2, 0.3, 0.05;
  v0 << 0.0, 0.4, -0.1, 0.2;
  f(n - 1) = 2.0;
  const double big_w = 3.0;
  const ModalSolution exact(k, u0, v0, f, big_w);
  TractionLoad load{f, [big_w](double t) { return std::sin(big_w * t); }};
  const double t_end = 5.0;

  const double e1 = cdm_error(sys, load, exact, 0.01, t_end);
  const double e2 = cdm_error(sys, load, exact, 0.005, t_end);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));

  // Stiff spring on the last DOF is advanced with p_t = 4.
  const std::vector<char> mask{0, 0, 0, 1};
  const double l1 = lts_error(sys, load, exact, 0.02, 4, mask, t_end);
  const double l2 = lts_error(sys, load, exact, 0.01, 4, mask, t_end);
  CHECK(l1 / l2 == doctest::Approx(4.0).epsilon(0.1));
  CHECK(l2 < 1e-2);
}

TEST_CASE("LTS period on a single oscillator") {
  const double w = 2.0 * std::numbers::pi;
  Eigen::MatrixXd k(1, 1);
  k(0, 0) = w * w;
  const auto sys = dense_system(k, Eigen::VectorXd::Ones(1));
  const TractionLoad none;
  const ModalSolution exact(k, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1),
                            Eigen::VectorXd::Zero(1), 0.0);
  // Phase error after 20 periods bounds the period error.
  const double err = lts_error(sys, none, exact, 1.0 / 400.0, 3, {1}, 20.0);
  CHECK(err / (w * 20.0) < 1e-4);
}

TEST_CASE("LTS with every DOF fine and p_t = 1 is standard leap-frog") {
  const int n = 5;
  const auto sys = dense_system(chain(n, 8.0), Eigen::VectorXd::LinSpaced(n, 1.0, 2.0));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  f(n - 1) = 1.0;
  TractionLoad load{f, [](double t) { return std::cos(2.0 * t); }};
  const Eigen::VectorXd u0 = Eigen::VectorXd::LinSpaced(n, -0.1, 0.1), v0 = Eigen::VectorXd::Ones(n);
  const double dt = 0.05;
  auto st = cdm_initialize(sys, load, u0, v0, dt);
  LeapfrogLts lts(sys, load, {dt, 1, std::vector<char>(n, 1)});
  auto ls = lts.initialize(u0, v0);
  for (int i = 0; i < 200; ++i) {
    cdm_step(sys, load, st, dt);
    lts.step(ls);
  }
  CHECK((lts.displacement(ls.z_current) - st.current).norm() <= 1e-12 * st.current.norm());
}

TEST_CASE("LTS without fine DOFs does not depend on p_t") {
  const int n = 4;
  const auto sys = dense_system(chain(n, 3.0), Eigen::VectorXd::Constant(n, 2.0));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  f(0) = 1.0;
  TractionLoad load{f, [](double t) { return t * t; }};
  const Eigen::VectorXd u0 = Eigen::VectorXd::Constant(n, 0.01), v0 = Eigen::VectorXd::Zero(n);
  LeapfrogLts a(sys, load, {0.05, 1, {}}), b(sys, load, {0.05, 7, {}});
  auto sa = a.initialize(u0, v0), sb = b.initialize(u0, v0);
  for (int i = 0; i < 200; ++i) {
    a.step(sa);
    b.step(sb);
  }
  CHECK((sa.z_current - sb.z_current).norm() <= 1e-12 * sa.z_current.norm());
}

TEST_CASE("central differences diverge above the critical step and conserve energy below") {
  const int n = 6;
  const Eigen::MatrixXd k = chain(n, 4.0);
  const Eigen::VectorXd m = Eigen::VectorXd::LinSpaced(n, 1.0, 1.5);
  const auto sys = dense_system(k, m);
  const double dtc = critical_time_step(k, m);
  const TractionLoad none;
  Eigen::VectorXd u0 = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0), v0 = Eigen::VectorXd::Zero(n);

  {
    auto st = cdm_initialize(sys, none, u0, v0, 1.05 * dtc);
    CHECK_THROWS_AS(
        [&] {
          for (int i = 0; i < 100000; ++i) cdm_step(sys, none, st, 1.05 * dtc);
        }(),
        Diverged);
  }
  {
    const double dt = 0.95 * dtc;
    auto st = cdm_initialize(sys, none, u0, v0, dt);
    // Leap-frog invariant: 0.5 v_{n+1/2}^T M v_{n+1/2} + 0.5 u_n^T K u_{n+1}.
    auto invariant = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      const Eigen::VectorXd v = (b - a) / dt;
      return 0.5 * v.dot(m.cwiseProduct(v)) + 0.5 * a.dot(k * b);
    };
    cdm_step(sys, none, st, dt);
    const double e0 = invariant(st.previous, st.current);
    for (int i = 0; i < 10000; ++i) {
      cdm_step(sys, none, st, dt);
      CHECK(std::abs(invariant(st.previous, st.current) - e0) <= 1e-9 * e0);
    }
    const double energy0 = discrete_energy(sys, u0, v0);
    CHECK(energy0 == doctest::Approx(0.5 * u0.dot(k * u0)));
  }
}

TEST_CASE("bisected stability limit matches the pencil eigenvalue") {
  const int n = 5;
  const Eigen::MatrixXd k = chain(n, 10.0);
  const auto sys = dense_system(k, Eigen::VectorXd::Ones(n));
  const TractionLoad none;
  const Eigen::VectorXd u0 = Eigen::VectorXd::LinSpaced(n, 1.0, -1.0), v0 = Eigen::VectorXd::Ones(n);
  auto stable = [&](double dt) {
    auto st = cdm_initialize(sys, none, u0, v0, dt);
    try {
      for (int i = 0; i < 4000; ++i) cdm_step(sys, none, st, dt);
    } catch (const Diverged&) {
      return false;
    }
    return true;
  };
  double lo = 0.1 * critical_time_step(k, sys.lumped_mass), hi = 2.0 * critical_time_step(k, sys.lumped_mass);
  for (int i = 0; i < 40; ++i) (stable(0.5 * (lo + hi)) ? lo : hi) = 0.5 * (lo + hi);
  CHECK(0.5 * (lo + hi) == doctest::Approx(critical_time_step(k, sys.lumped_mass)).epsilon(0.01));
}

TEST_CASE("element estimates bound the global critical step") {
  MeshSpec s;
  s.nx = 4;
  s.ny = 1;
  s.hx = s.hy = 0.25;
  s.order = 3;
  s.level_set = half_plane(1.0, 0.0, 0.9);
  s.fix_left_edge = true;
  const CartesianMesh mesh(s);
  for (auto scheme : {LumpingScheme::Fitted, LumpingScheme::Hrz, LumpingScheme::Scaled}) {
    AssemblyOptions opt;
    opt.scheme = scheme;
    const auto sys = assemble_global(mesh, Material{1.0, 0.3, 1.0}, opt);
    const auto one = critical_time_steps(sys, 1);
    const auto four = critical_time_steps(sys, 4);
    CHECK(one.element_dt == four.element_dt);
    CHECK(one.global_dt == std::min(one.cut_dt, one.uncut_dt));
    const Eigen::VectorXd d = sys.lumped_mass.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd a = d.asDiagonal() * Eigen::MatrixXd(sys.stiffness) * d.asDiagonal();
    const double lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().maxCoeff();
    const double global = 2.0 / std::sqrt(lam);
    CHECK(one.global_dt <= global * (1 + 1e-12));
    CHECK(one.global_dt >= 0.4 * global);
  }
}

TEST_CASE("critical ratio approaches one in the uncut limit") {
  for (auto scheme : {LumpingScheme::Fitted, LumpingScheme::Hrz, LumpingScheme::Scaled}) {
    const double r = critical_dt_ratio(4, 1.0 - 1e-6, scheme, {0.01, 0.0});
    CHECK(std::abs(r - 1.0) < 1e-3);
  }
  CHECK_THROWS_AS(critical_dt_ratio(4, 0.0, LumpingScheme::Fitted, {}), ConfigError);
  CHECK_THROWS_AS(critical_dt_ratio(4, 1.0, LumpingScheme::Fitted, {}), ConfigError);
  CHECK_THROWS_AS(critical_dt_ratio(4, 1.5, LumpingScheme::Fitted, {}), ConfigError);
}

TEST_CASE("invalid integrator inputs") {
  const auto sys = dense_system(chain(2, 1.0), Eigen::VectorXd::Ones(2));
  const TractionLoad none;
  CHECK_THROWS_AS(cdm_initialize(sys, none, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), 0.1),
                  ConfigError);
  CHECK_THROWS_AS(cdm_initialize(sys, none, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), 0.0),
                  ConfigError);
  CHECK_THROWS_AS(LeapfrogLts(sys, none, {0.1, 0, {}}), ConfigError);
  CHECK_THROWS_AS(LeapfrogLts(sys, none, {0.1, 2, {1}}), ConfigError);
}
