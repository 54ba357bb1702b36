/// \file smallscat/manybody.hpp
/// \brief Reduced many-body systems for soft, impedance and hard particles,
/// plus near- and far-field evaluation of the solved scene.

#pragma once

#include "smallscat/background.hpp"
#include "smallscat/core.hpp"
#include "smallscat/linsolve.hpp"

#include <memory>

namespace smallscat {

/// Plain free-space kernel; the reference path the background evaluator
/// must reproduce when n0^2 = 1.
struct FreeKernel {
  Real k;
  Complex green(const Vec3& x, const Vec3& y) const { return free_green(k, x, y); }
  Complex incident(const IncidentWave& w, const Vec3& x) const { return w.value(x); }
  Complex far_green(const Vec3& beta, const Vec3& y) const {
    return std::exp(-I * (k * beta.dot(y))) / four_pi;
  }
};

/// Generic adapter so operators can hold either kernel by reference.
template <class K>
concept Kernel = requires(const K& k, const Vec3& x) {
  { k.green(x, x) } -> std::convertible_to<Complex>;
};

/// x_j + sum_{m != j} G(x_j, x_m) s_m x_m = rhs_j for per-source strengths s_m.
template <Kernel K>
class MonopoleOperator {
 public:
  static constexpr int block = 1;

  MonopoleOperator(const K& kernel, std::vector<Vec3> points, CVector strength)
      : kernel_(kernel), points_(std::move(points)), strength_(std::move(strength)) {}

  Index blocks() const { return static_cast<Index>(points_.size()); }
  Eigen::Matrix<Complex, 1, 1> coupling(Index j, Index m) const {
    Eigen::Matrix<Complex, 1, 1> b;
    b(0, 0) = -kernel_.green(points_[j], points_[m]) * strength_(m);
    return b;
  }

 private:
  const K& kernel_;
  std::vector<Vec3> points_;
  CVector strength_;
};

/// Monopole + dipole sources in the free-space kernel: each source carries a
/// scalar weight w (multiplies lap u) and a tensor W (multiplies grad u in
/// the direction factor).  For particles w = |D_m|, W = beta^(m) |D_m|.
struct DipoleSource {
  Vec3 x;
  Real weight;
  Mat3 tensor;
};

namespace detail {

/// Value, gradient and Laplacian at x of the field radiated by one source
/// with unit mono/dipole amplitudes, as the 5x5 block acting on the source
/// unknowns (u, du/dx_q, lap u).  Rows: (u, d/dx_1, d/dx_2, d/dx_3, lap).
inline Eigen::Matrix<Complex, 5, 5> dipole_block(Real k, const Vec3& x, const DipoleSource& s) {
  const Vec3 r = x - s.x;
  const Real R = r.norm();
  const Vec3 e = r / R;
  const Complex g = free_green(k, R);
  const Complex dg = g * (I * k - 1.0 / R);  // d g / dR
  const Complex ik = I * k;

  Eigen::Matrix<Complex, 5, 5> K = Eigen::Matrix<Complex, 5, 5>::Zero();
  // e^T W: row vector acting on du/dx_q
  const Eigen::RowVector3d eW = e.transpose() * s.tensor;

  K(0, 4) = s.weight * g;
  for (int q = 0; q < 3; ++q) K(0, 1 + q) = ik * g * eW(q);

  // d/dx_i of psi_p = g e_p:  dg e_i e_p + g (delta_ip - e_i e_p) / R
  const Mat3 P = Mat3::Identity() - e * e.transpose();
  for (int i = 0; i < 3; ++i) {
    K(1 + i, 4) = s.weight * dg * e(i);
    for (int q = 0; q < 3; ++q) {
      Complex acc = 0.0;
      for (int p = 0; p < 3; ++p) acc += (dg * e(i) * e(p) + g * P(i, p) / R) * s.tensor(p, q);
      K(1 + i, 1 + q) = ik * acc;
    }
  }

  // lap phi = -k^2 g;  lap psi_p = -(k^2 + 2/R^2) psi_p
  K(4, 4) = -k * k * s.weight * g;
  for (int q = 0; q < 3; ++q) K(4, 1 + q) = -ik * (k * k + 2.0 / (R * R)) * g * eW(q);
  return K;
}

}  // namespace detail

class DipoleOperator {
 public:
  static constexpr int block = 5;

  DipoleOperator(Real k, std::vector<DipoleSource> sources) : k_(k), sources_(std::move(sources)) {}

  Index blocks() const { return static_cast<Index>(sources_.size()); }
  Eigen::Matrix<Complex, 5, 5> coupling(Index j, Index m) const {
    return detail::dipole_block(k_, sources_[j].x, sources_[m]);
  }
  const std::vector<DipoleSource>& sources() const { return sources_; }

 private:
  Real k_;
  std::vector<DipoleSource> sources_;
};

enum class SceneKind { Empty, Soft, Impedance, Hard };

inline std::string scene_kind_name(SceneKind k) {
  switch (k) {
    case SceneKind::Empty: return "empty";
    case SceneKind::Soft: return "soft";
    case SceneKind::Impedance: return "impedance";
    case SceneKind::Hard: return "hard";
  }
  return "?";
}

inline SceneKind scene_kind(const Scene& scene) {
  if (scene.particles.empty()) return SceneKind::Empty;
  const auto idx = scene.particles.front().bc.index();
  for (const auto& p : scene.particles)
    if (p.bc.index() != idx) throw UnsupportedScene("mixed boundary kinds in one scene are not supported");
  if (is_soft(scene.particles.front().bc)) return SceneKind::Soft;
  if (is_impedance(scene.particles.front().bc)) return SceneKind::Impedance;
  return SceneKind::Hard;
}

struct ManyBodyOptions {
  SolverOptions solver;
  GreenOptions green;
  bool enforce_regime = true;
};

/// Per-particle effective field and charges of a solved scene.
struct EffectiveFieldSolution {
  SceneKind kind = SceneKind::Empty;
  CVector u;                  ///< u_e(x_m)
  std::vector<CVec3> grad;    ///< hard only: grad u_e(x_m)
  CVector lap;                ///< hard only: lap u_e(x_m)
  CVector charges;            ///< Q_m (hard: lap u_e(x_m) |D_m|)
  SolveInfo info;
  std::shared_ptr<const GreenEvaluator> kernel;

  Index size() const { return u.size(); }
};

namespace detail {

inline std::shared_ptr<GreenEvaluator> make_kernel(const Scene& scene, const ManyBodyOptions& opts) {
  return std::make_shared<GreenEvaluator>(scene.background, scene.wave.k, opts.green);
}

inline void check_regime(const Scene& scene, const ManyBodyOptions& opts) {
  if (!opts.enforce_regime) return;
  const auto rep = validate_scene(scene);
  if (!rep.accepted()) throw RegimeViolation(rep.summary());
}

/// Shared monopole path for soft and impedance scenes.
template <Kernel K>
CVector solve_monopole(const K& kernel, const Scene& scene, const CVector& strength, const SolverOptions& sopt,
                       SolveInfo& info) {
  const auto pts = scene.centers();
  CVector rhs(pts.size());
  for (std::size_t j = 0; j < pts.size(); ++j) rhs(j) = kernel.incident(scene.wave, pts[j]);
  MonopoleOperator<K> op(kernel, pts, strength);
  return solve(op, rhs, sopt, &info);
}

inline EffectiveFieldSolution monopole_solution(const Scene& scene, const ManyBodyOptions& opts, SceneKind kind,
                                                const CVector& strength) {
  check_regime(scene, opts);
  EffectiveFieldSolution sol;
  sol.kind = kind;
  auto kernel = make_kernel(scene, opts);
  if (scene.background.trivial()) {
    const FreeKernel fk{scene.wave.k};
    sol.u = solve_monopole(fk, scene, strength, opts.solver, sol.info);
  } else {
    kernel->prepare(scene.centers());
    kernel->prepare_incident(scene.wave);
    sol.u = solve_monopole(*kernel, scene, strength, opts.solver, sol.info);
  }
  sol.charges = -(strength.array() * sol.u.array()).matrix();
  sol.kernel = std::move(kernel);
  return sol;
}

}  // namespace detail

/// Strengths s_m with Q_m = -s_m u_e(x_m): soft C_m, impedance a^(2-kappa) b_m h(x_m).
inline CVector soft_strengths(const Scene& scene) {
  CVector s(scene.particles.size());
  for (std::size_t m = 0; m < scene.particles.size(); ++m) s(m) = scene.particles[m].capacitance();
  return s;
}

inline CVector impedance_strengths(const Scene& scene) {
  CVector s(scene.particles.size());
  for (std::size_t m = 0; m < scene.particles.size(); ++m) {
    const auto& p = scene.particles[m];
    const auto& imp = std::get<Impedance>(p.bc);
    s(m) = std::pow(p.a, 2.0 - imp.kappa) * p.surface_factor() * imp.h;
  }
  return s;
}

inline EffectiveFieldSolution solve_soft(const Scene& scene, const ManyBodyOptions& opts = {}) {
  const SceneKind kind = scene_kind(scene);
  if (kind != SceneKind::Soft && kind != SceneKind::Empty)
    throw UnsupportedScene("solve_soft requires soft particles");
  return detail::monopole_solution(scene, opts, SceneKind::Soft, soft_strengths(scene));
}

inline EffectiveFieldSolution solve_impedance(const Scene& scene, const ManyBodyOptions& opts = {}) {
  const SceneKind kind = scene_kind(scene);
  if (kind != SceneKind::Impedance && kind != SceneKind::Empty)
    throw UnsupportedScene("solve_impedance requires impedance particles");
  return detail::monopole_solution(scene, opts, SceneKind::Impedance, impedance_strengths(scene));
}

inline std::vector<DipoleSource> dipole_sources(const Scene& scene) {
  std::vector<DipoleSource> src;
  src.reserve(scene.particles.size());
  for (const auto& p : scene.particles) src.push_back({p.center, p.volume(), p.beta() * p.volume()});
  return src;
}

/// Right-hand side (u0, grad u0, lap u0) at each source.
inline CVector dipole_rhs(const IncidentWave& wave, const std::vector<DipoleSource>& src) {
  CVector rhs(5 * src.size());
  for (std::size_t j = 0; j < src.size(); ++j) {
    rhs(5 * j) = wave.value(src[j].x);
    rhs.segment<3>(5 * j + 1) = wave.gradient(src[j].x);
    rhs(5 * j + 4) = wave.laplacian(src[j].x);
  }
  return rhs;
}

inline EffectiveFieldSolution unpack_dipole(SceneKind kind, const CVector& x, const std::vector<DipoleSource>& src) {
  EffectiveFieldSolution sol;
  sol.kind = kind;
  const auto n = static_cast<Index>(src.size());
  sol.u.resize(n);
  sol.lap.resize(n);
  sol.grad.resize(n);
  sol.charges.resize(n);
  for (Index m = 0; m < n; ++m) {
    sol.u(m) = x(5 * m);
    sol.grad[m] = x.segment<3>(5 * m + 1);
    sol.lap(m) = x(5 * m + 4);
    sol.charges(m) = sol.lap(m) * src[m].weight;
  }
  return sol;
}

/// Hard particles: 5M unknowns (u_e, grad u_e, lap u_e) at the centers.
inline EffectiveFieldSolution solve_hard(const Scene& scene, const ManyBodyOptions& opts = {}) {
  const SceneKind kind = scene_kind(scene);
  if (kind != SceneKind::Hard && kind != SceneKind::Empty)
    throw UnsupportedScene("solve_hard requires hard particles");
  if (!scene.background.trivial())
    throw UnsupportedScene("hard particles in an inhomogeneous background are not supported");
  detail::check_regime(scene, opts);
  const auto src = dipole_sources(scene);
  DipoleOperator op(scene.wave.k, src);
  SolveInfo info;
  const CVector x = solve(op, dipole_rhs(scene.wave, src), opts.solver, &info);
  auto sol = unpack_dipole(SceneKind::Hard, x, src);
  sol.info = info;
  sol.kernel = detail::make_kernel(scene, opts);
  return sol;
}

/// Dispatch on the (uniform) boundary kind of the scene.
inline EffectiveFieldSolution solve_scene(const Scene& scene, const ManyBodyOptions& opts = {}) {
  switch (scene_kind(scene)) {
    case SceneKind::Soft: return solve_soft(scene, opts);
    case SceneKind::Impedance: return solve_impedance(scene, opts);
    case SceneKind::Hard: return solve_hard(scene, opts);
    case SceneKind::Empty: break;
  }
  EffectiveFieldSolution sol;
  sol.kernel = detail::make_kernel(scene, opts);
  sol.info.method = "empty";
  return sol;
}

/// Field at x outside every particle: u0(x) plus the monopole (and, for
/// hard particles, dipole) radiation of every particle.
inline Complex eval_field(const EffectiveFieldSolution& sol, const Scene& scene, const Vec3& x) {
  for (std::size_t m = 0; m < scene.particles.size(); ++m)
    if ((x - scene.particles[m].center).norm() < scene.particles[m].a)
      throw PointInsideParticle("evaluation point inside particle " + std::to_string(m));
  const GreenEvaluator* G = sol.kernel.get();
  const FreeKernel fk{scene.wave.k};
  auto green = [&](const Vec3& y) { return G ? G->green(x, y) : fk.green(x, y); };
  Complex u = G ? G->incident(scene.wave, x) : scene.wave.value(x);

  if (sol.kind == SceneKind::Hard) {
    const Real k = scene.wave.k;
    for (std::size_t m = 0; m < scene.particles.size(); ++m) {
      const auto& p = scene.particles[m];
      const Vec3 e = (x - p.center).normalized();
      const Complex dip = e.cast<Complex>().dot((p.beta() * p.volume()).cast<Complex>() * sol.grad[m]);
      u += free_green(k, x, p.center) * (sol.lap(m) * p.volume() + I * k * dip);
    }
    return u;
  }
  for (Index m = 0; m < sol.charges.size(); ++m) u += green(scene.particles[m].center) * sol.charges(m);
  return u;
}

struct FarField {
  std::vector<Vec3> directions;
  std::vector<Complex> amplitudes;
};

/// Scattering amplitude A(beta) of the particle system: the coefficient of
/// e^{ikr}/r in u - u0 along each unit direction.
inline FarField far_field(const EffectiveFieldSolution& sol, const Scene& scene, const std::vector<Vec3>& directions) {
  FarField ff;
  ff.directions = directions;
  ff.amplitudes.resize(directions.size());
  const Real k = scene.wave.k;
  const FreeKernel fk{k};
  const GreenEvaluator* G = sol.kernel.get();
  for (std::size_t d = 0; d < directions.size(); ++d) {
    const Vec3& b = directions[d];
    if (std::abs(b.norm() - 1.0) > 1e-12) throw ConfigError("far-field direction must be a unit vector");
    Complex A = 0.0;
    for (std::size_t m = 0; m < scene.particles.size(); ++m) {
      const auto& p = scene.particles[m];
      if (sol.kind == SceneKind::Hard) {
        const Complex dip = b.cast<Complex>().dot((p.beta() * p.volume()).cast<Complex>() * sol.grad[m]);
        A += fk.far_green(b, p.center) * (sol.lap(m) * p.volume() + I * k * dip);
      } else {
        A += (G ? G->far_green(b, p.center) : fk.far_green(b, p.center)) * sol.charges(m);
      }
    }
    ff.amplitudes[d] = A;
  }
  return ff;
}

/// Deterministic quasi-uniform unit directions (Fibonacci sphere).
inline std::vector<Vec3> fibonacci_directions(int n) {
  std::vector<Vec3> out;
  out.reserve(n);
  const Real golden = pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const Real z = 1.0 - (2.0 * i + 1.0) / n;
    const Real r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Real phi = golden * i;
    out.push_back(Vec3(r * std::cos(phi), r * std::sin(phi), z).normalized());
  }
  return out;
}

}  // namespace smallscat
