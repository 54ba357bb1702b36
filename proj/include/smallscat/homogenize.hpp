/// \file smallscat/homogenize.hpp
/// \brief The a -> 0 limit: collocation of the limiting integral equations,
/// empirical cell statistics of particle clouds, limiting coefficients,
/// inverse design of impedance prescriptions and convergence studies.

#pragma once

#include "smallscat/manybody.hpp"
#include "smallscat/quadrature.hpp"

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace smallscat {

/// Uniform partition of a box into n0 x n1 x n2 congruent cells.
class GridCover {
 public:
  GridCover() = default;
  GridCover(const Box& domain, std::array<int, 3> dims) : domain_(domain), dims_(dims) {
    if (!domain.valid()) throw ConfigError("cover domain is empty");
    for (int d : dims)
      if (d < 1) throw ConfigError("cover needs at least one cell per axis");
    h_ = domain.extent().cwiseQuotient(Vec3(dims[0], dims[1], dims[2]));
    centers_.reserve(size());
    for (int k = 0; k < dims[2]; ++k)
      for (int j = 0; j < dims[1]; ++j)
        for (int i = 0; i < dims[0]; ++i)
          centers_.push_back(domain.lo + Vec3((i + 0.5) * h_.x(), (j + 0.5) * h_.y(), (k + 0.5) * h_.z()));
  }

  /// Cells of edge close to b: n_i = max(1, round(L_i / b)).
  static GridCover with_edge(const Box& domain, Real b) {
    if (!(b > 0.0)) throw ConfigError("cover edge must be positive");
    std::array<int, 3> n;
    for (int d = 0; d < 3; ++d) n[d] = std::max(1, static_cast<int>(std::lround(domain.extent()[d] / b)));
    return GridCover(domain, n);
  }

  Index size() const { return static_cast<Index>(dims_[0]) * dims_[1] * dims_[2]; }
  const Box& domain() const { return domain_; }
  std::array<int, 3> dims() const { return dims_; }
  const Vec3& cell_extent() const { return h_; }
  Real edge() const { return h_.maxCoeff(); }
  Real cell_volume() const { return h_.prod(); }
  const std::vector<Vec3>& centers() const { return centers_; }
  const Vec3& center(Index p) const { return centers_[p]; }

  Index index(int i, int j, int k) const { return i + static_cast<Index>(dims_[0]) * (j + static_cast<Index>(dims_[1]) * k); }
  std::array<int, 3> ijk(Index p) const {
    const int i = static_cast<int>(p % dims_[0]);
    const int j = static_cast<int>((p / dims_[0]) % dims_[1]);
    const int k = static_cast<int>(p / (static_cast<Index>(dims_[0]) * dims_[1]));
    return {i, j, k};
  }

  Box cell(Index p) const {
    const auto c = ijk(p);
    const Vec3 lo = domain_.lo + Vec3(c[0] * h_.x(), c[1] * h_.y(), c[2] * h_.z());
    return {lo, lo + h_};
  }

  /// Cell containing x (faces belong to the upper cell, the outer face to
  /// the last cell), or -1 outside the domain.
  Index locate(const Vec3& x) const {
    if (!domain_.contains(x)) return -1;
    std::array<int, 3> c;
    for (int d = 0; d < 3; ++d)
      c[d] = std::clamp(static_cast<int>(std::floor((x[d] - domain_.lo[d]) / h_[d])), 0, dims_[d] - 1);
    return index(c[0], c[1], c[2]);
  }

  /// True if the cell touches the boundary of the domain.
  bool on_boundary(Index p) const {
    const auto c = ijk(p);
    for (int d = 0; d < 3; ++d)
      if (c[d] == 0 || c[d] == dims_[d] - 1) return true;
    return false;
  }

  template <class T>
  CVector sample(const Field<T>& f) const {
    CVector s(size());
    for (Index p = 0; p < size(); ++p) s(p) = f(centers_[p]);
    return s;
  }

 private:
  Box domain_;
  std::array<int, 3> dims_{1, 1, 1};
  Vec3 h_ = Vec3::Ones();
  std::vector<Vec3> centers_;
};

/// Solution of the collocation system for the limiting equation
/// u = u0 - int_D g q u dy on a cover.
struct CollocationSolution {
  GridCover cover;
  CVector q;
  CVector u;
  IncidentWave wave;
  SolveInfo info;

  /// Piecewise-constant interpolant sum_p chi_p u(xi_p); u0 outside D.
  Complex interpolant(const Vec3& x) const {
    const Index p = cover.locate(x);
    return p < 0 ? wave.value(x) : u(p);
  }

  /// Continuous extension u0(x) - sum_p q_p u_p int_{Delta_p} g(x, y) dy.
  Complex volume_potential(const Vec3& x) const {
    Complex s = 0.0;
    for (Index p = 0; p < cover.size(); ++p)
      if (q(p) != 0.0) s += q(p) * u(p) * helmholtz_box_integral(wave.k, x, cover.cell(p));
    return wave.value(x) - s;
  }
};

/// Collocation with an arbitrary kernel (free space or background G).
template <Kernel K>
CollocationSolution collocation_solve(const GridCover& cover, const CVector& q, const IncidentWave& wave,
                                      const K& kernel, const SolverOptions& opts = {}) {
  if (q.size() != cover.size()) throw ConfigError("q samples do not match the cover");
  CollocationSolution sol{cover, q, CVector(cover.size()), wave, {}};
  CVector rhs(cover.size());
  for (Index p = 0; p < cover.size(); ++p) rhs(p) = kernel.incident(wave, cover.center(p));
  const CVector strength = q * cover.cell_volume();
  MonopoleOperator<K> op(kernel, cover.centers(), strength);
  sol.u = solve(op, rhs, opts, &sol.info);
  return sol;
}

inline CollocationSolution collocation_solve(const GridCover& cover, const CVector& q, const IncidentWave& wave,
                                             const SolverOptions& opts = {}) {
  const FreeKernel fk{wave.k};
  return collocation_solve(cover, q, wave, fk, opts);
}

/// Per-cell sums of particle functionals; additive under cell merges.
struct CellStatistics {
  long count = 0;
  Real sum_capacitance = 0.0;  ///< sum C_m
  Complex sum_impedance = 0.0; ///< sum a^(2-kappa) b_m h_m
  Real sum_volume = 0.0;       ///< sum |D_m|
  Mat3 sum_beta = Mat3::Zero(); ///< sum beta^(m) |D_m|
  Real volume = 0.0;           ///< |Delta|

  CellStatistics& merge(const CellStatistics& o) {
    count += o.count;
    sum_capacitance += o.sum_capacitance;
    sum_impedance += o.sum_impedance;
    sum_volume += o.sum_volume;
    sum_beta += o.sum_beta;
    volume += o.volume;
    return *this;
  }
  bool empty() const { return count == 0; }
};

inline std::vector<CellStatistics> cell_statistics(const std::vector<Particle>& particles, const GridCover& cover) {
  std::vector<CellStatistics> st(cover.size());
  for (auto& s : st) s.volume = cover.cell_volume();
  for (const auto& p : particles) {
    const Index c = cover.locate(p.center);
    if (c < 0) continue;
    auto& s = st[c];
    ++s.count;
    if (p.shape.capacitance) s.sum_capacitance += *p.shape.capacitance;
    if (const auto* imp = std::get_if<Impedance>(&p.bc))
      s.sum_impedance += std::pow(p.a, 2.0 - imp->kappa) * p.surface_factor() * imp->h;
    if (p.shape.volume) {
      s.sum_volume += *p.shape.volume;
      if (p.shape.beta) s.sum_beta += *p.shape.beta * *p.shape.volume;
    }
  }
  return st;
}

/// Samples of the limiting medium on a cover.  C is the capacitance density,
/// q the potential of the effective Helmholtz operator, n2 = 1 - q/k^2, and
/// rho / B the volume and polarizability densities of hard clouds.
struct LimitCoefficients {
  GridCover cover;
  Real k = 1.0;
  CVector C;
  CVector q;
  CVector n2;
  std::vector<Real> rho;
  std::vector<Mat3> B;
  std::vector<bool> empty;  ///< statistic undefined (no particle in the cell)

  Index empty_cells() const { return std::count(empty.begin(), empty.end(), true); }
};

namespace detail {
inline CVector refraction_from_q(const CVector& q, Real k) {
  return (CVector::Ones(q.size()) - q / (k * k)).eval();
}
}  // namespace detail

/// Empirical limit from a cloud: cell sums divided by |Delta_p|.  q is the
/// capacitance density for soft clouds and the impedance density for
/// impedance clouds.
inline LimitCoefficients limiting_coefficient(const std::vector<Particle>& particles, const GridCover& cover, Real k) {
  if (!(k > 0.0)) throw ConfigError("wave number must be positive");
  const auto st = cell_statistics(particles, cover);
  const bool impedance = !particles.empty() && is_impedance(particles.front().bc);
  LimitCoefficients lc;
  lc.cover = cover;
  lc.k = k;
  const Index P = cover.size();
  lc.C.resize(P);
  lc.q.resize(P);
  lc.rho.resize(P);
  lc.B.resize(P);
  lc.empty.resize(P);
  for (Index p = 0; p < P; ++p) {
    const auto& s = st[p];
    lc.C(p) = s.sum_capacitance / s.volume;
    lc.q(p) = impedance ? s.sum_impedance / s.volume : lc.C(p);
    lc.rho[p] = s.sum_volume / s.volume;
    lc.B[p] = s.sum_beta / s.volume;
    lc.empty[p] = s.empty();
  }
  lc.n2 = detail::refraction_from_q(lc.q, k);
  return lc;
}

/// Dirichlet limit for bodies with capacitance C_m = c a: q = c N.
inline LimitCoefficients limiting_coefficient_dirichlet(const GridCover& cover, const RealField& N, Real k,
                                                        Real c = four_pi) {
  LimitCoefficients lc;
  lc.cover = cover;
  lc.k = k;
  const CVector n = cover.sample(N);
  lc.C = c * n;
  lc.q = lc.C;
  lc.n2 = detail::refraction_from_q(lc.q, k);
  lc.rho.assign(cover.size(), 0.0);
  lc.B.assign(cover.size(), Mat3::Zero());
  lc.empty.assign(cover.size(), false);
  return lc;
}

/// Impedance particle prescription (N, h, kappa, b) on a cover.
struct DesignPrescription {
  GridCover cover;
  Real k = 1.0;
  Real b = four_pi;
  Real kappa = 0.5;
  CVector N;
  CVector h;
  CVector n2_target;
};

/// Impedance limit q = b N h for a prescription.
inline LimitCoefficients limiting_coefficient(const DesignPrescription& d) {
  LimitCoefficients lc;
  lc.cover = d.cover;
  lc.k = d.k;
  lc.q = (d.b * d.N.array() * d.h.array()).matrix();
  lc.C = CVector::Zero(d.cover.size());
  lc.n2 = detail::refraction_from_q(lc.q, d.k);
  lc.rho.assign(d.cover.size(), 0.0);
  lc.B.assign(d.cover.size(), Mat3::Zero());
  lc.empty.assign(d.cover.size(), false);
  return lc;
}

/// Fix N and solve k^2 (1 - n^2) = b N h for h.  Cells with n^2 = 1 get
/// N = h = 0.
inline DesignPrescription inverse_design(const GridCover& cover, const CVector& n2_target, Real k, Real b,
                                         const CVector& N_choice, Real kappa = 0.5) {
  if (!(k > 0.0)) throw ConfigError("wave number must be positive");
  if (!(b > 0.0)) throw ConfigError("shape constant b must be positive");
  if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("kappa must lie in (0, 1)");
  if (n2_target.size() != cover.size() || N_choice.size() != cover.size())
    throw ConfigError("design samples do not match the cover");
  DesignPrescription d{cover, k, b, kappa, CVector::Zero(cover.size()), CVector::Zero(cover.size()), n2_target};
  std::vector<Index> bad;
  for (Index p = 0; p < cover.size(); ++p) {
    const Complex n2 = n2_target(p);
    if (n2 == Complex(1.0, 0.0)) continue;
    if (n2.imag() < 0.0 || !(N_choice(p).real() > 0.0) || N_choice(p).imag() != 0.0) {
      bad.push_back(p);
      continue;
    }
    d.N(p) = N_choice(p);
    d.h(p) = k * k * (1.0 - n2) / (b * N_choice(p));
    if (d.h(p).imag() > 0.0) bad.push_back(p);
  }
  if (!bad.empty()) {
    std::string cells;
    for (std::size_t i = 0; i < bad.size() && i < 20; ++i) cells += (i ? "," : "") + std::to_string(bad[i]);
    if (bad.size() > 20) cells += ",...";
    throw DesignInfeasible("target not realizable (Im h > 0 or N <= 0) in " + std::to_string(bad.size()) +
                           " cell(s): " + cells);
  }
  return d;
}

/// Values, gradients and Laplacians of the limiting Neumann field on cells.
struct NeumannLimitSolution {
  GridCover cover;
  CVector u;
  std::vector<CVec3> grad;
  CVector lap;
  SolveInfo info;
};

inline constexpr Index neumann_cell_cap = 12 * 12 * 12;

/// Collocation of u = u0 + int g [rho lap u + ik B grad u . (x - y)/|x - y|] dy
/// with the same analytic kernel derivatives as the hard many-body system.
inline NeumannLimitSolution neumann_limit_solve(const GridCover& cover, const std::vector<Real>& rho,
                                                const std::vector<Mat3>& B, const IncidentWave& wave,
                                                const SolverOptions& opts = {}) {
  if (cover.size() > neumann_cell_cap)
    throw GridTooLarge("Neumann limit grid has " + std::to_string(cover.size()) + " cells; the cap is " +
                       std::to_string(neumann_cell_cap));
  if (static_cast<Index>(rho.size()) != cover.size() || static_cast<Index>(B.size()) != cover.size())
    throw ConfigError("rho / B samples do not match the cover");
  const Real vol = cover.cell_volume();
  std::vector<DipoleSource> src(cover.size());
  for (Index p = 0; p < cover.size(); ++p) src[p] = {cover.center(p), rho[p] * vol, B[p] * vol};
  DipoleOperator op(wave.k, src);
  NeumannLimitSolution sol;
  sol.cover = cover;
  const CVector x = solve(op, dipole_rhs(wave, src), opts, &sol.info);
  const auto un = unpack_dipole(SceneKind::Hard, x, src);
  sol.u = un.u;
  sol.grad = un.grad;
  sol.lap = un.lap;
  return sol;
}

inline NeumannLimitSolution neumann_limit_solve(const LimitCoefficients& lc, const IncidentWave& wave,
                                                const SolverOptions& opts = {}) {
  return neumann_limit_solve(lc.cover, lc.rho, lc.B, wave, opts);
}

/// Collocation points of the many-body interpolant: the particle centers
/// in each cell, or the cell center for a cell without particles.
inline std::vector<std::vector<Vec3>> cell_sample_points(const Scene& scene, const GridCover& cover,
                                                         std::vector<std::vector<Index>>* members = nullptr) {
  std::vector<std::vector<Vec3>> pts(cover.size());
  std::vector<std::vector<Index>> mem(cover.size());
  for (std::size_t m = 0; m < scene.particles.size(); ++m) {
    const Index p = cover.locate(scene.particles[m].center);
    if (p < 0) continue;
    pts[p].push_back(scene.particles[m].center);
    mem[p].push_back(static_cast<Index>(m));
  }
  for (Index p = 0; p < cover.size(); ++p) {
    if (!pts[p].empty()) continue;
    Vec3 x = cover.center(p);
    for (int tries = 0; tries < 8; ++tries) {
      bool inside = false;
      for (const auto& q : scene.particles)
        if ((x - q.center).norm() < q.a) inside = true;
      if (!inside) break;
      x += cover.cell_extent() * 0.1;
    }
    pts[p].push_back(x);
  }
  if (members) *members = std::move(mem);
  return pts;
}

/// Cell values of the many-body effective field: the mean of u_e over the
/// cell's sample points (u_e(x_m) at particles, the field of the cloud at an
/// empty cell's center).
inline CVector las_interpolant(const EffectiveFieldSolution& sol, const Scene& scene, const GridCover& cover) {
  std::vector<std::vector<Index>> mem;
  const auto pts = cell_sample_points(scene, cover, &mem);
  CVector out(cover.size());
  for (Index p = 0; p < cover.size(); ++p) {
    if (mem[p].empty()) {
      out(p) = eval_field(sol, scene, pts[p].front());
      continue;
    }
    Complex s = 0.0;
    for (Index m : mem[p]) s += sol.u(m);
    out(p) = s / static_cast<Real>(mem[p].size());
  }
  return out;
}

/// Mean nearest-neighbour distance of a point set (0 for fewer than 2).
inline Real mean_nearest_distance(const std::vector<Vec3>& pts) {
  if (pts.size() < 2) return 0.0;
  const auto n = static_cast<Index>(pts.size());
  std::vector<Real> best(n, std::numeric_limits<Real>::infinity());
  parallel_for(n, [&](Index i) {
    for (Index j = 0; j < n; ++j)
      if (j != i) best[i] = std::min(best[i], (pts[i] - pts[j]).squaredNorm());
  });
  Real s = 0.0;
  for (Real b : best) s += std::sqrt(b);
  return s / n;
}

struct ConvergenceOptions {
  Box domain;
  BoundaryKind bc = Soft{};
  RealField density = RealField::constant(1.0);
  std::vector<Real> levels{0.02, 0.01, 0.005};
  Real k = 1.0;
  Vec3 alpha = Vec3::UnitZ();
  std::uint64_t seed = 1;
  Real cover_exponent = 1.0 / 3.0;  ///< b(a) = a^exponent
  int reference_cells = 12;         ///< per axis, for the fine collocation reference
  Real separation_factor = 10.0;
  SolverOptions solver;
};

struct ConvergenceRow {
  Real a = 0.0;
  Index M = 0;
  std::array<int, 3> cells{1, 1, 1};
  Real b = 0.0;
  Real error = 0.0;     ///< sup over cells
  Real d_min = 0.0;
  Real d_mean = 0.0;    ///< mean nearest-neighbour distance
  Real regime_ratio = 0.0;  ///< d_mean / a^(1/3)
  Real residual = 0.0;
};

struct ConvergenceReport {
  std::string law;
  std::vector<ConvergenceRow> rows;
  std::vector<Real> orders;  ///< log(e_i / e_{i+1}) / log(a_i / a_{i+1})
  Real reference_residual = 0.0;

  bool strictly_decreasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (!(rows[i].error < rows[i - 1].error)) return false;
    return true;
  }
};

/// Limiting q for a cloud law: c N for soft spheres, b N h for impedance
/// spheres (b = 4 pi).
inline CVector limiting_q(const ConvergenceOptions& o, const GridCover& cover) {
  const CVector N = cover.sample(o.density);
  if (is_soft(o.bc)) return four_pi * N;
  if (const auto* imp = std::get_if<Impedance>(&o.bc)) return (four_pi * imp->h) * N;
  throw UnsupportedScene("convergence study supports soft and impedance clouds only");
}

/// For each level of a: generate a seeded cloud, solve the many-body
/// system, form the cell interpolant on the cover with edge a^(1/3), and
/// compare it with the fine-grid collocation solution of the limiting
/// equation sampled at the same points of each cell.
inline ConvergenceReport convergence_study(const ConvergenceOptions& o) {
  if (o.levels.size() < 3) throw ConfigError("convergence study needs at least three levels of a");
  ConvergenceReport rep;
  rep.law = is_soft(o.bc) ? "dirichlet" : "impedance";
  const IncidentWave wave(o.k, o.alpha.normalized());

  const GridCover fine(o.domain, {o.reference_cells, o.reference_cells, o.reference_cells});
  const CVector qf = limiting_q(o, fine);
  const bool trivial = qf.cwiseAbs().maxCoeff() == 0.0;
  const CollocationSolution ref = collocation_solve(fine, qf, wave, o.solver);
  rep.reference_residual = ref.info.residual;

  for (Real a : o.levels) {
    CloudSpec spec;
    spec.density = o.density;
    spec.a = a;
    spec.bc = o.bc;
    spec.seed = o.seed;
    spec.separation_factor = o.separation_factor;

    Scene scene;
    scene.domain = o.domain;
    scene.wave = wave;
    scene.regime.separation_factor = o.separation_factor;
    scene.particles = generate_cloud(spec, o.domain);

    ManyBodyOptions mo;
    mo.solver = o.solver;
    const auto sol = solve_scene(scene, mo);

    const GridCover cover = GridCover::with_edge(o.domain, std::pow(a, o.cover_exponent));
    const CVector las = las_interpolant(sol, scene, cover);
    const auto samples = cell_sample_points(scene, cover);

    ConvergenceRow row;
    row.a = a;
    row.M = static_cast<Index>(scene.particles.size());
    row.cells = cover.dims();
    row.b = cover.edge();
    row.residual = sol.info.residual;
    const auto pts = scene.centers();
    row.d_min = pts.size() > 1 ? min_pair_distance(pts) : 0.0;
    row.d_mean = mean_nearest_distance(pts);
    row.regime_ratio = row.d_mean / std::cbrt(a);

    std::vector<Real> err(cover.size(), 0.0);
    parallel_for(cover.size(), [&](Index p) {
      Complex r = 0.0;
      for (const auto& x : samples[p]) r += trivial ? wave.value(x) : ref.volume_potential(x);
      err[p] = std::abs(las(p) - r / static_cast<Real>(samples[p].size()));
    });
    for (Real e : err) row.error = std::max(row.error, e);
    rep.rows.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
    const auto &r0 = rep.rows[i], &r1 = rep.rows[i + 1];
    rep.orders.push_back(r1.error > 0.0 && r0.error > 0.0 ? std::log(r0.error / r1.error) / std::log(r0.a / r1.a)
                                                         : 0.0);
  }
  return rep;
}

/// Capacitance density sum C_m / |W| of a soft lattice cloud with spacing
/// d = c a^gamma inside a fixed window.
inline Real dilution_capacitance_density(const Box& window, Real c, Real gamma, Real a) {
  const auto cloud = lattice_cloud(window, c * std::pow(a, gamma), a, Soft{});
  Real s = 0.0;
  for (const auto& p : cloud) s += p.capacitance();
  return s / window.volume();
}

}  // namespace smallscat
