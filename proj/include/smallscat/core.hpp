/// \file smallscat/core.hpp
/// \brief Particles, scenes, regime validation and deterministic particle
/// cloud generation from a counting law.

#pragma once

#include "smallscat/background.hpp"
#include "smallscat/field.hpp"
#include "smallscat/incident.hpp"
#include "smallscat/onebody.hpp"

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace smallscat {

/// One small body: center, size a = 0.5 diam, boundary kind and shape
/// functionals already scaled to a.
struct Particle {
  Vec3 center = Vec3::Zero();
  Real a = 0.0;
  BoundaryKind bc = Soft{};
  ShapeFunctionals shape;
  std::string shape_name = "sphere";

  static Particle sphere(const Vec3& center, Real a, BoundaryKind bc = Soft{}) {
    if (!(a > 0.0)) throw ConfigError("particle radius must be positive");
    return {center, a, bc, sphere_functionals(a), "sphere"};
  }

  /// `reference` describes the shape at any size; it is dilated to a.
  static Particle shaped(const Vec3& center, Real a, BoundaryKind bc, const ShapeFunctionals& reference,
                         std::string name) {
    if (!(a > 0.0)) throw ConfigError("particle radius must be positive");
    return {center, a, bc, reference.scaled_to(a), std::move(name)};
  }

  Real capacitance() const { return ShapeFunctionals::require(shape.capacitance, "capacitance"); }
  Real surface_factor() const { return shape.surface_factor(); }
  Real volume() const { return ShapeFunctionals::require(shape.volume, "volume"); }
  const Mat3& beta() const { return ShapeFunctionals::require(shape.beta, "polarizability tensor"); }
};

struct RegimeOptions {
  Real separation_factor = 10.0;   ///< require d_min >= factor * max a
  Real smallness_threshold = 0.1;  ///< require k n0max max a <= threshold
};

struct Scene {
  std::vector<Particle> particles;
  Box domain;
  BackgroundMedium background;
  IncidentWave wave;
  RegimeOptions regime;

  Real max_radius() const {
    Real m = 0.0;
    for (const auto& p : particles) m = std::max(m, p.a);
    return m;
  }
  std::vector<Vec3> centers() const {
    std::vector<Vec3> c;
    c.reserve(particles.size());
    for (const auto& p : particles) c.push_back(p.center);
    return c;
  }
};

/// Smallest pairwise distance (infinity for fewer than two points).
inline Real min_pair_distance(const std::vector<Vec3>& pts) {
  const auto n = static_cast<Index>(pts.size());
  std::vector<Real> best(n, std::numeric_limits<Real>::infinity());
  parallel_for(n, [&](Index i) {
    Real b = std::numeric_limits<Real>::infinity();
    for (Index j = i + 1; j < n; ++j) b = std::min(b, (pts[i] - pts[j]).squaredNorm());
    best[i] = b;
  });
  Real m = std::numeric_limits<Real>::infinity();
  for (Real b : best) m = std::min(m, b);
  return std::sqrt(m);
}

struct Violation {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  Real d_min = std::numeric_limits<Real>::infinity();
  Real ka = 0.0;  ///< k n0max max a

  bool accepted() const { return violations.empty(); }
  bool has(const std::string& code) const {
    for (const auto& v : violations)
      if (v.code == code) return true;
    return false;
  }
  std::string summary() const {
    std::string s;
    for (const auto& v : violations) s += (s.empty() ? "" : "; ") + v.message;
    return s;
  }
};

inline ValidationReport validate_scene(const Scene& scene) {
  ValidationReport rep;
  const Real amax = scene.max_radius();
  const auto small = smallness_check(scene.background, amax, scene.wave.k, scene.regime.smallness_threshold);
  rep.ka = small.value;
  if (!small.pass) {
    std::ostringstream m;
    m << "k n0 a = " << small.value << " > " << small.threshold;
    rep.violations.push_back({"ka_too_large", m.str()});
  }

  rep.d_min = min_pair_distance(scene.centers());
  if (scene.particles.size() > 1 && rep.d_min < scene.regime.separation_factor * amax) {
    std::ostringstream m;
    m << "d/a = " << rep.d_min / amax << " < " << scene.regime.separation_factor;
    rep.violations.push_back({"separation_too_small", m.str()});
  }

  for (std::size_t i = 0; i < scene.particles.size(); ++i) {
    const auto& p = scene.particles[i];
    if (!scene.domain.contains(p.center)) {
      rep.violations.push_back({"center_outside_domain", "particle " + std::to_string(i) + " center outside D"});
    }
    if (const auto* imp = std::get_if<Impedance>(&p.bc)) {
      if (imp->h.imag() > 0.0) {
        std::ostringstream m;
        m << "Im h > 0 for particle " << i << " (h = " << imp->h << ")";
        rep.violations.push_back({"impedance_sign", m.str()});
      }
      if (!(imp->kappa > 0.0 && imp->kappa < 1.0)) {
        rep.violations.push_back({"kappa_range", "kappa outside (0,1) for particle " + std::to_string(i)});
      }
    }
  }
  return rep;
}

/// Counting laws: expected number of particles in a region Delta is
/// scale(a) * int_Delta N dx.
enum class CountingLaw {
  Dirichlet,  ///< scale = 1/a
  Impedance,  ///< scale = a^(kappa-2)
  Volume      ///< scale = 1/|D_m|, N read as a volume fraction (hard bodies)
};

struct CloudSpec {
  RealField density = RealField::constant(1.0);
  Real a = 0.01;
  BoundaryKind bc = Soft{};
  std::uint64_t seed = 1;
  /// Stratification cells per axis; 0 picks about one expected particle per cell.
  int strata = 0;
  Real separation_factor = 10.0;
  int retry_cap = 1000;  ///< rejection-sampling attempts per particle
  /// Reference shape (dilated to a); spheres when empty.
  std::optional<ShapeFunctionals> shape;
  std::string shape_name = "sphere";

  CountingLaw law() const {
    if (is_soft(bc)) return CountingLaw::Dirichlet;
    if (is_impedance(bc)) return CountingLaw::Impedance;
    return CountingLaw::Volume;
  }
  ShapeFunctionals functionals() const { return shape ? shape->scaled_to(a) : sphere_functionals(a); }
  Real law_scale() const {
    switch (law()) {
      case CountingLaw::Dirichlet:
        return 1.0 / a;
      case CountingLaw::Impedance:
        return std::pow(a, std::get<Impedance>(bc).kappa - 2.0);
      case CountingLaw::Volume:
        return 1.0 / ShapeFunctionals::require(functionals().volume, "volume");
    }
    return 0.0;
  }
};

/// Uniform [0, 1) doubles from the top 53 bits of mt19937_64; unlike the
/// standard distributions this is bit-reproducible across libraries.
class UnitRng {
 public:
  explicit UnitRng(std::uint64_t seed) : eng_(seed) {}
  Real operator()() { return static_cast<Real>(eng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 eng_;
};

struct Stratification {
  Box domain;
  std::array<int, 3> dims{1, 1, 1};
  Vec3 cell_size() const { return domain.extent().cwiseQuotient(Vec3(dims[0], dims[1], dims[2])); }
  Box cell(int i, int j, int k) const {
    const Vec3 h = cell_size();
    const Vec3 lo = domain.lo + Vec3(i * h.x(), j * h.y(), k * h.z());
    return {lo, lo + h};
  }
};

inline Stratification stratification_for(const CloudSpec& spec, const Box& domain, Real expected) {
  Stratification s{domain, {1, 1, 1}};
  if (spec.strata > 0) {
    s.dims = {spec.strata, spec.strata, spec.strata};
    return s;
  }
  if (expected < 1.0) return s;
  const Real edge = std::cbrt(domain.volume() / expected);
  for (int d = 0; d < 3; ++d) s.dims[d] = std::max(1, static_cast<int>(std::lround(domain.extent()[d] / edge)));
  return s;
}

/// Per-stratum particle counts by carrying the rounding remainder forward,
/// so every prefix of cells is within 1/2 of its expected total.
inline std::vector<long> stratified_counts(const CloudSpec& spec, const Stratification& s) {
  const Real scale = spec.law_scale();
  std::vector<long> counts;
  counts.reserve(static_cast<std::size_t>(s.dims[0]) * s.dims[1] * s.dims[2]);
  Real cum = 0.0;
  long placed = 0;
  for (int k = 0; k < s.dims[2]; ++k)
    for (int j = 0; j < s.dims[1]; ++j)
      for (int i = 0; i < s.dims[0]; ++i) {
        cum += scale * spec.density.integrate(s.cell(i, j, k));
        const long target = static_cast<long>(std::floor(cum + 0.5));
        counts.push_back(target - placed);
        placed = target;
      }
  return counts;
}

/// Places round(scale * int_D N) particles: stratified counts, uniform
/// jitter within each stratum from a seeded generator, rejection of
/// candidates closer than separation_factor * a to an earlier particle.
inline std::vector<Particle> generate_cloud(const CloudSpec& spec, const Box& domain) {
  if (!(spec.a > 0.0)) throw ConfigError("cloud radius must be positive");
  if (!domain.valid()) throw ConfigError("cloud domain is empty");
  if (spec.density.min_real(domain) < 0.0) throw ConfigError("density N(x) must be non-negative");
  if (const auto* imp = std::get_if<Impedance>(&spec.bc); imp && !(imp->kappa > 0.0 && imp->kappa < 1.0))
    throw ConfigError("kappa must lie in (0,1)");

  const Real expected = spec.law_scale() * spec.density.integrate(domain);
  const Stratification strat = stratification_for(spec, domain, expected);
  const std::vector<long> counts = stratified_counts(spec, strat);

  const ShapeFunctionals f = spec.functionals();
  const Real min_d = spec.separation_factor * spec.a;
  const Real bin = std::max(min_d, 1e-12);
  auto bin_of = [&](const Vec3& x) {
    return std::array<long, 3>{static_cast<long>(std::floor((x.x() - domain.lo.x()) / bin)),
                               static_cast<long>(std::floor((x.y() - domain.lo.y()) / bin)),
                               static_cast<long>(std::floor((x.z() - domain.lo.z()) / bin))};
  };
  auto bin_key = [](const std::array<long, 3>& b) {
    return (static_cast<std::uint64_t>(b[0] + 1) * 73856093ull) ^
           (static_cast<std::uint64_t>(b[1] + 1) * 19349663ull) ^ (static_cast<std::uint64_t>(b[2] + 1) * 83492791ull);
  };
  std::unordered_map<std::uint64_t, std::vector<int>> bins;

  // Within a stratum, non-constant densities are sampled by acceptance against the stratum peak.
  const bool weighted = !spec.density.is_constant();
  UnitRng rng(spec.seed);
  std::vector<Particle> out;
  std::size_t cell = 0;
  for (int k = 0; k < strat.dims[2]; ++k)
    for (int j = 0; j < strat.dims[1]; ++j)
      for (int i = 0; i < strat.dims[0]; ++i, ++cell) {
        const Box c = strat.cell(i, j, k);
        // keep every ball inside D
        Vec3 lo = c.lo.cwiseMax(domain.lo + Vec3::Constant(spec.a));
        Vec3 hi = c.hi.cwiseMin(domain.hi - Vec3::Constant(spec.a));
        for (int d = 0; d < 3; ++d)
          if (hi[d] < lo[d]) lo[d] = hi[d] = c.center()[d];
        const Real peak = weighted ? spec.density.max_abs(c) : 0.0;
        for (long n = 0; n < counts[cell]; ++n) {
          bool ok = false;
          Vec3 x;
          for (int attempt = 0; attempt < spec.retry_cap && !ok; ++attempt) {
            const Real rx = rng(), ry = rng(), rz = rng();
            x = lo + Vec3(rx, ry, rz).cwiseProduct(hi - lo);
            if (weighted && rng() * peak >= spec.density(x)) continue;
            ok = true;
            const auto b = bin_of(x);
            for (long dx = -1; dx <= 1 && ok; ++dx)
              for (long dy = -1; dy <= 1 && ok; ++dy)
                for (long dz = -1; dz <= 1 && ok; ++dz) {
                  auto it = bins.find(bin_key({b[0] + dx, b[1] + dy, b[2] + dz}));
                  if (it == bins.end()) continue;
                  for (int idx : it->second)
                    if ((out[idx].center - x).norm() < min_d) {
                      ok = false;
                      break;
                    }
                }
          }
          if (!ok) {
            std::ostringstream m;
            m << "cannot place particle " << out.size() << " of " << std::llround(expected)
              << " at separation " << min_d << " after " << spec.retry_cap << " attempts";
            throw DensityInfeasible(m.str());
          }
          bins[bin_key(bin_of(x))].push_back(static_cast<int>(out.size()));
          out.push_back({x, spec.a, spec.bc, f, spec.shape_name});
        }
      }
  return out;
}

/// Cubic lattice of spacing d filling `window` (used for dilution-regime
/// studies where d is prescribed as a power of a).
inline std::vector<Particle> lattice_cloud(const Box& window, Real d, Real a, BoundaryKind bc = Soft{}) {
  if (!(d > 0.0)) throw ConfigError("lattice spacing must be positive");
  std::array<long, 3> n;
  for (int i = 0; i < 3; ++i) n[i] = std::max(1L, static_cast<long>(std::floor(window.extent()[i] / d)));
  const Vec3 offset = 0.5 * (window.extent() - Vec3((n[0] - 1) * d, (n[1] - 1) * d, (n[2] - 1) * d));
  std::vector<Particle> out;
  out.reserve(n[0] * n[1] * n[2]);
  for (long k = 0; k < n[2]; ++k)
    for (long j = 0; j < n[1]; ++j)
      for (long i = 0; i < n[0]; ++i)
        out.push_back(Particle::sphere(window.lo + offset + d * Vec3(i, j, k), a, bc));
  return out;
}

}  // namespace smallscat
