/// \file smallscat/background.hpp
/// \brief Outgoing Green's function of (lap + k^2 n0^2(x)) for a background
/// medium with n0^2 = 1 outside a box D.
///
/// G(., y) solves the Lippmann-Schwinger equation
///   G(x, y) = g(x, y) + k^2 int_D g(x, z) (n0^2(z) - 1) G(z, y) dz,
/// discretized by a Nystrom rule on a uniform cell grid over D.  The cell
/// containing an evaluation point contributes the exact cell integral of g
/// instead of the point value, which keeps the weakly singular 1/r part
/// under control and makes the discrete G exactly reciprocal.

#pragma once

#include "smallscat/field.hpp"
#include "smallscat/incident.hpp"
#include "smallscat/linsolve.hpp"
#include "smallscat/quadrature.hpp"

#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace smallscat {

/// n0^2(x): given profile inside `domain`, identically 1 outside.
struct BackgroundMedium {
  Box domain;
  std::optional<ComplexField> n2;  ///< empty means homogeneous (n0^2 = 1)

  static BackgroundMedium homogeneous(const Box& d = Box{}) { return {d, std::nullopt}; }

  bool trivial() const {
    return !n2 || (n2->is_constant() && n2->constant_value() == Complex(1.0));
  }
  Complex refraction2(const Vec3& x) const {
    if (!n2 || !domain.contains(x)) return 1.0;
    return (*n2)(x);
  }
  Complex contrast(const Vec3& x) const { return refraction2(x) - 1.0; }
  /// max |n0| over D (and 1 outside).
  Real n0_max() const {
    if (!n2) return 1.0;
    return std::max(1.0, std::sqrt(n2->max_abs(domain)));
  }
};

struct SmallnessDiagnostic {
  Real value = 0.0;  ///< k * n0max * a
  Real threshold = 0.1;
  bool pass = true;
};

inline SmallnessDiagnostic smallness_check(const BackgroundMedium& medium, Real a, Real k,
                                           Real threshold = 0.1) {
  SmallnessDiagnostic d;
  d.value = k * medium.n0_max() * a;
  d.threshold = threshold;
  d.pass = d.value <= threshold;
  return d;
}

enum class GreenMethod { FreeSpace, BornSeries, LippmannSchwinger };

struct GreenOptions {
  GreenMethod method = GreenMethod::LippmannSchwinger;
  int born_order = 1;        ///< BornSeries: order in the contrast
  Real tol = 1e-10;          ///< LippmannSchwinger: relative update tolerance
  int max_iter = 200;        ///< LippmannSchwinger: iteration cap
  int fixed_iterations = 0;  ///< LippmannSchwinger: if > 0, run exactly this many
  int grid = 10;             ///< Nystrom cells per axis over D
};

class GreenEvaluator {
 public:
  GreenEvaluator(BackgroundMedium medium, Real k, GreenOptions opts = {})
      : medium_(std::move(medium)), k_(k), opts_(opts) {
    if (!(k > 0.0)) throw ConfigError("wave number must be positive");
    if (medium_.trivial()) {
      opts_.method = GreenMethod::FreeSpace;
      return;
    }
    if (opts_.method == GreenMethod::FreeSpace)
      throw ConfigError("free-space kernel requested for an inhomogeneous background");
    if (opts_.grid < 1) throw ConfigError("background grid must have at least one cell");
    if (opts_.method == GreenMethod::BornSeries && opts_.born_order < 0)
      throw ConfigError("Born order must be non-negative");
    build_grid();
  }

  GreenMethod method() const { return opts_.method; }
  Real k() const { return k_; }
  const BackgroundMedium& medium() const { return medium_; }
  std::size_t active_nodes() const { return nodes_.size(); }

  /// k^2 * max |n0^2 - 1| * (cell-integral norm of g), reported when the
  /// contrast series fails to converge.
  Real contrast_norm() const { return contrast_norm_; }

  /// G(x, y), x != y.
  Complex green(const Vec3& x, const Vec3& y) const {
    const Complex g0 = free_green(k_, x, y);
    if (opts_.method == GreenMethod::FreeSpace) return g0;
    return g0 + scattered_part(x, node_field(y));
  }

  /// Background-dressed incident field: u0 + k^2 int g c u0_bg.
  Complex incident(const IncidentWave& wave, const Vec3& x) const {
    if (opts_.method == GreenMethod::FreeSpace) return wave.value(x);
    if (incident_cache_ && same_wave(incident_cache_->first, wave))
      return wave.value(x) + scattered_part(x, incident_cache_->second);
    return wave.value(x) + scattered_part(x, incident_nodes(wave));
  }

  /// Far-field pattern of G(., y): G(r beta, y) ~ e^{ikr}/r * far_green(beta, y).
  Complex far_green(const Vec3& beta, const Vec3& y) const {
    const Complex plane = std::exp(-I * (k_ * beta.dot(y))) / four_pi;
    if (opts_.method == GreenMethod::FreeSpace) return plane;
    const CVector& G = node_field(y);
    Complex acc = 0.0;
    for (std::size_t l = 0; l < nodes_.size(); ++l)
      acc += std::exp(-I * (k_ * beta.dot(nodes_[l]))) * weight_ * contrast_[l] * G(l);
    return plane + k_ * k_ * acc / four_pi;
  }

  /// Precompute node fields for the given sources so that later green()
  /// calls with those y are lookups.  Not thread-safe; call before solving.
  void prepare(const std::vector<Vec3>& sources) {
    if (opts_.method == GreenMethod::FreeSpace) return;
    std::vector<CVector> fields(sources.size());
    parallel_for(static_cast<Index>(sources.size()),
                 [&](Index i) { fields[i] = solve_nodes(free_vector(sources[i])); });
    for (std::size_t i = 0; i < sources.size(); ++i) cache_.emplace(key(sources[i]), std::move(fields[i]));
  }

  /// Cache the dressed incident field on the nodes.  Same contract as prepare().
  void prepare_incident(const IncidentWave& wave) {
    if (opts_.method == GreenMethod::FreeSpace) return;
    incident_cache_.emplace(wave, incident_nodes(wave));
  }

  /// Node values of G(z_l, y) (exposed for tests).
  CVector node_field_copy(const Vec3& y) const { return node_field(y); }

 private:
  using Key = std::array<Real, 3>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::size_t h = 1469598103934665603ull;
      for (Real v : k) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h = (h ^ bits) * 1099511628211ull;
      }
      return h;
    }
  };
  static Key key(const Vec3& y) { return {y.x(), y.y(), y.z()}; }
  static bool same_wave(const IncidentWave& a, const IncidentWave& b) {
    return a.k == b.k && a.alpha == b.alpha && a.amplitude == b.amplitude;
  }

  void build_grid() {
    const Vec3 ext = medium_.domain.extent();
    h_ = ext / opts_.grid;
    weight_ = h_.prod();
    const int n = opts_.grid;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const Vec3 c = medium_.domain.lo + Vec3((i + 0.5) * h_.x(), (j + 0.5) * h_.y(), (k + 0.5) * h_.z());
          const Complex contrast = medium_.contrast(c);
          if (contrast == Complex(0.0)) continue;
          if (contrast.imag() < 0.0) throw ConfigError("background requires Im n0^2 >= 0");
          cell_to_node_[(static_cast<long>(k) * n + j) * n + i] = static_cast<int>(nodes_.size());
          nodes_.push_back(c);
          contrast_.push_back(contrast);
        }
    const Box cell0{-0.5 * h_, 0.5 * h_};
    self_ = helmholtz_box_integral(k_, Vec3::Zero(), cell0);

    const auto m = static_cast<Index>(nodes_.size());
    // T = k^2 * Kw * diag(c), Kw_il = w g(z_i, z_l) off-diagonal, cell integral on the diagonal.
    T_.resize(m, m);
    parallel_for(m, [&](Index i) {
      for (Index l = 0; l < m; ++l) {
        const Complex kw = i == l ? self_ : weight_ * free_green(k_, nodes_[i], nodes_[l]);
        T_(i, l) = k_ * k_ * kw * contrast_[l];
      }
    });
    contrast_norm_ = m > 0 ? T_.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  }

  /// Index of the active node whose cell contains x, or -1.
  int containing_node(const Vec3& x) const {
    if (!medium_.domain.contains(x)) return -1;
    const int n = opts_.grid;
    std::array<long, 3> c;
    for (int d = 0; d < 3; ++d)
      c[d] = std::clamp(static_cast<long>(std::floor((x[d] - medium_.domain.lo[d]) / h_[d])), 0L,
                        static_cast<long>(n - 1));
    auto it = cell_to_node_.find((c[2] * n + c[1]) * n + c[0]);
    return it == cell_to_node_.end() ? -1 : it->second;
  }

  /// w * g(p, z_l), with the exact cell integral for the cell containing p.
  Complex weighted_kernel(const Vec3& p, std::size_t l, int own) const {
    if (static_cast<int>(l) == own) {
      const Box cell{nodes_[l] - 0.5 * h_, nodes_[l] + 0.5 * h_};
      return helmholtz_box_integral(k_, p, cell);
    }
    return weight_ * free_green(k_, p, nodes_[l]);
  }

  CVector free_vector(const Vec3& y) const {
    const int own = containing_node(y);
    CVector v(nodes_.size());
    for (std::size_t l = 0; l < nodes_.size(); ++l) v(l) = weighted_kernel(y, l, own) / weight_;
    return v;
  }

  Complex scattered_part(const Vec3& x, const CVector& field) const {
    const int own = containing_node(x);
    Complex acc = 0.0;
    for (std::size_t l = 0; l < nodes_.size(); ++l)
      acc += weighted_kernel(x, l, own) * contrast_[l] * field(l);
    return k_ * k_ * acc;
  }

  /// Node iteration G <- f + T G started from f.  The returned node field
  /// represents G to contrast order (iterations + 1) once inserted into
  /// scattered_part, so BornSeries{N} runs N - 1 node updates.
  CVector solve_nodes(const CVector& f) const {
    CVector G = f;
    if (opts_.method == GreenMethod::BornSeries) {
      if (opts_.born_order == 0) return CVector::Zero(f.size());
      for (int n = 1; n < opts_.born_order; ++n) G = f + T_ * G;
      return G;
    }
    if (opts_.fixed_iterations > 0) {
      for (int n = 1; n < opts_.fixed_iterations; ++n) G = f + T_ * G;
      return G;
    }
    Real prev = std::numeric_limits<Real>::infinity();
    int growth = 0;
    for (int it = 0; it < opts_.max_iter; ++it) {
      CVector next = f + T_ * G;
      const Real delta = (next - G).norm();
      const Real scale = next.norm();
      G = std::move(next);
      if (!G.allFinite()) break;
      if (delta <= opts_.tol * scale) return G;
      growth = delta > prev ? growth + 1 : 0;
      if (growth >= 5) break;
      prev = delta;
    }
    std::ostringstream msg;
    msg << "Lippmann-Schwinger iteration did not converge (contrast norm " << contrast_norm_ << ")";
    throw NonConvergence(msg.str());
  }

  CVector node_field(const Vec3& y) const {
    if (auto it = cache_.find(key(y)); it != cache_.end()) return it->second;
    return solve_nodes(free_vector(y));
  }

  CVector incident_nodes(const IncidentWave& wave) const {
    CVector f(nodes_.size());
    for (std::size_t l = 0; l < nodes_.size(); ++l) f(l) = wave.value(nodes_[l]);
    return solve_nodes(f);
  }

  BackgroundMedium medium_;
  Real k_;
  GreenOptions opts_;
  Vec3 h_ = Vec3::Ones();
  Real weight_ = 1.0;
  Complex self_ = 0.0;
  std::vector<Vec3> nodes_;
  std::vector<Complex> contrast_;
  std::map<long, int> cell_to_node_;
  CMatrix T_;
  Real contrast_norm_ = 0.0;
  std::unordered_map<Key, CVector, KeyHash> cache_;
  std::optional<std::pair<IncidentWave, CVector>> incident_cache_;
};

}  // namespace smallscat
