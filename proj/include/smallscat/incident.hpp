/// \file smallscat/incident.hpp
/// \brief Incident plane wave and particle boundary kinds.

#pragma once

#include "smallscat/types.hpp"

#include <string>
#include <variant>

namespace smallscat {

/// u0(x) = amplitude * exp(i k alpha . x).
struct IncidentWave {
  Real k = 1.0;
  Vec3 alpha = Vec3::UnitZ();
  Complex amplitude = 1.0;

  IncidentWave() = default;
  IncidentWave(Real k_, const Vec3& alpha_, Complex amplitude_ = 1.0)
      : k(k_), alpha(alpha_), amplitude(amplitude_) {
    if (!(k > 0.0)) throw ConfigError("wave number must be positive");
    if (std::abs(alpha.norm() - 1.0) > 1e-12)
      throw ConfigError("incidence direction must be a unit vector");
  }

  Complex value(const Vec3& x) const { return amplitude * std::exp(I * (k * alpha.dot(x))); }
  CVec3 gradient(const Vec3& x) const { return (I * k * value(x)) * alpha.cast<Complex>(); }
  Complex laplacian(const Vec3& x) const { return -k * k * value(x); }
};

struct Soft {};
struct Hard {};
/// Robin condition u_N = zeta u with zeta = h / a^kappa.
struct Impedance {
  Complex h = 0.0;
  Real kappa = 0.5;
};

using BoundaryKind = std::variant<Soft, Impedance, Hard>;

inline std::string kind_name(const BoundaryKind& bc) {
  return std::visit(
      [](const auto& b) -> std::string {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, Soft>) return "soft";
        else if constexpr (std::is_same_v<T, Impedance>) return "impedance";
        else return "hard";
      },
      bc);
}

inline bool is_soft(const BoundaryKind& bc) { return std::holds_alternative<Soft>(bc); }
inline bool is_hard(const BoundaryKind& bc) { return std::holds_alternative<Hard>(bc); }
inline bool is_impedance(const BoundaryKind& bc) { return std::holds_alternative<Impedance>(bc); }

}  // namespace smallscat
