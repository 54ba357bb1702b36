/// \file smallscat/types.hpp
/// \brief Scalar/vector aliases, error hierarchy and the free-space kernel.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace smallscat {

using Real = double;
using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Mat3 = Eigen::Matrix3d;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr Real pi = std::numbers::pi;
inline constexpr Real four_pi = 4.0 * std::numbers::pi;
inline constexpr Complex I{0.0, 1.0};

/// Error categories map one-to-one onto CLI exit codes.
enum class ErrorCategory { Config, Solver, Regime, Geometry, Design };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory cat, std::string code, const std::string& what)
      : std::runtime_error(what), category_(cat), code_(std::move(code)) {}

  ErrorCategory category() const noexcept { return category_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorCategory category_;
  std::string code_;
};

#define SMALLSCAT_ERROR(Name, Cat)                                    \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what)                            \
        : Error(ErrorCategory::Cat, #Name, what) {}                   \
  };

SMALLSCAT_ERROR(ConfigError, Config)
SMALLSCAT_ERROR(DegenerateMesh, Geometry)
SMALLSCAT_ERROR(InvalidMesh, Geometry)
SMALLSCAT_ERROR(PointInsideParticle, Geometry)
SMALLSCAT_ERROR(SolveFailure, Solver)
SMALLSCAT_ERROR(NonConvergence, Solver)
SMALLSCAT_ERROR(MissingFunctional, Solver)
SMALLSCAT_ERROR(GridTooLarge, Solver)
SMALLSCAT_ERROR(RegimeViolation, Regime)
SMALLSCAT_ERROR(DensityInfeasible, Regime)
SMALLSCAT_ERROR(DesignInfeasible, Design)
SMALLSCAT_ERROR(UnsupportedScene, Config)

#undef SMALLSCAT_ERROR

/// Outgoing free-space Helmholtz kernel e^{ik|x-y|} / (4 pi |x-y|).
inline Complex free_green(Real k, Real r) {
  return std::exp(I * (k * r)) / (four_pi * r);
}

inline Complex free_green(Real k, const Vec3& x, const Vec3& y) {
  return free_green(k, (x - y).norm());
}

/// Axis-aligned box.
struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();

  Vec3 extent() const { return hi - lo; }
  Real volume() const { return extent().prod(); }
  Vec3 center() const { return 0.5 * (lo + hi); }
  bool contains(const Vec3& x, Real slack = 0.0) const {
    return (x.array() >= lo.array() - slack).all() &&
           (x.array() <= hi.array() + slack).all();
  }
  bool valid() const { return (hi.array() > lo.array()).all(); }
};

}  // namespace smallscat
