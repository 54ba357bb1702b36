/// \file smallscat/onebody.hpp
/// \brief One-body shape functionals and small-body charges / amplitudes.
///
/// A small body enters the many-body systems only through a handful of
/// numbers: its electrostatic capacitance C (soft), its surface area |S|
/// (impedance), and its volume |D| together with the magnetic polarizability
/// tensor beta_pq (hard).  This header computes them on a triangulated
/// surface and turns them into charges Q and scattering amplitudes A.

#pragma once

#include "smallscat/incident.hpp"
#include "smallscat/linsolve.hpp"
#include "smallscat/mesh.hpp"

#include <optional>

namespace smallscat {

namespace detail {

/// Integral of 1/|p - t| over triangle (v0, v1, v2) for p in its plane and
/// inside it, summed over the three sub-triangles with apex p.
inline Real self_panel_potential(const Vec3& p, const Vec3& v0, const Vec3& v1,
                                 const Vec3& v2) {
  const Vec3* v[3] = {&v0, &v1, &v2};
  Real sum = 0.0;
  for (int e = 0; e < 3; ++e) {
    const Vec3 A = *v[e] - p;
    const Vec3 B = *v[(e + 1) % 3] - p;
    const Vec3 dir = (B - A).normalized();
    const Real sa = A.dot(dir);
    const Real sb = B.dot(dir);
    const Real h = (A - sa * dir).norm();
    if (h <= 0.0) continue;
    sum += h * (std::asinh(sb / h) - std::asinh(sa / h));
  }
  return sum;
}

}  // namespace detail

/// Zeroth-order capacitance 4 pi |S|^2 / (double integral of 1/r).
/// Off-diagonal panel pairs use the centroid rule; each self pair uses the
/// exact potential of the panel at its own centroid.
inline Real capacitance_zeroth(const SurfaceMesh& mesh) {
  const auto n = static_cast<Index>(mesh.size());
  std::vector<Real> row(n, 0.0);
  parallel_for(n, [&](Index i) {
    const Vec3& ci = mesh.centroid(i);
    Real acc = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      acc += mesh.area(j) / (ci - mesh.centroid(j)).norm();
    }
    const auto& t = mesh.triangles()[i];
    const auto& V = mesh.vertices();
    acc += detail::self_panel_potential(ci, V[t[0]], V[t[1]], V[t[2]]);
    row[i] = mesh.area(i) * acc;
  });
  Real denom = 0.0;
  for (Real r : row) denom += r;
  const Real S = mesh.surface_area();
  return four_pi * S * S / denom;
}

/// Discrete static operator A0 sigma(s) = 2 int dg0(s,t)/dN_s sigma(t) dt.
///
/// Off-diagonal entries are centroid collocation.  The diagonal is fixed by
/// the Gauss identity 2 int_S dg0(s,t)/dN_s ds = -1 (t on S) imposed on each
/// column with area weights, so that sum_i |T_i| (A0 sigma)_i = -sum_j |T_j|
/// sigma_j holds exactly for every discrete density.
inline Eigen::MatrixXd double_layer_static(const SurfaceMesh& mesh) {
  const auto n = static_cast<Index>(mesh.size());
  Eigen::MatrixXd K(n, n);
  parallel_for(n, [&](Index i) {
    const Vec3& si = mesh.centroid(i);
    const Vec3& ni = mesh.normal(i);
    for (Index j = 0; j < n; ++j) {
      if (j == i) {
        K(i, j) = 0.0;
        continue;
      }
      const Vec3 d = si - mesh.centroid(j);
      const Real r = d.norm();
      K(i, j) = -2.0 * d.dot(ni) / (four_pi * r * r * r) * mesh.area(j);
    }
  });
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(mesh.areas().data(), n);
  const Eigen::RowVectorXd col = w.transpose() * K;
  for (Index j = 0; j < n; ++j) K(j, j) = (-w(j) - col(j)) / w(j);
  return K;
}

/// Magnetic polarizability tensor beta_pq = (1/|D|) int t_p sigma_q dt,
/// where sigma_q solves sigma_q = A0 sigma_q - 2 N_q.
inline Mat3 polarizability(const SurfaceMesh& mesh) {
  const auto n = static_cast<Index>(mesh.size());
  const Eigen::MatrixXd K = double_layer_static(mesh);
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - K;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);

  Eigen::MatrixXd rhs(n, 3);
  Vec3 origin = Vec3::Zero();
  for (Index i = 0; i < n; ++i) {
    rhs.row(i) = -2.0 * mesh.normal(i).transpose();
    origin += mesh.area(i) * mesh.centroid(i);
  }
  origin /= mesh.surface_area();

  const Eigen::MatrixXd sigma = lu.solve(rhs);
  if (!sigma.allFinite()) throw SolveFailure("polarizability solve produced non-finite values");
  if ((A * sigma - rhs).norm() > 1e-8 * rhs.norm())
    throw SolveFailure("polarizability solve residual too large");

  Mat3 beta = Mat3::Zero();
  for (Index i = 0; i < n; ++i) {
    const Vec3 t = mesh.centroid(i) - origin;
    beta += mesh.area(i) * t * sigma.row(i);
  }
  return beta / mesh.volume();
}

/// Shape numbers for a body of size a = 0.5 diam.  Which fields are needed
/// depends on the boundary kind; absent ones raise MissingFunctional.
struct ShapeFunctionals {
  Real a = 0.0;
  std::optional<Real> capacitance;
  std::optional<Real> area;
  std::optional<Real> volume;
  std::optional<Mat3> beta;

  /// b = |S| / a^2.
  Real surface_factor() const { return require(area, "surface area") / (a * a); }

  /// Same shape dilated to size a_new: C ~ a, |S| ~ a^2, |D| ~ a^3, beta ~ 1.
  ShapeFunctionals scaled_to(Real a_new) const {
    const Real s = a_new / a;
    ShapeFunctionals f = *this;
    f.a = a_new;
    if (capacitance) f.capacitance = *capacitance * s;
    if (area) f.area = *area * s * s;
    if (volume) f.volume = *volume * s * s * s;
    return f;
  }

  template <class T>
  static const T& require(const std::optional<T>& v, const char* what) {
    if (!v) throw MissingFunctional(std::string("missing shape functional: ") + what);
    return *v;
  }
};

/// Closed-form functionals of a ball of radius a.
inline ShapeFunctionals sphere_functionals(Real a) {
  ShapeFunctionals f;
  f.a = a;
  f.capacitance = four_pi * a;
  f.area = four_pi * a * a;
  f.volume = four_pi / 3.0 * a * a * a;
  f.beta = -1.5 * Mat3::Identity();
  return f;
}

inline ShapeFunctionals mesh_functionals(const SurfaceMesh& mesh, bool with_beta = true) {
  ShapeFunctionals f;
  f.a = mesh.radius_scale();
  f.capacitance = capacitance_zeroth(mesh);
  f.area = mesh.surface_area();
  f.volume = mesh.volume();
  if (with_beta) f.beta = polarizability(mesh);
  return f;
}

/// Soft body: Q = -C u0(center).
inline Complex charge_soft(Real C, Complex u0_at_center) { return -C * u0_at_center; }

/// Impedance body: Q = -zeta |S| u0(center).
inline Complex charge_impedance(Complex zeta, Real area, Complex u0_at_center) {
  return -zeta * area * u0_at_center;
}

/// Hard body: Q = lap u0(center) |D|.
inline Complex charge_hard(Complex laplacian_u0_at_center, Real volume) {
  return laplacian_u0_at_center * volume;
}

/// zeta = h / a^kappa.
inline Complex impedance_zeta(const Impedance& imp, Real a) {
  return imp.h / std::pow(a, imp.kappa);
}

/// Hard-body amplitude for an arbitrary incident field given its gradient
/// and Laplacian at the body center:
///   A = |D|/(4 pi) (i k beta_pq beta_p du0/dx_q + lap u0).
inline Complex amplitude_hard_general(const ShapeFunctionals& f, Real k, const CVec3& grad_u0,
                                      Complex lap_u0, const Vec3& direction) {
  const Mat3& beta = ShapeFunctionals::require(f.beta, "polarizability tensor");
  const Real vol = ShapeFunctionals::require(f.volume, "volume");
  const Complex dip = direction.cast<Complex>().dot(beta.cast<Complex>() * grad_u0);
  return vol / four_pi * (I * k * dip + lap_u0);
}

/// Scattering amplitude of one small body at the origin, observed along
/// `direction`, for the plane wave `wave`.
inline Complex amplitude_onebody(const BoundaryKind& bc, const ShapeFunctionals& f,
                                 const IncidentWave& wave, const Vec3& direction) {
  const Complex u0 = wave.amplitude;
  if (is_soft(bc)) {
    return charge_soft(ShapeFunctionals::require(f.capacitance, "capacitance"), u0) / four_pi;
  }
  if (const auto* imp = std::get_if<Impedance>(&bc)) {
    return charge_impedance(impedance_zeta(*imp, f.a), ShapeFunctionals::require(f.area, "surface area"),
                            u0) / four_pi;
  }
  return amplitude_hard_general(f, wave.k, wave.gradient(Vec3::Zero()),
                                wave.laplacian(Vec3::Zero()), direction);
}

}  // namespace smallscat
