/// \file smallscat/field.hpp
/// \brief Scalar fields on a box from a fixed catalog: constant, affine,
/// isotropic Gaussian bump, or piecewise-constant gridded samples.

#pragma once

#include "smallscat/types.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace smallscat {

template <class T>
class Field {
 public:
  enum class Kind { Constant, Affine, Gaussian, Grid };

  static Field constant(T value) {
    Field f;
    f.kind_ = Kind::Constant;
    f.base_ = value;
    return f;
  }

  /// base + slope . (x - origin)
  static Field affine(T base, const Eigen::Matrix<T, 3, 1>& slope, const Vec3& origin = Vec3::Zero()) {
    Field f;
    f.kind_ = Kind::Affine;
    f.base_ = base;
    f.slope_ = slope;
    f.center_ = origin;
    return f;
  }

  /// base + amplitude * exp(-|x - center|^2 / (2 width^2))
  static Field gaussian(T base, T amplitude, const Vec3& center, Real width) {
    if (!(width > 0.0)) throw ConfigError("gaussian width must be positive");
    Field f;
    f.kind_ = Kind::Gaussian;
    f.base_ = base;
    f.amplitude_ = amplitude;
    f.center_ = center;
    f.width_ = width;
    return f;
  }

  /// Cell-centered samples on box, x index fastest; zero outside the box.
  static Field grid(const Box& box, std::array<int, 3> dims, std::vector<T> samples) {
    if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) throw ConfigError("grid dims must be positive");
    if (samples.size() != static_cast<std::size_t>(dims[0]) * dims[1] * dims[2])
      throw ConfigError("grid sample count does not match dims");
    if (!box.valid()) throw ConfigError("grid box is empty");
    Field f;
    f.kind_ = Kind::Grid;
    f.box_ = box;
    f.dims_ = dims;
    f.samples_ = std::move(samples);
    return f;
  }

  Kind kind() const { return kind_; }
  bool is_constant() const { return kind_ == Kind::Constant; }
  T constant_value() const { return base_; }

  T operator()(const Vec3& x) const {
    switch (kind_) {
      case Kind::Constant:
        return base_;
      case Kind::Affine:
        return base_ + (slope_.array() * (x - center_).template cast<T>().array()).sum();
      case Kind::Gaussian:
        return base_ + amplitude_ * std::exp(-(x - center_).squaredNorm() / (2 * width_ * width_));
      case Kind::Grid: {
        if (!box_.contains(x)) return T{};
        const Vec3 h = box_.extent().cwiseQuotient(Vec3(dims_[0], dims_[1], dims_[2]));
        std::array<int, 3> c;
        for (int d = 0; d < 3; ++d)
          c[d] = std::clamp(static_cast<int>(std::floor((x[d] - box_.lo[d]) / h[d])), 0, dims_[d] - 1);
        return samples_[index(c)];
      }
    }
    return T{};
  }

  /// Exact integral over an axis-aligned box.
  T integrate(const Box& b) const {
    switch (kind_) {
      case Kind::Constant:
        return base_ * b.volume();
      case Kind::Affine:
        return (*this)(b.center()) * b.volume();
      case Kind::Gaussian: {
        Real prod = 1.0;
        const Real s = std::sqrt(2.0) * width_;
        for (int d = 0; d < 3; ++d)
          prod *= 0.5 * std::sqrt(pi) * s *
                  (std::erf((b.hi[d] - center_[d]) / s) - std::erf((b.lo[d] - center_[d]) / s));
        return base_ * b.volume() + amplitude_ * prod;
      }
      case Kind::Grid: {
        const Vec3 h = box_.extent().cwiseQuotient(Vec3(dims_[0], dims_[1], dims_[2]));
        T acc{};
        for (int k = 0; k < dims_[2]; ++k)
          for (int j = 0; j < dims_[1]; ++j)
            for (int i = 0; i < dims_[0]; ++i) {
              const Vec3 lo = box_.lo + Vec3(i * h.x(), j * h.y(), k * h.z());
              Real ov = 1.0;
              for (int d = 0; d < 3; ++d)
                ov *= std::max(0.0, std::min(b.hi[d], lo[d] + h[d]) - std::max(b.lo[d], lo[d]));
              if (ov > 0.0) acc += samples_[index({i, j, k})] * ov;
            }
        return acc;
      }
    }
    return T{};
  }

  /// Upper bound of |f| over the box (exact except for the Gaussian, where
  /// the peak value is used if the center lies inside).
  Real max_abs(const Box& b) const {
    switch (kind_) {
      case Kind::Constant:
        return std::abs(base_);
      case Kind::Affine: {
        Real m = 0.0;
        for (int c = 0; c < 8; ++c) {
          const Vec3 x((c & 1) ? b.hi.x() : b.lo.x(), (c & 2) ? b.hi.y() : b.lo.y(),
                       (c & 4) ? b.hi.z() : b.lo.z());
          m = std::max(m, std::abs((*this)(x)));
        }
        return m;
      }
      case Kind::Gaussian:
        return std::max(std::abs(base_), std::abs(base_ + amplitude_));
      case Kind::Grid: {
        Real m = 0.0;
        for (const auto& s : samples_) m = std::max(m, std::abs(s));
        return m;
      }
    }
    return 0.0;
  }

  /// Lowest real part over the box; affine and grid exact, Gaussian bounded.
  Real min_real(const Box& b) const {
    auto re = [](const T& v) { return std::real(v); };
    switch (kind_) {
      case Kind::Constant:
        return re(base_);
      case Kind::Affine: {
        Real m = std::numeric_limits<Real>::infinity();
        for (int c = 0; c < 8; ++c) {
          const Vec3 x((c & 1) ? b.hi.x() : b.lo.x(), (c & 2) ? b.hi.y() : b.lo.y(),
                       (c & 4) ? b.hi.z() : b.lo.z());
          m = std::min(m, re((*this)(x)));
        }
        return m;
      }
      case Kind::Gaussian:
        return std::min(re(base_), re(base_ + amplitude_));
      case Kind::Grid: {
        Real m = std::numeric_limits<Real>::infinity();
        for (const auto& s : samples_) m = std::min(m, re(s));
        return m;
      }
    }
    return 0.0;
  }

 private:
  std::size_t index(std::array<int, 3> c) const {
    return static_cast<std::size_t>(c[0]) +
           static_cast<std::size_t>(dims_[0]) * (c[1] + static_cast<std::size_t>(dims_[1]) * c[2]);
  }

  Kind kind_ = Kind::Constant;
  T base_{};
  Eigen::Matrix<T, 3, 1> slope_ = Eigen::Matrix<T, 3, 1>::Zero();
  T amplitude_{};
  Vec3 center_ = Vec3::Zero();
  Real width_ = 1.0;
  Box box_;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<T> samples_;
};

using RealField = Field<Real>;
using ComplexField = Field<Complex>;

/// Reads gridded samples from CSV rows "i,j,k,value" or "i,j,k,re,im"
/// (a header line starting with a letter is skipped).
template <class T>
std::vector<T> read_grid_csv(const std::string& path, std::array<int, 3> dims) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid CSV: " + path);
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  std::vector<T> out(n, T{});
  std::vector<bool> seen(n, false);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
    for (auto& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ls(line);
    int i, j, k;
    Real re = 0.0, im = 0.0;
    if (!(ls >> i >> j >> k >> re)) throw ConfigError("bad grid CSV row: " + line);
    ls >> im;
    if (i < 0 || j < 0 || k < 0 || i >= dims[0] || j >= dims[1] || k >= dims[2])
      throw ConfigError("grid CSV index out of range: " + line);
    const std::size_t idx = i + static_cast<std::size_t>(dims[0]) * (j + static_cast<std::size_t>(dims[1]) * k);
    if constexpr (std::is_same_v<T, Complex>) out[idx] = Complex(re, im);
    else out[idx] = re;
    seen[idx] = true;
  }
  for (bool s : seen)
    if (!s) throw ConfigError("grid CSV does not cover every cell: " + path);
  return out;
}

}  // namespace smallscat
