/// \file smallscat/mesh.hpp
/// \brief Closed triangulated surfaces for one-body shape functionals.

#pragma once

#include "smallscat/types.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace smallscat {

/// Closed, outward-oriented triangle mesh with cached panel geometry.
///
/// Construction validates the surface: every edge must be shared by exactly
/// two triangles with opposite orientation, the enclosed signed volume must
/// be positive, and no triangle may be degenerate.
class SurfaceMesh {
 public:
  using Tri = std::array<int, 3>;

  SurfaceMesh(std::vector<Vec3> vertices, std::vector<Tri> triangles,
              Real area_tol = 1e-14)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
    if (triangles_.empty()) throw InvalidMesh("mesh has no triangles");
    const auto nv = static_cast<int>(vertices_.size());
    for (const auto& t : triangles_)
      for (int v : t)
        if (v < 0 || v >= nv) throw InvalidMesh("triangle index out of range");
    compute_geometry(area_tol);
    check_closed();
    if (volume_ <= 0.0)
      throw InvalidMesh("enclosed signed volume is not positive (inward normals?)");
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Tri>& triangles() const { return triangles_; }
  std::size_t size() const { return triangles_.size(); }

  const Vec3& centroid(std::size_t i) const { return centroids_[i]; }
  const Vec3& normal(std::size_t i) const { return normals_[i]; }
  Real area(std::size_t i) const { return areas_[i]; }
  const std::vector<Real>& areas() const { return areas_; }

  Real surface_area() const { return total_area_; }
  Real volume() const { return volume_; }
  int euler_characteristic() const { return euler_; }

  /// a = 0.5 * diam, diameter over vertices.
  Real radius_scale() const {
    Real d2 = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
      for (std::size_t j = i + 1; j < vertices_.size(); ++j)
        d2 = std::max(d2, (vertices_[i] - vertices_[j]).squaredNorm());
    return 0.5 * std::sqrt(d2);
  }

  /// Image under x -> R x + t (R must be a rotation or positive scaling).
  SurfaceMesh transformed(const Mat3& R, const Vec3& t = Vec3::Zero()) const {
    std::vector<Vec3> v;
    v.reserve(vertices_.size());
    for (const auto& p : vertices_) v.push_back(R * p + t);
    return SurfaceMesh(std::move(v), triangles_);
  }

  SurfaceMesh scaled(Real s) const { return transformed(s * Mat3::Identity()); }
  SurfaceMesh translated(const Vec3& t) const {
    return transformed(Mat3::Identity(), t);
  }

 private:
  void compute_geometry(Real area_tol) {
    const std::size_t n = triangles_.size();
    areas_.resize(n);
    centroids_.resize(n);
    normals_.resize(n);
    total_area_ = 0.0;
    volume_ = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& a = vertices_[triangles_[i][0]];
      const Vec3& b = vertices_[triangles_[i][1]];
      const Vec3& c = vertices_[triangles_[i][2]];
      const Vec3 cr = (b - a).cross(c - a);
      const Real twice = cr.norm();
      areas_[i] = 0.5 * twice;
      if (!(areas_[i] > area_tol))
        throw DegenerateMesh("triangle " + std::to_string(i) + " has area " +
                             std::to_string(areas_[i]));
      normals_[i] = cr / twice;
      centroids_[i] = (a + b + c) / 3.0;
      total_area_ += areas_[i];
      volume_ += a.dot(b.cross(c)) / 6.0;
    }
  }

  void check_closed() {
    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : triangles_)
      for (int e = 0; e < 3; ++e) ++directed[{t[e], t[(e + 1) % 3]}];
    std::size_t undirected = 0;
    for (const auto& [edge, count] : directed) {
      if (count != 1) throw InvalidMesh("edge used twice with the same orientation");
      auto rev = directed.find({edge.second, edge.first});
      if (rev == directed.end()) throw InvalidMesh("open or inconsistently oriented edge");
      if (edge.first < edge.second) ++undirected;
    }
    std::vector<bool> used(vertices_.size(), false);
    for (const auto& t : triangles_)
      for (int v : t) used[v] = true;
    const auto nv = static_cast<int>(std::count(used.begin(), used.end(), true));
    euler_ = nv - static_cast<int>(undirected) + static_cast<int>(triangles_.size());
  }

  std::vector<Vec3> vertices_;
  std::vector<Tri> triangles_;
  std::vector<Real> areas_;
  std::vector<Vec3> centroids_;
  std::vector<Vec3> normals_;
  Real total_area_ = 0.0;
  Real volume_ = 0.0;
  int euler_ = 0;
};

/// Icosahedron refined `level` times and projected onto the sphere;
/// 20 * 4^level triangles.
inline SurfaceMesh make_icosphere(int level, Real radius = 1.0,
                                  const Vec3& center = Vec3::Zero()) {
  const Real t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<SurfaceMesh::Tri> f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<SurfaceMesh::Tri> next;
    next.reserve(4 * f.size());
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  for (auto& p : v) p = center + radius * p;
  return SurfaceMesh(std::move(v), std::move(f));
}

/// Ellipsoid with semi-axes (ax, ay, az) built by stretching an icosphere.
inline SurfaceMesh make_ellipsoid(int level, const Vec3& semi_axes) {
  return make_icosphere(level).transformed(semi_axes.asDiagonal().toDenseMatrix());
}

namespace detail {
inline std::string next_data_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
  }
  return {};
}
}  // namespace detail

/// Reads an ASCII OFF file (header "OFF", counts line, vertex list, face
/// list).  Polygonal faces are fan-triangulated.
inline SurfaceMesh read_off(std::istream& in) {
  std::string header = detail::next_data_line(in);
  std::istringstream hs(header);
  std::string tag;
  hs >> tag;
  std::string counts_line;
  if (tag == "OFF") {
    std::string rest;
    std::getline(hs, rest);
    counts_line = rest.find_first_not_of(" \t\r") != std::string::npos
                      ? rest
                      : detail::next_data_line(in);
  } else if (tag.rfind("OFF", 0) == 0) {
    throw InvalidMesh("unsupported OFF variant: " + tag);
  } else {
    counts_line = header;  // headerless OFF
  }
  std::istringstream cs(counts_line);
  long nv = -1, nf = -1;
  cs >> nv >> nf;
  if (nv <= 0 || nf <= 0) throw InvalidMesh("bad OFF counts line");

  std::vector<Vec3> verts;
  verts.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    std::istringstream ls(detail::next_data_line(in));
    Vec3 p;
    if (!(ls >> p.x() >> p.y() >> p.z())) throw InvalidMesh("bad OFF vertex line");
    verts.push_back(p);
  }
  std::vector<SurfaceMesh::Tri> tris;
  for (long i = 0; i < nf; ++i) {
    std::istringstream ls(detail::next_data_line(in));
    int k = 0;
    if (!(ls >> k) || k < 3) throw InvalidMesh("bad OFF face line");
    std::vector<int> idx(k);
    for (auto& x : idx)
      if (!(ls >> x)) throw InvalidMesh("truncated OFF face line");
    for (int j = 1; j + 1 < k; ++j) tris.push_back({idx[0], idx[j], idx[j + 1]});
  }
  return SurfaceMesh(std::move(verts), std::move(tris));
}

/// Reads the `v` / `f` subset of Wavefront OBJ (1-based indices, optional
/// `/vt/vn` suffixes ignored).
inline SurfaceMesh read_obj(std::istream& in) {
  std::vector<Vec3> verts;
  std::vector<SurfaceMesh::Tri> tris;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) throw InvalidMesh("bad OBJ vertex");
      verts.push_back(p);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) idx.push_back(std::stoi(tok.substr(0, tok.find('/'))) - 1);
      if (idx.size() < 3) throw InvalidMesh("OBJ face with fewer than 3 vertices");
      for (std::size_t j = 1; j + 1 < idx.size(); ++j)
        tris.push_back({idx[0], idx[j], idx[j + 1]});
    }
  }
  return SurfaceMesh(std::move(verts), std::move(tris));
}

inline SurfaceMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file: " + path);
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "obj" || ext == "OBJ") return read_obj(in);
  return read_off(in);
}

inline void write_off(std::ostream& out, const SurfaceMesh& mesh) {
  out.precision(17);
  out << "OFF\n" << mesh.vertices().size() << ' ' << mesh.size() << " 0\n";
  for (const auto& p : mesh.vertices()) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace smallscat
