/// \file smallscat/io.hpp
/// \brief JSON configuration ingestion, fixed-precision CSV tables and
/// run manifests.

#pragma once

#include "smallscat/homogenize.hpp"
#include "smallscat/mesh.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace smallscat::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- hashing

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- numbers

/// %.17g, the shortest format that round-trips every double.
inline std::string fmt(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
  return buf;
}

/// Table with a fixed header written as CSV; complex cells expand to two
/// columns <name>_re, <name>_im.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(Real v) { cells_.push_back(fmt(v)); return *this; }
    Row& operator<<(int v) { cells_.push_back(std::to_string(v)); return *this; }
    Row& operator<<(long v) { cells_.push_back(std::to_string(v)); return *this; }
    Row& operator<<(long long v) { cells_.push_back(std::to_string(v)); return *this; }
    Row& operator<<(std::size_t v) { cells_.push_back(std::to_string(v)); return *this; }
    Row& operator<<(const std::string& v) { cells_.push_back(v); return *this; }
    Row& operator<<(const char* v) { cells_.emplace_back(v); return *this; }
    Row& operator<<(Complex v) { return *this << v.real() << v.imag(); }
    Row& operator<<(const Vec3& v) { return *this << v.x() << v.y() << v.z(); }
    Row& operator<<(const CVec3& v) { return *this << v.x() << v.y() << v.z(); }
    const std::vector<std::string>& cells() const { return cells_; }

   private:
    std::vector<std::string> cells_;
  };

  Row& row() { return rows_.emplace_back(); }
  std::size_t rows() const { return rows_.size(); }

  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < header_.size(); ++i) s += (i ? "," : "") + header_[i];
    s += "\n";
    for (const auto& r : rows_) {
      if (r.cells().size() != header_.size())
        throw std::logic_error("CSV row width " + std::to_string(r.cells().size()) + " != header width " +
                               std::to_string(header_.size()));
      for (std::size_t i = 0; i < r.cells().size(); ++i) s += (i ? "," : "") + r.cells()[i];
      s += "\n";
    }
    return s;
  }

 private:
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

/// Header helpers: "Q" -> "Q_re","Q_im"; "x" -> "x_x","x_y","x_z".
inline std::vector<std::string> complex_cols(const std::string& n) { return {n + "_re", n + "_im"}; }
inline std::vector<std::string> vec_cols(const std::string& n) { return {n + "_x", n + "_y", n + "_z"}; }
inline std::vector<std::string> cvec_cols(const std::string& n) {
  return {n + "_x_re", n + "_x_im", n + "_y_re", n + "_y_im", n + "_z_re", n + "_z_im"};
}
inline std::vector<std::string> cols(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

/// One row per level of a convergence study.
inline CsvTable convergence_table(const ConvergenceReport& rep) {
  CsvTable t({"a", "M", "sup_error", "cells_x", "cells_y", "cells_z", "b", "d_min", "d_mean", "d_over_a13",
              "residual"});
  for (const auto& row : rep.rows)
    t.row() << row.a << static_cast<long>(row.M) << row.error << row.cells[0] << row.cells[1] << row.cells[2]
            << row.b << row.d_min << row.d_mean << row.regime_ratio << row.residual;
  return t;
}

inline json to_json(Complex z) { return json::array({z.real(), z.imag()}); }
inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
inline json to_json(const Mat3& m) {
  json a = json::array();
  for (int i = 0; i < 3; ++i) a.push_back(json::array({m(i, 0), m(i, 1), m(i, 2)}));
  return a;
}

// ---------------------------------------------------------------- parsing

/// Parsing context: base directory for relative paths and a record of every
/// file read (for the inputs hash).
struct ParseContext {
  fs::path base = ".";
  std::vector<fs::path> files;

  fs::path resolve(const std::string& p) {
    fs::path path(p);
    if (path.is_relative()) path = base / path;
    if (!fs::exists(path)) throw ConfigError("referenced file does not exist: " + path.string());
    files.push_back(path);
    return path;
  }
};

inline const json& need(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing config key: ") + key);
  return j.at(key);
}

/// j[key], or null when j is not an object or lacks the key.
inline const json& opt(const json& j, const char* key) {
  static const json null_json;
  if (!j.is_object() || !j.contains(key)) return null_json;
  return j.at(key);
}

template <class T>
T get_or(const json& j, const char* key, T def) {
  if (!j.is_object() || !j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline Real as_real(const json& j, const char* what) {
  if (!j.is_number()) throw ConfigError(std::string(what) + " must be a number");
  return j.get<Real>();
}

inline Complex as_complex(const json& j, const char* what = "complex value") {
  if (j.is_number()) return j.get<Real>();
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<Real>(), j[1].get<Real>()};
  if (j.is_object() && j.contains("re")) return {j.at("re").get<Real>(), get_or<Real>(j, "im", 0.0)};
  throw ConfigError(std::string(what) + " must be a number, [re, im] or {re, im}");
}

inline Vec3 as_vec3(const json& j, const char* what = "vector") {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be a 3-element array");
  return {as_real(j[0], what), as_real(j[1], what), as_real(j[2], what)};
}

inline std::array<int, 3> as_dims(const json& j, const char* what = "dims") {
  if (j.is_number_integer()) {
    const int n = j.get<int>();
    return {n, n, n};
  }
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be an integer or 3 integers");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

inline Box as_box(const json& j, const Box& def = {}) {
  if (j.is_null()) return def;
  Box b{as_vec3(need(j, "lo"), "lo"), as_vec3(need(j, "hi"), "hi")};
  if (!b.valid()) throw ConfigError("box must satisfy lo < hi componentwise");
  return b;
}

inline Mat3 as_mat3(const json& j) {
  if (j.is_number()) return j.get<Real>() * Mat3::Identity();
  if (j.is_array() && j.size() == 3 && j[0].is_number()) return as_vec3(j).asDiagonal();
  if (j.is_array() && j.size() == 3) {
    Mat3 m;
    for (int i = 0; i < 3; ++i) m.row(i) = as_vec3(j[i]).transpose();
    return m;
  }
  throw ConfigError("tensor must be a number, a diagonal [3] or a 3x3 array");
}

namespace detail {
template <class T>
T scalar(const json& j, const char* what) {
  if constexpr (std::is_same_v<T, Complex>) return as_complex(j, what);
  else return as_real(j, what);
}
template <class T>
Eigen::Matrix<T, 3, 1> vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("slope must be a 3-element array");
  return {scalar<T>(j[0], "slope"), scalar<T>(j[1], "slope"), scalar<T>(j[2], "slope")};
}
}  // namespace detail

/// Field from the catalog:
///   number | [re, im]                                   constant
///   {"type":"constant","value":v}
///   {"type":"affine","base":v,"slope":[..],"origin":[..]}
///   {"type":"gaussian","base":v,"amplitude":v,"center":[..],"width":w}
///   {"type":"grid","dims":[..],"box":{..},"csv":"path"} or "values":[..]
template <class T>
Field<T> parse_field(const json& j, const Box& domain, ParseContext& ctx) {
  if (j.is_number() || (std::is_same_v<T, Complex> && j.is_array()))
    return Field<T>::constant(detail::scalar<T>(j, "field value"));
  const std::string type = get_or<std::string>(j, "type", "");
  if (type == "constant") return Field<T>::constant(detail::scalar<T>(need(j, "value"), "value"));
  if (type == "affine")
    return Field<T>::affine(detail::scalar<T>(need(j, "base"), "base"), detail::vec<T>(need(j, "slope")),
                            j.contains("origin") ? as_vec3(j["origin"], "origin") : Vec3::Zero());
  if (type == "gaussian")
    return Field<T>::gaussian(detail::scalar<T>(need(j, "base"), "base"),
                              detail::scalar<T>(need(j, "amplitude"), "amplitude"),
                              as_vec3(need(j, "center"), "center"), as_real(need(j, "width"), "width"));
  if (type == "grid") {
    const auto dims = as_dims(need(j, "dims"));
    const Box box = j.contains("box") ? as_box(j["box"]) : domain;
    std::vector<T> samples;
    if (j.contains("csv")) {
      samples = read_grid_csv<T>(ctx.resolve(j["csv"].get<std::string>()).string(), dims);
    } else {
      for (const auto& v : need(j, "values")) samples.push_back(detail::scalar<T>(v, "grid value"));
    }
    return Field<T>::grid(box, dims, std::move(samples));
  }
  throw ConfigError("unknown field type '" + type + "' (constant, affine, gaussian, grid)");
}

inline IncidentWave parse_wave(const json& j) {
  const Real k = as_real(need(j, "k"), "wave.k");
  const Vec3 alpha = j.contains("alpha") ? as_vec3(j["alpha"], "wave.alpha") : Vec3::UnitZ();
  const Complex amp = j.contains("amplitude") ? as_complex(j["amplitude"], "wave.amplitude") : Complex(1.0);
  return IncidentWave(k, alpha, amp);
}

inline BoundaryKind parse_bc(const json& j) {
  const std::string kind = j.is_string() ? j.get<std::string>() : get_or<std::string>(j, "kind", "");
  if (kind == "soft") return Soft{};
  if (kind == "hard") return Hard{};
  if (kind == "impedance") {
    Impedance imp;
    imp.h = as_complex(need(j, "h"), "h");
    imp.kappa = get_or<Real>(j, "kappa", 0.5);
    if (!(imp.kappa > 0.0 && imp.kappa < 1.0)) throw ConfigError("kappa must lie in (0, 1)");
    return imp;
  }
  throw ConfigError("boundary kind must be soft, impedance or hard");
}

inline SolverOptions parse_solver(const json& j) {
  SolverOptions o;
  if (j.is_null()) return o;
  const std::string m = get_or<std::string>(j, "method", "auto");
  if (m == "auto") o.method = SolveMethod::Auto;
  else if (m == "direct") o.method = SolveMethod::Direct;
  else if (m == "iterative") o.method = SolveMethod::Iterative;
  else throw ConfigError("solver.method must be auto, direct or iterative");
  o.direct_threshold = get_or<Index>(j, "direct_threshold", o.direct_threshold);
  o.tol = get_or<Real>(j, "tol", o.tol);
  o.restart = get_or<int>(j, "restart", o.restart);
  o.max_iter = get_or<int>(j, "max_iter", o.max_iter);
  if (!(o.tol > 0.0)) throw ConfigError("solver.tol must be positive");
  return o;
}

inline GreenOptions parse_green(const json& j) {
  GreenOptions o;
  if (j.is_null()) return o;
  const std::string m = get_or<std::string>(j, "method", "lippmann_schwinger");
  if (m == "free_space") o.method = GreenMethod::FreeSpace;
  else if (m == "born") o.method = GreenMethod::BornSeries;
  else if (m == "lippmann_schwinger") o.method = GreenMethod::LippmannSchwinger;
  else throw ConfigError("green.method must be free_space, born or lippmann_schwinger");
  o.born_order = get_or<int>(j, "born_order", o.born_order);
  o.tol = get_or<Real>(j, "tol", o.tol);
  o.max_iter = get_or<int>(j, "max_iter", o.max_iter);
  o.fixed_iterations = get_or<int>(j, "fixed_iterations", o.fixed_iterations);
  o.grid = get_or<int>(j, "grid", o.grid);
  return o;
}

/// "background": {"n2": field, "domain": box (defaults to the scene box)}
inline BackgroundMedium parse_background(const json& j, const Box& domain, ParseContext& ctx) {
  BackgroundMedium m;
  m.domain = domain;
  if (j.is_null()) return m;
  m.domain = j.contains("domain") ? as_box(j["domain"]) : domain;
  if (j.contains("n2")) {
    m.n2 = parse_field<Complex>(j["n2"], m.domain, ctx);
    if (m.n2->is_constant() && m.n2->constant_value() == Complex(1.0)) m.n2.reset();
  }
  return m;
}

/// Reference shape: "sphere" (default), {"mesh": "path.off"},
/// {"ellipsoid": [ax, ay, az], "level": L}.
inline std::pair<std::optional<ShapeFunctionals>, std::string> parse_shape(const json& j, ParseContext& ctx,
                                                                           bool with_beta) {
  if (j.is_null() || (j.is_string() && j.get<std::string>() == "sphere")) return {std::nullopt, "sphere"};
  if (j.is_object() && j.contains("mesh")) {
    const auto path = ctx.resolve(j["mesh"].get<std::string>());
    return {mesh_functionals(load_mesh(path.string()), with_beta), path.filename().string()};
  }
  if (j.is_object() && j.contains("ellipsoid")) {
    const Vec3 ax = as_vec3(j["ellipsoid"], "ellipsoid");
    return {mesh_functionals(make_ellipsoid(get_or<int>(j, "level", 3), ax), with_beta), "ellipsoid"};
  }
  throw ConfigError("shape must be \"sphere\", {\"mesh\": path} or {\"ellipsoid\": [..]}");
}

inline RegimeOptions parse_regime(const json& j) {
  RegimeOptions r;
  if (j.is_null()) return r;
  r.separation_factor = get_or<Real>(j, "separation_factor", r.separation_factor);
  r.smallness_threshold = get_or<Real>(j, "smallness_threshold", r.smallness_threshold);
  return r;
}

inline CloudSpec parse_cloud(const json& j, const Box& domain, ParseContext& ctx) {
  CloudSpec s;
  s.density = j.contains("density") ? parse_field<Real>(j["density"], domain, ctx) : RealField::constant(1.0);
  s.a = as_real(need(j, "a"), "cloud.a");
  s.bc = parse_bc(need(j, "bc"));
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
  s.strata = get_or<int>(j, "strata", s.strata);
  s.separation_factor = get_or<Real>(j, "separation_factor", s.separation_factor);
  s.retry_cap = get_or<int>(j, "retry_cap", s.retry_cap);
  auto [shape, name] = parse_shape(opt(j, "shape"), ctx, is_hard(s.bc));
  s.shape = shape;
  s.shape_name = name;
  return s;
}

/// Scene from "domain", "wave", "regime", "background", and "particles"
/// (explicit list) and/or "cloud" (generated).  `seed` overrides the cloud
/// seed when present.
inline Scene parse_scene(const json& j, ParseContext& ctx, std::optional<std::uint64_t> seed = {}) {
  Scene s;
  s.domain = as_box(opt(j, "domain"));
  s.wave = parse_wave(need(j, "wave"));
  s.regime = parse_regime(opt(j, "regime"));
  s.background = parse_background(opt(j, "background"), s.domain, ctx);
  if (j.contains("particles")) {
    for (const auto& p : j["particles"]) {
      const BoundaryKind bc = parse_bc(need(p, "bc"));
      const Real a = as_real(need(p, "a"), "particle.a");
      const Vec3 c = as_vec3(need(p, "center"), "particle.center");
      auto [shape, name] = parse_shape(opt(p, "shape"), ctx, is_hard(bc));
      s.particles.push_back(shape ? Particle::shaped(c, a, bc, *shape, name) : Particle::sphere(c, a, bc));
    }
  }
  if (j.contains("cloud")) {
    CloudSpec spec = parse_cloud(j["cloud"], s.domain, ctx);
    if (seed) spec.seed = *seed;
    auto cloud = generate_cloud(spec, s.domain);
    s.particles.insert(s.particles.end(), cloud.begin(), cloud.end());
  }
  return s;
}

inline std::vector<Vec3> parse_directions(const json& j) {
  if (j.is_null()) return {};
  if (j.is_number_integer()) return fibonacci_directions(j.get<int>());
  std::vector<Vec3> out;
  for (const auto& d : j) {
    const Vec3 v = as_vec3(d, "direction");
    if (!(v.norm() > 0.0)) throw ConfigError("direction must be nonzero");
    out.push_back(v.normalized());
  }
  return out;
}

inline GridCover parse_cover(const json& j, const Box& domain) {
  if (j.is_null()) throw ConfigError("missing config key: cover");
  if (j.contains("dims")) return GridCover(domain, as_dims(j["dims"]));
  if (j.contains("edge")) return GridCover::with_edge(domain, as_real(j["edge"], "cover.edge"));
  throw ConfigError("cover needs \"dims\" or \"edge\"");
}

// ---------------------------------------------------------------- output

/// Artifacts written to one output directory and the manifest describing
/// them.
class RunRecord {
 public:
  RunRecord(fs::path dir, std::string subcommand) : dir_(std::move(dir)), subcommand_(std::move(subcommand)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw ConfigError("cannot create output directory: " + dir_.string());
  }

  const fs::path& dir() const { return dir_; }

  void write(const std::string& name, const std::string& content, const std::string& kind) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir_ / name).string());
    out << content;
    out.close();
    artifacts_.push_back({{"path", name}, {"kind", kind}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
  }
  void write_csv(const std::string& name, const CsvTable& t) {
    write(name, t.str(), "csv");
    artifacts_.back()["rows"] = t.rows();
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n", "json"); }

  json& manifest() { return manifest_; }
  json& results() { return manifest_["results"]; }
  json& residuals() { return manifest_["residuals"]; }
  json& timings() { return manifest_["timings"]; }

  /// manifest.json lists every artifact written through this record.
  void finish(const std::string& status) {
    manifest_["subcommand"] = subcommand_;
    manifest_["status"] = status;
    manifest_["artifacts"] = artifacts_;
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    if (!out) throw ConfigError("cannot write manifest");
    out << manifest_.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  std::string subcommand_;
  json manifest_ = json::object();
  json artifacts_ = json::array();
};

}  // namespace smallscat::io
