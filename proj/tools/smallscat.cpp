// smallscat command-line driver: one subcommand per pipeline, JSON config in,
// CSV tables plus a JSON manifest out.

#include "smallscat/smallscat.hpp"
#include "smallscat/io.hpp"

#include <CLI11.hpp>
#include <openssl/opensslv.h>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>

using namespace smallscat;
using io::CsvTable;
using io::json;
using io::RunRecord;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { Ok = 0, ConfigFail = 2, SolverFail = 3, RegimeFail = 4 };

struct Flags {
  std::string config;
  std::string out;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  std::optional<Real> tol;
};

class Stopwatch {
 public:
  Real lap() {
    const auto now = std::chrono::steady_clock::now();
    const Real s = std::chrono::duration<Real>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

json versions() {
  return {{"smallscat", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"openssl", OPENSSL_VERSION_TEXT},
          {"compiler", __VERSION__}};
}

/// Everything a pipeline needs: parsed config, flags, and the record.
struct Run {
  json cfg;
  io::ParseContext ctx;
  Flags flags;
  RunRecord* rec = nullptr;
  Stopwatch clock;

  SolverOptions solver() const {
    SolverOptions o = io::parse_solver(io::opt(cfg, "solver"));
    if (flags.tol) o.tol = *flags.tol;
    return o;
  }
  std::uint64_t seed(std::uint64_t fallback) const { return flags.seed.value_or(fallback); }
};

json solve_info_json(const SolveInfo& info) {
  return {{"method", info.method}, {"residual", info.residual}, {"iterations", info.iterations}};
}

std::vector<Vec3> field_points(const json& out) {
  std::vector<Vec3> pts;
  if (out.contains("field_points"))
    for (const auto& p : out["field_points"]) pts.push_back(io::as_vec3(p, "field point"));
  if (out.contains("field_line")) {
    const auto& l = out["field_line"];
    const Vec3 a = io::as_vec3(io::need(l, "from"), "from"), b = io::as_vec3(io::need(l, "to"), "to");
    const int n = io::get_or<int>(l, "points", 11);
    if (n < 2) throw ConfigError("field_line needs at least 2 points");
    for (int i = 0; i < n; ++i) pts.push_back(a + (b - a) * (static_cast<Real>(i) / (n - 1)));
  }
  return pts;
}

// ------------------------------------------------------------------ solve

void cmd_solve(Run& r) {
  Scene scene = io::parse_scene(r.cfg, r.ctx, r.flags.seed);
  ManyBodyOptions mo;
  mo.solver = r.solver();
  mo.green = io::parse_green(io::opt(io::opt(r.cfg, "background"), "green"));
  mo.enforce_regime = r.cfg.value("enforce_regime", true);

  const auto report = validate_scene(scene);
  json violations = json::array();
  for (const auto& v : report.violations) violations.push_back({{"code", v.code}, {"message", v.message}});
  r.rec->results()["validation"] = {{"accepted", report.accepted()}, {"d_min", report.d_min}, {"ka", report.ka},
                                    {"violations", violations}};
  r.rec->timings()["setup_s"] = r.clock.lap();

  const auto sol = solve_scene(scene, mo);
  r.rec->timings()["solve_s"] = r.clock.lap();

  const bool hard = sol.kind == SceneKind::Hard;
  auto header = io::cols({{"index"}, io::vec_cols("x"), {"a"}, io::complex_cols("u_e"), io::complex_cols("Q")});
  if (hard) header = io::cols({header, io::cvec_cols("grad_u_e"), io::complex_cols("lap_u_e")});
  CsvTable particles(header);
  for (Index m = 0; m < sol.size(); ++m) {
    auto& row = particles.row();
    row << static_cast<long>(m) << scene.particles[m].center << scene.particles[m].a << sol.u(m) << sol.charges(m);
    if (hard) row << sol.grad[m] << sol.lap(m);
  }
  r.rec->write_csv("particles.csv", particles);

  const json out = r.cfg.value("output", json::object());
  const auto dirs = io::parse_directions(io::opt(out, "far_field_directions"));
  if (!dirs.empty()) {
    const auto ff = far_field(sol, scene, dirs);
    CsvTable t(io::cols({io::vec_cols("beta"), io::complex_cols("A")}));
    for (std::size_t i = 0; i < dirs.size(); ++i) t.row() << dirs[i] << ff.amplitudes[i];
    r.rec->write_csv("far_field.csv", t);
  }
  const auto pts = field_points(out);
  if (!pts.empty()) {
    CsvTable t(io::cols({io::vec_cols("x"), io::complex_cols("u"), io::complex_cols("u0")}));
    for (const auto& x : pts) t.row() << x << eval_field(sol, scene, x) << scene.wave.value(x);
    r.rec->write_csv("field.csv", t);
  }
  r.rec->timings()["output_s"] = r.clock.lap();

  auto& res = r.rec->results();
  res["kind"] = scene_kind_name(sol.kind);
  res["M"] = sol.size();
  res["k"] = scene.wave.k;
  res["alpha"] = io::to_json(scene.wave.alpha);
  res["green_method"] = scene.background.trivial() ? "free_space" : "background";
  if (sol.size() == 1) res["Q1"] = io::to_json(sol.charges(0));
  r.rec->residuals()["many_body"] = solve_info_json(sol.info);
}

// ---------------------------------------------------------------- onebody

void cmd_onebody(Run& r) {
  const json& c = r.cfg;
  const BoundaryKind bc = io::parse_bc(io::need(c, "bc"));
  const json shape = c.value("shape", json("sphere"));
  ShapeFunctionals f;
  std::string shape_name = "sphere";
  json mesh_info = json::object();
  if (shape.is_object() && shape.contains("icosphere")) {
    const auto mesh = make_icosphere(shape["icosphere"].get<int>(), io::get_or<Real>(shape, "radius", 1.0));
    f = mesh_functionals(mesh, true);
    shape_name = "icosphere";
    mesh_info = {{"triangles", mesh.size()}, {"euler_characteristic", mesh.euler_characteristic()}};
  } else {
    auto [ref, name] = io::parse_shape(shape, r.ctx, true);
    f = ref ? *ref : sphere_functionals(1.0);
    shape_name = name;
  }
  if (c.contains("a")) f = f.scaled_to(io::as_real(c["a"], "a"));
  const IncidentWave wave = io::parse_wave(io::need(c, "wave"));
  r.rec->timings()["functionals_s"] = r.clock.lap();

  auto dirs = io::parse_directions(c.value("directions", json(16)));
  CsvTable t(io::cols({io::vec_cols("beta"), io::complex_cols("A")}));
  json amps = json::array();
  for (const auto& b : dirs) {
    const Complex A = amplitude_onebody(bc, f, wave, b);
    t.row() << b << A;
    amps.push_back({{"beta", io::to_json(b)}, {"A", io::to_json(A)}});
  }
  r.rec->write_csv("amplitudes.csv", t);

  json j = {{"shape", shape_name}, {"kind", kind_name(bc)}, {"a", f.a}, {"k", wave.k}};
  if (!mesh_info.empty()) j["mesh"] = mesh_info;
  if (f.capacitance) j["capacitance"] = *f.capacitance;
  if (f.area) j["area"] = *f.area;
  if (f.volume) j["volume"] = *f.volume;
  if (f.beta) j["beta"] = io::to_json(*f.beta);
  if (const auto* imp = std::get_if<Impedance>(&bc)) j["zeta"] = io::to_json(impedance_zeta(*imp, f.a));
  const Complex u0 = wave.value(Vec3::Zero());
  if (is_soft(bc)) j["Q"] = io::to_json(charge_soft(*f.capacitance, u0));
  if (const auto* imp = std::get_if<Impedance>(&bc))
    j["Q"] = io::to_json(charge_impedance(impedance_zeta(*imp, f.a), *f.area, u0));
  if (is_hard(bc)) j["Q"] = io::to_json(charge_hard(wave.laplacian(Vec3::Zero()), *f.volume));
  j["amplitudes"] = amps;
  r.rec->write_json("onebody.json", j);
  r.rec->results() = j;
  r.rec->results().erase("amplitudes");
  std::cout << j.dump(2) << "\n";
}

// ------------------------------------------------------------- homogenize

void cmd_homogenize(Run& r) {
  const json& c = r.cfg;
  const Box domain = io::as_box(io::opt(c, "domain"));
  const IncidentWave wave = io::parse_wave(io::need(c, "wave"));
  const GridCover cover = io::parse_cover(io::opt(c, "cover"), domain);
  const std::string law = c.value("law", std::string("dirichlet"));
  const SolverOptions so = r.solver();

  LimitCoefficients lc;
  if (c.contains("cloud")) {
    CloudSpec spec = io::parse_cloud(c["cloud"], domain, r.ctx);
    spec.seed = r.seed(spec.seed);
    lc = limiting_coefficient(generate_cloud(spec, domain), cover, wave.k);
  } else if (law == "dirichlet") {
    const RealField N = io::parse_field<Real>(c.value("density", json(1.0)), domain, r.ctx);
    lc = limiting_coefficient_dirichlet(cover, N, wave.k, c.value("c", four_pi));
  } else if (law == "impedance") {
    DesignPrescription d;
    d.cover = cover;
    d.k = wave.k;
    d.b = c.value("b", four_pi);
    d.N = cover.sample(io::parse_field<Real>(c.value("density", json(1.0)), domain, r.ctx));
    d.h = cover.sample(io::parse_field<Complex>(io::need(c, "h"), domain, r.ctx));
    lc = limiting_coefficient(d);
  } else if (law == "neumann") {
    const RealField rho = io::parse_field<Real>(io::need(c, "rho"), domain, r.ctx);
    const Mat3 B = io::as_mat3(io::need(c, "B"));
    lc.cover = cover;
    lc.k = wave.k;
    lc.q = CVector::Zero(cover.size());
    lc.C = lc.q;
    lc.n2 = CVector::Ones(cover.size());
    lc.empty.assign(cover.size(), false);
    for (Index p = 0; p < cover.size(); ++p) {
      lc.rho.push_back(rho(cover.center(p)));
      lc.B.push_back(B * lc.rho.back());
    }
  } else {
    throw ConfigError("law must be dirichlet, impedance or neumann");
  }
  r.rec->timings()["setup_s"] = r.clock.lap();

  const bool neumann = law == "neumann" && !c.contains("cloud");
  const bool hard_cloud = c.contains("cloud") && lc.q.cwiseAbs().sum() == 0.0 &&
                          std::any_of(lc.rho.begin(), lc.rho.end(), [](Real v) { return v != 0.0; });
  auto header = io::cols({{"cell"}, io::vec_cols("xi"), io::complex_cols("q"), io::complex_cols("n2"), {"rho"},
                          io::complex_cols("u")});
  CsvTable t = CsvTable({});
  if (neumann || hard_cloud) {
    const auto sol = neumann_limit_solve(lc, wave, so);
    r.rec->timings()["solve_s"] = r.clock.lap();
    t = CsvTable(io::cols({header, io::cvec_cols("grad_u"), io::complex_cols("lap_u")}));
    for (Index p = 0; p < cover.size(); ++p)
      t.row() << static_cast<long>(p) << cover.center(p) << lc.q(p) << lc.n2(p) << lc.rho[p] << sol.u(p)
              << sol.grad[p] << sol.lap(p);
    r.rec->residuals()["collocation"] = solve_info_json(sol.info);
  } else {
    std::optional<CollocationSolution> sol;
    BackgroundMedium bg = io::parse_background(io::opt(c, "background"), domain, r.ctx);
    if (bg.trivial()) {
      sol = collocation_solve(cover, lc.q, wave, so);
    } else {
      GreenEvaluator G(bg, wave.k, io::parse_green(io::opt(c["background"], "green")));
      G.prepare(cover.centers());
      G.prepare_incident(wave);
      sol = collocation_solve(cover, lc.q, wave, G, so);
    }
    r.rec->timings()["solve_s"] = r.clock.lap();
    t = CsvTable(header);
    for (Index p = 0; p < cover.size(); ++p)
      t.row() << static_cast<long>(p) << cover.center(p) << lc.q(p) << lc.n2(p) << lc.rho[p] << sol->u(p);
    r.rec->residuals()["collocation"] = solve_info_json(sol->info);
  }
  r.rec->write_csv("cells.csv", t);
  r.rec->results() = {{"law", law},
                      {"cells", cover.size()},
                      {"dims", cover.dims()},
                      {"edge", cover.edge()},
                      {"empty_cells", lc.empty_cells()},
                      {"k", wave.k}};
}

// ----------------------------------------------------------------- design

void cmd_design(Run& r) {
  const json& c = r.cfg;
  const Box domain = io::as_box(io::opt(c, "domain"));
  const GridCover cover = io::parse_cover(io::opt(c, "cover"), domain);
  const Real k = io::as_real(io::need(c, "k"), "k");
  const Real b = c.value("b", four_pi);
  const Real kappa = c.value("kappa", 0.5);
  const CVector n2 = cover.sample(io::parse_field<Complex>(io::need(c, "n2"), domain, r.ctx));
  const CVector N = cover.sample(io::parse_field<Real>(c.value("N", json(1.0)), domain, r.ctx));

  const DesignPrescription d = inverse_design(cover, n2, k, b, N, kappa);
  const LimitCoefficients lc = limiting_coefficient(d);
  r.rec->timings()["design_s"] = r.clock.lap();

  Real roundtrip = 0.0;
  for (Index p = 0; p < cover.size(); ++p) roundtrip = std::max(roundtrip, std::abs(lc.n2(p) - n2(p)));

  CsvTable t(io::cols({{"cell"}, io::vec_cols("xi"), {"N"}, io::complex_cols("h"), io::complex_cols("n2_target"),
                       io::complex_cols("n2_realized")}));
  for (Index p = 0; p < cover.size(); ++p)
    t.row() << static_cast<long>(p) << cover.center(p) << d.N(p).real() << d.h(p) << n2(p) << lc.n2(p);
  r.rec->write_csv("prescription.csv", t);

  json pres = {{"k", k},
               {"b", b},
               {"kappa", kappa},
               {"cover", {{"domain", {{"lo", io::to_json(domain.lo)}, {"hi", io::to_json(domain.hi)}}},
                          {"dims", cover.dims()}}},
               {"cells", "prescription.csv"},
               {"roundtrip_max_error", roundtrip}};
  const bool uniform = (d.h.array() == d.h(0)).all() && (d.N.array() == d.N(0)).all();
  if (uniform) {
    pres["h"] = io::to_json(d.h(0));
    pres["N"] = d.N(0).real();
  }
  json res = pres;

  if (c.value("verify", true)) {
    const IncidentWave wave(k, c.contains("alpha") ? io::as_vec3(c["alpha"]) : Vec3::UnitZ());
    const auto designed = collocation_solve(cover, lc.q, wave, r.solver());
    const CVector q_direct = (k * k * (CVector::Ones(cover.size()) - n2)).eval();
    const auto direct = collocation_solve(cover, q_direct, wave, r.solver());
    const Real diff = (designed.u - direct.u).cwiseAbs().maxCoeff();
    res["verify_field_difference"] = diff;
    r.rec->residuals()["designed"] = solve_info_json(designed.info);
    r.rec->residuals()["direct"] = solve_info_json(direct.info);
    r.rec->timings()["verify_s"] = r.clock.lap();
  }
  r.rec->write_json("prescription.json", pres);
  r.rec->results() = res;
}

// --------------------------------------------------------------- converge

void cmd_converge(Run& r) {
  const json& c = r.cfg;
  ConvergenceOptions o;
  o.domain = io::as_box(io::opt(c, "domain"));
  const std::string law = c.value("law", std::string("dirichlet"));
  if (law == "dirichlet") {
    o.bc = Soft{};
  } else if (law == "impedance") {
    o.bc = Impedance{io::as_complex(c.value("h", json(1.0)), "h"), c.value("kappa", 0.5)};
  } else {
    throw ConfigError("converge law must be dirichlet or impedance");
  }
  o.density = io::parse_field<Real>(c.value("density", json(1.0)), o.domain, r.ctx);
  if (c.contains("levels")) o.levels = c["levels"].get<std::vector<Real>>();
  o.k = c.value("k", 1.0);
  if (c.contains("alpha")) o.alpha = io::as_vec3(c["alpha"], "alpha");
  o.seed = r.seed(c.value("seed", std::uint64_t{1}));
  o.cover_exponent = c.value("cover_exponent", o.cover_exponent);
  o.reference_cells = c.value("reference_cells", o.reference_cells);
  o.separation_factor = c.value("separation_factor", o.separation_factor);
  o.solver = r.solver();

  const auto rep = convergence_study(o);
  r.rec->timings()["study_s"] = r.clock.lap();

  r.rec->write_csv("convergence.csv", io::convergence_table(rep));
  r.rec->results() = {{"law", rep.law},
                      {"strictly_decreasing", rep.strictly_decreasing()},
                      {"orders", rep.orders},
                      {"seed", o.seed}};
  json levels = json::array();
  for (const auto& row : rep.rows) levels.push_back({{"a", row.a}, {"residual", row.residual}});
  r.rec->residuals() = {{"reference", rep.reference_residual}, {"levels", levels}};
}

// ------------------------------------------------------------------ green

void cmd_green(Run& r) {
  const json& c = r.cfg;
  const Box domain = io::as_box(io::opt(c, "domain"));
  const json bgj = io::opt(c, "background");
  const BackgroundMedium bg = io::parse_background(bgj, domain, r.ctx);
  const Real k = io::as_real(io::need(c, "k"), "k");
  GreenEvaluator G(bg, k, io::parse_green(io::opt(bgj, "green")));
  const Vec3 y = io::as_vec3(io::need(c, "source"), "source");
  const json& seg = io::need(c, "segment");
  const Vec3 a = io::as_vec3(io::need(seg, "from"), "from"), b = io::as_vec3(io::need(seg, "to"), "to");
  const int n = io::get_or<int>(seg, "points", 21);
  if (n < 2) throw ConfigError("segment needs at least 2 points");
  G.prepare({y});
  r.rec->timings()["prepare_s"] = r.clock.lap();

  CsvTable t(io::cols({{"s"}, io::vec_cols("x"), io::complex_cols("G"), io::complex_cols("g"), {"abs_G_over_g"}}));
  for (int i = 0; i < n; ++i) {
    const Real s = static_cast<Real>(i) / (n - 1);
    const Vec3 x = a + (b - a) * s;
    if ((x - y).norm() == 0.0) continue;
    const Complex Gv = G.green(x, y), gv = free_green(k, x, y);
    t.row() << s << x << Gv << gv << std::abs(Gv / gv);
  }
  r.rec->write_csv("green.csv", t);
  r.rec->timings()["evaluate_s"] = r.clock.lap();
  const char* method = G.method() == GreenMethod::FreeSpace   ? "free_space"
                       : G.method() == GreenMethod::BornSeries ? "born"
                                                               : "lippmann_schwinger";
  r.rec->results() = {{"method", method}, {"k", k}, {"active_nodes", G.active_nodes()},
                      {"contrast_norm", G.contrast_norm()}, {"n0_max", bg.n0_max()}};
}

int exit_code(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Config:
    case ErrorCategory::Geometry:
    case ErrorCategory::Design:
      return ConfigFail;
    case ErrorCategory::Solver:
      return SolverFail;
    case ErrorCategory::Regime:
      return RegimeFail;
  }
  return SolverFail;
}

const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Solver: return "solver";
    case ErrorCategory::Regime: return "regime";
    case ErrorCategory::Geometry: return "geometry";
    case ErrorCategory::Design: return "design";
  }
  return "unknown";
}

fs::path output_dir(const Flags& f, const json& cfg) {
  if (!f.out.empty()) return f.out;
  if (const char* env = std::getenv("SMALLSCAT_OUT"); env && *env) return env;
  if (cfg.is_object() && cfg.contains("output_dir")) return cfg["output_dir"].get<std::string>();
  return "smallscat_out";
}

int execute(const std::string& name, const Flags& flags, const std::function<void(Run&)>& body) {
  Run run;
  run.flags = flags;
  std::optional<RunRecord> rec;
  std::string inputs;
  bool have_inputs = false;
  auto stamp = [&] {
    auto& m = rec->manifest();
    if (have_inputs) {
      std::string hashed = inputs;
      for (const auto& f : run.ctx.files)
        if (fs::exists(f)) hashed += "\n" + f.filename().string() + "\n" + io::read_file(f);
      m["config"] = fs::absolute(flags.config).lexically_normal().string();
      m["inputs_sha256"] = io::sha256_hex(hashed);
    }
    m["seed"] = flags.seed ? json(*flags.seed) : json(nullptr);
    m["threads"] = max_threads();
    m["tol"] = flags.tol ? json(*flags.tol) : json(nullptr);
    m["versions"] = versions();
    if (!m.contains("residuals")) m["residuals"] = json::object();
  };
  auto fail = [&](int code, const std::string& cat, const std::string& err, const std::string& what) {
    json e = {{"status", "error"}, {"subcommand", name}, {"category", cat}, {"error", err},
              {"message", what},   {"exit_code", code}};
    std::cerr << "smallscat " << name << ": " << what << "\n";
    try {
      if (!rec) rec.emplace(output_dir(flags, run.cfg), name);
      rec->write_json("error.json", e);
      rec->manifest()["error"] = e;
      stamp();
      rec->finish("error");
    } catch (const std::exception& io_err) {
      std::cerr << "smallscat: could not write error record: " << io_err.what() << "\n";
      std::cerr << e.dump() << "\n";
    }
    return code;
  };
  try {
    if (flags.config.empty()) throw ConfigError("--config is required");
    if (flags.tol && !(*flags.tol > 0.0)) throw ConfigError("--tol must be positive");
    if (flags.threads < 0) throw ConfigError("--threads must be non-negative");
    const fs::path cfg_path(flags.config);
    inputs = io::read_file(cfg_path);
    have_inputs = true;
    try {
      run.cfg = json::parse(inputs);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    run.ctx.base = cfg_path.parent_path().empty() ? fs::path(".") : cfg_path.parent_path();
    if (flags.threads > 0) set_threads(flags.threads);
    rec.emplace(output_dir(flags, run.cfg), name);
    run.rec = &*rec;
    run.clock.lap();

    body(run);

    stamp();
    rec->finish("ok");
    return Ok;
  } catch (const Error& e) {
    return fail(exit_code(e), category_name(e.category()), e.code(), e.what());
  } catch (const json::exception& e) {
    return fail(ConfigFail, "config", "ConfigError", e.what());
  } catch (const std::exception& e) {
    return fail(SolverFail, "internal", "InternalError", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smallscat: many-body scattering by small particles"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Flags flags;
  std::uint64_t seed = 0;
  Real tol = 0.0;
  const std::vector<std::pair<std::string, std::function<void(Run&)>>> commands = {
      {"solve", cmd_solve},         {"onebody", cmd_onebody}, {"homogenize", cmd_homogenize},
      {"design", cmd_design},       {"converge", cmd_converge}, {"green", cmd_green}};
  const std::map<std::string, std::string> help = {
      {"solve", "solve the many-body system for a scene"},
      {"onebody", "shape functionals and one-body amplitudes"},
      {"homogenize", "collocation solve of the limiting equation"},
      {"design", "inverse design of an impedance prescription"},
      {"converge", "many-body vs limiting-equation convergence study"},
      {"green", "tabulate the background Green's function along a segment"}};

  std::map<std::string, CLI::App*> subs;
  std::map<std::string, std::pair<CLI::Option*, CLI::Option*>> opt_flags;
  for (const auto& [name, fn] : commands) {
    CLI::App* s = app.add_subcommand(name, help.at(name));
    s->add_option("--config", flags.config, "JSON config file")->required();
    s->add_option("--out", flags.out, "output directory (default: $SMALLSCAT_OUT, then config output_dir)");
    s->add_option("--threads", flags.threads, "worker threads (0 = runtime default)");
    auto* so = s->add_option("--seed", seed, "RNG seed overriding the config");
    auto* to = s->add_option("--tol", tol, "solver tolerance overriding the config");
    subs[name] = s;
    opt_flags[name] = {so, to};
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ConfigFail;
  }

  for (const auto& [name, fn] : commands) {
    if (!subs[name]->parsed()) continue;
    if (opt_flags[name].first->count()) flags.seed = seed;
    if (opt_flags[name].second->count()) flags.tol = tol;
    return execute(name, flags, fn);
  }
  return ConfigFail;
}
