#include <nlohmann/json.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path cli = SMALLSCAT_CLI;
const fs::path configs = SMALLSCAT_CONFIGS;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("smallscat_cli_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + cli.string() + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json manifest(const fs::path& dir) { return json::parse(slurp(dir / "manifest.json")); }

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& body) {
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << body;
  return p;
}

/// Every file in the output directory is listed in the manifest, and vice versa.
void expect_no_orphans(const fs::path& dir) {
  const json m = manifest(dir);
  std::set<std::string> listed;
  for (const auto& a : m["artifacts"]) listed.insert(a["path"].get<std::string>());
  std::set<std::string> present;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename() != "manifest.json") present.insert(e.path().filename().string());
  EXPECT_EQ(listed, present);
}

}  // namespace

TEST(Cli, SolveSingleSoftReportsCharge) {
  const auto out = scratch("solve");
  ASSERT_EQ(run("solve --config " + (configs / "solve_single_soft.json").string() + " --out " + out.string()), 0);
  const json m = manifest(out);
  EXPECT_EQ(m["status"], "ok");
  const double a = 0.01;
  const std::complex<double> ref = -4.0 * M_PI * a * std::exp(std::complex<double>(0, 0.3));
  EXPECT_NEAR(m["results"]["Q1"][0].get<double>(), ref.real(), 1e-15);
  EXPECT_NEAR(m["results"]["Q1"][1].get<double>(), ref.imag(), 1e-15);
  EXPECT_EQ(m["inputs_sha256"].get<std::string>().size(), 64u);
  EXPECT_TRUE(m.contains("versions"));
  EXPECT_TRUE(m.contains("timings"));
  EXPECT_TRUE(m.contains("residuals"));
  expect_no_orphans(out);
  const std::string csv = slurp(out / "particles.csv");
  EXPECT_NE(csv.find("u_e_re,u_e_im"), std::string::npos);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const auto a = scratch("rep_a"), b = scratch("rep_b");
  const std::string cfg = (configs / "solve_cloud_impedance.json").string();
  ASSERT_EQ(run("solve --config " + cfg + " --seed 9 --out " + a.string()), 0);
  ASSERT_EQ(run("solve --config " + cfg + " --seed 9 --threads 1 --out " + b.string()), 0);
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
  }
  EXPECT_EQ(manifest(a)["seed"], 9);
  const auto c = scratch("rep_c");
  ASSERT_EQ(run("solve --config " + cfg + " --seed 10 --out " + c.string()), 0);
  EXPECT_NE(slurp(a / "particles.csv"), slurp(c / "particles.csv"));
}

TEST(Cli, DesignPrescription) {
  const auto out = scratch("design");
  ASSERT_EQ(run("design --config " + (configs / "design_half.json").string() + " --out " + out.string()), 0);
  const json p = json::parse(slurp(out / "prescription.json"));
  EXPECT_NEAR(p["h"][0].get<double>(), 0.0397887, 1e-7);
  EXPECT_LE(p["roundtrip_max_error"].get<double>(), 1e-12);
  EXPECT_LE(manifest(out)["results"]["verify_field_difference"].get<double>(), 1e-12);
  expect_no_orphans(out);
}

TEST(Cli, ConvergeDirichletDemo) {
  const auto out = scratch("converge");
  ASSERT_EQ(run("converge --config " + (configs / "converge_dirichlet.json").string() + " --out " + out.string()), 0);
  std::istringstream csv(slurp(out / "convergence.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("a,M,sup_error", 0), 0u);
  std::vector<double> errs;
  while (std::getline(csv, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    errs.push_back(std::stod(cells.at(2)));
  }
  ASSERT_EQ(errs.size(), 3u);
  EXPECT_LT(errs[1], errs[0]);
  EXPECT_LT(errs[2], errs[1]);
}

TEST(Cli, OtherSubcommandsSucceed) {
  for (const auto& [sub, cfg] : std::vector<std::pair<std::string, std::string>>{
           {"onebody", "onebody_sphere.json"},
           {"homogenize", "homogenize_dirichlet.json"},
           {"green", "green_bump.json"},
           {"solve", "solve_hard_pair.json"}}) {
    const auto out = scratch(sub + "_ok");
    EXPECT_EQ(run(sub + " --config " + (configs / cfg).string() + " --out " + out.string()), 0) << sub;
    EXPECT_EQ(manifest(out)["status"], "ok") << sub;
    expect_no_orphans(out);
  }
}

TEST(Cli, EnvironmentSelectsOutputDirectory) {
  const auto out = scratch("env");
  ASSERT_EQ(run("solve --config " + (configs / "solve_single_soft.json").string(), "SMALLSCAT_OUT=" + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  const auto flag = scratch("env_flag");
  ASSERT_EQ(run("solve --config " + (configs / "solve_single_soft.json").string() + " --out " + flag.string(),
                "SMALLSCAT_OUT=" + scratch("env_unused").string()),
            0);
  EXPECT_TRUE(fs::exists(flag / "manifest.json"));
}

TEST(Cli, ConfigErrorsExitTwo) {
  const auto dir = scratch("bad");
  const auto out = dir / "out";
  EXPECT_EQ(run("solve --config " + (dir / "missing.json").string() + " --out " + out.string()), 2);
  const auto bad = write_config(dir, "bad.json", "{ not json");
  EXPECT_EQ(run("solve --config " + bad.string() + " --out " + out.string()), 2);
  const json err = json::parse(slurp(out / "error.json"));
  EXPECT_EQ(err["status"], "error");
  EXPECT_EQ(err["exit_code"], 2);
  EXPECT_EQ(err["category"], "config");
  EXPECT_EQ(manifest(out)["status"], "error");
  const auto nok = write_config(dir, "nok.json", R"({"particles": []})");
  EXPECT_EQ(run("solve --config " + nok.string() + " --out " + out.string()), 2);
  EXPECT_EQ(run("solve --config " + (configs / "solve_single_soft.json").string() + " --tol -1 --out " + out.string()), 2);
  EXPECT_EQ(run("bogus"), 2);
  const auto infeasible = write_config(dir, "design.json",
                                       R"({"cover":{"dims":2},"k":1,"n2":[0.5,-0.2]})");
  EXPECT_EQ(run("design --config " + infeasible.string() + " --out " + out.string()), 2);
  EXPECT_EQ(json::parse(slurp(out / "error.json"))["error"], "DesignInfeasible");
}

TEST(Cli, RegimeViolationExitsFour) {
  const auto dir = scratch("regime");
  const auto cfg = write_config(dir, "close.json", R"({
    "domain": {"lo": [-1,-1,-1], "hi": [1,1,1]},
    "wave": {"k": 1},
    "particles": [{"center": [0,0,0], "a": 0.01, "bc": "soft"},
                  {"center": [0.05,0,0], "a": 0.01, "bc": "soft"}]
  })");
  EXPECT_EQ(run("solve --config " + cfg.string() + " --out " + (dir / "out").string()), 4);
  const json err = json::parse(slurp(dir / "out" / "error.json"));
  EXPECT_EQ(err["category"], "regime");
  EXPECT_NE(err["message"].get<std::string>().find("d/a = 5 < 10"), std::string::npos);
}

TEST(Cli, SolverFailureExitsThree) {
  const auto dir = scratch("solver");
  const auto cfg = write_config(dir, "strong.json", R"({
    "domain": {"lo": [0,0,0], "hi": [1,1,1]},
    "k": 3.0,
    "background": {"n2": 60, "green": {"method": "lippmann_schwinger", "grid": 6}},
    "source": [0.2,0.2,0.2],
    "segment": {"from": [0.5,0.5,0.5], "to": [2,2,2], "points": 3}
  })");
  EXPECT_EQ(run("green --config " + cfg.string() + " --out " + (dir / "out").string()), 3);
  EXPECT_EQ(json::parse(slurp(dir / "out" / "error.json"))["error"], "NonConvergence");
  const json m = manifest(dir / "out");
  EXPECT_EQ(m["status"], "error");
  EXPECT_EQ(m["inputs_sha256"].get<std::string>().size(), 64u);
  expect_no_orphans(dir / "out");
}
