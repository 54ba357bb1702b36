#include "smallscat/core.hpp"

#include <gtest/gtest.h>

using namespace smallscat;

namespace {

Scene single(Real a) {
  Scene s;
  s.wave = IncidentWave(1.0, Vec3::UnitZ());
  s.domain = Box{Vec3::Constant(-1.0), Vec3::Constant(1.0)};
  s.particles.push_back(Particle::sphere(Vec3::Zero(), a));
  return s;
}

CloudSpec unit_spec(Real a, BoundaryKind bc = Soft{}) {
  CloudSpec c;
  c.a = a;
  c.bc = bc;
  c.seed = 7;
  return c;
}

}  // namespace

TEST(Validate, SingleSphereAccepted) {
  const auto rep = validate_scene(single(0.01));
  EXPECT_TRUE(rep.accepted());
  EXPECT_TRUE(std::isinf(rep.d_min));
  EXPECT_NEAR(rep.ka, 0.01, 1e-15);
}

TEST(Validate, TooCloseReportsRatio) {
  Scene s = single(0.01);
  s.particles.push_back(Particle::sphere(Vec3(0.05, 0, 0), 0.01));
  const auto rep = validate_scene(s);
  ASSERT_TRUE(rep.has("separation_too_small"));
  EXPECT_NE(rep.summary().find("d/a = 5 < 10"), std::string::npos);
  s.regime.separation_factor = 4.0;
  EXPECT_TRUE(validate_scene(s).accepted());
}

TEST(Validate, ImpedanceSign) {
  Scene s = single(0.01);
  s.particles[0].bc = Impedance{Complex(0.1, 0.2), 0.5};
  const auto rep = validate_scene(s);
  ASSERT_TRUE(rep.has("impedance_sign"));
  EXPECT_NE(rep.summary().find("Im h > 0"), std::string::npos);
  s.particles[0].bc = Impedance{Complex(0.1, -0.2), 0.5};
  EXPECT_TRUE(validate_scene(s).accepted());
}

TEST(Validate, SmallnessAndDomain) {
  Scene s = single(0.2);
  s.particles.push_back(Particle::sphere(Vec3(5, 0, 0), 0.2));
  const auto rep = validate_scene(s);
  EXPECT_TRUE(rep.has("ka_too_large"));
  EXPECT_TRUE(rep.has("center_outside_domain"));
  EXPECT_FALSE(rep.has("separation_too_small"));
}

TEST(Validate, KappaRange) {
  Scene s = single(0.01);
  s.particles[0].bc = Impedance{1.0, 1.2};
  EXPECT_TRUE(validate_scene(s).has("kappa_range"));
}

TEST(Cloud, DirichletCount) {
  const auto p = generate_cloud(unit_spec(1e-2), Box{});
  EXPECT_EQ(p.size(), 100u);
  for (const auto& q : p) {
    EXPECT_TRUE(Box{}.contains(q.center));
    EXPECT_NEAR(q.capacitance(), four_pi * 1e-2, 1e-15);
  }
}

TEST(Cloud, ImpedanceCount) {
  auto spec = unit_spec(1e-2, Impedance{1.0, 0.5});
  spec.separation_factor = 4.0;
  const auto p = generate_cloud(spec, Box{});
  EXPECT_EQ(p.size(), 1000u);
}

TEST(Cloud, LeftHalfDensity) {
  auto spec = unit_spec(1e-2);
  spec.density = RealField::grid(Box{}, {2, 1, 1}, {2.0, 0.0});
  const auto p = generate_cloud(spec, Box{});
  EXPECT_EQ(p.size(), 100u);
  for (const auto& q : p) EXPECT_LT(q.center.x(), 0.5);
}

TEST(Cloud, SeparationRespected) {
  const auto p = generate_cloud(unit_spec(5e-3), Box{});
  std::vector<Vec3> c;
  for (const auto& q : p) c.push_back(q.center);
  EXPECT_GE(min_pair_distance(c), 10.0 * 5e-3);
  for (const auto& q : p) EXPECT_TRUE(Box{}.contains(q.center, -5e-3));
}

TEST(Cloud, DeterministicPerSeed) {
  const auto a = generate_cloud(unit_spec(1e-2), Box{});
  const auto b = generate_cloud(unit_spec(1e-2), Box{});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].center, b[i].center);
  auto other = unit_spec(1e-2);
  other.seed = 8;
  const auto c = generate_cloud(other, Box{});
  EXPECT_NE(a[0].center, c[0].center);
}

TEST(Cloud, StratifiedCountsTrackIntegral) {
  auto spec = unit_spec(1e-3);
  spec.density = RealField::affine(1.0, Vec3(0.8, 0.0, 0.3), Vec3::Constant(0.5));
  const Stratification s{Box{}, {6, 5, 4}};
  const auto counts = stratified_counts(spec, s);
  Real cum = 0.0;
  long placed = 0;
  std::size_t idx = 0;
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < 6; ++i, ++idx) {
        cum += spec.law_scale() * spec.density.integrate(s.cell(i, j, k));
        placed += counts[idx];
        EXPECT_LE(std::abs(placed - cum), 0.5 + 1e-9);
        EXPECT_GE(counts[idx], 0);
      }
  EXPECT_EQ(placed, 1000);
}

TEST(Cloud, VolumeLawForHardBodies) {
  auto spec = unit_spec(0.01, Hard{});
  spec.density = RealField::constant(5e-4);
  const Real vol = four_pi / 3.0 * 1e-6;
  const auto p = generate_cloud(spec, Box{});
  EXPECT_EQ(static_cast<long>(p.size()), std::lround(5e-4 / vol));
  EXPECT_EQ(p[0].beta(), -1.5 * Mat3::Identity());
}

TEST(Cloud, InfeasibleDensityRaises) {
  auto spec = unit_spec(0.02);
  spec.density = RealField::constant(40.0);
  spec.retry_cap = 200;
  EXPECT_THROW(generate_cloud(spec, Box{}), DensityInfeasible);
}

TEST(Cloud, RejectsNegativeDensityAndBadInputs) {
  auto spec = unit_spec(0.01);
  spec.density = RealField::constant(-1.0);
  EXPECT_THROW(generate_cloud(spec, Box{}), ConfigError);
  EXPECT_THROW(generate_cloud(unit_spec(0.0), Box{}), ConfigError);
  EXPECT_THROW(generate_cloud(unit_spec(0.01, Impedance{1.0, 1.5}), Box{}), ConfigError);
}

TEST(Cloud, UnitRngIsReproducible) {
  UnitRng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const Real x = a();
    EXPECT_EQ(x, b());
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST(Cloud, LatticeSpacing) {
  const auto p = lattice_cloud(Box{}, 0.25, 0.01);
  EXPECT_EQ(p.size(), 64u);
  EXPECT_NEAR((p[1].center - p[0].center).norm(), 0.25, 1e-14);
  EXPECT_NEAR(p[0].center.x(), 0.125, 1e-14);
}

TEST(Fields, IntegrateClosedForms) {
  const Box b{Vec3::Zero(), Vec3(1, 2, 3)};
  EXPECT_NEAR(RealField::constant(2.0).integrate(b), 12.0, 1e-12);
  EXPECT_NEAR(RealField::affine(1.0, Vec3(1, 0, 0)).integrate(b), 6.0 * 1.5, 1e-12);
  const auto g = RealField::gaussian(0.0, 1.0, Vec3(50, 50, 50), 0.1);
  EXPECT_NEAR(g.integrate(b), 0.0, 1e-12);
  const auto grid = RealField::grid(Box{}, {2, 1, 1}, {2.0, 0.0});
  EXPECT_NEAR(grid.integrate(Box{Vec3(0.25, 0, 0), Vec3(0.75, 1, 1)}), 0.5, 1e-12);
  EXPECT_THROW(RealField::grid(Box{}, {2, 1, 1}, {1.0}), ConfigError);
}
