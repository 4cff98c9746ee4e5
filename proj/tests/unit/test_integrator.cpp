#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bdem/config.hpp"
#include "bdem/integrator.hpp"

namespace bdem {
namespace {

namespace fs = std::filesystem;

fs::path single_tet_file() {
  const fs::path path = fs::temp_directory_path() / "bdem_single_tet.tet";
  std::ofstream out(path);
  out << "tetmesh 4 1\nv 0 0 1\nv 0.1 0 1\nv 0 0.1 1\nv 0 0 1.1\nt 0 1 2 3\n";
  return path;
}

SceneConfig free_tet(const Vec3& gravity, const Vec3& v0) {
  SceneConfig c;
  c.mesh = single_tet_file();
  c.gravity = gravity;
  c.initial_velocity = v0;
  c.dt = 0.01;
  c.tolerance = 1e-10;
  return c;
}

StableStepOptions step_options(const SceneConfig& c, const Scene& s) {
  StableStepOptions o;
  o.solver = solver_options(c, s, c.dt);
  return o;
}

TEST(Integrator, ContextPredictorIsPositionPlusVelocityStep) {
  const SceneConfig c = free_tet(Vec3::Zero(), Vec3(1.0, 2.0, 3.0));
  const Scene s = build_scene(c);
  const StepContext ctx = StepContext::from_scene(s, 0.01);
  EXPECT_LT((ctx.x_hat.head<3>() - (s.elements[0].state.p + 0.01 * Vec3(1.0, 2.0, 3.0))).norm(), 1e-15);
}

TEST(Integrator, FreeFallFollowsDiscreteParabola) {
  const Vec3 g(0.0, 0.0, -9.81);
  const Vec3 v0(0.5, -0.2, 1.0);
  const SceneConfig c = free_tet(g, v0);
  Scene s = build_scene(c);
  const Vec3 p0 = s.elements[0].state.p;
  const StableStepOptions o = step_options(c, s);
  for (int n = 1; n <= 50; ++n) {
    ASSERT_TRUE(stable_step(s, c.dt, o).converged);
    const double t = n * c.dt;
    const Vec3 expected = p0 + v0 * t + 0.5 * g * t * (t + c.dt);
    EXPECT_LT((s.elements[0].state.p - expected).norm(), 1e-10 * expected.norm());
    EXPECT_LT((s.elements[0].state.v - (v0 + g * t)).norm(), 1e-10 * (v0 + g * t).norm());
  }
}

TEST(Integrator, NoForceMeansConstantVelocity) {
  const Vec3 v0(0.3, 0.1, -0.4);
  const SceneConfig c = free_tet(Vec3::Zero(), v0);
  Scene s = build_scene(c);
  const StableStepOptions o = step_options(c, s);
  for (int n = 0; n < 20; ++n) {
    ASSERT_TRUE(stable_step(s, c.dt, o).converged);
    EXPECT_LT((s.elements[0].state.v - v0).norm(), 1e-14);
  }
}

TEST(Integrator, PinnedElementsFollowTheirMotion) {
  SceneConfig c = builtin_scene("beam-stretch");
  c.box.nx = 6;
  c.pins.back().lo.x() = 5 * c.box.cell;
  Scene s = build_scene(c);
  const StableStepOptions o = step_options(c, s);
  for (int n = 0; n < 5; ++n) ASSERT_TRUE(stable_step(s, c.dt, o).converged);
  for (const PinnedMotion& pin : s.pins) {
    const ElementState& st = s.elements[pin.element].state;
    EXPECT_LT((st.p - pin.position(s.time)).norm(), 1e-14);
    EXPECT_LT(rotation_distance(st.q, pin.orientation(s.time)), 1e-7);
  }
}

TEST(Integrator, BondsBreakExactlyWhenStressExceedsStrength) {
  SceneConfig c = builtin_scene("beam-stretch");
  c.box.nx = 4;
  c.pins.clear();
  c.material.tensile_strength = 1e3;
  c.material.shear_strength = 1e3;
  Scene s = build_scene(c);
  // Stretch every element away from the centroid by 1%.
  for (Element& e : s.elements) e.state.p = 1.01 * e.state.p;
  std::vector<BondStress> expected;
  for (const Bond& b : s.graph.bonds) {
    const ElementState& i = s.elements[b.i].state;
    const ElementState& j = s.elements[b.j].state;
    expected.push_back(bond_stress(i.p, i.q, j.p, j.q, b.rest, b.params, b.state));
  }
  const std::vector<BrokenBond> broken = update_bonds(s);
  std::size_t nb = 0;
  for (std::size_t k = 0; k < s.graph.bonds.size(); ++k) {
    const Bond& b = s.graph.bonds[k];
    const bool over = expected[k].sigma > b.params.sigma_c || expected[k].tau > b.params.tau_c;
    EXPECT_EQ(b.state.broken(), over) << "bond " << k;
    nb += over;
  }
  EXPECT_EQ(broken.size(), nb);
  EXPECT_GT(nb, 0u);
}

TEST(Integrator, SolverMethodNames) {
  for (SolverMethod m : {SolverMethod::kFirstOrder, SolverMethod::kSecondOrder, SolverMethod::kPenalty,
                         SolverMethod::kLagrange, SolverMethod::kAugmented}) {
    EXPECT_EQ(parse_solver_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_solver_method("newton"), std::exception);
}

}  // namespace
}  // namespace bdem
