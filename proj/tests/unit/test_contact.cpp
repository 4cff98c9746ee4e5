#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <utility>

#include "bdem/contact.hpp"

namespace bdem {
namespace {

TEST(Contact, BroadPhaseMatchesBruteForce) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(0.0, 1.0);
  std::uniform_real_distribution<double> rad(0.01, 0.05);
  std::vector<Vec3> p(300);
  std::vector<double> r(300);
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = Vec3(pos(rng), pos(rng), pos(rng));
    r[k] = rad(rng);
  }
  const double margin = 0.01;
  std::set<std::pair<int, int>> expected;
  for (int i = 0; i < 300; ++i) {
    for (int j = i + 1; j < 300; ++j) {
      if ((p[i] - p[j]).norm() <= r[i] + r[j] + margin) expected.insert({i, j});
    }
  }
  const std::vector<ContactPair> pairs = broad_phase(p, r, 0.1, margin);
  std::set<std::pair<int, int>> got;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    got.insert({pairs[k].i, pairs[k].j});
    if (k > 0) EXPECT_LT(std::make_pair(pairs[k - 1].i, pairs[k - 1].j), std::make_pair(pairs[k].i, pairs[k].j));
  }
  EXPECT_EQ(got, expected);
}

TEST(Contact, SelfRepulsionOnlyWhenOverlapping) {
  const ContactEval apart = self_repulsion_potential(Vec3::Zero(), Vec3(0.3, 0, 0), 0.1, 0.1, 1e4);
  EXPECT_EQ(apart.energy, 0.0);
  const ContactEval hit = self_repulsion_potential(Vec3::Zero(), Vec3(0.15, 0, 0), 0.1, 0.1, 1e4);
  EXPECT_NEAR(hit.energy, 0.5 * 1e4 * 0.05 * 0.05, 1e-12);
  // Pushes i towards -x and j towards +x.
  EXPECT_GT(hit.grad[0], 0.0);
  EXPECT_LT(hit.grad[3], 0.0);
}

TEST(Contact, CoincidentCentersAreFlagged) {
  const ContactEval e = self_repulsion_potential(Vec3::Zero(), Vec3::Zero(), 0.1, 0.1, 1e4);
  EXPECT_TRUE(e.degenerate);
  EXPECT_TRUE(std::isfinite(e.energy));
}

TEST(Contact, ColliderDistances) {
  const Collider floor(HalfSpace{Vec3::UnitZ(), 0.0});
  EXPECT_DOUBLE_EQ(floor.distance(Vec3(3, 4, 0.5)), 0.5);
  EXPECT_DOUBLE_EQ(floor.distance(Vec3(0, 0, -0.25)), -0.25);
  const Collider ball(SphereCollider{Vec3::Zero(), 1.0});
  EXPECT_DOUBLE_EQ(ball.distance(Vec3(2, 0, 0)), 1.0);
  EXPECT_LT((ball.gradient(Vec3(0, 3, 0)) - Vec3::UnitY()).norm(), 1e-15);
  const Collider box(BoxCollider{Vec3::Zero(), Vec3::Ones()});
  EXPECT_NEAR(box.distance(Vec3(0.5, 0.5, 0.9)), -0.1, 1e-15);
  EXPECT_DOUBLE_EQ(box.distance(Vec3(2.0, 0.5, 0.5)), 1.0);
}

TEST(Contact, ExternalRepulsionEnergy) {
  const Collider floor(HalfSpace{Vec3::UnitZ(), 0.0});
  EXPECT_EQ(external_repulsion_potential(Vec3(0, 0, 0.1), floor, 1e5).energy, 0.0);
  const ExternalEval e = external_repulsion_potential(Vec3(0, 0, -0.01), floor, 1e5);
  EXPECT_NEAR(e.energy, 0.5 * 1e5 * 1e-4, 1e-12);
  EXPECT_NEAR(e.grad.z(), -1e5 * 0.01, 1e-9);
}

TEST(Contact, FrictionOpposesAndNeverReverses) {
  FrictionInput in;
  in.v = Vec3(1.0, 0.0, -0.2);
  in.v_rel = in.v;
  in.w = Vec3(0.0, 3.0, 0.0);
  in.w_rel = in.w;
  in.normal = Vec3::UnitZ();
  in.mass = 0.1;
  in.inertia = 1e-4;
  in.radius = 0.02;
  for (double force : {1e-3, 1.0, 1e6}) {
    in.force = force;
    const FrictionCorrection c = friction_post_step(in, 0.01, 0.5, 0.1);
    EXPECT_LE(c.dv.dot(in.v), 0.0);
    EXPECT_LE(c.dv.norm(), in.v.norm() + 1e-15);
    EXPECT_LE(c.dw.norm(), in.w.norm() + 1e-15);
    EXPECT_GE((in.v + c.dv).dot(in.v), -1e-15);
  }
}

}  // namespace
}  // namespace bdem
