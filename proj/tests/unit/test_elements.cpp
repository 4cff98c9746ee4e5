#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bdem/elements.hpp"

namespace bdem {
namespace {

TEST(Elements, SphereMassData) {
  const ElementMass m = sphere_mass(2.0, 0.5);
  EXPECT_DOUBLE_EQ(m.translational(), 2.0);
  EXPECT_DOUBLE_EQ(m.inertia(), 0.4 * 2.0 * 0.25);
  EXPECT_DOUBLE_EQ(m.rotational(), 4.0 * m.inertia());
}

TEST(Elements, EquivalentRadiusPreservesVolume) {
  const double r = equivalent_radius(1.0);
  EXPECT_NEAR(4.0 / 3.0 * std::numbers::pi * r * r * r, 1.0, 1e-14);
}

TEST(Elements, KineticEnergyOfPureSpinIsHalfIOmegaSquared) {
  const ElementMass m = sphere_mass(3.0, 0.2);
  ElementState s;
  s.q = from_axis_angle(Vec3(1, 2, 3).normalized(), 0.7);
  const AngVel w(0.5, -1.0, 2.0);
  s.qdot = quat_rate(s.q, w);
  EXPECT_NEAR(kinetic_energy(s, m), 0.5 * m.inertia() * w.squaredNorm(), 1e-14);
  s.v = Vec3(1.0, 0.0, 0.0);
  EXPECT_NEAR(kinetic_energy(s, m), 1.5 + 0.5 * m.inertia() * w.squaredNorm(), 1e-14);
}

TEST(Elements, FullRotationalMassAgreesWithScalarForm) {
  const ElementMass m = sphere_mass(1.5, 0.3);
  const Quat q = from_axis_angle(Vec3(0, 1, 1).normalized(), 1.1);
  const Vec4 qdot = quat_rate(q, AngVel(0.2, 0.3, -0.4));
  const Mat4 mq = equivalent_rotational_mass(q, m);
  EXPECT_NEAR(0.5 * qdot.dot(mq * qdot), 0.5 * m.rotational() * qdot.squaredNorm(), 1e-14);
}

}  // namespace
}  // namespace bdem
